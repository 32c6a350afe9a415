use std::fmt;
use std::sync::Arc;

use super::C64;
use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> C64 + Send + Sync>;

/// A scalar function for the functional calculus, with optional derivative and
/// limits at `±∞` (needed at grid pole markers).
#[derive(Clone)]
pub struct FunctionSpec {
    name: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
    neg_limit: Option<C64>,
    pos_limit: Option<C64>,
    real: bool,
}

impl fmt::Debug for FunctionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FunctionSpec")
            .field("name", &self.name)
            .field("has_derivative", &self.df.is_some())
            .field("neg_limit", &self.neg_limit)
            .field("pos_limit", &self.pos_limit)
            .field("real", &self.real)
            .finish()
    }
}

impl FunctionSpec {
    pub fn real<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        FunctionSpec {
            name: name.into(),
            f: Arc::new(move |x| C64::new(f(x), 0.0)),
            df: None,
            neg_limit: None,
            pos_limit: None,
            real: true,
        }
    }

    pub fn complex<F>(name: impl Into<String>, f: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        FunctionSpec {
            name: name.into(),
            f: Arc::new(f),
            df: None,
            neg_limit: None,
            pos_limit: None,
            real: false,
        }
    }

    pub fn with_real_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(move |x| C64::new(df(x), 0.0)));
        self
    }

    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> C64 + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_limits(mut self, at_neg_inf: impl Into<C64>, at_pos_inf: impl Into<C64>) -> Self {
        self.neg_limit = Some(at_neg_inf.into());
        self.pos_limit = Some(at_pos_inf.into());
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn has_derivative(&self) -> bool {
        self.df.is_some()
    }

    /// Limits at `(-∞, +∞)`, `None` where undefined.
    pub fn limits(&self) -> (Option<C64>, Option<C64>) {
        (self.neg_limit, self.pos_limit)
    }

    pub fn eval(&self, x: f64) -> Result<C64> {
        let v = if x == f64::INFINITY {
            self.pos_limit
        } else if x == f64::NEG_INFINITY {
            self.neg_limit
        } else if x.is_nan() {
            None
        } else {
            Some((self.f)(x))
        };
        match v {
            Some(v) if v.re.is_finite() && v.im.is_finite() => Ok(v),
            _ => Err(Error::Domain {
                function: self.name.clone(),
                at: x,
            }),
        }
    }

    /// Derivative; a five-point difference quotient when no closed form was supplied.
    /// At `±∞` the derivative of a function with a finite limit is taken as 0.
    pub fn derivative(&self, x: f64) -> Result<C64> {
        if x.is_infinite() {
            self.eval(x)?;
            return Ok(C64::new(0.0, 0.0));
        }
        let v = match &self.df {
            Some(df) => df(x),
            None => {
                let h = 1e-3 * (1.0 + x.abs());
                let f = &self.f;
                (f(x - 2.0 * h) - f(x - h) * 8.0 + f(x + h) * 8.0 - f(x + 2.0 * h)) / (12.0 * h)
            }
        };
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::Domain {
                function: format!("{}'", self.name),
                at: x,
            })
        }
    }

    pub fn identity() -> Self {
        FunctionSpec::real("identity", |x| x).with_real_derivative(|_| 1.0)
    }

    pub fn constant(c: f64) -> Self {
        FunctionSpec::real(format!("constant({c})"), move |_| c)
            .with_real_derivative(|_| 0.0)
            .with_limits(c, c)
    }

    /// `Σ c_k x^k`
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let d: Vec<f64> = coeffs.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
        let horner = |c: &[f64], x: f64| c.iter().rev().fold(0.0, |acc, &ck| acc * x + ck);
        FunctionSpec::real(format!("polynomial{coeffs:?}"), move |x| horner(&c, x))
            .with_real_derivative(move |x| horner(&d, x))
    }

    /// `x (1 + x²)^{-1/2}`
    pub fn bounded_transform() -> Self {
        FunctionSpec::real("bounded_transform", |x| x / (1.0 + x * x).sqrt())
            .with_real_derivative(|x| (1.0 + x * x).powf(-1.5))
            .with_limits(-1.0, 1.0)
    }

    /// `1_{[0, ∞)}`
    pub fn indicator_nonneg() -> Self {
        FunctionSpec::real("indicator_nonneg", |x| if x >= 0.0 { 1.0 } else { 0.0 })
            .with_real_derivative(|_| 0.0)
            .with_limits(0.0, 1.0)
    }

    /// `1_{[-eps, eps]}`
    pub fn indicator_window(eps: f64) -> Self {
        FunctionSpec::real(format!("indicator_window({eps})"), move |x| {
            if x.abs() <= eps {
                1.0
            } else {
                0.0
            }
        })
        .with_real_derivative(|_| 0.0)
        .with_limits(0.0, 0.0)
    }

    /// `e^{-x²}`
    pub fn gaussian() -> Self {
        FunctionSpec::real("gaussian", |x| (-x * x).exp())
            .with_real_derivative(|x| -2.0 * x * (-x * x).exp())
            .with_limits(0.0, 0.0)
    }

    /// `(1 + x²)^{-q}`
    pub fn resolvent_power(q: f64) -> Self {
        FunctionSpec::real(format!("resolvent_power({q})"), move |x| (1.0 + x * x).powf(-q))
            .with_real_derivative(move |x| -2.0 * q * x * (1.0 + x * x).powf(-q - 1.0))
            .with_limits(0.0, 0.0)
    }

    /// `(x + i)^{-1}`
    pub fn resolvent_at_i() -> Self {
        FunctionSpec::complex("resolvent_at_i", |x| C64::new(1.0, 0.0) / C64::new(x, 1.0))
            .with_derivative(|x| -C64::new(1.0, 0.0) / (C64::new(x, 1.0) * C64::new(x, 1.0)))
            .with_limits(0.0, 0.0)
    }

    /// Pointwise product, with the product rule for the derivative.
    pub fn product(f: &FunctionSpec, g: &FunctionSpec) -> Self {
        let (f1, g1, f2, g2) = (f.clone(), g.clone(), f.clone(), g.clone());
        let mut out = FunctionSpec {
            name: format!("({})*({})", f.name, g.name),
            f: Arc::new(move |x| (f1.f)(x) * (g1.f)(x)),
            df: None,
            neg_limit: match (f.neg_limit, g.neg_limit) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
            pos_limit: match (f.pos_limit, g.pos_limit) {
                (Some(a), Some(b)) => Some(a * b),
                _ => None,
            },
            real: f.real && g.real,
        };
        if f.df.is_some() && g.df.is_some() {
            out.df = Some(Arc::new(move |x| {
                let (df, dg) = (f2.df.as_ref().unwrap(), g2.df.as_ref().unwrap());
                df(x) * (g2.f)(x) + (f2.f)(x) * dg(x)
            }));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limits_at_infinity() {
        let f = FunctionSpec::bounded_transform();
        assert_eq!(f.eval(f64::INFINITY).unwrap().re, 1.0);
        assert_eq!(f.eval(f64::NEG_INFINITY).unwrap().re, -1.0);
        assert!(FunctionSpec::identity().eval(f64::INFINITY).is_err());
    }

    #[test]
    fn fallback_derivative() {
        let f = FunctionSpec::real("cube", |x| x * x * x);
        assert!((f.derivative(2.0).unwrap().re - 12.0).abs() < 1e-8);
    }

    #[test]
    fn polynomial_and_product() {
        let p = FunctionSpec::polynomial(&[1.0, 0.0, 2.0]);
        assert_eq!(p.eval(3.0).unwrap().re, 19.0);
        assert_eq!(p.derivative(3.0).unwrap().re, 12.0);
        let q = FunctionSpec::product(&p, &FunctionSpec::identity());
        assert_eq!(q.eval(2.0).unwrap().re, 18.0);
        assert_eq!(q.derivative(2.0).unwrap().re, 9.0 + 2.0 * 8.0);
    }
}
