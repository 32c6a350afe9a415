//! Paths `t ↦ D_t` of Hermitian elements on `[0, 1]`.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{Element, FunctionSpec, TracialAlgebra, C64};
use crate::error::{Error, Result};
pub use crate::quad::Side;
use crate::tolerances::{CLOSURE, FD_STEP, UNITARITY};

type ValueFn = Arc<dyn Fn(f64) -> Result<Element> + Send + Sync>;
type DerivFn = Arc<dyn Fn(f64, Side) -> Result<Element> + Send + Sync>;

/// Passage of the value at grid point `point` through `±∞` at time `t`.
///
/// An upward wrap goes from `+∞` to `−∞`. At `t` itself the path carries a pole marker.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoleWrap {
    pub point: usize,
    pub t: f64,
    pub upward: bool,
}

impl PoleWrap {
    /// Sign of the value just before the wrap (`true` for nonnegative).
    pub fn sign_before(&self) -> bool {
        self.upward
    }

    pub fn sign_after(&self) -> bool {
        !self.upward
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EndpointInfo {
    pub margin_start: f64,
    pub margin_end: f64,
}

impl EndpointInfo {
    pub fn min_margin(&self) -> f64 {
        self.margin_start.min(self.margin_end)
    }
}

#[derive(Clone)]
pub struct OperatorPath {
    alg: Arc<TracialAlgebra>,
    value: ValueFn,
    derivative: Option<DerivFn>,
    breakpoints: Vec<f64>,
    wraps: Vec<PoleWrap>,
    provenance: String,
    fd_step: f64,
}

impl std::fmt::Debug for OperatorPath {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorPath")
            .field("provenance", &self.provenance)
            .field("backend", &self.alg.backend_name())
            .field("breakpoints", &self.breakpoints)
            .field("wraps", &self.wraps.len())
            .field("analytic_derivative", &self.derivative.is_some())
            .finish()
    }
}

fn check_t(t: f64) -> Result<()> {
    if (0.0..=1.0).contains(&t) {
        Ok(())
    } else {
        Err(Error::Precondition(format!("path parameter {t} outside [0, 1]")))
    }
}

impl OperatorPath {
    /// Path from a value function; derivatives by finite differences.
    pub fn new<V>(alg: &Arc<TracialAlgebra>, value: V) -> Self
    where
        V: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        OperatorPath {
            alg: alg.clone(),
            value: Arc::new(value),
            derivative: None,
            breakpoints: Vec::new(),
            wraps: Vec::new(),
            provenance: "custom".into(),
            fd_step: FD_STEP,
        }
    }

    pub fn with_derivative<D>(mut self, derivative: D) -> Self
    where
        D: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(move |t, _| derivative(t)));
        self
    }

    /// Derivative that distinguishes one-sided limits at breakpoints.
    pub fn with_sided_derivative<D>(mut self, derivative: D) -> Self
    where
        D: Fn(f64, Side) -> Result<Element> + Send + Sync + 'static,
    {
        self.derivative = Some(Arc::new(derivative));
        self
    }

    pub fn with_breakpoints(mut self, mut breaks: Vec<f64>) -> Result<Self> {
        breaks.sort_by(f64::total_cmp);
        breaks.dedup();
        if breaks.iter().any(|&t| !(t > 0.0 && t < 1.0)) {
            return Err(Error::Precondition("breakpoints must lie in (0, 1)".into()));
        }
        self.breakpoints = breaks;
        Ok(self)
    }

    /// Pole-wrap annotations (grid backend, analytic derivative required).
    pub fn with_wraps(mut self, mut wraps: Vec<PoleWrap>) -> Result<Self> {
        if wraps.is_empty() {
            self.wraps = wraps;
            return Ok(self);
        }
        let n = self
            .alg
            .grid_points()
            .ok_or(Error::Backend { expected: "grid" })?
            .len();
        if self.derivative.is_none() {
            return Err(Error::Precondition("paths with pole wraps need an analytic derivative".into()));
        }
        for w in &wraps {
            if w.point >= n || !(w.t > 0.0 && w.t < 1.0) {
                return Err(Error::Precondition(format!("invalid pole wrap {w:?}")));
            }
        }
        wraps.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.point.cmp(&b.point)));
        self.wraps = wraps;
        Ok(self)
    }

    pub fn with_provenance(mut self, provenance: impl Into<String>) -> Self {
        self.provenance = provenance.into();
        self
    }

    pub fn with_fd_step(mut self, h: f64) -> Self {
        self.fd_step = h;
        self
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn wraps(&self) -> &[PoleWrap] {
        &self.wraps
    }

    pub fn provenance(&self) -> &str {
        &self.provenance
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.derivative.is_some()
    }

    /// `[0, breakpoints…, 1]`
    pub fn segments(&self) -> Vec<f64> {
        let mut s = vec![0.0];
        s.extend(&self.breakpoints);
        s.push(1.0);
        s
    }

    pub fn value(&self, t: f64) -> Result<Element> {
        check_t(t)?;
        let v = (self.value)(t)?;
        crate::algebra::same_algebra(&self.alg, v.algebra())?;
        if !v.is_hermitian() {
            return v.into_hermitian();
        }
        Ok(v)
    }

    fn segment(&self, t: f64, side: Side) -> (f64, f64) {
        let mut lo = 0.0;
        let mut hi = 1.0;
        for &bp in &self.breakpoints {
            if bp < t || (bp == t && side == Side::Right) {
                lo = bp;
            } else {
                hi = bp;
                break;
            }
        }
        (lo, hi)
    }

    /// `Ḋ_t`, one-sided at breakpoints according to `side`.
    pub fn derivative(&self, t: f64, side: Side) -> Result<Element> {
        check_t(t)?;
        if let Some(d) = &self.derivative {
            let v = d(t, side)?;
            return if v.is_hermitian() { Ok(v) } else { v.into_hermitian() };
        }
        let (lo, hi) = self.segment(t, side);
        let h = self.fd_step.min(0.25 * (hi - lo));
        let f = |x: f64| (self.value)(x);
        let d = if t - h >= lo && t + h <= hi {
            f(t + h)?.sub(&f(t - h)?)?.scale(0.5 / h)
        } else if t + 2.0 * h <= hi {
            f(t)?.scale(-3.0).add(&f(t + h)?.scale(4.0))?.sub(&f(t + 2.0 * h)?)?.scale(0.5 / h)
        } else {
            f(t)?.scale(3.0).sub(&f(t - h)?.scale(4.0))?.add(&f(t - 2.0 * h)?)?.scale(0.5 / h)
        };
        d.into_hermitian()
    }

    /// Smallest `|λ|` over the spectra of `D_0` and `D_1`.
    pub fn endpoints(&self) -> Result<EndpointInfo> {
        Ok(EndpointInfo {
            margin_start: self.value(0.0)?.eigh()?.margin(),
            margin_end: self.value(1.0)?.eigh()?.margin(),
        })
    }

    /// Errors unless both endpoints are invertible.
    pub fn require_invertible_endpoints(&self) -> Result<EndpointInfo> {
        let e = self.endpoints()?;
        if e.margin_start <= CLOSURE {
            return Err(Error::EndpointNotInvertible {
                t: 0.0,
                margin: e.margin_start,
            });
        }
        if e.margin_end <= CLOSURE {
            return Err(Error::EndpointNotInvertible {
                t: 1.0,
                margin: e.margin_end,
            });
        }
        Ok(e)
    }

    /// Signs (`true` = nonnegative) of grid values at `t`; a point sitting on a pole
    /// marker takes the sign before its wrap.
    pub fn grid_signs(&self, t: f64) -> Result<Vec<bool>> {
        let v = self.value(t)?.grid_real().ok_or(Error::Backend { expected: "grid" })?;
        Ok(v.iter()
            .enumerate()
            .map(|(i, &x)| {
                if x.is_infinite() {
                    self.wraps
                        .iter()
                        .find(|w| w.point == i && w.t == t)
                        .map(|w| w.sign_before())
                        .unwrap_or(x > 0.0)
                } else {
                    x >= 0.0
                }
            })
            .collect())
    }

    /// Largest rate of change over 65 samples: `‖Ḋ‖` for blocks, `max |ḋ|/(1 + d²)` for grids.
    pub fn speed_estimate(&self) -> Result<f64> {
        let mut speed: f64 = 0.0;
        for k in 0..=64 {
            let t = k as f64 / 64.0;
            let d = self.derivative(t, Side::Interior)?;
            if self.alg.is_grid() {
                let v = self.value(t)?.grid_real().unwrap();
                let dv = d.grid_real().unwrap();
                for (x, dx) in v.iter().zip(&dv) {
                    if x.is_finite() && dx.is_finite() {
                        speed = speed.max(dx.abs() / (1.0 + x * x));
                    }
                }
            } else {
                speed = speed.max(d.op_norm());
            }
        }
        Ok(speed)
    }

    /// `(1 − t)A + tB`
    pub fn affine(a: &Element, b: &Element) -> Result<Self> {
        crate::algebra::same_algebra(a.algebra(), b.algebra())?;
        let (a, b) = (a.clone().into_hermitian()?, b.clone().into_hermitian()?);
        let diff = b.sub(&a)?;
        let (a1, d1) = (a.clone(), diff.clone());
        Ok(OperatorPath::new(a.algebra(), move |t| a1.add(&d1.scale(t)))
            .with_derivative(move |_| Ok(diff.clone()))
            .with_provenance("affine"))
    }

    /// `(1 − t)A + tB + t(1 − t)C`
    pub fn quadratic(a: &Element, b: &Element, c: &Element) -> Result<Self> {
        crate::algebra::same_algebra(a.algebra(), b.algebra())?;
        crate::algebra::same_algebra(a.algebra(), c.algebra())?;
        let (a, b, c) = (
            a.clone().into_hermitian()?,
            b.clone().into_hermitian()?,
            c.clone().into_hermitian()?,
        );
        let diff = b.sub(&a)?;
        let (a1, d1, c1) = (a.clone(), diff.clone(), c.clone());
        Ok(OperatorPath::new(a.algebra(), move |t| a1.add(&d1.scale(t))?.add(&c1.scale(t * (1.0 - t))))
            .with_derivative(move |t| diff.add(&c.scale(1.0 - 2.0 * t)))
            .with_provenance("quadratic"))
    }

    /// Scalar path `(1 − t)a + tb` in a single 1×1 block of weight `weight`.
    pub fn scalar_affine(weight: f64, a: f64, b: f64) -> Result<Self> {
        let alg = TracialAlgebra::blocks(&[(1, weight)])?;
        let p = OperatorPath::affine(&Element::diagonal(&alg, &[a])?, &Element::diagonal(&alg, &[b])?)?;
        Ok(p.with_provenance("scalar_affine"))
    }

    /// Diagonal path with entries `(1 − t)a_i + t b_i`.
    pub fn diagonal_affine(alg: &Arc<TracialAlgebra>, a: &[f64], b: &[f64]) -> Result<Self> {
        let p = OperatorPath::affine(&Element::diagonal(alg, a)?, &Element::diagonal(alg, b)?)?;
        Ok(p.with_provenance("diagonal_affine"))
    }

    /// `τ ↦ D(τ)` on `[a, b]`, reparameterized affinely to `[0, 1]`.
    pub fn on_interval<V, D>(alg: &Arc<TracialAlgebra>, a: f64, b: f64, value: V, derivative: Option<D>) -> Result<Self>
    where
        V: Fn(f64) -> Result<Element> + Send + Sync + 'static,
        D: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        if !(b > a && a.is_finite() && b.is_finite()) {
            return Err(Error::Precondition(format!("interval [{a}, {b}] is empty")));
        }
        let p = OperatorPath::new(alg, move |t| value(a + t * (b - a)));
        Ok(match derivative {
            Some(d) => p.with_derivative(move |t| Ok(d(a + t * (b - a))?.scale(b - a))),
            None => p.with_fd_step(FD_STEP),
        })
    }

    /// Piecewise-linear interpolation of samples `(t_k, D_k)`, rescaled to `[0, 1]`.
    pub fn sampled(samples: Vec<(f64, Element)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Precondition("a sampled path needs at least two samples".into()));
        }
        let alg = samples[0].1.algebra().clone();
        for (t, e) in &samples {
            crate::algebra::same_algebra(&alg, e.algebra())?;
            if e.has_poles() {
                return Err(Error::Precondition(format!("sample at t = {t} contains pole markers")));
            }
        }
        if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::Precondition("sample times must be strictly increasing".into()));
        }
        let (t0, t1) = (samples[0].0, samples[samples.len() - 1].0);
        let knots: Vec<f64> = samples.iter().map(|(t, _)| (t - t0) / (t1 - t0)).collect();
        let values: Vec<Element> = samples
            .into_iter()
            .map(|(_, e)| e.into_hermitian())
            .collect::<Result<_>>()?;
        let slopes: Vec<Element> = values
            .windows(2)
            .zip(knots.windows(2))
            .map(|(v, k)| Ok(v[1].sub(&v[0])?.scale(1.0 / (k[1] - k[0]))))
            .collect::<Result<_>>()?;
        let locate = {
            let knots = knots.clone();
            move |t: f64, side: Side| -> usize {
                let n = knots.len() - 1;
                let mut k = knots.partition_point(|&x| x <= t).saturating_sub(1).min(n - 1);
                if side == Side::Left && k > 0 && knots[k] == t {
                    k -= 1;
                }
                k
            }
        };
        let locate2 = locate.clone();
        let (kv, vv, sv) = (knots.clone(), values.clone(), slopes.clone());
        let breaks = knots[1..knots.len() - 1].to_vec();
        OperatorPath::new(&alg, move |t| {
            let k = locate(t, Side::Interior);
            vv[k].add(&sv[k].scale(t - kv[k]))
        })
        .with_sided_derivative(move |t, side| Ok(slopes[locate2(t, side)].clone()))
        .with_breakpoints(breaks)
        .map(|p| p.with_provenance("sampled"))
    }

    /// `p1` on `[0, ½]` followed by `p2` on `[½, 1]`.
    pub fn concat(&self, other: &OperatorPath) -> Result<OperatorPath> {
        crate::algebra::same_algebra(&self.alg, &other.alg)?;
        let gap = self.value(1.0)?.max_entry_distance(&other.value(0.0)?)?;
        if gap > CLOSURE {
            return Err(Error::EndpointMismatch { gap });
        }
        let (p, q) = (self.clone(), other.clone());
        let (p2, q2) = (self.clone(), other.clone());
        let mut breaks: Vec<f64> = self.breakpoints.iter().map(|t| 0.5 * t).collect();
        breaks.push(0.5);
        breaks.extend(other.breakpoints.iter().map(|t| 0.5 + 0.5 * t));
        let mut wraps: Vec<PoleWrap> = self.wraps.iter().map(|w| PoleWrap { t: 0.5 * w.t, ..*w }).collect();
        wraps.extend(other.wraps.iter().map(|w| PoleWrap {
            t: 0.5 + 0.5 * w.t,
            ..*w
        }));
        let out = OperatorPath::new(&self.alg, move |t| {
            if t <= 0.5 {
                p.value(2.0 * t)
            } else {
                q.value(2.0 * t - 1.0)
            }
        })
        .with_sided_derivative(move |t, side| {
            let first = t < 0.5 || (t == 0.5 && side != Side::Right);
            let inner = if t == 0.5 {
                if first {
                    Side::Left
                } else {
                    Side::Right
                }
            } else {
                side
            };
            Ok(if first {
                p2.derivative(2.0 * t, inner)?.scale(2.0)
            } else {
                q2.derivative(2.0 * t - 1.0, inner)?.scale(2.0)
            })
        })
        .with_breakpoints(breaks)?
        .with_wraps(wraps)?;
        Ok(out.with_provenance(format!("concat({}, {})", self.provenance, other.provenance)))
    }

    /// `t ↦ D_{1−t}`
    pub fn reverse(&self) -> OperatorPath {
        let (p, p2) = (self.clone(), self.clone());
        let flip = |s: Side| match s {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
            Side::Interior => Side::Interior,
        };
        let mut out = OperatorPath::new(&self.alg, move |t| p.value(1.0 - t))
            .with_sided_derivative(move |t, side| Ok(p2.derivative(1.0 - t, flip(side))?.scale(-1.0)))
            .with_provenance(format!("reverse({})", self.provenance));
        out.breakpoints = self.breakpoints.iter().rev().map(|t| 1.0 - t).collect();
        out.wraps = self
            .wraps
            .iter()
            .map(|w| PoleWrap {
                point: w.point,
                t: 1.0 - w.t,
                upward: !w.upward,
            })
            .collect();
        out.wraps.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.point.cmp(&b.point)));
        out
    }

    /// `t ↦ c D_t`
    pub fn scaled(&self, c: f64) -> OperatorPath {
        let (p, p2) = (self.clone(), self.clone());
        let mut out = OperatorPath::new(&self.alg, move |t| Ok(p.value(t)?.scale(c)))
            .with_sided_derivative(move |t, side| Ok(p2.derivative(t, side)?.scale(c)))
            .with_provenance(format!("scaled({c}, {})", self.provenance));
        out.breakpoints = self.breakpoints.clone();
        out.wraps = self.wraps.clone();
        if c < 0.0 {
            for w in &mut out.wraps {
                w.upward = !w.upward;
            }
        }
        out
    }

    /// `t ↦ D_t + (1 − t)Q₀ + tQ₁`
    pub fn shifted(&self, start: Option<&Element>, end: Option<&Element>) -> Result<OperatorPath> {
        let zero = Element::zero(&self.alg);
        let q0 = start.cloned().unwrap_or_else(|| zero.clone()).into_hermitian()?;
        let q1 = end.cloned().unwrap_or(zero).into_hermitian()?;
        let dq = q1.sub(&q0)?;
        let (p, p2) = (self.clone(), self.clone());
        let mut out = OperatorPath::new(&self.alg, move |t| {
            p.value(t)?.add(&q0.scale(1.0 - t))?.add(&q1.scale(t))
        })
        .with_sided_derivative(move |t, side| p2.derivative(t, side)?.add(&dq))
        .with_provenance(format!("shifted({})", self.provenance));
        out.breakpoints = self.breakpoints.clone();
        out.wraps = self.wraps.clone();
        Ok(out)
    }

    /// `t ↦ U_t D_t U_t*`
    pub fn conjugate(&self, u: &UnitaryFamily) -> Result<OperatorPath> {
        crate::algebra::same_algebra(&self.alg, u.algebra())?;
        u.check_unitary()?;
        let (p, p2, u1, u2) = (self.clone(), self.clone(), u.clone(), u.clone());
        let mut out = OperatorPath::new(&self.alg, move |t| {
            let ut = u1.value(t)?;
            let v = ut.mul(&p.value(t)?)?.mul(&ut.adjoint())?;
            v.add(&v.adjoint())?.scale(0.5).into_hermitian()
        })
        .with_sided_derivative(move |t, side| {
            let ut = u2.value(t)?;
            let du = u2.derivative(t)?;
            let d = p2.value(t)?;
            let dd = p2.derivative(t, side)?;
            let a = du.mul(&d)?.mul(&ut.adjoint())?;
            let b = ut.mul(&dd)?.mul(&ut.adjoint())?;
            a.add(&a.adjoint())?.add(&b.add(&b.adjoint())?.scale(0.5))?.into_hermitian()
        })
        .with_provenance(format!("conjugate({})", self.provenance));
        out.breakpoints = self.breakpoints.clone();
        out.wraps = self.wraps.clone();
        Ok(out)
    }

    /// Straight-line homotopy `(1 − s)p + s q` at fixed `s`.
    pub fn interpolate(p: &OperatorPath, q: &OperatorPath, s: f64) -> Result<OperatorPath> {
        crate::algebra::same_algebra(&p.alg, &q.alg)?;
        if !p.wraps.is_empty() || !q.wraps.is_empty() {
            return Err(Error::Precondition("cannot interpolate paths with pole wraps".into()));
        }
        let (p1, q1, p2, q2) = (p.clone(), q.clone(), p.clone(), q.clone());
        let mut breaks = p.breakpoints.clone();
        breaks.extend(&q.breakpoints);
        OperatorPath::new(&p.alg, move |t| p1.value(t)?.scale(1.0 - s).add(&q1.value(t)?.scale(s)))
            .with_sided_derivative(move |t, side| {
                p2.derivative(t, side)?.scale(1.0 - s).add(&q2.derivative(t, side)?.scale(s))
            })
            .with_breakpoints(breaks)
            .map(|o| o.with_provenance(format!("interpolate({s})")))
    }
}

type FamilyFn = Arc<dyn Fn(f64) -> Result<Element> + Send + Sync>;

/// A C¹ family of unitaries `t ↦ U_t` on `[0, 1]`.
#[derive(Clone)]
pub struct UnitaryFamily {
    alg: Arc<TracialAlgebra>,
    value: FamilyFn,
    derivative: FamilyFn,
}

impl UnitaryFamily {
    pub fn new<V, D>(alg: &Arc<TracialAlgebra>, value: V, derivative: D) -> Self
    where
        V: Fn(f64) -> Result<Element> + Send + Sync + 'static,
        D: Fn(f64) -> Result<Element> + Send + Sync + 'static,
    {
        UnitaryFamily {
            alg: alg.clone(),
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    /// `U_t = e^{itH}` for Hermitian `H`.
    pub fn exp_i(h: &Element) -> Result<Self> {
        let spec = h.eigh()?;
        let (s1, s2) = (spec.clone(), spec);
        let h2 = h.clone();
        let alg = h.algebra().clone();
        let e = move |t: f64| FunctionSpec::complex("exp_it", move |x| C64::from_polar(1.0, t * x));
        let e2 = e;
        Ok(UnitaryFamily::new(
            &alg,
            move |t| s1.apply(&e(t)),
            move |t| h2.mul(&s2.apply(&e2(t))?).map(|m| m.scale_complex(C64::new(0.0, 1.0))),
        ))
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    pub fn value(&self, t: f64) -> Result<Element> {
        (self.value)(t)
    }

    pub fn derivative(&self, t: f64) -> Result<Element> {
        (self.derivative)(t)
    }

    /// Samples unitarity at nine points.
    pub fn check_unitary(&self) -> Result<()> {
        for k in 0..=8 {
            let t = k as f64 / 8.0;
            let u = self.value(t)?;
            let dev = u.unitarity_defect();
            if dev > UNITARITY * (u.algebra().total_dim() as f64).max(1.0) {
                return Err(Error::Precondition(format!(
                    "conjugating family is not unitary at t = {t} (defect {dev:.3e})"
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_value_and_derivative() {
        let p = OperatorPath::scalar_affine(2.0, -1.0, 3.0).unwrap();
        assert_eq!(p.value(0.5).unwrap().grid_real(), None);
        assert!((p.value(0.25).unwrap().trace().unwrap().re - 0.0).abs() < 1e-15);
        assert!((p.derivative(0.3, Side::Interior).unwrap().trace().unwrap().re - 8.0).abs() < 1e-14);
        let e = p.endpoints().unwrap();
        assert_eq!((e.margin_start, e.margin_end), (1.0, 3.0));
    }

    #[test]
    fn fd_derivative_near_ends() {
        let alg = TracialAlgebra::blocks(&[(1, 1.0)]).unwrap();
        let p = OperatorPath::new(&alg.clone(), move |t| Element::diagonal(&alg, &[t * t]));
        for &t in &[0.0, 0.5, 1.0] {
            let d = p.derivative(t, Side::Interior).unwrap().trace().unwrap().re;
            assert!((d - 2.0 * t).abs() < 1e-8);
        }
    }

    #[test]
    fn sampled_path_sides() {
        let alg = TracialAlgebra::blocks(&[(1, 1.0)]).unwrap();
        let s = vec![
            (0.0, Element::diagonal(&alg, &[0.0]).unwrap()),
            (1.0, Element::diagonal(&alg, &[1.0]).unwrap()),
            (2.0, Element::diagonal(&alg, &[-1.0]).unwrap()),
        ];
        let p = OperatorPath::sampled(s).unwrap();
        assert_eq!(p.breakpoints(), &[0.5]);
        let tr = |e: Element| e.trace().unwrap().re;
        assert_eq!(tr(p.derivative(0.5, Side::Left).unwrap()), 2.0);
        assert_eq!(tr(p.derivative(0.5, Side::Right).unwrap()), -4.0);
        assert!((tr(p.value(0.75).unwrap()) - 0.0).abs() < 1e-15);
    }

    #[test]
    fn concat_and_reverse() {
        let p = OperatorPath::scalar_affine(1.0, -1.0, 1.0).unwrap();
        let r = p.reverse();
        let c = p.concat(&r).unwrap();
        let tr = |e: Element| e.trace().unwrap().re;
        assert_eq!(tr(c.value(0.5).unwrap()), 1.0);
        assert_eq!(tr(c.derivative(0.5, Side::Left).unwrap()), 4.0);
        assert_eq!(tr(c.derivative(0.5, Side::Right).unwrap()), -4.0);
        let q = OperatorPath::scalar_affine(1.0, 5.0, 1.0).unwrap();
        assert!(matches!(p.concat(&q), Err(Error::EndpointMismatch { .. })));
    }

    #[test]
    fn exp_family_is_unitary() {
        let alg = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let h = Element::diagonal(&alg, &[1.0, -2.0]).unwrap();
        let u = UnitaryFamily::exp_i(&h).unwrap();
        u.check_unitary().unwrap();
        let d = u.derivative(0.3).unwrap();
        let fd = u.value(0.3 + 1e-6).unwrap().sub(&u.value(0.3 - 1e-6).unwrap()).unwrap().scale(5e5);
        assert!(d.max_entry_distance(&fd).unwrap() < 1e-8);
    }

    #[test]
    fn conjugation_in_commutative_blocks() {
        let alg = TracialAlgebra::blocks(&[(1, 2.0), (1, 0.5)]).unwrap();
        let a = Element::diagonal(&alg, &[-0.7, 1.3]).unwrap();
        let u = UnitaryFamily::exp_i(&Element::diagonal(&alg, &[1.9, -0.4]).unwrap()).unwrap();
        let p = OperatorPath::affine(&a, &a).unwrap().conjugate(&u).unwrap();
        for t in [0.0, 0.4, 1.0] {
            assert!(p.derivative(t, Side::Right).unwrap().op_norm() < 1e-14);
            assert!(p.value(t).unwrap().distance(&a).unwrap() < 1e-14);
        }
    }
}
