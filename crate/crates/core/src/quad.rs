//! Adaptive composite Simpson quadrature for scalar and matrix-valued integrands.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which one-sided limit an integrand should use at a panel endpoint.
///
/// Piecewise paths are only piecewise differentiable; at a breakpoint the
/// quadrature asks for the derivative of the piece it is integrating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// Limit from below (end of a segment).
    Left,
    /// Limit from above (start of a segment).
    Right,
    Interior,
}

/// Substitution mapping `[1, ∞)` onto `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSubstitution {
    /// `t = 1/u²`
    InverseSquare,
    /// `t = 1/u`
    Inverse,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub abs_tol: f64,
    pub max_depth: u32,
    /// Lower bound on the number of initial panels per integral.
    pub min_panels: usize,
    pub tail_substitution: TailSubstitution,
    /// Tails are dropped once their rigorous bound is below `truncation_factor * abs_tol`.
    pub truncation_factor: f64,
    pub fd_step: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            abs_tol: 1e-8,
            max_depth: 20,
            min_panels: 8,
            tail_substitution: TailSubstitution::InverseSquare,
            truncation_factor: 0.1,
            fd_step: crate::tolerances::FD_STEP,
        }
    }
}

impl QuadratureConfig {
    pub fn with_tol(abs_tol: f64) -> Self {
        QuadratureConfig {
            abs_tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.abs_tol.is_finite()) {
            return Err(Error::validation("quadrature.abs_tol", "must be positive and finite"));
        }
        if self.max_depth < 4 || self.max_depth > 60 {
            return Err(Error::validation("quadrature.max_depth", "must lie in [4, 60]"));
        }
        if self.min_panels == 0 || self.min_panels > 1 << 20 {
            return Err(Error::validation("quadrature.min_panels", "must lie in [1, 2^20]"));
        }
        if !(self.truncation_factor > 0.0 && self.truncation_factor <= 1.0) {
            return Err(Error::validation("quadrature.truncation_factor", "must lie in (0, 1]"));
        }
        if !(self.fd_step > 0.0 && self.fd_step < 0.1) {
            return Err(Error::validation("quadrature.fd_step", "must lie in (0, 0.1)"));
        }
        Ok(())
    }
}

/// Values that can be integrated: a vector space with a distance.
pub trait QuadValue: Clone {
    /// `self += a * x`
    fn axpy(&mut self, a: f64, x: &Self);
    fn scaled(&self, a: f64) -> Self;
    fn distance(&self, other: &Self) -> f64;
    fn magnitude(&self) -> f64;
}

impl QuadValue for f64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
    fn scaled(&self, a: f64) -> Self {
        a * self
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).abs()
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl QuadValue for Complex64 {
    fn axpy(&mut self, a: f64, x: &Self) {
        *self += x * a;
    }
    fn scaled(&self, a: f64) -> Self {
        self * a
    }
    fn distance(&self, other: &Self) -> f64 {
        (self - other).norm()
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

impl QuadValue for DMatrix<Complex64> {
    fn axpy(&mut self, a: f64, x: &Self) {
        self.zip_apply(x, |s, v| *s += v * a);
    }
    fn scaled(&self, a: f64) -> Self {
        self.map(|v| v * a)
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other.iter())
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.norm()))
    }
}

impl<T: QuadValue> QuadValue for Vec<T> {
    fn axpy(&mut self, a: f64, x: &Self) {
        for (s, v) in self.iter_mut().zip(x) {
            s.axpy(a, v);
        }
    }
    fn scaled(&self, a: f64) -> Self {
        self.iter().map(|v| v.scaled(a)).collect()
    }
    fn distance(&self, other: &Self) -> f64 {
        self.iter()
            .zip(other)
            .fold(0.0, |m, (a, b)| m.max(a.distance(b)))
    }
    fn magnitude(&self) -> f64 {
        self.iter().fold(0.0, |m, a| m.max(a.magnitude()))
    }
}

#[derive(Debug, Clone)]
pub struct Integral<T> {
    pub value: T,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
}

struct State {
    error: f64,
    evaluations: usize,
    unconverged: bool,
    max_depth: u32,
}

fn simpson<T: QuadValue>(h: f64, fa: &T, fm: &T, fb: &T) -> T {
    let mut s = fa.scaled(h / 6.0);
    s.axpy(4.0 * h / 6.0, fm);
    s.axpy(h / 6.0, fb);
    s
}

#[allow(clippy::too_many_arguments)]
fn refine<T, F>(
    f: &mut F,
    a: f64,
    b: f64,
    fa: &T,
    fm: &T,
    fb: &T,
    whole: T,
    tol: f64,
    depth: u32,
    st: &mut State,
) -> Result<T>
where
    T: QuadValue,
    F: FnMut(f64, Side) -> Result<T>,
{
    let m = 0.5 * (a + b);
    let flm = f(0.5 * (a + m), Side::Interior)?;
    let frm = f(0.5 * (m + b), Side::Interior)?;
    st.evaluations += 2;
    let left = simpson(m - a, fa, &flm, fm);
    let right = simpson(b - m, fm, &frm, fb);
    let mut both = left.clone();
    both.axpy(1.0, &right);
    let delta = both.distance(&whole);
    let floor = 64.0 * f64::EPSILON * both.magnitude();
    if delta <= 15.0 * tol || delta <= floor || depth >= st.max_depth {
        if depth >= st.max_depth && delta > 15.0 * tol && delta > floor {
            st.unconverged = true;
        }
        st.error += delta / 15.0;
        let mut out = both.clone();
        out.axpy(-1.0 / 15.0, &whole);
        out.axpy(1.0 / 15.0, &both);
        return Ok(out);
    }
    let l = refine(f, a, m, fa, &flm, fm, left, 0.5 * tol, depth + 1, st)?;
    let r = refine(f, m, b, fm, &frm, fb, right, 0.5 * tol, depth + 1, st)?;
    let mut out = l;
    out.axpy(1.0, &r);
    Ok(out)
}

/// Integrates `f` over `[breaks[0], breaks[last]]`, never letting a panel straddle an
/// interior break. `panels` is the initial number of panels across the whole range.
pub fn integrate<T, F>(
    cfg: &QuadratureConfig,
    breaks: &[f64],
    panels: usize,
    mut f: F,
) -> Result<Integral<T>>
where
    T: QuadValue,
    F: FnMut(f64, Side) -> Result<T>,
{
    if breaks.len() < 2 {
        return Err(Error::Precondition("integration range needs two break points".into()));
    }
    let a = breaks[0];
    let b = breaks[breaks.len() - 1];
    let total = b - a;
    if !(total > 0.0) || breaks.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Precondition("break points must be strictly increasing".into()));
    }
    let panels = panels.max(cfg.min_panels).max(1);
    let mut st = State {
        error: 0.0,
        evaluations: 0,
        unconverged: false,
        max_depth: cfg.max_depth,
    };
    let mut acc: Option<T> = None;
    let mut used = 0;
    for w in breaks.windows(2) {
        let (s0, s1) = (w[0], w[1]);
        let n = ((panels as f64) * (s1 - s0) / total).ceil().max(1.0) as usize;
        used += n;
        let h = (s1 - s0) / n as f64;
        let mut fa = f(s0, Side::Right)?;
        st.evaluations += 1;
        for k in 0..n {
            let x0 = s0 + h * k as f64;
            let x1 = if k + 1 == n { s1 } else { s0 + h * (k + 1) as f64 };
            let fm = f(0.5 * (x0 + x1), Side::Interior)?;
            let fb = f(x1, if k + 1 == n { Side::Left } else { Side::Interior })?;
            st.evaluations += 2;
            let whole = simpson(x1 - x0, &fa, &fm, &fb);
            let tol = cfg.abs_tol * (x1 - x0) / total;
            let part = refine(&mut f, x0, x1, &fa, &fm, &fb, whole, tol, 0, &mut st)?;
            match acc.as_mut() {
                Some(v) => v.axpy(1.0, &part),
                None => acc = Some(part),
            }
            fa = fb;
        }
    }
    if st.unconverged && st.error > cfg.abs_tol {
        return Err(Error::Quadrature {
            estimate: st.error,
            tolerance: cfg.abs_tol,
        });
    }
    Ok(Integral {
        value: acc.expect("at least one panel"),
        error_estimate: st.error,
        evaluations: st.evaluations,
        panels: used,
    })
}

/// Plain scalar integral on `[a, b]`.
pub fn integrate_scalar<F>(cfg: &QuadratureConfig, a: f64, b: f64, mut f: F) -> Result<Integral<f64>>
where
    F: FnMut(f64) -> f64,
{
    integrate(cfg, &[a, b], cfg.min_panels, |t, _| Ok(f(t)))
}

#[derive(Debug, Clone)]
pub struct TailIntegral {
    pub value: f64,
    pub error_estimate: f64,
    /// The integral was cut at `t = cutoff`.
    pub cutoff: f64,
    pub truncation_bound: f64,
    pub evaluations: usize,
}

/// Integrates `phi` over `[1, ∞)`.
///
/// `tail_mass(T)` must bound `∫_T^∞ |phi|` and decrease to zero; the range beyond the
/// first `T` with `tail_mass(T) ≤ truncation_factor · abs_tol` is dropped and the
/// rest is mapped to a bounded interval by the configured substitution.
pub fn integrate_tail<F, M>(cfg: &QuadratureConfig, tail_mass: M, mut phi: F) -> Result<TailIntegral>
where
    F: FnMut(f64) -> Result<f64>,
    M: Fn(f64) -> f64,
{
    let target = cfg.truncation_factor * cfg.abs_tol;
    let mut hi = 1.0;
    while tail_mass(hi) > target {
        hi *= 2.0;
        if hi > 1e30 {
            return Err(Error::Precondition(
                "integrand on [1, ∞) does not decay fast enough to truncate".into(),
            ));
        }
    }
    let cutoff = if hi == 1.0 {
        1.0
    } else {
        let mut lo = hi / 2.0;
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tail_mass(mid) > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        hi
    };
    let truncation_bound = tail_mass(cutoff);
    if cutoff <= 1.0 {
        return Ok(TailIntegral {
            value: 0.0,
            error_estimate: truncation_bound,
            cutoff,
            truncation_bound,
            evaluations: 0,
        });
    }
    type Substitution = fn(f64) -> (f64, f64);
    let (lo, sub): (f64, Substitution) = match cfg.tail_substitution {
        TailSubstitution::InverseSquare => (1.0 / cutoff.sqrt(), |u| (1.0 / (u * u), 2.0 / (u * u * u))),
        TailSubstitution::Inverse => (1.0 / cutoff, |u| (1.0 / u, 1.0 / (u * u))),
    };
    let inner = QuadratureConfig {
        abs_tol: cfg.abs_tol * (1.0 - cfg.truncation_factor),
        ..cfg.clone()
    };
    let r = integrate(&inner, &[lo, 1.0], cfg.min_panels.max(16), |u, _| {
        let (t, jac) = sub(u);
        Ok(phi(t)? * jac)
    })?;
    Ok(TailIntegral {
        value: r.value,
        error_estimate: r.error_estimate + truncation_bound,
        cutoff,
        truncation_bound,
        evaluations: r.evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_is_exact() {
        let cfg = QuadratureConfig::default();
        let r = integrate_scalar(&cfg, 0.0, 2.0, |x| x * x * x - x).unwrap();
        assert!((r.value - 2.0).abs() < 1e-13);
    }

    #[test]
    fn oscillatory_integral_meets_tolerance() {
        let cfg = QuadratureConfig::with_tol(1e-10);
        let r = integrate_scalar(&cfg, 0.0, 10.0, |x| (3.0 * x).sin()).unwrap();
        let exact = (1.0 - (30.0f64).cos()) / 3.0;
        assert!((r.value - exact).abs() < 1e-9);
    }

    #[test]
    fn breaks_keep_one_sided_limits() {
        let cfg = QuadratureConfig::default();
        let r = integrate(&cfg, &[0.0, 1.0, 2.0], 4, |t, side| {
            let right_piece = t > 1.0 || (t == 1.0 && side == Side::Right);
            Ok(if right_piece { 5.0 } else { 1.0 })
        })
        .unwrap();
        assert!((r.value - 6.0).abs() < 1e-14);
    }

    #[test]
    fn tail_matches_erfc() {
        let cfg = QuadratureConfig::default();
        let lam: f64 = 0.5;
        let r = integrate_tail(
            &cfg,
            |t| libm::erfc(t.sqrt() * lam),
            |t| Ok(t.powf(-0.5) * lam * (-t * lam * lam).exp() / std::f64::consts::PI.sqrt()),
        )
        .unwrap();
        assert!((r.value - libm::erfc(lam)).abs() < 1e-9);
    }

    #[test]
    fn unconverged_integral_reports_estimate() {
        let cfg = QuadratureConfig {
            abs_tol: 1e-14,
            max_depth: 4,
            min_panels: 1,
            ..Default::default()
        };
        let err = integrate_scalar(&cfg, 0.0, 1.0, |x| (50.0 * x).sin()).unwrap_err();
        assert!(matches!(err, Error::Quadrature { .. }));
    }

    #[test]
    fn config_validation() {
        assert!(QuadratureConfig::default().validate().is_ok());
        let bad = QuadratureConfig {
            max_depth: 3,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
