//! Normalizing functions: odd, non-decreasing, `χ(±∞) = ±1`, `χ⁻¹(0) = {0}`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

use crate::algebra::{FunctionSpec, C64};
use crate::error::{Error, Result};
use crate::quad::{integrate, QuadratureConfig};

const TABLE_NODES: usize = 256;

/// Cumulative integrals of a density at equispaced nodes of `[0, end]`.
#[derive(Debug)]
struct ChiTable {
    end: f64,
    cumulative: Vec<f64>,
    density: fn(f64, f64) -> f64,
    param: f64,
}

fn quad_cfg(tol: f64) -> QuadratureConfig {
    QuadratureConfig {
        abs_tol: tol,
        max_depth: 40,
        min_panels: 2,
        ..Default::default()
    }
}

impl ChiTable {
    fn build(end: f64, density: fn(f64, f64) -> f64, param: f64) -> ChiTable {
        let h = end / TABLE_NODES as f64;
        let cfg = quad_cfg(1e-16);
        let mut cumulative = vec![0.0; TABLE_NODES + 1];
        for k in 0..TABLE_NODES {
            let a = h * k as f64;
            let b = if k + 1 == TABLE_NODES { end } else { h * (k + 1) as f64 };
            let seg = integrate(&cfg, &[a, b], 0, |s, _| Ok(density(s, param)))
                .map(|r| r.value)
                .unwrap_or_else(|e| match e {
                    Error::Quadrature { .. } => f64::NAN,
                    _ => unreachable!(),
                });
            cumulative[k + 1] = cumulative[k] + seg;
        }
        ChiTable {
            end,
            cumulative,
            density,
            param,
        }
    }

    fn total(&self) -> f64 {
        self.cumulative[TABLE_NODES]
    }

    /// `∫₀^s density` for `s ∈ [0, end]`.
    fn partial(&self, s: f64) -> f64 {
        if s >= self.end {
            return self.total();
        }
        let h = self.end / TABLE_NODES as f64;
        let k = ((s / h).floor() as usize).min(TABLE_NODES - 1);
        let a = h * k as f64;
        if s == a {
            return self.cumulative[k];
        }
        let (density, param) = (self.density, self.param);
        let r = integrate(&quad_cfg(1e-15), &[a, s], 0, |x, _| Ok(density(x, param)));
        self.cumulative[k] + r.map(|r| r.value).unwrap_or(f64::NAN)
    }
}

/// Density of `χ_e` in terms of `w = 1 − y²`: `w^{-3/2} e^{1 − 1/w}`.
fn chi_e_density_w(w: f64) -> f64 {
    if w <= 0.0 {
        return 0.0;
    }
    let ex = 1.0 - 1.0 / w;
    if ex < -745.0 {
        return 0.0;
    }
    w.powf(-1.5) * ex.exp()
}

fn chi_e_density(y: f64, _: f64) -> f64 {
    chi_e_density_w((1.0 - y) * (1.0 + y))
}

/// `cos^{p−1} θ`, the density of `χ_p` after `y = sin θ`.
fn chi_p_density(theta: f64, p: f64) -> f64 {
    theta.cos().max(0.0).powf(p - 1.0)
}

fn chi_e_table() -> Arc<ChiTable> {
    static TABLE: OnceLock<Arc<ChiTable>> = OnceLock::new();
    TABLE
        .get_or_init(|| Arc::new(ChiTable::build(1.0, chi_e_density, 0.0)))
        .clone()
}

fn chi_p_table(p: f64) -> Arc<ChiTable> {
    static TABLES: OnceLock<Mutex<HashMap<u64, Arc<ChiTable>>>> = OnceLock::new();
    let map = TABLES.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = map.lock().unwrap_or_else(|e| e.into_inner());
    guard
        .entry(p.to_bits())
        .or_insert_with(|| Arc::new(ChiTable::build(FRAC_PI_2, chi_p_density, p)))
        .clone()
}

/// Normalizing constant `C` of `χ_e`, by quadrature of its defining integral.
pub fn chi_e_constant() -> f64 {
    chi_e_table().total()
}

/// Normalizing constant `C_p = ∫₀¹ (1 − y²)^{(p−2)/2} dy`, by quadrature after `y = sin θ`.
pub fn chi_p_constant(p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("χ_p needs p ≥ 1, got {p}")));
    }
    Ok(chi_p_table(p).total())
}

/// Scalar access shared by the normalizing functions on ℝ and on `[−1, 1]`.
pub trait ScalarChi {
    fn value(&self, x: f64) -> f64;
    fn derivative(&self, x: f64) -> f64;
}

/// `S(y) = erf(y / √(1 − y²))` on `(−1, 1)`, `sign(y)` outside.
fn smooth_step(y: f64) -> f64 {
    if y.abs() >= 1.0 {
        return y.signum();
    }
    libm::erf(y / ((1.0 - y) * (1.0 + y)).sqrt())
}

fn smooth_step_derivative(y: f64) -> f64 {
    let w = (1.0 - y) * (1.0 + y);
    if w <= 1e-100 {
        return 0.0;
    }
    2.0 / PI.sqrt() * (-y * y / w).exp() * w.powf(-1.5)
}

#[derive(Debug, Clone)]
enum Kind {
    SmoothGap { eps: f64 },
    ChiE { table: Arc<ChiTable> },
    ChiP { p: f64, table: Arc<ChiTable> },
}

/// A normalizing function on ℝ.
///
/// `smooth_gap(ε)` is `±1` outside `(−ε, ε)`; `chi_e` and `chi_p(p)` are the bounded
/// functions `χ_e`, `χ_p` composed with the bounded transform `x ↦ x(1+x²)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct NormalizingFunction {
    kind: Kind,
}

impl NormalizingFunction {
    pub fn smooth_gap(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Precondition(format!("smooth gap needs ε > 0, got {eps}")));
        }
        Ok(NormalizingFunction {
            kind: Kind::SmoothGap { eps },
        })
    }

    pub fn chi_e() -> Self {
        NormalizingFunction {
            kind: Kind::ChiE { table: chi_e_table() },
        }
    }

    pub fn chi_p(p: f64) -> Result<Self> {
        chi_p_constant(p)?;
        Ok(NormalizingFunction {
            kind: Kind::ChiP {
                p,
                table: chi_p_table(p),
            },
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            Kind::SmoothGap { eps } => format!("smooth_gap({eps})"),
            Kind::ChiE { .. } => "chi_e".into(),
            Kind::ChiP { p, .. } => format!("chi_p({p})"),
        }
    }

    /// Gap parameter `ε` of a smooth gap function.
    pub fn gap(&self) -> Option<f64> {
        match self.kind {
            Kind::SmoothGap { eps } => Some(eps),
            _ => None,
        }
    }

    /// The underlying function on `[−1, 1]` (for `chi_e`, `chi_p`).
    pub fn bounded(&self) -> Option<BoundedChi> {
        match &self.kind {
            Kind::SmoothGap { .. } => None,
            Kind::ChiE { table } => Some(BoundedChi {
                kind: BoundedKind::E { table: table.clone() },
            }),
            Kind::ChiP { p, table } => Some(BoundedChi {
                kind: BoundedKind::P {
                    p: *p,
                    table: table.clone(),
                },
            }),
        }
    }

    pub fn as_function(&self) -> FunctionSpec {
        let (a, b) = (self.clone(), self.clone());
        FunctionSpec::real(self.name(), move |x| a.value(x))
            .with_real_derivative(move |x| b.derivative(x))
            .with_limits(-1.0, 1.0)
    }

    /// `x ↦ e^{iπ(χ(x)+1)}`, equal to 1 wherever `χ = ±1`.
    pub fn exp_loop_function(&self) -> FunctionSpec {
        let (a, b) = (self.clone(), self.clone());
        FunctionSpec::complex(format!("exp_i_pi({})", self.name()), move |x| {
            C64::from_polar(1.0, PI * (a.value(x) + 1.0))
        })
        .with_derivative(move |x| {
            C64::new(0.0, PI * b.derivative(x)) * C64::from_polar(1.0, PI * (b.value(x) + 1.0))
        })
        .with_limits(1.0, 1.0)
    }
}

impl ScalarChi for NormalizingFunction {
    fn value(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return x.signum();
        }
        match &self.kind {
            Kind::SmoothGap { eps } => smooth_step(x / eps),
            Kind::ChiE { table } => {
                let y = x.abs() / (1.0 + x * x).sqrt();
                x.signum() * (table.partial(y) / table.total()).min(1.0)
            }
            Kind::ChiP { table, .. } => {
                x.signum() * (table.partial(x.abs().atan()) / table.total()).min(1.0)
            }
        }
    }

    fn derivative(&self, x: f64) -> f64 {
        if x.is_infinite() {
            return 0.0;
        }
        let w = 1.0 / (1.0 + x * x);
        match &self.kind {
            Kind::SmoothGap { eps } => smooth_step_derivative(x / eps) / eps,
            Kind::ChiE { table } => chi_e_density_w(w) * w.powf(1.5) / table.total(),
            Kind::ChiP { p, table } => w.powf((p + 1.0) / 2.0) / table.total(),
        }
    }
}

#[derive(Clone)]
enum BoundedKind {
    E { table: Arc<ChiTable> },
    P { p: f64, table: Arc<ChiTable> },
    Gap { eps: f64 },
    Custom(FunctionSpec),
}

/// An odd function on `[−1, 1]` with `χ(1) = 1`, as used with bounded transforms.
#[derive(Clone)]
pub struct BoundedChi {
    kind: BoundedKind,
}

impl std::fmt::Debug for BoundedChi {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BoundedChi({})", self.name())
    }
}

impl BoundedChi {
    pub fn chi_e() -> Self {
        NormalizingFunction::chi_e().bounded().expect("chi_e is bounded")
    }

    pub fn chi_p(p: f64) -> Result<Self> {
        Ok(NormalizingFunction::chi_p(p)?.bounded().expect("chi_p is bounded"))
    }

    /// `S(y/ε)` restricted to `[−1, 1]`, with `0 < ε ≤ 1`.
    pub fn smooth_gap(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::Precondition(format!("bounded smooth gap needs ε ∈ (0, 1], got {eps}")));
        }
        Ok(BoundedChi {
            kind: BoundedKind::Gap { eps },
        })
    }

    /// A user function; checked for oddness, monotonicity and `χ(1) = 1` on a dense sample.
    pub fn custom(f: FunctionSpec) -> Result<Self> {
        let n = 2000;
        let mut prev = f64::NEG_INFINITY;
        for i in 0..=n {
            let y = -1.0 + 2.0 * i as f64 / n as f64;
            let v = f.eval(y)?.re;
            let m = f.eval(-y)?.re;
            if (v + m).abs() > 1e-10 {
                return Err(Error::Precondition(format!("{} is not odd at {y}", f.name())));
            }
            if v < prev - 1e-12 {
                return Err(Error::Precondition(format!("{} decreases at {y}", f.name())));
            }
            prev = v;
        }
        if (f.eval(1.0)?.re - 1.0).abs() > 1e-10 {
            return Err(Error::Precondition(format!("{} must satisfy χ(1) = 1", f.name())));
        }
        Ok(BoundedChi {
            kind: BoundedKind::Custom(f),
        })
    }

    pub fn name(&self) -> String {
        match &self.kind {
            BoundedKind::E { .. } => "chi_e".into(),
            BoundedKind::P { p, .. } => format!("chi_p({p})"),
            BoundedKind::Gap { eps } => format!("smooth_gap({eps})"),
            BoundedKind::Custom(f) => f.name().to_string(),
        }
    }

    pub fn as_function(&self) -> FunctionSpec {
        let (a, b) = (self.clone(), self.clone());
        FunctionSpec::real(self.name(), move |x| a.value(x)).with_real_derivative(move |x| b.derivative(x))
    }
}

impl ScalarChi for BoundedChi {
    fn value(&self, y: f64) -> f64 {
        match &self.kind {
            BoundedKind::Custom(f) => f.eval(y).map(|v| v.re).unwrap_or(f64::NAN),
            BoundedKind::Gap { eps } => smooth_step(y / eps),
            _ if y.abs() >= 1.0 => y.signum(),
            BoundedKind::E { table } => y.signum() * table.partial(y.abs()) / table.total(),
            BoundedKind::P { table, .. } => {
                y.signum() * table.partial(y.abs().asin()) / table.total()
            }
        }
    }

    fn derivative(&self, y: f64) -> f64 {
        let w = (1.0 - y) * (1.0 + y);
        match &self.kind {
            BoundedKind::Custom(f) => f.derivative(y).map(|v| v.re).unwrap_or(f64::NAN),
            BoundedKind::Gap { eps } => smooth_step_derivative(y / eps) / eps,
            BoundedKind::E { table } => chi_e_density_w(w) / table.total(),
            BoundedKind::P { p, table } => {
                if w <= 0.0 {
                    return if *p > 2.0 { 0.0 } else if *p == 2.0 { 1.0 / table.total() } else { f64::INFINITY };
                }
                w.powf((p - 2.0) / 2.0) / table.total()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_e_constant_is_half_sqrt_pi() {
        assert!((chi_e_constant() - PI.sqrt() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn chi_p_constants() {
        assert!((chi_p_constant(1.0).unwrap() - FRAC_PI_2).abs() < 1e-13);
        assert!((chi_p_constant(2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((chi_p_constant(3.0).unwrap() - PI / 4.0).abs() < 1e-13);
        assert!(chi_p_constant(0.5).is_err());
    }

    #[test]
    fn chi_e_matches_erf_oracle() {
        let chi = BoundedChi::chi_e();
        for &y in &[0.0, 0.1, 0.37, 0.5, 0.8, 0.95, 0.999] {
            let oracle = libm::erf(y / (1.0f64 - y * y).sqrt());
            assert!((chi.value(y) - oracle).abs() < 1e-11, "y = {y}");
            assert!((chi.value(-y) + oracle).abs() < 1e-11);
        }
        let composed = NormalizingFunction::chi_e();
        for &x in &[0.3, 1.0, 2.0, 5.0] {
            assert!((composed.value(x) - libm::erf(x)).abs() < 1e-11);
            let d = 2.0 / PI.sqrt() * (-x * x).exp();
            assert!((composed.derivative(x) - d).abs() < 1e-11);
        }
    }

    #[test]
    fn chi_2_is_identity_on_unit_interval() {
        let chi = BoundedChi::chi_p(2.0).unwrap();
        for &y in &[-0.9, -0.2, 0.0, 0.4, 0.77] {
            assert!((chi.value(y) - y).abs() < 1e-13);
        }
        let composed = NormalizingFunction::chi_p(2.0).unwrap();
        assert!((composed.value(3.0) - 3.0 / 10f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn smooth_gap_is_involutive_outside_gap() {
        let chi = NormalizingFunction::smooth_gap(0.3).unwrap();
        for &x in &[0.3, 0.31, 1.0, 100.0] {
            assert_eq!(chi.value(x), 1.0);
            assert_eq!(chi.value(-x), -1.0);
            assert_eq!(chi.derivative(x), 0.0);
        }
        assert!(chi.value(1e-12) > 0.0);
        assert_eq!(chi.value(0.0), 0.0);
    }

    #[test]
    fn derivatives_match_difference_quotients() {
        let fns = [
            NormalizingFunction::smooth_gap(0.7).unwrap(),
            NormalizingFunction::chi_e(),
            NormalizingFunction::chi_p(1.5).unwrap(),
            NormalizingFunction::chi_p(3.0).unwrap(),
        ];
        for chi in &fns {
            for &x in &[-1.3, -0.2, 0.05, 0.5, 2.0] {
                let h = 1e-5;
                let fd = (chi.value(x + h) - chi.value(x - h)) / (2.0 * h);
                assert!((fd - chi.derivative(x)).abs() < 1e-7, "{} at {x}", chi.name());
            }
        }
    }

    #[test]
    fn custom_bounded_chi_validation() {
        assert!(BoundedChi::custom(FunctionSpec::identity()).is_ok());
        assert!(BoundedChi::custom(FunctionSpec::polynomial(&[0.0, 2.0])).is_err());
        assert!(BoundedChi::custom(FunctionSpec::polynomial(&[0.1, 0.9])).is_err());
    }
}
