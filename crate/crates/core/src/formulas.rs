//! Integral formulas for spectral flow and the truncated eta invariant.

use std::f64::consts::PI;

use serde::Serialize;

use crate::algebra::{Element, FunctionSpec, Spectral, C64};
use crate::error::{Error, Result};
use crate::normalizing::{BoundedChi, NormalizingFunction, ScalarChi};
use crate::path::{OperatorPath, Side};
use crate::quad::{integrate, integrate_scalar, integrate_tail, QuadratureConfig};
use crate::specflow::panels_for;

#[derive(Debug, Clone, Serialize)]
pub struct FormulaFlow {
    pub value: f64,
    /// The `dt`-integral term.
    pub integral: f64,
    /// `½τ(2P₀ − 1 − χ(F₀))`
    pub defect_start: f64,
    /// `½τ(2P₁ − 1 − χ(F₁))`
    pub defect_end: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    /// Heat formula: largest difference between the defect route and the `η₁` route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta_route_discrepancy: Option<f64>,
}

fn invertible_spectrum(d: &Element) -> Result<Spectral> {
    let spec = d.eigh()?;
    let m = spec.margin();
    if !(m > 0.0) {
        return Err(Error::NonInvertible { t: f64::NAN, sigma: m });
    }
    Ok(spec)
}

fn sign_defect(l: f64, chi: f64) -> f64 {
    let s = if l >= 0.0 { 1.0 } else { -1.0 };
    s - chi
}

/// Integrates `τ(Ḋ_t h(D_t))` over the path segments.
fn path_trace_integral(
    path: &OperatorPath,
    quad: &QuadratureConfig,
    rate: f64,
    h: impl Fn(f64) -> f64,
) -> Result<(f64, f64, usize)> {
    let breaks = path.segments();
    let r = integrate(quad, &breaks, panels_for(rate, quad), |t, side: Side| {
        let d = path.value(t)?;
        let dot = path.derivative(t, side)?.without_poles_of(&d);
        Ok(d.eigh()?.trace_with(&dot, &h)?.re)
    })?;
    Ok((r.value, r.error_estimate, r.evaluations))
}

/// `½∫τ(Ḟ_t χ′(F_t))dt + ½τ(2P₁ − 1 − χ(F₁)) − ½τ(2P₀ − 1 − χ(F₀))` for a path with
/// `‖F_t‖ ≤ 1`; points with `|F| ≥ 1` do not contribute to the integrand.
pub fn sf_integral_chi(path: &OperatorPath, chi: &BoundedChi, quad: &QuadratureConfig) -> Result<FormulaFlow> {
    path.require_invertible_endpoints()?;
    let defect = |t: f64| -> Result<f64> {
        let spec = invertible_spectrum(&path.value(t)?)?;
        Ok(0.5 * spec.trace_fn(|y| sign_defect(y, chi.value(y.clamp(-1.0, 1.0)))))
    };
    let (defect_start, defect_end) = (defect(0.0)?, defect(1.0)?);
    let (integral, err, evaluations) = path_trace_integral(path, quad, 4.0 * path.speed_estimate()?, |y| {
        if y.abs() >= 1.0 {
            0.0
        } else {
            0.5 * chi.derivative(y)
        }
    })?;
    Ok(FormulaFlow {
        value: integral + defect_end - defect_start,
        integral,
        defect_start,
        defect_end,
        error_estimate: err,
        evaluations,
        eta_route_discrepancy: None,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct Eta1 {
    pub value: f64,
    pub error_estimate: f64,
    pub cutoff: f64,
    pub evaluations: usize,
}

/// `η₁(D) = (1/√π)∫₁^∞ t^{−1/2} τ(D e^{−tD²}) dt` for invertible `D`.
pub fn eta1(d: &Element, quad: &QuadratureConfig) -> Result<Eta1> {
    let spec = invertible_spectrum(d)?;
    let eig: Vec<(f64, f64)> = spec
        .weighted_eigenvalues()
        .into_iter()
        .filter(|(l, _)| l.is_finite())
        .collect();
    let mass = |t: f64| eig.iter().map(|&(l, w)| w * libm::erfc(t.sqrt() * l.abs())).sum::<f64>();
    let r = integrate_tail(quad, mass, |t| {
        let s: f64 = eig.iter().map(|&(l, w)| w * l * (-t * l * l).exp()).sum();
        Ok(s / (PI * t).sqrt())
    })?;
    Ok(Eta1 {
        value: r.value,
        error_estimate: r.error_estimate,
        cutoff: r.cutoff,
        evaluations: r.evaluations,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EndpointDefect {
    /// `τ(2·1_{≥0}(D) − 1 − χ(D))`
    pub value: f64,
    /// `½∫₁^∞ t^{−1/2} τ(D χ′(√t D)) dt`
    pub integral: f64,
    pub discrepancy: f64,
    pub error_estimate: f64,
}

/// Endpoint defect of an invertible `D`, directly and by its integral representation.
pub fn endpoint_defect(d: &Element, chi: &NormalizingFunction, quad: &QuadratureConfig) -> Result<EndpointDefect> {
    let spec = invertible_spectrum(d)?;
    let value = spec.trace_fn(|l| sign_defect(l, chi.value(l)));
    let eig: Vec<(f64, f64)> = spec
        .weighted_eigenvalues()
        .into_iter()
        .filter(|(l, _)| l.is_finite())
        .collect();
    let mass = |t: f64| {
        eig.iter()
            .map(|&(l, w)| w * (1.0 - chi.value(t.sqrt() * l.abs())).max(0.0))
            .sum::<f64>()
    };
    let r = integrate_tail(quad, mass, |t| {
        let st = t.sqrt();
        let s: f64 = eig.iter().map(|&(l, w)| w * l * chi.derivative(st * l)).sum();
        Ok(0.5 * s / st)
    })?;
    Ok(EndpointDefect {
        value,
        integral: r.value,
        discrepancy: (value - r.value).abs(),
        error_estimate: r.error_estimate,
    })
}

/// `(1/√π)∫τ(Ḋ_t e^{−D_t²})dt` plus `χ_e` endpoint defects, with the endpoint terms
/// also evaluated as `½η₁(D₁) − ½η₁(D₀)`.
pub fn sf_heat(path: &OperatorPath, quad: &QuadratureConfig) -> Result<FormulaFlow> {
    path.require_invertible_endpoints()?;
    let chi = NormalizingFunction::chi_e();
    let defect = |t: f64| -> Result<(f64, f64, f64)> {
        let d = path.value(t)?;
        let spec = invertible_spectrum(&d)?;
        let direct = 0.5 * spec.trace_fn(|l| sign_defect(l, chi.value(l)));
        let e = eta1(&d, quad)?;
        Ok((direct, 0.5 * e.value, e.error_estimate))
    };
    let (s_direct, s_eta, s_err) = defect(0.0)?;
    let (e_direct, e_eta, e_err) = defect(1.0)?;
    let (integral, err, evaluations) = path_trace_integral(path, quad, 2.0 * path.speed_estimate()?, |l| {
        (-l * l).exp() / PI.sqrt()
    })?;
    Ok(FormulaFlow {
        value: integral + e_direct - s_direct,
        integral,
        defect_start: s_direct,
        defect_end: e_direct,
        error_estimate: err + 0.5 * (s_err + e_err),
        evaluations,
        eta_route_discrepancy: Some((s_direct - s_eta).abs().max((e_direct - e_eta).abs())),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CpConstant {
    pub quadrature: f64,
    pub gamma: f64,
}

/// `C_p = ∫₀¹(1 − y²)^{(p−2)/2}dy`, by quadrature after `y = sin θ` and by
/// `2C_p = √π Γ(p/2)/Γ((p+1)/2)`.
pub fn cp_constant(p: f64) -> Result<CpConstant> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::Precondition(format!("C_p needs p ≥ 1, got {p}")));
    }
    let cfg = QuadratureConfig {
        abs_tol: 1e-14,
        max_depth: 40,
        ..Default::default()
    };
    let quadrature = integrate_scalar(&cfg, 0.0, PI / 2.0, |th| th.cos().max(0.0).powf(p - 1.0))?.value;
    let gamma = 0.5 * PI.sqrt() * (libm::lgamma(p / 2.0) - libm::lgamma((p + 1.0) / 2.0)).exp();
    if (quadrature - gamma).abs() > 1e-10 {
        return Err(Error::Consistency(format!(
            "C_{p}: quadrature {quadrature} and Gamma identity {gamma} disagree"
        )));
    }
    Ok(CpConstant { quadrature, gamma })
}

/// `(1/2C_p)∫τ(Ḋ_t(1 + D_t²)^{−(p+1)/2})dt` plus `χ_p` endpoint defects.
pub fn sf_resolvent_power(path: &OperatorPath, p: f64, quad: &QuadratureConfig) -> Result<FormulaFlow> {
    let cp = cp_constant(p)?.gamma;
    if p == 1.0 && !path.wraps().is_empty() {
        return Err(Error::Precondition(
            "p = 1 is not supported on paths passing through poles".into(),
        ));
    }
    path.require_invertible_endpoints()?;
    let chi = NormalizingFunction::chi_p(p)?;
    let defect = |t: f64| -> Result<f64> {
        let spec = invertible_spectrum(&path.value(t)?)?;
        Ok(0.5 * spec.trace_fn(|l| sign_defect(l, chi.value(l))))
    };
    let (defect_start, defect_end) = (defect(0.0)?, defect(1.0)?);
    let (integral, err, evaluations) = path_trace_integral(path, quad, 2.0 * path.speed_estimate()?, |l| {
        (1.0 + l * l).powf(-(p + 1.0) / 2.0) / (2.0 * cp)
    })?;
    Ok(FormulaFlow {
        value: integral + defect_end - defect_start,
        integral,
        defect_start,
        defect_end,
        error_estimate: err,
        evaluations,
        eta_route_discrepancy: None,
    })
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceIdentity {
    pub lhs: C64,
    pub rhs: C64,
    pub discrepancy: f64,
}

/// Both sides of `τ(e^{−πi(χ(F)+1)}·(d/dt)f(F_t)) = iπτ(Ḟχ′(F))`, `f = e^{πi(χ+1)} − 1`,
/// with the derivative of `f(F_t)` by divided differences.
pub fn duhamel_trace_identity(f: &Element, fdot: &Element, chi: &BoundedChi) -> Result<TraceIdentity> {
    if f.op_norm() > 1.0 + 1e-12 {
        return Err(Error::Precondition("trace identity needs ‖F‖ ≤ 1".into()));
    }
    let (a, b, c) = (chi.clone(), chi.clone(), chi.clone());
    let func = FunctionSpec::complex("exp_i_pi_chi_minus_1", move |y| {
        C64::from_polar(1.0, PI * (a.value(y) + 1.0)) - 1.0
    })
    .with_derivative(move |y| C64::new(0.0, PI * b.derivative(y)) * C64::from_polar(1.0, PI * (b.value(y) + 1.0)));
    let inv = FunctionSpec::complex("exp_minus_i_pi_chi", move |y| C64::from_polar(1.0, -PI * (c.value(y) + 1.0)));
    let spec = f.eigh()?;
    let dfun = spec.derivative(&func, fdot)?;
    let lhs = spec.apply(&inv)?.mul(&dfun)?.trace()?;
    let rhs = C64::new(0.0, PI) * spec.trace_with(fdot, |y| chi.derivative(y))?;
    Ok(TraceIdentity {
        lhs,
        rhs,
        discrepancy: (lhs - rhs).norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::TracialAlgebra;

    fn q() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn heat_scalar_crossing() {
        let p = OperatorPath::scalar_affine(1.0, -2.0, 3.0).unwrap();
        let r = sf_heat(&p, &q()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
        let oracle = 0.5 * (libm::erf(3.0) + libm::erf(2.0));
        assert!((r.integral - oracle).abs() < 1e-8);
        assert!(r.eta_route_discrepancy.unwrap() < 1e-8);
    }

    #[test]
    fn heat_without_crossing() {
        let alg = TracialAlgebra::blocks(&[(1, 1.0)]).unwrap();
        let a = Element::diagonal(&alg, &[1.0]).unwrap();
        let b = Element::diagonal(&alg, &[2.0]).unwrap();
        let c = Element::diagonal(&alg, &[0.5]).unwrap();
        let p = OperatorPath::affine(&a, &b).unwrap().concat(&OperatorPath::affine(&b, &c).unwrap()).unwrap();
        assert!(sf_heat(&p, &q()).unwrap().value.abs() < 1e-8);
    }

    #[test]
    fn eta1_closed_form() {
        let alg = TracialAlgebra::blocks(&[(1, 1.7)]).unwrap();
        for &d in &[0.5, -0.5, 2.0, -2.0] {
            let e = eta1(&Element::diagonal(&alg, &[d]).unwrap(), &q()).unwrap();
            assert!((e.value - 1.7 * d.signum() * libm::erfc(d.abs())).abs() < 1e-8, "{d}");
        }
        let alg2 = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let sym = Element::diagonal(&alg2, &[1.0, -1.0]).unwrap();
        assert!(eta1(&sym, &q()).unwrap().value.abs() < 1e-12);
        let sing = Element::diagonal(&alg2, &[0.0, 1.0]).unwrap();
        assert!(eta1(&sing, &q()).is_err());
    }

    #[test]
    fn defect_of_chi_e_is_eta() {
        let alg = TracialAlgebra::blocks(&[(1, 1.0)]).unwrap();
        for &d in &[0.3, -1.5] {
            let e = Element::diagonal(&alg, &[d]).unwrap();
            let r = endpoint_defect(&e, &NormalizingFunction::chi_e(), &q()).unwrap();
            assert!((r.value - d.signum() * libm::erfc(d.abs())).abs() < 1e-10);
            assert!(r.discrepancy < 1e-8);
        }
    }

    #[test]
    fn defect_vanishes_for_involution() {
        let alg = TracialAlgebra::blocks(&[(3, 1.0)]).unwrap();
        let e = Element::diagonal(&alg, &[-2.0, 0.7, 1.5]).unwrap();
        let chi = NormalizingFunction::smooth_gap(0.5).unwrap();
        let r = endpoint_defect(&e, &chi, &q()).unwrap();
        assert!(r.value.abs() < 1e-15 && r.integral.abs() < 1e-8);
    }

    #[test]
    fn resolvent_power_scalar() {
        let p = OperatorPath::scalar_affine(1.0, -2.0, 3.0).unwrap();
        let r = sf_resolvent_power(&p, 2.0, &q()).unwrap();
        let oracle = 0.5 * (3.0 / 10f64.sqrt() + 2.0 / 5f64.sqrt());
        assert!((r.integral - oracle).abs() < 1e-8);
        assert!((r.value - 1.0).abs() < 1e-8);
        for &pp in &[1.0, 3.0, 5.0] {
            assert!((sf_resolvent_power(&p, pp, &q()).unwrap().value - 1.0).abs() < 1e-8);
        }
        assert!(sf_resolvent_power(&p, 0.5, &q()).is_err());
    }

    #[test]
    fn cp_values() {
        assert!((cp_constant(2.0).unwrap().quadrature - 1.0).abs() < 1e-12);
        assert!((cp_constant(1.0).unwrap().gamma - PI / 2.0).abs() < 1e-12);
        let c3 = cp_constant(3.0).unwrap();
        assert!((c3.quadrature - PI / 4.0).abs() < 1e-10 && (c3.gamma - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn integral_chi_scalar() {
        let p = OperatorPath::scalar_affine(1.0, -2.0, 3.0).unwrap().bounded_transform_path();
        let r = sf_integral_chi(&p, &BoundedChi::chi_e(), &q()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-8);
    }

    #[test]
    fn trace_identity_holds() {
        let alg = TracialAlgebra::blocks(&[(2, 0.8), (2, 1.3)]).unwrap();
        let f = Element::diagonal(&alg, &[-0.6, 0.2, 0.9, -0.1]).unwrap();
        let dot = Element::hermitian(
            &alg,
            vec![
                crate::algebra::CMat::from_row_slice(2, 2, &[C64::new(0.3, 0.0), C64::new(0.1, 0.2), C64::new(0.1, -0.2), C64::new(-0.4, 0.0)]),
                crate::algebra::CMat::from_row_slice(2, 2, &[C64::new(1.0, 0.0), C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.2, 0.0)]),
            ],
        )
        .unwrap();
        let r = duhamel_trace_identity(&f, &dot, &BoundedChi::chi_e()).unwrap();
        assert!(r.discrepancy < 1e-7, "{r:?}");
    }
}
