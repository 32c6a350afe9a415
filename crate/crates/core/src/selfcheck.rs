//! Seeded self-check suite: every invariant is run on random desk-scale inputs and
//! reported with its worst measured deviation.

use std::str::FromStr;
use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::algebra::{duhamel_derivative, Element, FourierData, FunctionSpec, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::formulas::{cp_constant, duhamel_trace_identity, endpoint_defect, sf_heat, sf_integral_chi, sf_resolvent_power};
use crate::gallery::{build_covering_path, build_gn_family, build_tan_wrap_loop, CoveringSpec, GnRefinement};
use crate::index::{breuer_index, suspension_path, verify_index_homotopy, CornerOperator};
use crate::normalizing::{BoundedChi, NormalizingFunction};
use crate::path::{OperatorPath, UnitaryFamily};
use crate::quad::QuadratureConfig;
use crate::random;
use crate::specflow::{default_gap, exp_loop, sf_analytic, sf_crossing, sf_winding, uniform_partition, CrossingOptions};
use crate::winding::{rectangle_defect, winding_number, Surface};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Small,
    Full,
}

impl Budget {
    fn cases(self) -> usize {
        match self {
            Budget::Small => 3,
            Budget::Full => 20,
        }
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Budget::Small),
            "full" => Ok(Budget::Full),
            _ => Err(Error::validation("budget", format!("expected small or full, got {s}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantResult {
    pub name: &'static str,
    pub cases: usize,
    pub worst_deviation: Option<f64>,
    pub tolerance: f64,
    /// `true` when the deviation must stay strictly below the tolerance.
    pub strict: bool,
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    pub seed: u64,
    pub budget: Budget,
    pub invariants: Vec<InvariantResult>,
    pub passed: bool,
    pub version: &'static str,
}

impl SelfCheckReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn violations(&self) -> usize {
        self.invariants.iter().filter(|r| !r.passed).count()
    }
}

type Check = fn(&mut ChaCha8Rng, usize) -> Result<f64>;

struct Invariant {
    name: &'static str,
    tolerance: f64,
    strict: bool,
    check: Check,
}

const fn inv(name: &'static str, tolerance: f64, check: Check) -> Invariant {
    Invariant {
        name,
        tolerance,
        strict: false,
        check,
    }
}

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn tight() -> QuadratureConfig {
    QuadratureConfig::with_tol(1e-10)
}

fn winding(p: &OperatorPath, q: &QuadratureConfig) -> Result<f64> {
    Ok(sf_winding(p, &default_gap(p)?, q)?.value)
}

fn max_over(cases: usize, mut f: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for i in 0..cases {
        worst = worst.max(f(i)?);
    }
    Ok(worst)
}

fn small_algebra(rng: &mut ChaCha8Rng) -> Arc<TracialAlgebra> {
    random::block_algebra(rng, 8)
}

fn trace_cyclicity(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases * 10, |_| {
        let alg = small_algebra(rng);
        let a = random::invertible_element(rng, &alg, 0.1).mul(&random::unitary_element(rng, &alg))?;
        let b = random::hermitian_element(rng, &alg, 1.5);
        let d = (a.mul(&b)?.trace()? - b.mul(&a)?.trace()?).norm();
        Ok(d / (a.op_norm() * b.op_norm() * alg.unit_trace()))
    })
}

fn trace_adjoint(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases * 10, |_| {
        let alg = small_algebra(rng);
        let a = random::invertible_element(rng, &alg, 0.1).mul(&random::unitary_element(rng, &alg))?;
        Ok((a.adjoint().trace()? - a.trace()?.conj()).norm() / alg.unit_trace())
    })
}

fn bounded_transform_norm(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases * 10, |i| {
        let alg = small_algebra(rng);
        let d = random::hermitian_element(rng, &alg, 10f64.powi(i as i32 % 6));
        Ok((d.bounded_transform()?.op_norm() - 1.0).max(0.0))
    })
}

fn functional_calculus_product(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let f = FunctionSpec::gaussian();
    let g = FunctionSpec::polynomial(&[0.5, -1.0, 0.25]);
    let fg = FunctionSpec::product(&f, &g);
    max_over(cases * 5, |_| {
        let alg = small_algebra(rng);
        let a = random::hermitian_element(rng, &alg, 2.0);
        a.apply(&f)?.mul(&a.apply(&g)?)?.distance(&a.apply(&fg)?)
    })
}

fn unitary_covariance(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let f = FunctionSpec::bounded_transform();
    max_over(cases * 5, |_| {
        let alg = small_algebra(rng);
        let a = random::hermitian_element(rng, &alg, 3.0);
        let u = random::unitary_element(rng, &alg);
        let lhs = u.mul(&a)?.mul(&u.adjoint())?.into_hermitian()?.apply(&f)?;
        let rhs = u.mul(&a.apply(&f)?)?.mul(&u.adjoint())?;
        lhs.distance(&rhs)
    })
}

fn hermitian_input(rng: &mut ChaCha8Rng, i: usize) -> Result<Element> {
    let n = 3 + i % 2;
    let alg = TracialAlgebra::blocks(&[(n, 0.5 + 0.1 * i as f64)])?;
    let spec: Vec<f64> = (0..n).map(|j| -0.9 + 1.8 * (j as f64 + 0.3) / n as f64).collect();
    Element::hermitian(&alg, vec![random::hermitian_with_spectrum(rng, &spec)])
}

fn divided_difference_vs_fd(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let g = FunctionSpec::resolvent_at_i();
    max_over(cases * 2, |i| {
        let f = hermitian_input(rng, i)?;
        let dot = random::hermitian_element(rng, f.algebra(), 1.0);
        let dk = f.eigh()?.derivative(&g, &dot)?;
        let h = 1e-5;
        let plus = f.add(&dot.scale(h))?.apply(&g)?;
        let minus = f.sub(&dot.scale(h))?.apply(&g)?;
        let central = plus.sub(&minus)?.scale(0.5 / h);
        Ok(dk.max_entry_distance(&central)? / dk.op_norm().max(1e-300))
    })
}

fn duhamel_vs_divided_difference(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let data = [FourierData::Gaussian { a: 1.0 }, FourierData::bump()];
    max_over(cases * 2, |i| {
        let f = hermitian_input(rng, i)?;
        let dot = random::hermitian_element(rng, f.algebra(), 1.0);
        let d = &data[i % 2];
        let lhs = duhamel_derivative(d, &f, &dot, &QuadratureConfig::with_tol(1e-9))?.value;
        lhs.max_entry_distance(&f.eigh()?.derivative(&d.function(), &dot)?)
    })
}

fn trace_identity(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases * 2, |i| {
        let f = hermitian_input(rng, i)?;
        let dot = random::hermitian_element(rng, f.algebra(), 1.0);
        Ok(duhamel_trace_identity(&f, &dot, &BoundedChi::chi_e())?.discrepancy)
    })
}

fn loop_pair(rng: &mut ChaCha8Rng) -> Result<(OperatorPath, OperatorPath)> {
    let alg = TracialAlgebra::blocks(&[(3, 0.8), (2, 1.7)])?;
    Ok((random::path(rng, &alg, 0.3)?, random::path(rng, &alg, 0.3)?))
}

fn winding_invariance(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let (p, _) = loop_pair(rng)?;
        let s = exp_loop(&p, &default_gap(&p)?)?.with_panels(64);
        let w = winding_number(&s, &tight())?.value;
        let u = random::unitary_element(rng, p.algebra());
        let one = Element::identity(p.algebra());
        let a = winding_number(&s.sandwich(&one, &u)?, &tight())?.value;
        let b = winding_number(&s.sandwich(&u, &one)?, &tight())?.value;
        let c = winding_number(&s.conjugated(&u)?, &tight())?.value;
        Ok((a - w).abs().max((b - w).abs()).max((c - w).abs()))
    })
}

fn winding_homomorphism(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let (p, q) = loop_pair(rng)?;
        let s = exp_loop(&p, &default_gap(&p)?)?.with_panels(64);
        let r = exp_loop(&q, &default_gap(&q)?)?.with_panels(64);
        let ws = winding_number(&s, &tight())?.value;
        let wr = winding_number(&r, &tight())?.value;
        Ok((winding_number(&s.product(&r)?, &tight())?.value - ws - wr).abs())
    })
}

fn winding_rectangle(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let f = NormalizingFunction::smooth_gap(0.1)?.exp_loop_function();
    max_over(cases.min(5), |_| {
        let (p, q) = loop_pair(rng)?;
        let f = f.clone();
        let h = Surface::new((0.0, 1.0), (0.0, 1.0), move |x, y| {
            p.value(x)?.scale(1.0 - y).add(&q.value(x)?.scale(y))?.apply(&f)
        })
        .with_panels(32);
        Ok(rectangle_defect(&h, &QuadratureConfig::with_tol(1e-9))?.magnitude())
    })
}

fn suite_path(rng: &mut ChaCha8Rng) -> Result<OperatorPath> {
    let alg = random::block_algebra(rng, 16);
    random::path(rng, &alg, 0.2)
}

fn method_agreement(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases * 2, |_| {
        let p = suite_path(rng)?;
        let w = winding(&p, &quad())?;
        let a = sf_analytic(&p, &uniform_partition(64))?.value;
        let c = sf_crossing(&p, &CrossingOptions::default())?.value;
        Ok((w - a).abs().max((w - c).abs()).max((a - c).abs()))
    })
}

fn invertible_path_zero(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let a = random::invertible_element(rng, &alg, 0.3);
        let fam = UnitaryFamily::exp_i(&random::hermitian_element(rng, &alg, 2.0))?;
        let rotating = OperatorPath::affine(&a, &a)?.conjugate(&fam)?;
        let growing = OperatorPath::affine(&a, &a.scale(3.0))?;
        Ok(winding(&rotating, &tight())?.abs().max(winding(&growing, &tight())?.abs()))
    })
}

fn concatenation(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let p = random::path(rng, &alg, 0.3)?;
        let q = OperatorPath::affine(&p.value(1.0)?, &random::invertible_element(rng, &alg, 0.3))?;
        Ok((winding(&p.concat(&q)?, &tight())? - winding(&p, &tight())? - winding(&q, &tight())?).abs())
    })
}

fn reversal(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let p = random::path(rng, &alg, 0.3)?;
        Ok((winding(&p.reverse(), &tight())? + winding(&p, &tight())?).abs())
    })
}

fn unitary_conjugation(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let p = random::path(rng, &alg, 0.3)?;
        let fam = UnitaryFamily::exp_i(&random::hermitian_element(rng, &alg, 2.0))?;
        Ok((winding(&p.conjugate(&fam)?, &tight())? - winding(&p, &tight())?).abs())
    })
}

fn normalizing_independence(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let p = random::path(rng, &alg, 0.3)?;
        let w = winding(&p, &tight())?;
        let m = p.require_invertible_endpoints()?.min_margin();
        let mut worst: f64 = 0.0;
        for eps in [0.2 * m, 0.9 * m] {
            let chi = NormalizingFunction::smooth_gap(eps)?;
            worst = worst.max((sf_winding(&p, &chi, &tight())?.value - w).abs());
        }
        Ok(worst)
    })
}

fn positive_scaling(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let alg = small_algebra(rng);
        let p = random::path(rng, &alg, 0.3)?;
        let w = winding(&p, &tight())?;
        Ok((winding(&p.scaled(0.1), &tight())? - w).abs().max((winding(&p.scaled(10.0), &tight())? - w).abs()))
    })
}

fn projection_perturbation(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let ind = FunctionSpec::indicator_nonneg();
    max_over(cases * 5, |i| {
        let alg = random::block_algebra(rng, 12);
        let f = random::involution(rng, &alg);
        let a = random::hermitian_element(rng, &alg, 0.01 + 0.48 * ((i % 10) as f64 / 9.0));
        let lhs = f.add(&a)?.apply(&ind)?.sub(&f.apply(&ind)?)?.op_norm();
        Ok(lhs / (2.0 * a.op_norm()))
    })
}

fn integral_chi(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let chi = BoundedChi::chi_e();
    max_over(cases, |_| {
        let p = suite_path(rng)?;
        Ok((sf_integral_chi(&p.bounded_transform_path(), &chi, &quad())?.value - winding(&p, &quad())?).abs())
    })
}

fn heat(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let p = suite_path(rng)?;
        Ok((sf_heat(&p, &quad())?.value - winding(&p, &quad())?).abs())
    })
}

fn resolvent_power(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |i| {
        let p = suite_path(rng)?;
        let exponent = [1.0, 2.0, 3.0, 5.0][i % 4];
        Ok((sf_resolvent_power(&p, exponent, &quad())?.value - winding(&p, &quad())?).abs())
    })
}

fn defect_identity(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let chis = [
        NormalizingFunction::chi_e(),
        NormalizingFunction::chi_p(2.0)?,
        NormalizingFunction::smooth_gap(0.5)?,
    ];
    max_over(cases * 2, |i| {
        let alg = TracialAlgebra::blocks(&[(1 + i % 8, 0.7)])?;
        let d = random::invertible_element(rng, &alg, 0.05);
        Ok(endpoint_defect(&d, &chis[i % 3], &quad())?.discrepancy)
    })
}

fn cp_identity(_: &mut ChaCha8Rng, _: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 3.0, 5.0] {
        let c = cp_constant(p)?;
        worst = worst.max((c.quadrature - c.gamma).abs());
    }
    Ok(worst)
}

fn suspension_index(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    let chi = NormalizingFunction::smooth_gap(0.25)?;
    max_over(cases * 3, |i| {
        let t = random::corner(rng, 1 + i % 8, 0.37 + 0.11 * (i % 5) as f64)?;
        let ind = breuer_index(&t, 1e-8)?.value;
        Ok((sf_winding(&suspension_path(&t)?, &chi, &quad())?.value - ind).abs())
    })
}

fn index_rotation(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    max_over(cases, |_| {
        let t = random::corner(rng, 5, 0.6)?;
        let alg = t.algebra().clone();
        let h = random::hermitian_element(rng, &alg, 1.0);
        let (p, q) = (t.target().clone(), t.source().clone());
        let hp = p.mul(&h)?.mul(&p)?.into_hermitian()?;
        let hq = q.mul(&h)?.mul(&q)?.into_hermitian()?;
        let (up, uq) = (UnitaryFamily::exp_i(&hp)?, UnitaryFamily::exp_i(&hq)?);
        let d = t.operator().clone();
        let r = verify_index_homotopy(
            |s| CornerOperator::new(up.value(s)?.mul(&d)?.mul(&uq.value(s)?.adjoint())?, p.clone(), q.clone()),
            8,
            1e-8,
        )?;
        Ok(r.max_deviation)
    })
}

fn tan_wrap_weight(_: &mut ChaCha8Rng, _: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for total in [1.0, 2.5] {
        let g = TracialAlgebra::uniform_grid(5, 0.0, 1.0, total)?;
        let p = build_tan_wrap_loop(&g, 0.13)?;
        let c = sf_crossing(&p, &CrossingOptions::default())?;
        worst = worst.max((winding(&p, &quad())? - total).abs()).max((c.value - total).abs());
    }
    Ok(worst)
}

fn covering_ratio(_: &mut ChaCha8Rng, _: usize) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for (m, k) in [(4, 3), (5, 2)] {
        let c = build_covering_path(&CoveringSpec::standard(m, k))?;
        worst = worst.max((winding(&c.gamma_path, &quad())? - winding(&c.full_path, &quad())? / k as f64).abs());
    }
    Ok(worst)
}

fn gn_resolvent_monotone(_: &mut ChaCha8Rng, _: usize) -> Result<f64> {
    let r = build_gn_family(&[1, 2, 4, 8], &GnRefinement::default())?;
    Ok(r.rows
        .windows(2)
        .map(|w| w[1].resolvent_distance - w[0].resolvent_distance)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn grid_trace_consistency(rng: &mut ChaCha8Rng, cases: usize) -> Result<f64> {
    use rand::Rng;
    max_over(cases * 5, |_| {
        let n = rng.gen_range(2..12);
        let pts: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let w: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..3.0)).collect();
        let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let alg = TracialAlgebra::grid(&pts, &w)?;
        let e = Element::grid(&alg, &v)?;
        let expected: f64 = w.iter().zip(&v).map(|(a, b)| a * b).sum();
        Ok((e.trace()? - C64::new(expected, 0.0)).norm())
    })
}

const INVARIANTS: &[Invariant] = &[
    inv("trace_cyclicity", 1e-12, trace_cyclicity),
    inv("trace_adjoint", 1e-12, trace_adjoint),
    inv("grid_trace_weights", 1e-12, grid_trace_consistency),
    inv("bounded_transform_contraction", 1e-12, bounded_transform_norm),
    inv("functional_calculus_product", 1e-10, functional_calculus_product),
    inv("functional_calculus_unitary_covariance", 1e-10, unitary_covariance),
    inv("divided_difference_vs_finite_difference", 1e-5, divided_difference_vs_fd),
    inv("duhamel_vs_divided_difference", 1e-6, duhamel_vs_divided_difference),
    inv("duhamel_trace_identity", 1e-7, trace_identity),
    inv("winding_unitary_invariance", 1e-7, winding_invariance),
    inv("winding_product_homomorphism", 1e-7, winding_homomorphism),
    inv("winding_rectangle_defect", 1e-6, winding_rectangle),
    inv("sf_method_agreement", 1e-6, method_agreement),
    inv("sf_invertible_path_zero", 1e-8, invertible_path_zero),
    inv("sf_concatenation", 1e-8, concatenation),
    inv("sf_reversal", 1e-8, reversal),
    inv("sf_unitary_conjugation", 1e-7, unitary_conjugation),
    inv("sf_normalizing_independence", 1e-7, normalizing_independence),
    inv("sf_positive_scaling", 1e-8, positive_scaling),
    Invariant {
        name: "projection_perturbation_ratio",
        tolerance: 1.0,
        strict: true,
        check: projection_perturbation,
    },
    inv("integral_chi_vs_winding", 1e-6, integral_chi),
    inv("heat_vs_winding", 1e-6, heat),
    inv("resolvent_power_vs_winding", 1e-6, resolvent_power),
    inv("eta_defect_identity", 1e-6, defect_identity),
    inv("cp_gamma_identity", 1e-10, cp_identity),
    inv("suspension_index", 1e-8, suspension_index),
    inv("index_rotation_homotopy", 0.0, index_rotation),
    inv("tan_wrap_total_weight", 1e-6, tan_wrap_weight),
    inv("covering_trace_ratio", 1e-8, covering_ratio),
    Invariant {
        name: "gn_resolvent_step",
        tolerance: 0.0,
        strict: true,
        check: gn_resolvent_monotone,
    },
];

pub fn invariant_names() -> Vec<&'static str> {
    INVARIANTS.iter().map(|i| i.name).collect()
}

/// Runs every invariant; each draws from its own stream derived from `seed`.
pub fn selfcheck(seed: u64, budget: Budget) -> SelfCheckReport {
    let cases = budget.cases();
    let invariants: Vec<InvariantResult> = INVARIANTS
        .iter()
        .enumerate()
        .map(|(k, inv)| {
            let mut rng = random::rng(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(k as u64));
            let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| (inv.check)(&mut rng, cases)))
                .unwrap_or_else(|_| Err(Error::Consistency("invariant check panicked".into())));
            let (worst, error) = match outcome {
                Ok(w) => (Some(w), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let passed = match worst {
                Some(w) if inv.strict => w < inv.tolerance,
                Some(w) => w <= inv.tolerance,
                None => false,
            };
            InvariantResult {
                name: inv.name,
                cases,
                worst_deviation: worst.filter(|w| w.is_finite()),
                tolerance: inv.tolerance,
                strict: inv.strict,
                passed,
                error,
            }
        })
        .collect();
    let passed = invariants.iter().all(|r| r.passed);
    SelfCheckReport {
        seed,
        budget,
        invariants,
        passed,
        version: crate::VERSION,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique_and_numerous() {
        let mut names = invariant_names();
        assert!(names.len() >= 20);
        names.sort();
        names.dedup();
        assert_eq!(names.len(), INVARIANTS.len());
    }

    #[test]
    fn budget_parse() {
        assert_eq!("small".parse::<Budget>().unwrap(), Budget::Small);
        assert!("huge".parse::<Budget>().is_err());
    }
}
