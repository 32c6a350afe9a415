//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits nonzero on any failure.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::time::{Duration, Instant};

use spectral_flow::algebra::{duhamel_derivative, Element, FourierData, FunctionSpec, TracialAlgebra};
use spectral_flow::formulas::{cp_constant, duhamel_trace_identity, endpoint_defect, eta1, sf_heat, sf_integral_chi, sf_resolvent_power};
use spectral_flow::gallery::{build_covering_path, build_gn_family, build_tan_wrap_loop, CoveringSpec, GnRefinement};
use spectral_flow::index::{breuer_index, suspension_path};
use spectral_flow::normalizing::{chi_e_constant, BoundedChi, NormalizingFunction};
use spectral_flow::path::{OperatorPath, UnitaryFamily};
use spectral_flow::random;
use spectral_flow::specflow::{default_gap, exp_loop, sf_analytic, sf_crossing, sf_winding, uniform_partition, CrossingOptions};
use spectral_flow::winding::{rectangle_defect, winding_number, Surface, UnitaryLoop};
use spectral_flow::QuadratureConfig;

const TOL_CROSS_METHOD: f64 = 1e-6;
const TOL_FORMULA: f64 = 1e-6;
const TOL_CLOSED_FORM: f64 = 1e-8;
const TOL_CP: f64 = 1e-10;
const TOL_DEFECT: f64 = 1e-6;
const TOL_SUSPENSION: f64 = 1e-8;
const TOL_WINDING_INVARIANCE: f64 = 1e-7;
const TOL_RECTANGLE: f64 = 1e-6;
const TOL_HOMOMORPHISM: f64 = 1e-7;
const TOL_SF_EXACT: f64 = 1e-8;
const TOL_SF_INVARIANCE: f64 = 1e-7;
const TOL_TAN_WRAP: f64 = 1e-6;
const TOL_COVERING: f64 = 1e-8;
const TOL_DK_FD: f64 = 1e-5;
const TOL_DUHAMEL: f64 = 1e-6;
const TOL_TRACE_IDENTITY: f64 = 1e-7;

const BUDGET_CRITERION_1: Duration = Duration::from_secs(60);
const BUDGET_CRITERION_2: Duration = Duration::from_secs(300);

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn quad() -> QuadratureConfig {
    QuadratureConfig::default()
}

fn tight() -> QuadratureConfig {
    QuadratureConfig::with_tol(1e-10)
}

fn winding(p: &OperatorPath, q: &QuadratureConfig) -> f64 {
    sf_winding(p, &default_gap(p).unwrap(), q).unwrap().value
}

fn suite_path(seed: u64) -> OperatorPath {
    let mut rng = random::rng(seed);
    let alg = random::block_algebra(&mut rng, 16);
    random::path(&mut rng, &alg, 0.2).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c1_cross_method() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    let mut nonzero = 0;
    for seed in 0..100 {
        let p = suite_path(seed);
        let w = winding(&p, &quad());
        let a = sf_analytic(&p, &uniform_partition(64)).unwrap().value;
        let c = sf_crossing(&p, &CrossingOptions::default()).unwrap().value;
        worst = worst.max((w - a).abs()).max((w - c).abs()).max((a - c).abs());
        if a.abs() > 0.0 {
            nonzero += 1;
        }
    }
    let elapsed = start.elapsed();
    check(
        worst <= TOL_CROSS_METHOD && elapsed < BUDGET_CRITERION_1,
        format!("max pairwise {worst:.2e} over 100 paths ({nonzero} with nonzero flow), {:.1}s", elapsed.as_secs_f64()),
    )
}

fn c2_formulas() -> Outcome {
    let start = Instant::now();
    let mut worst = [0.0f64; 6];
    let chi = BoundedChi::chi_e();
    for seed in 0..100 {
        let p = suite_path(seed);
        let w = winding(&p, &quad());
        let vals = [
            sf_integral_chi(&p.bounded_transform_path(), &chi, &quad()).unwrap().value,
            sf_heat(&p, &quad()).unwrap().value,
            sf_resolvent_power(&p, 1.0, &quad()).unwrap().value,
            sf_resolvent_power(&p, 2.0, &quad()).unwrap().value,
            sf_resolvent_power(&p, 3.0, &quad()).unwrap().value,
            sf_resolvent_power(&p, 5.0, &quad()).unwrap().value,
        ];
        for (m, v) in worst.iter_mut().zip(vals) {
            *m = m.max((v - w).abs());
        }
    }
    let elapsed = start.elapsed();
    let max = worst.iter().cloned().fold(0.0, f64::max);
    check(
        max <= TOL_FORMULA && elapsed < BUDGET_CRITERION_2,
        format!(
            "integral_chi {:.1e}, heat {:.1e}, resolvent p=1,2,3,5 {:.1e} {:.1e} {:.1e} {:.1e}, {:.1}s",
            worst[0], worst[1], worst[2], worst[3], worst[4], worst[5],
            elapsed.as_secs_f64()
        ),
    )
}

fn c3_closed_forms() -> Outcome {
    let p = OperatorPath::scalar_affine(1.0, -2.0, 3.0).unwrap();
    let heat = (sf_heat(&p, &quad()).unwrap().value - 1.0).abs();
    let res = (sf_resolvent_power(&p, 2.0, &quad()).unwrap().value - 1.0).abs();
    let alg = TracialAlgebra::blocks(&[(1, 1.0)]).unwrap();
    let mut eta: f64 = 0.0;
    for d in [0.5, -0.5, 2.0, -2.0] {
        let e = eta1(&Element::diagonal(&alg, &[d]).unwrap(), &quad()).unwrap().value;
        eta = eta.max((e - d.signum() * libm::erfc(d.abs())).abs());
    }
    check(
        heat.max(res).max(eta) <= TOL_CLOSED_FORM,
        format!("heat {heat:.1e}, resolvent p=2 {res:.1e}, eta1 {eta:.1e}"),
    )
}

fn c4_constants() -> Outcome {
    let mut worst: f64 = 0.0;
    for p in [1.0, 1.5, 2.0, 3.0, 5.0] {
        match cp_constant(p) {
            Ok(c) => worst = worst.max((c.quadrature - c.gamma).abs()),
            Err(e) => return Err(format!("C_{p}: {e}")),
        }
    }
    let ce = (chi_e_constant() - PI.sqrt() / 2.0).abs();
    check(worst <= TOL_CP && ce <= TOL_CP, format!("C_p quadrature vs Gamma {worst:.1e}, C(chi_e) {ce:.1e}"))
}

fn c5_defect_identity() -> Outcome {
    let mut rng = random::rng(68);
    let chis = [
        NormalizingFunction::chi_e(),
        NormalizingFunction::chi_p(2.0).unwrap(),
        NormalizingFunction::chi_p(3.0).unwrap(),
        NormalizingFunction::smooth_gap(0.5).unwrap(),
    ];
    let mut worst: f64 = 0.0;
    for i in 0..50 {
        let n = 1 + i % 8;
        let alg = TracialAlgebra::blocks(&[(n, 0.5 + 0.05 * i as f64)]).unwrap();
        let d = random::invertible_element(&mut rng, &alg, 0.05);
        let r = endpoint_defect(&d, &chis[i % chis.len()], &quad()).unwrap();
        worst = worst.max(r.discrepancy);
    }
    check(worst <= TOL_DEFECT, format!("max |defect − integral| {worst:.1e} over 50 elements"))
}

fn c6_suspension() -> Outcome {
    let mut rng = random::rng(51);
    let chi = NormalizingFunction::smooth_gap(0.25).unwrap();
    let mut worst: f64 = 0.0;
    let mut seen = BTreeSet::new();
    for i in 0..100 {
        let n = 1 + i % 12;
        let c = 0.37 + 0.11 * (i % 5) as f64;
        let t = random::corner(&mut rng, n, c).unwrap();
        let ind = breuer_index(&t, 1e-8).unwrap().value;
        let sf = sf_winding(&suspension_path(&t).unwrap(), &chi, &quad()).unwrap().value;
        worst = worst.max((sf - ind).abs());
        seen.insert((ind / c).round() as i64);
    }
    let covered = [-2, -1, 0, 1, 2].iter().all(|k| seen.contains(k));
    check(
        worst <= TOL_SUSPENSION && covered,
        format!("max |sf − ind| {worst:.1e}; index multiples seen {seen:?}"),
    )
}

fn random_loop(seed: u64) -> (UnitaryLoop, spectral_flow::path::OperatorPath) {
    let mut rng = random::rng(seed);
    let alg = TracialAlgebra::blocks(&[(3, 0.8), (2, 1.7)]).unwrap();
    let p = random::path(&mut rng, &alg, 0.3).unwrap();
    let chi = default_gap(&p).unwrap();
    (exp_loop(&p, &chi).unwrap().with_panels(64), p)
}

fn c7_winding() -> Outcome {
    let q = tight();
    let (mut inv, mut rect, mut hom) = (0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20 {
        let (s, p) = random_loop(700 + seed);
        let w = winding_number(&s, &q).unwrap().value;
        let mut rng = random::rng(900 + seed);
        let u = random::unitary_element(&mut rng, p.algebra());
        let one = Element::identity(p.algebra());
        let ws_u = winding_number(&s.sandwich(&one, &u).unwrap(), &q).unwrap().value;
        let wu_s = winding_number(&s.sandwich(&u, &one).unwrap(), &q).unwrap().value;
        let conj = winding_number(&s.conjugated(&u).unwrap(), &q).unwrap().value;
        inv = inv.max((ws_u - w).abs()).max((wu_s - w).abs()).max((conj - w).abs());

        let (s2, p2) = random_loop(800 + seed);
        let w2 = winding_number(&s2, &q).unwrap().value;
        let prod = winding_number(&s.product(&s2).unwrap(), &q).unwrap().value;
        hom = hom.max((prod - w - w2).abs());

        let chi = NormalizingFunction::smooth_gap(0.1).unwrap();
        let f = chi.exp_loop_function();
        let (pa, pb) = (p.clone(), p2.clone());
        let h = Surface::new((0.0, 1.0), (0.0, 1.0), move |x, y| {
            pa.value(x)?.scale(1.0 - y).add(&pb.value(x)?.scale(y))?.apply(&f)
        })
        .with_panels(32);
        rect = rect.max(rectangle_defect(&h, &QuadratureConfig::with_tol(1e-9)).unwrap().magnitude());
    }
    check(
        inv <= TOL_WINDING_INVARIANCE && rect <= TOL_RECTANGLE && hom <= TOL_HOMOMORPHISM,
        format!("sU/Us/conjugation {inv:.1e}, rectangle {rect:.1e}, product {hom:.1e} over 20 cases"),
    )
}

fn c8_spectral_flow() -> Outcome {
    let q = tight();
    let (mut zero, mut additive, mut reverse, mut conj, mut chi_dep, mut scaling) =
        (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for seed in 0..20 {
        let mut rng = random::rng(1000 + seed);
        let alg = random::block_algebra(&mut rng, 10);
        let a = random::invertible_element(&mut rng, &alg, 0.3);
        let h = random::hermitian_element(&mut rng, &alg, 2.0);
        let fam = UnitaryFamily::exp_i(&h).unwrap();
        let rotating = OperatorPath::affine(&a, &a).unwrap().conjugate(&fam).unwrap();
        zero = zero.max(winding(&rotating, &q).abs());
        let growing = OperatorPath::affine(&a, &a.scale(3.0)).unwrap();
        zero = zero.max(winding(&growing, &q).abs());

        let p = random::path(&mut rng, &alg, 0.3).unwrap();
        let b = random::invertible_element(&mut rng, &alg, 0.3);
        let p2 = OperatorPath::affine(&p.value(1.0).unwrap(), &b).unwrap();
        let w = winding(&p, &q);
        let w2 = winding(&p2, &q);
        additive = additive.max((winding(&p.concat(&p2).unwrap(), &q) - w - w2).abs());
        reverse = reverse.max((winding(&p.reverse(), &q) + w).abs());
        conj = conj.max((winding(&p.conjugate(&fam).unwrap(), &q) - w).abs());
        let m = p.require_invertible_endpoints().unwrap().min_margin();
        for eps in [0.2 * m, 0.9 * m] {
            let chi = NormalizingFunction::smooth_gap(eps).unwrap();
            chi_dep = chi_dep.max((sf_winding(&p, &chi, &q).unwrap().value - w).abs());
        }
        for c in [0.1, 10.0] {
            scaling = scaling.max((winding(&p.scaled(c), &q) - w).abs());
        }
    }
    let ok = zero <= TOL_SF_EXACT
        && additive <= TOL_SF_EXACT
        && reverse <= TOL_SF_EXACT
        && conj <= TOL_SF_INVARIANCE
        && chi_dep <= TOL_SF_INVARIANCE
        && scaling <= TOL_SF_EXACT;
    check(
        ok,
        format!(
            "invertible {zero:.1e}, concat {additive:.1e}, reverse {reverse:.1e}, conjugation {conj:.1e}, chi {chi_dep:.1e}, scaling {scaling:.1e}"
        ),
    )
}

fn c9_projection_bound() -> Outcome {
    let mut rng = random::rng(42);
    let ind = FunctionSpec::indicator_nonneg();
    let mut worst_ratio: f64 = 0.0;
    for i in 0..50 {
        let alg = random::block_algebra(&mut rng, 12);
        let f = random::involution(&mut rng, &alg);
        let a = random::hermitian_element(&mut rng, &alg, 0.01 + 0.48 * (i as f64 / 49.0));
        let lhs = f.add(&a).unwrap().apply(&ind).unwrap().sub(&f.apply(&ind).unwrap()).unwrap().op_norm();
        worst_ratio = worst_ratio.max(lhs / (2.0 * a.op_norm()));
    }
    check(worst_ratio < 1.0, format!("max ‖ΔP‖/(2‖A‖) = {worst_ratio:.4} over 50 pairs"))
}

fn c10_tan_wrap() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut telescoping: f64 = 0.0;
    for total in [1.0, 2.5] {
        let g = TracialAlgebra::uniform_grid(7, 0.0, 1.0, total).unwrap();
        let p = build_tan_wrap_loop(&g, 0.13).unwrap();
        let w = winding(&p, &quad());
        let c = sf_crossing(&p, &CrossingOptions::default()).unwrap();
        worst = worst.max((w - total).abs()).max((c.value - total).abs());
        telescoping = telescoping.max(c.telescoping.abs());
    }
    check(
        worst <= TOL_TAN_WRAP && telescoping == 0.0,
        format!("|sf − W| {worst:.1e} (W = 1, 2.5); telescoping value {telescoping}"),
    )
}

fn c11_covering() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut values = Vec::new();
    for (m, k) in [(4, 3), (5, 2)] {
        let c = build_covering_path(&CoveringSpec::standard(m, k)).unwrap();
        let g = winding(&c.gamma_path, &quad());
        let f = winding(&c.full_path, &quad());
        worst = worst.max((g - f / k as f64).abs());
        values.push(format!("({m},{k}): {g:.6}/{f:.6}"));
    }
    check(
        worst <= TOL_COVERING,
        format!("max |sf_Γ − sf/k| {worst:.1e}; {}", values.join(", ")),
    )
}

fn c12_derivatives() -> Outcome {
    let mut rng = random::rng(12);
    let (mut fd, mut duh, mut ident) = (0.0f64, 0.0f64, 0.0f64);
    let funcs = [FunctionSpec::gaussian(), FunctionSpec::resolvent_at_i(), FunctionSpec::polynomial(&[0.3, -1.0, 0.5, 0.25])];
    let fourier = [FourierData::Gaussian { a: 1.0 }, FourierData::Gaussian { a: 0.5 }, FourierData::bump()];
    for i in 0..12 {
        let n = 3 + i % 2;
        let alg = TracialAlgebra::blocks(&[(n, 0.5 + 0.1 * i as f64)]).unwrap();
        let spec: Vec<f64> = (0..n).map(|j| -0.9 + 1.8 * ((j as f64 + 0.3 * (i % 3) as f64) / n as f64)).collect();
        let f = Element::hermitian(&alg, vec![random::hermitian_with_spectrum(&mut rng, &spec)]).unwrap();
        let dot = random::hermitian_element(&mut rng, &alg, 1.0);

        let g = &funcs[i % 3];
        let dk = f.eigh().unwrap().derivative(g, &dot).unwrap();
        let h = 1e-5;
        let plus = f.add(&dot.scale(h)).unwrap().apply(g).unwrap();
        let minus = f.sub(&dot.scale(h)).unwrap().apply(g).unwrap();
        let central = plus.sub(&minus).unwrap().scale(0.5 / h);
        fd = fd.max(dk.max_entry_distance(&central).unwrap() / dk.op_norm().max(1e-300));

        let fdat = &fourier[i % 3];
        let d = duhamel_derivative(fdat, &f, &dot, &QuadratureConfig::with_tol(1e-9)).unwrap();
        let exact = f.eigh().unwrap().derivative(&fdat.function(), &dot).unwrap();
        duh = duh.max(d.value.max_entry_distance(&exact).unwrap());

        let r = duhamel_trace_identity(&f, &dot, &BoundedChi::chi_e()).unwrap();
        ident = ident.max(r.discrepancy);
    }
    check(
        fd <= TOL_DK_FD && duh <= TOL_DUHAMEL && ident <= TOL_TRACE_IDENTITY,
        format!("divided differences vs central FD {fd:.1e} (rel), Duhamel {duh:.1e}, trace identity {ident:.1e}"),
    )
}

fn c13_gn() -> Outcome {
    let r = build_gn_family(&[1, 2, 4, 8], &GnRefinement::default()).map_err(|e| e.to_string())?;
    let res: Vec<String> = r.rows.iter().map(|row| format!("{:.3}", row.resolvent_distance)).collect();
    check(
        r.resolvent_decreasing && r.min_functional_distance >= 0.5,
        format!("resolvent distances [{}], min functional distance {:.3}", res.join(", "), r.min_functional_distance),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("cross-method agreement", c1_cross_method),
        ("integral formulas vs winding", c2_formulas),
        ("closed-form scalar checks", c3_closed_forms),
        ("normalizing constants", c4_constants),
        ("defect integral identity", c5_defect_identity),
        ("suspension index", c6_suspension),
        ("winding number properties", c7_winding),
        ("spectral flow properties", c8_spectral_flow),
        ("projection perturbation bound", c9_projection_bound),
        ("tan-wrap loop", c10_tan_wrap),
        ("covering trace ratio", c11_covering),
        ("derivative formulas", c12_derivatives),
        ("g_n family", c13_gn),
    ];
    let filter: Option<String> = std::env::args().skip(1).find(|a| !a.starts_with('-'));
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{:02}", i + 1);
        if let Some(sel) = &filter {
            if !id.contains(sel.as_str()) && !name.contains(sel.as_str()) {
                continue;
            }
        }
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(d) => println!("PASS {id} {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL {id} {name}: {d}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
