use proptest::prelude::*;

use spectral_flow::gallery::g_n;
use spectral_flow::index::{breuer_index, coordinate_projection, CornerOperator};
use spectral_flow::random;
use spectral_flow::runspec::RunSpec;
use spectral_flow::specflow::{default_gap, sf_analytic, sf_crossing, sf_winding, uniform_partition, CrossingOptions};
use spectral_flow::{Element, FunctionSpec, OperatorPath, QuadratureConfig, TracialAlgebra};

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0..-0.05f64, 0.05..5.0f64]
}

fn winding(p: &OperatorPath) -> f64 {
    sf_winding(p, &default_gap(p).unwrap(), &QuadratureConfig::default()).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn diagonal_paths_count_sign_changes(
        entries in prop::collection::vec((nonzero(), nonzero()), 1..6),
        weight in 0.1..3.0f64,
    ) {
        let alg = TracialAlgebra::blocks(&[(entries.len(), weight)]).unwrap();
        let a: Vec<f64> = entries.iter().map(|e| e.0).collect();
        let b: Vec<f64> = entries.iter().map(|e| e.1).collect();
        let expected: f64 = entries
            .iter()
            .map(|&(x, y)| weight * (((y > 0.0) as i32 - (x > 0.0) as i32) as f64))
            .sum();
        let p = OperatorPath::diagonal_affine(&alg, &a, &b).unwrap();
        prop_assert!((winding(&p) - expected).abs() < 1e-6);
        prop_assert!((sf_analytic(&p, &uniform_partition(8)).unwrap().value - expected).abs() < 1e-12);
        prop_assert!((sf_crossing(&p, &CrossingOptions::default()).unwrap().value - expected).abs() < 1e-12);
    }

    #[test]
    fn reversal_is_antisymmetric(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let alg = random::block_algebra(&mut rng, 8);
        let p = random::path(&mut rng, &alg, 0.2).unwrap();
        prop_assert!((winding(&p) + winding(&p.reverse())).abs() < 1e-7);
    }

    #[test]
    fn bounded_transform_is_a_contraction(diag in prop::collection::vec(-1e8..1e8f64, 1..8)) {
        let alg = TracialAlgebra::blocks(&[(diag.len(), 1.0)]).unwrap();
        let f = Element::diagonal(&alg, &diag).unwrap().bounded_transform().unwrap();
        prop_assert!(f.op_norm() <= 1.0);
    }

    #[test]
    fn trace_is_cyclic(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let alg = random::block_algebra(&mut rng, 10);
        let a = random::unitary_element(&mut rng, &alg);
        let b = random::hermitian_element(&mut rng, &alg, 2.0);
        let lhs = a.mul(&b).unwrap().trace().unwrap();
        let rhs = b.mul(&a).unwrap().trace().unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-12 * b.op_norm() * alg.unit_trace());
    }

    #[test]
    fn indicator_is_a_projection(seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let alg = random::block_algebra(&mut rng, 10);
        let p = random::hermitian_element(&mut rng, &alg, 1.0).apply(&FunctionSpec::indicator_nonneg()).unwrap();
        prop_assert!(p.mul(&p).unwrap().distance(&p).unwrap() < 1e-12);
    }

    #[test]
    fn coordinate_corner_index(n in 1usize..7, rp in 0usize..7, rq in 0usize..7, c in 0.1..3.0f64) {
        let (rp, rq) = (rp.min(n), rq.min(n));
        let alg = TracialAlgebra::blocks(&[(n, c)]).unwrap();
        let p = coordinate_projection(&alg, &[rp]).unwrap();
        let q = coordinate_projection(&alg, &[rq]).unwrap();
        let d = p.mul(&q).unwrap();
        let t = CornerOperator::new(d, p, q).unwrap();
        let expected = c * (rq as f64 - rp as f64);
        prop_assert!((breuer_index(&t, 1e-8).unwrap().value - expected).abs() < 1e-12);
    }

    #[test]
    fn g_n_is_even_and_vanishes_outside(n in 1u64..64, x in -2.0..2.0f64) {
        prop_assert_eq!(g_n(Some(n), x), g_n(Some(n), -x));
        if x.abs() > 1.0 {
            prop_assert_eq!(g_n(Some(n), x), 0.0);
        }
        if x.abs() > 1.0 / n as f64 {
            prop_assert_eq!(g_n(Some(n), x), g_n(None, x));
        }
    }

    #[test]
    fn run_spec_round_trips(a in nonzero(), b in nonzero()) {
        let text = format!(
            r#"{{"backend": {{"kind": "blocks", "blocks": [[1, 1.0]]}},
                "path": {{"family": "scalar_affine", "a": {a}, "b": {b}}},
                "methods": ["winding", "analytic"]}}"#
        );
        let spec = RunSpec::from_json(&text).unwrap();
        let again = RunSpec::from_json(&serde_json::to_string(&spec).unwrap()).unwrap();
        prop_assert_eq!(spec, again);
    }
}
