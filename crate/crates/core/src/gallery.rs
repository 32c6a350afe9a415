//! Demonstration families: tan-wrap loops, equivariant operators on cyclic covers, and `g_n`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::algebra::{CMat, Element, FunctionSpec, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::path::{OperatorPath, PoleWrap};

const ENDPOINT_CLEARANCE: f64 = 1e-9;

/// `x ↦ tan(π(t − x − offset))` on a grid; closed in `t`, each point wrapping through `±∞`
/// once and crossing 0 upward once.
pub fn build_tan_wrap_loop(grid: &Arc<TracialAlgebra>, offset: f64) -> Result<OperatorPath> {
    let points = grid.grid_points().ok_or(Error::Backend { expected: "grid" })?.to_vec();
    // phase φ = frac(t − x − offset + ½): value −cot(πφ), pole at φ = 0
    let phase = move |t: f64, x: f64| (t - x - offset + 0.5).rem_euclid(1.0);
    for &x in &points {
        let phi = phase(0.0, x);
        let d = phi.min(1.0 - phi);
        if d < ENDPOINT_CLEARANCE || (phi - 0.5).abs() < ENDPOINT_CLEARANCE {
            return Err(Error::Precondition(format!(
                "grid point {x} sits on a zero or pole at t = 0; choose a different offset"
            )));
        }
    }
    let wraps: Vec<PoleWrap> = points
        .iter()
        .enumerate()
        .map(|(i, &x)| PoleWrap {
            point: i,
            t: (x + offset - 0.5).rem_euclid(1.0),
            upward: true,
        })
        .collect();
    let mut breaks: Vec<f64> = wraps.iter().map(|w| w.t).filter(|&t| t > 0.0 && t < 1.0).collect();
    breaks.sort_by(f64::total_cmp);
    let (g1, g2, p1, p2) = (grid.clone(), grid.clone(), points.clone(), points);
    OperatorPath::new(grid, move |t| {
        let v: Vec<f64> = p1
            .iter()
            .map(|&x| {
                let phi = phase(t, x);
                if phi == 0.0 {
                    f64::INFINITY
                } else {
                    -1.0 / (PI * phi).tan()
                }
            })
            .collect();
        Element::grid_with_poles(&g1, &v)
    })
    .with_derivative(move |t| {
        let v: Vec<f64> = p2
            .iter()
            .map(|&x| {
                let s = (PI * phase(t, x)).sin();
                PI / (s * s)
            })
            .collect();
        Element::grid_with_poles(&g2, &v)
    })
    .with_provenance(format!("tan_wrap(offset = {offset})"))
    .with_breakpoints(breaks)?
    .with_wraps(wraps)
}

/// Polynomial in `t`, lowest degree first.
pub type TimePolynomial = Vec<f64>;

fn poly(c: &[f64], t: f64) -> (f64, f64) {
    let v = c.iter().rev().fold(0.0, |a, &x| a * t + x);
    let d = c.iter().enumerate().skip(1).rev().fold(0.0, |a, (k, &x)| a * t + k as f64 * x);
    (v, d)
}

/// A cycle of length `m` and its `k`-fold cyclic cover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoveringSpec {
    pub m: usize,
    pub k: usize,
    /// Weight of base edge `j → j+1`, one polynomial per base edge.
    pub edge_weights: Vec<TimePolynomial>,
    /// Potential at base vertex `j`.
    pub potentials: Vec<TimePolynomial>,
    /// Potential on all `m·k` cover vertices; must be invariant under rotation by `m`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifted_potentials: Option<Vec<TimePolynomial>>,
}

impl CoveringSpec {
    /// Unit edge weights and potential `t − ¾ + 0.05 j`.
    pub fn standard(m: usize, k: usize) -> CoveringSpec {
        CoveringSpec {
            m,
            k,
            edge_weights: vec![vec![1.0]; m],
            potentials: (0..m).map(|j| vec![-0.75 + 0.05 * j as f64, 1.0]).collect(),
            lifted_potentials: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Covering {
    /// Path in the algebra with `τ_Γ` (one block of dimension `mk`, weight `1/k`).
    pub gamma_path: OperatorPath,
    /// The same operators with the full trace.
    pub full_path: OperatorPath,
    pub gamma_algebra: Arc<TracialAlgebra>,
    pub full_algebra: Arc<TracialAlgebra>,
    /// Largest `‖R D_t R* − D_t‖` over sampled `t`, `R` the deck rotation.
    pub equivariance_residual: f64,
}

/// Weighted graph Laplacian plus potential on the cover, lifted equivariantly from the base.
pub fn build_covering_path(spec: &CoveringSpec) -> Result<Covering> {
    let (m, k) = (spec.m, spec.k);
    if m < 3 || k < 1 {
        return Err(Error::Precondition(format!("covering needs m ≥ 3 and k ≥ 1, got m = {m}, k = {k}")));
    }
    if spec.edge_weights.len() != m || spec.potentials.len() != m {
        return Err(Error::Precondition(format!("expected {m} edge weights and {m} potentials")));
    }
    let n = m * k;
    let potentials: Vec<TimePolynomial> = match &spec.lifted_potentials {
        Some(v) => {
            if v.len() != n {
                return Err(Error::Precondition(format!("expected {n} lifted potentials")));
            }
            for i in 0..n {
                let j = (i + m) % n;
                for s in 0..=8 {
                    let t = s as f64 / 8.0;
                    if (poly(&v[i], t).0 - poly(&v[j], t).0).abs() > 1e-12 {
                        return Err(Error::Precondition(format!(
                            "lifted potential is not invariant under the deck rotation (vertex {i} vs {j} at t = {t})"
                        )));
                    }
                }
            }
            v.clone()
        }
        None => (0..n).map(|i| spec.potentials[i % m].clone()).collect(),
    };
    let edges: Vec<TimePolynomial> = (0..n).map(|i| spec.edge_weights[i % m].clone()).collect();
    let matrix = move |t: f64, deriv: bool| -> CMat {
        let mut a = CMat::zeros(n, n);
        let ev = |c: &[f64]| if deriv { poly(c, t).1 } else { poly(c, t).0 };
        for i in 0..n {
            let w = ev(&edges[i]);
            let j = (i + 1) % n;
            a[(i, i)] += C64::new(w, 0.0);
            a[(j, j)] += C64::new(w, 0.0);
            a[(i, j)] -= C64::new(w, 0.0);
            a[(j, i)] -= C64::new(w, 0.0);
            a[(i, i)] += C64::new(ev(&potentials[i]), 0.0);
        }
        a
    };
    let matrix = Arc::new(matrix);
    let rot = CMat::from_fn(n, n, |i, j| if i == (j + m) % n { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    let mut residual: f64 = 0.0;
    for s in 0..=16 {
        let a = matrix(s as f64 / 16.0, false);
        let r = &rot * &a * rot.adjoint() - &a;
        residual = residual.max(r.iter().fold(0.0f64, |acc, z| acc.max(z.norm())));
    }
    let make = |alg: &Arc<TracialAlgebra>, name: &str| -> OperatorPath {
        let (m1, m2, a1, a2) = (matrix.clone(), matrix.clone(), alg.clone(), alg.clone());
        OperatorPath::new(alg, move |t| Element::hermitian(&a1, vec![m1(t, false)]))
            .with_derivative(move |t| Element::hermitian(&a2, vec![m2(t, true)]))
            .with_provenance(format!("covering(m = {m}, k = {k}, {name})"))
    };
    let gamma_algebra = TracialAlgebra::blocks(&[(n, 1.0 / k as f64)])?;
    let full_algebra = TracialAlgebra::blocks(&[(n, 1.0)])?;
    Ok(Covering {
        gamma_path: make(&gamma_algebra, "gamma_trace"),
        full_path: make(&full_algebra, "full_trace"),
        gamma_algebra,
        full_algebra,
        equivariance_residual: residual,
    })
}

/// `g_n(x)`: `n` on `|x| ≤ 1/n`; elsewhere `k` on `1/(2k+1) < |x| ≤ 1/(2k)`, `−k` on
/// `1/(2k) < |x| ≤ 1/(2k−1)`, and 0 for `|x| > 1`. `n = ∞` gives the pointwise limit.
pub fn g_n(n: Option<u64>, x: f64) -> f64 {
    let a = x.abs();
    if let Some(n) = n {
        if a <= 1.0 / n as f64 {
            return n as f64;
        }
    } else if a == 0.0 {
        return f64::INFINITY;
    }
    if a > 1.0 {
        return 0.0;
    }
    // j with 1/(j+1) < a ≤ 1/j
    let mut j = (1.0 / a).floor() as u64;
    if 1.0 / (j as f64) < a {
        j -= 1;
    }
    if 1.0 / ((j + 1) as f64) >= a {
        j += 1;
    }
    if j % 2 == 0 {
        (j / 2) as f64
    } else {
        -(j.div_ceil(2) as f64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GnRefinement {
    /// Sample points inside each band `(1/(j+1), 1/j]`.
    pub points_per_band: usize,
    /// Bands resolved, as a multiple of the largest `n`.
    pub band_factor: usize,
}

impl Default for GnRefinement {
    fn default() -> Self {
        GnRefinement {
            points_per_band: 3,
            band_factor: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GnRow {
    pub n: u64,
    /// `sup |(g_n + i)^{-1} − (g_∞ + i)^{-1}|`
    pub resolvent_distance: f64,
    /// `sup_{|x| ≤ 1} |f(g_n) − f(g_∞)|`, `f` the bounded transform.
    pub functional_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GnReport {
    pub rows: Vec<GnRow>,
    pub grid_points: usize,
    pub resolvent_decreasing: bool,
    pub min_functional_distance: f64,
}

/// Grid resolving the bands of `g_n` for `n ≤ n_max`: geometric points with ratio ½ down to
/// `1/(4 n_max)` plus interior points of every band `(1/(j+1), 1/j]`, `j ≤ band_factor·n_max`.
pub fn gn_grid(n_max: u64, refinement: &GnRefinement) -> Result<Arc<TracialAlgebra>> {
    if n_max == 0 || n_max > 100_000 {
        return Err(Error::Precondition(format!("n must lie in [1, 100000], got {n_max}")));
    }
    let mut pos = vec![2.0, 1.5];
    let mut x = 1.0;
    let floor = 1.0 / (4.0 * n_max as f64);
    while x >= floor {
        pos.push(x);
        x *= 0.5;
    }
    let bands = refinement.band_factor as u64 * n_max;
    for j in 1..=bands {
        let (lo, hi) = (1.0 / (j + 1) as f64, 1.0 / j as f64);
        let r = refinement.points_per_band;
        for i in 1..=r {
            pos.push(lo + (hi - lo) * i as f64 / (r + 1) as f64);
        }
    }
    pos.sort_by(|a, b| b.total_cmp(a));
    pos.dedup();
    let mut points: Vec<f64> = pos.iter().map(|x| -x).collect();
    points.push(0.0);
    points.extend(pos.iter().rev());
    points.sort_by(f64::total_cmp);
    let weights: Vec<f64> = points
        .iter()
        .enumerate()
        .map(|(i, _)| {
            let l = if i > 0 { points[i] - points[i - 1] } else { 0.0 };
            let r = if i + 1 < points.len() { points[i + 1] - points[i] } else { 0.0 };
            0.5 * (l + r)
        })
        .collect();
    TracialAlgebra::grid(&points, &weights)
}

pub fn build_gn_family(n_values: &[u64], refinement: &GnRefinement) -> Result<GnReport> {
    let n_max = *n_values
        .iter()
        .max()
        .ok_or_else(|| Error::Precondition("at least one n is required".into()))?;
    if n_values.contains(&0) {
        return Err(Error::Precondition("n must be positive".into()));
    }
    let alg = gn_grid(n_max, refinement)?;
    let points = alg.grid_points().unwrap().to_vec();
    for &n in n_values {
        // a negative band inside |x| ≤ 1/n must be sampled
        let ok = points.iter().any(|&x| x > 0.0 && x <= 1.0 / n as f64 && g_n(None, x) < 0.0);
        if !ok {
            return Err(Error::Precondition(format!(
                "grid refinement does not resolve the bands of g_{n}; increase points_per_band or band_factor"
            )));
        }
    }
    let g_inf: Vec<f64> = points.iter().map(|&x| g_n(None, x)).collect();
    let inf = Element::grid_with_poles(&alg, &g_inf)?;
    let res = FunctionSpec::resolvent_at_i();
    let bt = FunctionSpec::bounded_transform();
    let res_inf = inf.apply(&res)?;
    let f_inf = inf.apply(&bt)?;
    let inside: Vec<bool> = points.iter().map(|x| x.abs() <= 1.0).collect();
    let mut rows = Vec::new();
    for &n in n_values {
        let g: Vec<f64> = points.iter().map(|&x| g_n(Some(n), x)).collect();
        let e = Element::grid(&alg, &g)?;
        let resolvent_distance = e.apply(&res)?.max_entry_distance(&res_inf)?;
        let fd = e.apply(&bt)?.sub(&f_inf)?;
        let functional_distance = fd
            .grid_values()
            .unwrap()
            .iter()
            .zip(&inside)
            .filter(|(_, &i)| i)
            .fold(0.0f64, |m, (z, _)| m.max(z.norm()));
        rows.push(GnRow {
            n,
            resolvent_distance,
            functional_distance,
        });
    }
    let resolvent_decreasing = rows.windows(2).all(|w| w[1].resolvent_distance < w[0].resolvent_distance);
    let min_functional_distance = rows.iter().fold(f64::INFINITY, |m, r| m.min(r.functional_distance));
    Ok(GnReport {
        rows,
        grid_points: points.len(),
        resolvent_decreasing,
        min_functional_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::specflow::{sf_crossing, CrossingOptions};

    #[test]
    fn tan_wrap_crossings() {
        let g = TracialAlgebra::uniform_grid(5, 0.0, 1.0, 2.5).unwrap();
        let p = build_tan_wrap_loop(&g, 0.13).unwrap();
        let c = sf_crossing(&p, &CrossingOptions::default()).unwrap();
        assert!((c.value - 2.5).abs() < 1e-12);
        assert_eq!(c.telescoping, 0.0);
        assert_eq!(c.crossings.len(), 5);
        let a = p.value(0.0).unwrap();
        let b = p.value(1.0).unwrap();
        assert!(a.max_entry_distance(&b).unwrap() < 1e-12);
    }

    #[test]
    fn tan_wrap_endpoint_error() {
        let g = TracialAlgebra::grid(&[0.25], &[1.0]).unwrap();
        assert!(build_tan_wrap_loop(&g, -0.25).is_err());
        assert!(build_tan_wrap_loop(&g, 0.25).is_err());
        assert!(build_tan_wrap_loop(&g, 0.1).is_ok());
    }

    #[test]
    fn g_n_bands() {
        assert_eq!(g_n(Some(1), 0.7), 1.0);
        assert_eq!(g_n(None, 0.7), -1.0);
        assert_eq!(g_n(None, 0.4), 1.0);
        assert_eq!(g_n(None, 0.3), -2.0);
        assert_eq!(g_n(None, 0.5), 1.0);
        assert_eq!(g_n(None, 1.0), -1.0);
        assert_eq!(g_n(None, 0.25), 2.0);
        assert_eq!(g_n(None, 1.5), 0.0);
        for &x in &[0.3, -0.09, 0.013] {
            assert_eq!(g_n(Some(1000), x), g_n(None, x));
        }
    }

    #[test]
    fn gn_demo() {
        let r = build_gn_family(&[1, 2, 4, 8], &GnRefinement::default()).unwrap();
        assert!(r.resolvent_decreasing);
        assert!(r.min_functional_distance >= 0.5);
        let coarse = GnRefinement {
            points_per_band: 0,
            band_factor: 1,
        };
        assert!(build_gn_family(&[8], &coarse).is_err());
    }

    #[test]
    fn covering_is_equivariant() {
        let c = build_covering_path(&CoveringSpec::standard(4, 3)).unwrap();
        assert!(c.equivariance_residual <= 1e-12);
        let mut bad = CoveringSpec::standard(4, 2);
        let mut lifted: Vec<TimePolynomial> = (0..8).map(|i| bad.potentials[i % 4].clone()).collect();
        lifted[5] = vec![3.0];
        bad.lifted_potentials = Some(lifted);
        assert!(build_covering_path(&bad).is_err());
    }
}
