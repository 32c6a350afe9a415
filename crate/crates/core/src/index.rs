//! Breuer-Fredholm index of corner operators and the suspension path.

use std::sync::Arc;

use serde::Serialize;

use crate::algebra::{CMat, Element, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::path::OperatorPath;
use crate::tolerances::{HERMITIAN_REL, RANK_TOL};

/// `D = pDq`, mapping `ran q` into `ran p`, in a block algebra.
#[derive(Debug, Clone)]
pub struct CornerOperator {
    d: Element,
    p: Element,
    q: Element,
}

fn check_projection(e: &Element, name: &str) -> Result<()> {
    let dev = e.hermitian_deviation();
    let idem = e.mul(e)?.max_entry_distance(e)?;
    if dev > HERMITIAN_REL || idem > HERMITIAN_REL {
        return Err(Error::Precondition(format!(
            "{name} is not an orthogonal projection (hermitian deviation {dev:.1e}, idempotence {idem:.1e})"
        )));
    }
    Ok(())
}

impl CornerOperator {
    pub fn new(d: Element, p: Element, q: Element) -> Result<Self> {
        crate::algebra::same_algebra(d.algebra(), p.algebra())?;
        crate::algebra::same_algebra(d.algebra(), q.algebra())?;
        if d.algebra().is_grid() {
            return Err(Error::Backend { expected: "blocks" });
        }
        check_projection(&p, "p")?;
        check_projection(&q, "q")?;
        let p = p.into_hermitian()?;
        let q = q.into_hermitian()?;
        let corner = p.mul(&d)?.mul(&q)?;
        let dev = corner.max_entry_distance(&d)?;
        if dev > HERMITIAN_REL * d.op_norm().max(1.0) {
            return Err(Error::Precondition(format!("D differs from pDq by {dev:.1e}")));
        }
        Ok(CornerOperator { d, p, q })
    }

    /// `p = q = 1`
    pub fn square(d: Element) -> Result<Self> {
        let one = Element::identity(d.algebra());
        CornerOperator::new(d, one.clone(), one)
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        self.d.algebra()
    }

    pub fn operator(&self) -> &Element {
        &self.d
    }

    pub fn source(&self) -> &Element {
        &self.q
    }

    pub fn target(&self) -> &Element {
        &self.p
    }

    /// `D*` as a map from `ran p` to `ran q`.
    pub fn adjoint(&self) -> CornerOperator {
        CornerOperator {
            d: self.d.adjoint(),
            p: self.q.clone(),
            q: self.p.clone(),
        }
    }

    /// Block-diagonal sum in the algebra whose block list is the concatenation of both.
    pub fn direct_sum(&self, other: &CornerOperator) -> Result<CornerOperator> {
        let mut blocks = self.algebra().block_list();
        blocks.extend(other.algebra().block_list());
        let alg = TracialAlgebra::blocks(&blocks)?;
        let join = |a: &Element, b: &Element| -> Result<Element> {
            let mut v = a.blocks().ok_or(Error::Backend { expected: "blocks" })?.to_vec();
            v.extend_from_slice(b.blocks().ok_or(Error::Backend { expected: "blocks" })?);
            Element::from_blocks(&alg, v)
        };
        CornerOperator::new(join(&self.d, &other.d)?, join(&self.p, &other.p)?, join(&self.q, &other.q)?)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IndexResult {
    pub value: f64,
    /// `τ` of the kernel projection of `D` inside `ran q`.
    pub kernel: f64,
    /// `τ` of the kernel projection of `D*` inside `ran p`.
    pub cokernel: f64,
    pub tolerance: f64,
    /// Singular values within a factor 10 of the tolerance.
    pub rank_warnings: usize,
}

fn projection_rank(e: &CMat) -> usize {
    let tr: f64 = (0..e.nrows()).map(|i| e[(i, i)].re).sum();
    tr.round() as usize
}

/// `τ(1_{0}(D*D)|_{ran q}) − τ(1_{0}(DD*)|_{ran p})` with ranks decided by `tol`.
pub fn breuer_index(t: &CornerOperator, tol: f64) -> Result<IndexResult> {
    if !(tol > 0.0) {
        return Err(Error::Precondition("rank tolerance must be positive".into()));
    }
    let weights = t.algebra().block_list();
    let (db, pb, qb) = (t.d.blocks().unwrap(), t.p.blocks().unwrap(), t.q.blocks().unwrap());
    let mut out = IndexResult {
        value: 0.0,
        kernel: 0.0,
        cokernel: 0.0,
        tolerance: tol,
        rank_warnings: 0,
    };
    for k in 0..weights.len() {
        let sv = crate::algebra::singular_values(&db[k]);
        let rank = sv.iter().filter(|&&s| s > tol).count();
        out.rank_warnings += sv.iter().filter(|&&s| s > 0.1 * tol && s < 10.0 * tol).count();
        let c = weights[k].1;
        out.kernel += c * (projection_rank(&qb[k]) - rank) as f64;
        out.cokernel += c * (projection_rank(&pb[k]) - rank) as f64;
    }
    out.value = out.kernel - out.cokernel;
    Ok(out)
}

/// Doubled algebra: each block `(n, c)` becomes `(2n, c)`.
pub fn doubled_algebra(alg: &TracialAlgebra) -> Result<Arc<TracialAlgebra>> {
    let blocks: Vec<(usize, f64)> = alg.block_list().iter().map(|&(n, c)| (2 * n, c)).collect();
    TracialAlgebra::blocks(&blocks)
}

/// `t ↦ [[(t − ½)q + (1 − q), D*], [D, (½ − t)p + (1 − p)]]` on the doubled algebra.
pub fn suspension_path(t: &CornerOperator) -> Result<OperatorPath> {
    let alg = doubled_algebra(t.algebra())?;
    let build = |s: f64| -> Result<Element> {
        let mut blocks = Vec::new();
        for ((d, p), q) in t.d.blocks().unwrap().iter().zip(t.p.blocks().unwrap()).zip(t.q.blocks().unwrap()) {
            let n = d.nrows();
            let one = CMat::identity(n, n);
            let mut m = CMat::zeros(2 * n, 2 * n);
            let a = q.scale(s - 0.5) + (&one - q);
            let b = p.scale(0.5 - s) + (&one - p);
            m.view_mut((0, 0), (n, n)).copy_from(&a);
            m.view_mut((0, n), (n, n)).copy_from(&d.adjoint());
            m.view_mut((n, 0), (n, n)).copy_from(d);
            m.view_mut((n, n), (n, n)).copy_from(&b);
            blocks.push(m);
        }
        Element::hermitian(&alg, blocks)
    };
    Ok(OperatorPath::affine(&build(0.0)?, &build(1.0)?)?.with_provenance("suspension"))
}

#[derive(Debug, Clone, Serialize)]
pub struct HomotopyReport {
    pub samples: Vec<(f64, f64)>,
    pub max_deviation: f64,
    /// Parameters where a singular value sits in the tolerance band.
    pub flagged: Vec<f64>,
    pub constant: bool,
}

/// Evaluates `breuer_index` along `s ↦ family(s)` at `samples + 1` equispaced points of `[0, 1]`.
pub fn verify_index_homotopy<F>(family: F, samples: usize, tol: f64) -> Result<HomotopyReport>
where
    F: Fn(f64) -> Result<CornerOperator>,
{
    let n = samples.max(1);
    let mut out = HomotopyReport {
        samples: Vec::with_capacity(n + 1),
        max_deviation: 0.0,
        flagged: Vec::new(),
        constant: true,
    };
    let mut first = None;
    for i in 0..=n {
        let s = i as f64 / n as f64;
        let r = breuer_index(&family(s)?, tol)?;
        let f = *first.get_or_insert(r.value);
        out.max_deviation = out.max_deviation.max((r.value - f).abs());
        if r.rank_warnings > 0 {
            out.flagged.push(s);
        }
        out.samples.push((s, r.value));
    }
    out.constant = out.max_deviation == 0.0;
    Ok(out)
}

/// Orthogonal projection onto the span of the columns of `basis` (one matrix per block).
pub fn range_projection(alg: &Arc<TracialAlgebra>, basis: &[CMat]) -> Result<Element> {
    let blocks = basis
        .iter()
        .map(|b| {
            if b.ncols() == 0 {
                return CMat::zeros(b.nrows(), b.nrows());
            }
            let qr = b.clone().qr();
            let q = qr.q();
            let r = qr.r();
            let rank = (0..r.nrows().min(r.ncols())).filter(|&i| r[(i, i)].norm() > RANK_TOL).count();
            let q = q.columns(0, rank).into_owned();
            &q * q.adjoint()
        })
        .collect();
    Element::hermitian(alg, blocks)
}

/// Projection onto the first `r` coordinates of each block.
pub fn coordinate_projection(alg: &Arc<TracialAlgebra>, ranks: &[usize]) -> Result<Element> {
    let blocks = alg
        .block_list()
        .iter()
        .zip(ranks)
        .map(|(&(n, _), &r)| CMat::from_fn(n, n, |i, j| if i == j && i < r { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }))
        .collect();
    Element::hermitian(alg, blocks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::normalizing::NormalizingFunction;
    use crate::quad::QuadratureConfig;
    use crate::specflow::sf_winding;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    fn sf(t: &CornerOperator) -> f64 {
        let path = suspension_path(t).unwrap();
        let chi = NormalizingFunction::smooth_gap(0.25).unwrap();
        sf_winding(&path, &chi, &QuadratureConfig::default()).unwrap().value
    }

    #[test]
    fn zero_operator_with_source() {
        let alg = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let t = CornerOperator::new(
            Element::zero(&alg),
            Element::zero(&alg),
            Element::identity(&alg),
        )
        .unwrap();
        assert_eq!(breuer_index(&t, RANK_TOL).unwrap().value, 2.0);
        assert!((sf(&t) - 2.0).abs() < 1e-8);
    }

    #[test]
    fn unitary_has_index_zero() {
        let alg = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let u = Element::from_blocks(&alg, vec![CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)])]).unwrap();
        let t = CornerOperator::square(u).unwrap();
        assert_eq!(breuer_index(&t, RANK_TOL).unwrap().value, 0.0);
        assert!(sf(&t).abs() < 1e-8);
    }

    #[test]
    fn surjection_with_weighted_kernel() {
        let alg = TracialAlgebra::blocks(&[(2, 0.5)]).unwrap();
        let d = Element::from_blocks(&alg, vec![CMat::from_row_slice(2, 2, &[c(1.0), c(0.0), c(0.0), c(0.0)])]).unwrap();
        let p = coordinate_projection(&alg, &[1]).unwrap();
        let q = Element::identity(&alg);
        let t = CornerOperator::new(d, p, q).unwrap();
        let r = breuer_index(&t, RANK_TOL).unwrap();
        assert_eq!(r.value, 0.5);
        assert_eq!(breuer_index(&t.adjoint(), RANK_TOL).unwrap().value, -0.5);
        assert!((sf(&t) - 0.5).abs() < 1e-8);
    }

    #[test]
    fn corner_condition_is_enforced() {
        let alg = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let d = Element::identity(&alg);
        let p = coordinate_projection(&alg, &[1]).unwrap();
        assert!(CornerOperator::new(d.clone(), p.clone(), p.clone()).is_err());
        assert!(CornerOperator::new(d.scale(2.0), d.scale(2.0), d).is_err());
    }

    #[test]
    fn homotopy_flags_rank_band() {
        let alg = TracialAlgebra::blocks(&[(2, 1.0)]).unwrap();
        let p = coordinate_projection(&alg, &[1]).unwrap();
        let q = Element::identity(&alg);
        let r = verify_index_homotopy(
            |s| CornerOperator::new(Element::diagonal(&alg, &[1.0 + s, 0.0])?, p.clone(), q.clone()),
            8,
            1e-8,
        )
        .unwrap();
        assert!(r.constant && r.flagged.is_empty());
        assert_eq!(r.samples[3].1, 1.0);
        let r = verify_index_homotopy(
            |s| {
                let d = Element::from_blocks(&alg, vec![CMat::from_row_slice(2, 2, &[c(2e-8 * s), c(0.0), c(0.0), c(0.0)])])?;
                CornerOperator::new(d, p.clone(), q.clone())
            },
            4,
            1e-8,
        )
        .unwrap();
        assert!(r.constant);
        assert!(!r.flagged.is_empty());
    }
}
