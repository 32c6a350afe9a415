use std::sync::Arc;


use super::element::{symmetrize, Data};
use super::{Backend, CMat, Element, FunctionSpec, TracialAlgebra, C64};
use crate::error::{Error, Result};
use crate::tolerances::DEGENERATE_GAP;

#[derive(Debug, Clone)]
enum SpecData {
    Blocks(Vec<(Vec<f64>, CMat)>),
    Grid(Vec<f64>),
}

/// Eigendecomposition of a Hermitian element, eigenvalues ascending per block.
#[derive(Debug, Clone)]
pub struct Spectral {
    alg: Arc<TracialAlgebra>,
    data: SpecData,
}

/// `g[λ, μ]`, switching to `g′` when the gap is below the degeneracy threshold.
pub fn divided_difference(g: &FunctionSpec, l: f64, m: f64) -> Result<C64> {
    if (l - m).abs() < DEGENERATE_GAP {
        g.derivative(0.5 * (l + m))
    } else {
        Ok((g.eval(l)? - g.eval(m)?) / (l - m))
    }
}

impl Spectral {
    pub(crate) fn new(e: &Element) -> Spectral {
        let data = match &e.data {
            Data::Blocks(blocks) => SpecData::Blocks(
                blocks
                    .iter()
                    .map(super::linalg::eigh)
                    .collect(),
            ),
            Data::Grid(v) => SpecData::Grid(v.iter().map(|z| z.re).collect()),
        };
        Spectral {
            alg: e.algebra().clone(),
            data,
        }
    }

    pub fn algebra(&self) -> &Arc<TracialAlgebra> {
        &self.alg
    }

    /// Eigenvalues (grid values, possibly infinite) with their trace weights.
    pub fn weighted_eigenvalues(&self) -> Vec<(f64, f64)> {
        let weights = self.alg.block_list();
        match &self.data {
            SpecData::Blocks(b) => b
                .iter()
                .zip(&weights)
                .flat_map(|((vals, _), &(_, c))| vals.iter().map(move |&l| (l, c)))
                .collect(),
            SpecData::Grid(v) => v.iter().zip(&weights).map(|(&l, &(_, w))| (l, w)).collect(),
        }
    }

    /// Eigenvalues of each block (grid: one value per point).
    pub fn block_eigenvalues(&self) -> Vec<Vec<f64>> {
        match &self.data {
            SpecData::Blocks(b) => b.iter().map(|(v, _)| v.clone()).collect(),
            SpecData::Grid(v) => v.iter().map(|&l| vec![l]).collect(),
        }
    }

    /// Eigenvector matrices per block (`None` for grids).
    pub fn eigenvectors(&self) -> Option<Vec<&CMat>> {
        match &self.data {
            SpecData::Blocks(b) => Some(b.iter().map(|(_, v)| v).collect()),
            SpecData::Grid(_) => None,
        }
    }

    /// `min |λ|`, the distance of the spectrum from 0.
    pub fn margin(&self) -> f64 {
        self.weighted_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &(l, _)| m.min(l.abs()))
    }

    /// Smallest nonzero `|λ|` above `floor`.
    pub fn margin_above(&self, floor: f64) -> f64 {
        self.weighted_eigenvalues()
            .iter()
            .filter(|(l, _)| l.abs() > floor)
            .fold(f64::INFINITY, |m, &(l, _)| m.min(l.abs()))
    }

    /// `Σ w f(λ)`, i.e. `τ(f(A))` for real `f`.
    pub fn trace_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weighted_eigenvalues().iter().map(|&(l, w)| w * f(l)).sum()
    }

    /// `f(A)`
    pub fn apply(&self, f: &FunctionSpec) -> Result<Element> {
        match &self.data {
            SpecData::Blocks(b) => {
                let mut out = Vec::with_capacity(b.len());
                for (vals, vecs) in b {
                    let fv = vals.iter().map(|&l| f.eval(l)).collect::<Result<Vec<_>>>()?;
                    let mut scaled = vecs.clone();
                    for (j, v) in fv.iter().enumerate() {
                        for i in 0..scaled.nrows() {
                            scaled[(i, j)] *= v;
                        }
                    }
                    let m = scaled * vecs.adjoint();
                    out.push(if f.is_real() { symmetrize(&m) } else { m });
                }
                Ok(Element::from_parts(self.alg.clone(), Data::Blocks(out), f.is_real()))
            }
            SpecData::Grid(v) => {
                let out = v.iter().map(|&l| f.eval(l)).collect::<Result<Vec<_>>>()?;
                let hermitian = out.iter().all(|z| z.im == 0.0);
                Ok(Element::from_parts(self.alg.clone(), Data::Grid(out), hermitian))
            }
        }
    }

    /// Derivative of `t ↦ g(A_t)` in the direction `dot`: in the eigenbasis of `A`,
    /// entries `g[λ_i, λ_j] · dot_ij`. On grids `g′(a)·ȧ`, with 0 at pole markers.
    pub fn derivative(&self, g: &FunctionSpec, dot: &Element) -> Result<Element> {
        super::same_algebra(&self.alg, dot.algebra())?;
        let hermitian = g.is_real() && dot.is_hermitian();
        match (&self.data, &dot.data) {
            (SpecData::Blocks(b), Data::Blocks(d)) => {
                let mut out = Vec::with_capacity(b.len());
                for ((vals, vecs), dm) in b.iter().zip(d) {
                    let n = vals.len();
                    let mut m = vecs.adjoint() * dm * vecs;
                    for i in 0..n {
                        for j in 0..n {
                            m[(i, j)] *= divided_difference(g, vals[i], vals[j])?;
                        }
                    }
                    let r = vecs * m * vecs.adjoint();
                    out.push(if hermitian { symmetrize(&r) } else { r });
                }
                Ok(Element::from_parts(self.alg.clone(), Data::Blocks(out), hermitian))
            }
            (SpecData::Grid(v), Data::Grid(d)) => {
                let mut out = Vec::with_capacity(v.len());
                for (&l, &dl) in v.iter().zip(d) {
                    out.push(if l.is_infinite() {
                        C64::new(0.0, 0.0)
                    } else {
                        g.derivative(l)? * dl
                    });
                }
                Ok(Element::from_parts(self.alg.clone(), Data::Grid(out), hermitian))
            }
            _ => Err(Error::AlgebraMismatch),
        }
    }

    /// `τ(dot · f(A))` computed in the eigenbasis; grid points at pole markers contribute 0.
    pub fn trace_with(&self, dot: &Element, f: impl Fn(f64) -> f64) -> Result<C64> {
        super::same_algebra(&self.alg, dot.algebra())?;
        let weights = self.alg.block_list();
        let mut acc = C64::new(0.0, 0.0);
        match (&self.data, &dot.data) {
            (SpecData::Blocks(b), Data::Blocks(d)) => {
                for (((vals, vecs), dm), &(_, c)) in b.iter().zip(d).zip(&weights) {
                    let m = vecs.adjoint() * dm * vecs;
                    let mut s = C64::new(0.0, 0.0);
                    for (i, &l) in vals.iter().enumerate() {
                        s += m[(i, i)] * f(l);
                    }
                    acc += s * c;
                }
            }
            (SpecData::Grid(v), Data::Grid(d)) => {
                for ((&l, dl), &(_, w)) in v.iter().zip(d).zip(&weights) {
                    if l.is_finite() {
                        acc += dl * f(l) * w;
                    }
                }
            }
            _ => return Err(Error::AlgebraMismatch),
        }
        Ok(acc)
    }

    /// Orthonormal bases of the ranges of `1_{≥0}(A)` per block
    /// (grid: a 1×1 or 1×0 matrix per point; `+∞` counts as nonnegative).
    pub fn nonneg_bases(&self) -> Vec<CMat> {
        match &self.data {
            SpecData::Blocks(b) => b
                .iter()
                .map(|(vals, vecs)| {
                    let start = vals.iter().position(|&l| l >= 0.0).unwrap_or(vals.len());
                    vecs.columns(start, vals.len() - start).into_owned()
                })
                .collect(),
            SpecData::Grid(v) => v
                .iter()
                .map(|&l| {
                    if l >= 0.0 {
                        CMat::from_element(1, 1, C64::new(1.0, 0.0))
                    } else {
                        CMat::zeros(1, 0)
                    }
                })
                .collect(),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.alg.backend(), Backend::Grid { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn alg() -> Arc<TracialAlgebra> {
        TracialAlgebra::blocks(&[(2, 1.0)]).unwrap()
    }

    #[test]
    fn square_of_diagonal() {
        let a = alg();
        let d = Element::diagonal(&a, &[1.0, -2.0]).unwrap();
        let sq = d.apply(&FunctionSpec::polynomial(&[0.0, 0.0, 1.0])).unwrap();
        let want = Element::diagonal(&a, &[1.0, 4.0]).unwrap();
        assert!(sq.max_entry_distance(&want).unwrap() < 1e-14);
        assert!(d.apply(&FunctionSpec::identity()).unwrap().max_entry_distance(&d).unwrap() < 1e-14);
    }

    #[test]
    fn derivative_of_identity_and_square() {
        let a = alg();
        let f = Element::diagonal(&a, &[0.3, -0.5]).unwrap();
        let m = CMat::from_row_slice(
            2,
            2,
            &[C64::new(1.0, 0.0), C64::new(0.5, 0.25), C64::new(0.5, -0.25), C64::new(-2.0, 0.0)],
        );
        let dot = Element::hermitian(&a, vec![m.clone()]).unwrap();
        let id = Element::derivative_of_function(&FunctionSpec::identity(), &f, &dot).unwrap();
        assert!(id.max_entry_distance(&dot).unwrap() < 1e-14);
        let sq = Element::derivative_of_function(&FunctionSpec::polynomial(&[0.0, 0.0, 1.0]), &f, &dot).unwrap();
        let l = [0.3, -0.5];
        let b = &sq.blocks().unwrap()[0];
        for i in 0..2 {
            for j in 0..2 {
                assert!((b[(i, j)] - m[(i, j)] * (l[i] + l[j])).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn margin_and_bases() {
        let a = TracialAlgebra::blocks(&[(3, 1.0)]).unwrap();
        let d = Element::diagonal(&a, &[-1.0, 0.25, 2.0]).unwrap();
        let s = d.eigh().unwrap();
        assert_eq!(s.margin(), 0.25);
        assert_eq!(s.nonneg_bases()[0].ncols(), 2);
    }
}
