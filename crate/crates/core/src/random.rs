//! Seeded generators for algebras, elements, paths and corner operators.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::algebra::{CMat, Element, TracialAlgebra, C64};
use crate::error::Result;
use crate::index::CornerOperator;
use crate::path::OperatorPath;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

/// Haar-distributed unitary (QR of a complex Gaussian matrix with phase correction).
pub fn unitary<R: Rng>(rng: &mut R, n: usize) -> CMat {
    let qr = gaussian_matrix(rng, n, n).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        for i in 0..n {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// `U diag(eigs) U*` with Haar `U`.
pub fn hermitian_with_spectrum<R: Rng>(rng: &mut R, eigs: &[f64]) -> CMat {
    let n = eigs.len();
    let u = unitary(rng, n);
    let d = CMat::from_fn(n, n, |i, j| if i == j { C64::new(eigs[i], 0.0) } else { C64::new(0.0, 0.0) });
    let m = &u * d * u.adjoint();
    crate::algebra::symmetrize(&m)
}

/// Hermitian matrix with Gaussian entries scaled to operator norm `norm`.
pub fn hermitian<R: Rng>(rng: &mut R, n: usize, norm: f64) -> CMat {
    let g = gaussian_matrix(rng, n, n);
    let h = crate::algebra::symmetrize(&(&g + g.adjoint()));
    let s = crate::algebra::singular_values(&h)[0];
    if s > 0.0 {
        h * C64::new(norm / s, 0.0)
    } else {
        h
    }
}

/// 2–3 blocks, total dimension at most `max_dim`, weights in `[0.1, 3]`.
pub fn block_algebra<R: Rng>(rng: &mut R, max_dim: usize) -> Arc<TracialAlgebra> {
    let nb = rng.gen_range(2..=3usize);
    let per = (max_dim / nb).max(1);
    let blocks: Vec<(usize, f64)> = (0..nb)
        .map(|_| (rng.gen_range(1..=per), rng.gen_range(0.1..=3.0)))
        .collect();
    TracialAlgebra::blocks(&blocks).expect("valid blocks")
}

/// Spectrum in `±[margin, 3]`.
pub fn invertible_spectrum<R: Rng>(rng: &mut R, n: usize, margin: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            let m: f64 = rng.gen_range(margin..=3.0);
            if rng.gen_bool(0.5) {
                m
            } else {
                -m
            }
        })
        .collect()
}

pub fn invertible_element<R: Rng>(rng: &mut R, alg: &Arc<TracialAlgebra>, margin: f64) -> Element {
    let blocks = alg
        .block_list()
        .iter()
        .map(|&(n, _)| {
            let s = invertible_spectrum(rng, n, margin);
            hermitian_with_spectrum(rng, &s)
        })
        .collect();
    Element::hermitian(alg, blocks).expect("hermitian blocks")
}

pub fn hermitian_element<R: Rng>(rng: &mut R, alg: &Arc<TracialAlgebra>, norm: f64) -> Element {
    let blocks = alg.block_list().iter().map(|&(n, _)| hermitian(rng, n, norm)).collect();
    Element::hermitian(alg, blocks).expect("hermitian blocks")
}

/// Hermitian unitary with random `±1` spectrum.
pub fn involution<R: Rng>(rng: &mut R, alg: &Arc<TracialAlgebra>) -> Element {
    let blocks = alg
        .block_list()
        .iter()
        .map(|&(n, _)| {
            let s: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 }).collect();
            hermitian_with_spectrum(rng, &s)
        })
        .collect();
    Element::hermitian(alg, blocks).expect("hermitian blocks")
}

pub fn unitary_element<R: Rng>(rng: &mut R, alg: &Arc<TracialAlgebra>) -> Element {
    let blocks = alg.block_list().iter().map(|&(n, _)| unitary(rng, n)).collect();
    Element::from_blocks(alg, blocks).expect("unitary blocks")
}

/// Affine or quadratic path between endpoints with spectral margin at least `margin`.
pub fn path<R: Rng>(rng: &mut R, alg: &Arc<TracialAlgebra>, margin: f64) -> Result<OperatorPath> {
    let a = invertible_element(rng, alg, margin);
    let b = invertible_element(rng, alg, margin);
    if rng.gen_bool(0.5) {
        OperatorPath::affine(&a, &b)
    } else {
        let norm = rng.gen_range(0.5..=3.0);
        let c = hermitian_element(rng, alg, norm);
        OperatorPath::quadratic(&a, &b, &c)
    }
}

/// Corner operator in a single block of dimension `n` and weight `c`, with random
/// source and target ranks and a generic `D` of the given rank.
pub fn corner<R: Rng>(rng: &mut R, n: usize, c: f64) -> Result<CornerOperator> {
    let alg = TracialAlgebra::blocks(&[(n, c)])?;
    let rq = rng.gen_range(0..=n);
    let rp = rng.gen_range(0..=n);
    let rank = rng.gen_range(0..=rq.min(rp));
    let uq = unitary(rng, n);
    let up = unitary(rng, n);
    let bq = uq.columns(0, rq).into_owned();
    let bp = up.columns(0, rp).into_owned();
    let q = &bq * bq.adjoint();
    let p = &bp * bp.adjoint();
    let mut d = CMat::zeros(n, n);
    if rank > 0 {
        let left = &bp * unitary(rng, rp).columns(0, rank).into_owned();
        let right = &bq * unitary(rng, rq).columns(0, rank).into_owned();
        let sv = CMat::from_fn(rank, rank, |i, j| {
            if i == j {
                C64::new(rng.gen_range(0.2..=2.0), 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        });
        d = left * sv * right.adjoint();
    }
    CornerOperator::new(
        Element::from_blocks(&alg, vec![d])?,
        Element::hermitian(&alg, vec![p])?,
        Element::hermitian(&alg, vec![q])?,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut r = rng(7);
        let u = unitary(&mut r, 6);
        let e = &u * u.adjoint() - CMat::identity(6, 6);
        assert!(e.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn seeded_generators_are_deterministic() {
        let a = block_algebra(&mut rng(3), 16).block_list();
        let b = block_algebra(&mut rng(3), 16).block_list();
        assert_eq!(a, b);
        assert!(a.iter().map(|x| x.0).sum::<usize>() <= 16);
    }

    #[test]
    fn spectrum_margin() {
        let mut r = rng(11);
        let alg = block_algebra(&mut r, 12);
        let e = invertible_element(&mut r, &alg, 0.2);
        assert!(e.eigh().unwrap().margin() >= 0.2 - 1e-10);
    }

    #[test]
    fn corner_invariants() {
        let mut r = rng(5);
        for _ in 0..10 {
            let t = corner(&mut r, 5, 0.7).unwrap();
            let idx = crate::index::breuer_index(&t, 1e-8).unwrap();
            let rq = t.source().trace().unwrap().re;
            let rp = t.target().trace().unwrap().re;
            assert!((idx.value - (rq - rp)).abs() < 1e-12);
        }
    }
}
