//! Dense Hermitian eigendecomposition and singular values.

use faer::complex_native::c64;
use faer::Mat;

use super::{CMat, C64};

fn to_faer(m: &CMat) -> Mat<c64> {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| {
        let z = m[(i, j)];
        c64::new(z.re, z.im)
    })
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors (columns).
pub(crate) fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let e = to_faer(m).selfadjoint_eigendecomposition(faer::Side::Lower);
    let s = e.s().column_vector();
    let u = e.u();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| s.read(i).re.total_cmp(&s.read(j).re));
    let vals = order.iter().map(|&i| s.read(i).re).collect();
    let vecs = CMat::from_fn(n, n, |r, c| {
        let z = u.read(r, order[c]);
        C64::new(z.re, z.im)
    });
    (vals, vecs)
}

/// Singular values in decreasing order.
pub(crate) fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s = to_faer(m).singular_values();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_spectrum_is_reconstructed() {
        let n = 5;
        let q = CMat::from_fn(n, n, |i, j| C64::new(((i * 7 + j * 3) % 5) as f64 - 2.0, ((i + 2 * j) % 3) as f64 - 1.0));
        let u = q.qr().q();
        let d = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(-1.0, 0.0),
        ]));
        let h = &u * d * u.adjoint();
        let (vals, vecs) = eigh(&h);
        assert!(vals.windows(2).all(|w| w[0] <= w[1]));
        let dv = CMat::from_diagonal(&nalgebra::DVector::from_iterator(n, vals.iter().map(|&l| C64::new(l, 0.0))));
        let rec = &vecs * dv * vecs.adjoint() - &h;
        assert!(rec.norm() < 1e-13);
        let sv = singular_values(&h);
        assert!(sv.iter().all(|s| (s - 1.0).abs() < 1e-13));
    }
}
