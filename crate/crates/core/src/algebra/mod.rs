//! Tracial algebras, their elements, and functional calculus.

mod duhamel;
mod element;
mod function;
mod linalg;
mod spectral;

use std::sync::Arc;

use nalgebra::DMatrix;

pub use duhamel::{duhamel_derivative, DuhamelResult, FourierData};
pub(crate) use element::symmetrize;
pub(crate) use linalg::singular_values;
pub use element::Element;
pub use function::FunctionSpec;
pub use spectral::{divided_difference, Spectral};

use crate::error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMat = DMatrix<C64>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Block {
    pub dim: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Backend {
    Blocks(Vec<Block>),
    Grid { points: Vec<f64>, weights: Vec<f64> },
}

/// A finite model of a von Neumann algebra with a faithful trace.
///
/// Block backend: `⊕ M_{n_k}(ℂ)` with `τ(A) = Σ c_k tr(A_k)`.
/// Grid backend: functions on points `x_i` with `τ(f) = Σ w_i f(x_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TracialAlgebra {
    backend: Backend,
}

impl TracialAlgebra {
    pub fn blocks(blocks: &[(usize, f64)]) -> Result<Arc<Self>> {
        if blocks.is_empty() {
            return Err(Error::Construction("at least one block is required".into()));
        }
        for (k, &(dim, weight)) in blocks.iter().enumerate() {
            if dim == 0 {
                return Err(Error::Construction(format!("block {k} has dimension 0")));
            }
            if !(weight > 0.0 && weight.is_finite()) {
                return Err(Error::Construction(format!("block {k} has weight {weight}, expected > 0")));
            }
        }
        Ok(Arc::new(TracialAlgebra {
            backend: Backend::Blocks(blocks.iter().map(|&(dim, weight)| Block { dim, weight }).collect()),
        }))
    }

    pub fn grid(points: &[f64], weights: &[f64]) -> Result<Arc<Self>> {
        if points.is_empty() {
            return Err(Error::Construction("grid needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::Construction(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if let Some(x) = points.iter().find(|x| !x.is_finite()) {
            return Err(Error::Construction(format!("grid point {x} is not finite")));
        }
        if let Some(w) = weights.iter().find(|w| !(**w > 0.0 && w.is_finite())) {
            return Err(Error::Construction(format!("grid weight {w}, expected > 0")));
        }
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Construction(format!("duplicate grid point {}", w[0])));
        }
        Ok(Arc::new(TracialAlgebra {
            backend: Backend::Grid {
                points: points.to_vec(),
                weights: weights.to_vec(),
            },
        }))
    }

    /// Uniform grid of `n` points on `[a, b)` carrying total weight `total`.
    pub fn uniform_grid(n: usize, a: f64, b: f64, total: f64) -> Result<Arc<Self>> {
        if n == 0 || !(b > a) {
            return Err(Error::Construction("uniform grid needs n ≥ 1 and b > a".into()));
        }
        let h = (b - a) / n as f64;
        let points: Vec<f64> = (0..n).map(|i| a + h * (i as f64 + 0.5)).collect();
        TracialAlgebra::grid(&points, &vec![total / n as f64; n])
    }

    pub fn backend(&self) -> &Backend {
        &self.backend
    }

    pub fn is_grid(&self) -> bool {
        matches!(self.backend, Backend::Grid { .. })
    }

    pub fn backend_name(&self) -> &'static str {
        if self.is_grid() {
            "grid"
        } else {
            "blocks"
        }
    }

    /// `(dimension, weight)` per block; each grid point is a 1-dimensional block.
    pub fn block_list(&self) -> Vec<(usize, f64)> {
        match &self.backend {
            Backend::Blocks(b) => b.iter().map(|b| (b.dim, b.weight)).collect(),
            Backend::Grid { weights, .. } => weights.iter().map(|&w| (1, w)).collect(),
        }
    }

    pub fn num_blocks(&self) -> usize {
        match &self.backend {
            Backend::Blocks(b) => b.len(),
            Backend::Grid { points, .. } => points.len(),
        }
    }

    pub fn total_dim(&self) -> usize {
        match &self.backend {
            Backend::Blocks(b) => b.iter().map(|b| b.dim).sum(),
            Backend::Grid { points, .. } => points.len(),
        }
    }

    /// `τ(1)`
    pub fn unit_trace(&self) -> f64 {
        self.block_list().iter().map(|&(n, c)| n as f64 * c).sum()
    }

    pub fn grid_points(&self) -> Option<&[f64]> {
        match &self.backend {
            Backend::Grid { points, .. } => Some(points),
            Backend::Blocks(_) => None,
        }
    }

    pub fn grid_weights(&self) -> Option<&[f64]> {
        match &self.backend {
            Backend::Grid { weights, .. } => Some(weights),
            Backend::Blocks(_) => None,
        }
    }
}

pub(crate) fn same_algebra(a: &Arc<TracialAlgebra>, b: &Arc<TracialAlgebra>) -> Result<()> {
    if Arc::ptr_eq(a, b) || a == b {
        Ok(())
    } else {
        Err(Error::AlgebraMismatch)
    }
}
