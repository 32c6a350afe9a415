//! Real-valued spectral flow in finite-dimensional semifinite algebras.
//!
//! Two backends model a von Neumann algebra with a faithful trace: direct sums of
//! weighted matrix blocks, and weighted grids of sample points standing in for
//! multiplication operators (including unbounded ones, through pole markers).
//! Spectral flow is computed as the winding number of `exp(iπ(χ(D_t)+1))`,
//! by Phillips' partition formula, by counting crossings, and by the heat,
//! resolvent-power and χ-integral formulas.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod algebra;
pub mod error;
pub mod formulas;
pub mod gallery;
pub mod index;
pub mod normalizing;
pub mod path;
pub mod quad;
pub mod random;
pub mod report;
pub mod runspec;
pub mod selfcheck;
pub mod specflow;
pub mod tolerances;
pub mod winding;

pub use algebra::{Element, FunctionSpec, Spectral, TracialAlgebra, C64};
pub use error::{Error, Result};
pub use normalizing::{BoundedChi, NormalizingFunction};
pub use path::{OperatorPath, Side};
pub use quad::QuadratureConfig;
pub use report::SpectralFlowReport;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
