//! Numerical thresholds shared across the crate.

/// Relative Hermiticity tolerance: inputs within it are symmetrized, others rejected.
pub const HERMITIAN_REL: f64 = 1e-12;
/// Eigenvalue gap below which divided differences switch to the derivative.
pub const DEGENERATE_GAP: f64 = 1e-9;
/// Singular values at or below this count as zero in rank decisions.
pub const RANK_TOL: f64 = 1e-8;
/// Smallest admissible singular value of a loop sample.
pub const INVERTIBILITY: f64 = 1e-10;
/// Tolerance for closed-loop endpoint agreement and endpoint margin checks.
pub const CLOSURE: f64 = 1e-10;
/// Step of the central finite-difference derivative fallback.
pub const FD_STEP: f64 = 1e-6;
/// Resolution of crossing-time bisection.
pub const BISECTION: f64 = 1e-10;
/// Unitarity tolerance for conjugating families.
pub const UNITARITY: f64 = 1e-12;
/// Partition size used by the analytic method unless configured otherwise.
pub const DEFAULT_PARTITION: usize = 64;
/// Default cross-check tolerance for method disagreement.
pub const CROSS_CHECK: f64 = 1e-5;
