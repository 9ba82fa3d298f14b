//! Numerical tolerances shared across the crate.
//!
//! Predicates compare a residual against `tol * max(1, scale)`, where the scale
//! is the norm of the quantity being tested.

/// Default absolute tolerance after scaling.
pub const DEFAULT: f64 = 1e-9;

/// Eigenvalues closer than this are treated as one eigenspace.
pub const CLUSTER: f64 = 1e-10;

/// Coherence of threads across connecting maps.
pub const COHERENCE: f64 = 1e-8;

/// Pivot threshold of the elimination-based nullspace oracle.
pub const PIVOT: f64 = 1e-10;

/// Jacobi stops once the off-diagonal Frobenius norm drops below this.
pub const JACOBI_OFF_DIAGONAL: f64 = 1e-12;

/// Hard cap on Jacobi sweeps.
pub const JACOBI_MAX_SWEEPS: usize = 100;

/// Whether `residual <= tol * max(1, scale)`.
#[inline]
pub fn within(residual: f64, scale: f64, tol: f64) -> bool {
    residual <= tol * scale.max(1.0)
}
