//! Numerical tolerances used across the crate.
//!
//! Everything that decides whether a matrix is "Hermitian enough", whether a
//! kernel is degenerate, or whether a truncation has converged reads from this
//! table, so test expectations and library behaviour cannot drift apart.

/// Entrywise bound for a matrix flagged Hermitian.
pub const HERMITIAN_FLAG: f64 = 1e-12;

/// Entrywise bound accepted on input to the Hermitian eigensolver.
pub const HERMITIAN_INPUT: f64 = 1e-10;

/// Residual bound `‖A v − λ v‖` for Hermitian eigenpairs.
pub const EIG_RESIDUAL: f64 = 1e-9;

/// Relative residual `‖A x − b‖ / ‖b‖` accepted from a linear solve.
pub const SOLVE_RESIDUAL: f64 = 1e-10;

/// Smallest accepted ratio `min |u_ii| / max |u_ii|` of LU pivots. Below this
/// the matrix is treated as rank deficient (condition estimate above 1e12).
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// Density matrix trace tolerance.
pub const TRACE: f64 = 1e-10;

/// Density matrix Hermiticity tolerance.
pub const DENSITY_HERMITIAN: f64 = 1e-10;

/// Smallest eigenvalue accepted for a physical density matrix.
pub const POSITIVITY: f64 = -1e-8;

/// Bound on `‖Tr ∘ L‖_max` for a trace-preserving Liouvillian.
pub const TRACE_PRESERVATION: f64 = 1e-10;

/// Relative scale (against the spectral radius) under which a Liouvillian
/// eigenvalue counts as a zero mode, or a positive real part as an instability.
pub const ZERO_MODE: f64 = 1e-10;

/// Relative scale under which eigenvalues are excluded from the stability margin.
pub const ZERO_EIGENVALUE: f64 = 1e-12;

/// Trace drift tolerated during time integration.
pub const EVOLVE_TRACE_DRIFT: f64 = 1e-6;

/// Eigenvalues of `ρ ρ̃` above `-CONCURRENCE_CLAMP` are clamped to zero.
pub const CONCURRENCE_CLAMP: f64 = 1e-10;

/// Unit-vector normalisation tolerance for dipole orientations.
pub const UNIT_VECTOR: f64 = 1e-12;

/// Relative change allowed between successive cavity truncations.
pub const TRUNCATION_RELATIVE: f64 = 1e-6;

/// Absolute floor of the truncation comparison for ordinary observables.
pub const TRUNCATION_FLOOR: f64 = 1e-12;

/// Absolute floor of the truncation comparison for the concurrence. The
/// concurrence takes square roots of eigenvalues that sit at machine precision
/// for nearly separable states, so it cannot be resolved below about √ε.
pub const CONCURRENCE_FLOOR: f64 = 1e-7;

/// Default cavity photon-number cutoff.
pub const DEFAULT_N_CAV: usize = 5;

/// Largest cutoff the truncation driver will try.
pub const MAX_N_CAV: usize = 16;

/// Required ratio `κ / max(g_D, g_A)` for the bad-cavity elimination.
pub const ADIABATIC_RATIO: f64 = 10.0;

/// Required ratio of `γ_ie` to every other rate in the pump elimination.
pub const PUMP_ELIMINATION_RATIO: f64 = 10.0;
