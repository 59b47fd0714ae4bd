//! Error types shared by every module.

use thiserror::Error;

/// Failures raised by the numerical and physical layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A matrix expected to be Hermitian deviates from its adjoint.
    #[error("matrix is not Hermitian: max |A - A^H| = {deviation:.3e}")]
    NonHermitian { deviation: f64 },

    /// An iterative eigensolver did not converge.
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,

    /// A linear system is rank deficient or too badly conditioned to trust.
    #[error("matrix is singular: pivot ratio {pivot_ratio:.3e}")]
    Singular { pivot_ratio: f64 },

    /// Operand shapes are incompatible.
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// The dipole shift diverges at zero separation.
    #[error("dipole shift is undefined at zero separation")]
    ZeroSeparation,

    /// The mutual decay rate exceeds what a positive dissipator allows.
    #[error("mutual decay {gamma_bar} exceeds the bound {bound}")]
    UnphysicalMutualDecay { gamma_bar: f64, bound: f64 },

    /// The Liouvillian kernel has dimension larger than one.
    #[error("steady state is not unique: pivot ratio {pivot_ratio:.3e}")]
    NonUniqueSteadyState { pivot_ratio: f64 },

    /// Some mode grows in time, so no steady state exists.
    #[error("dynamics is unstable: max Re(lambda) = {max_real:.3e}")]
    Unstable { max_real: f64 },

    /// Time integration lost trace or Hermiticity.
    #[error("integration step is unstable: {reason}")]
    StepUnstable { reason: String },

    /// The requested operation does not support this pump mode.
    #[error("pump mode {mode} is not supported here")]
    UnsupportedPump { mode: &'static str },

    /// A closed-form expression sits on its pole.
    #[error("expression is singular at this parameter point")]
    SingularResonance,

    /// The optimal detuning formula needs a nonzero donor-acceptor detuning.
    #[error("optimal detuning requires a nonzero donor-acceptor detuning")]
    ZeroDetuning,

    /// A density matrix violates trace, Hermiticity or positivity.
    #[error("state is not physical: {reason}")]
    NonPhysicalState { reason: String },

    /// A parameter set fails validation.
    #[error("invalid parameters: {reason}")]
    InvalidSpec { reason: String },

    /// Observables kept changing up to the largest allowed cavity cutoff.
    #[error("cavity truncation did not converge by n_cav = {n_cav}: relative change {change:.3e}")]
    TruncationNotConverged { n_cav: usize, change: f64 },
}

impl Error {
    /// Short stable identifier of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonHermitian { .. } => "non_hermitian",
            Error::NoConvergence => "no_convergence",
            Error::Singular { .. } => "singular",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::ZeroSeparation => "zero_separation",
            Error::UnphysicalMutualDecay { .. } => "unphysical_mutual_decay",
            Error::NonUniqueSteadyState { .. } => "non_unique_steady_state",
            Error::Unstable { .. } => "unstable",
            Error::StepUnstable { .. } => "step_unstable",
            Error::UnsupportedPump { .. } => "unsupported_pump",
            Error::SingularResonance => "singular_resonance",
            Error::ZeroDetuning => "zero_detuning",
            Error::NonPhysicalState { .. } => "non_physical_state",
            Error::InvalidSpec { .. } => "invalid_spec",
            Error::TruncationNotConverged { .. } => "truncation_not_converged",
        }
    }
}

/// Convenience alias.
pub type Result<T> = std::result::Result<T, Error>;
