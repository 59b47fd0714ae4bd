//! Energy flows, populations and entanglement extracted from a state.

use crate::algebra::{eig_general, kron, C64, ComplexMatrix};
use crate::error::{Error, Result};
use crate::master::DensityMatrix;
use crate::model::{OperatorSet, SystemSpec};
use crate::tolerances;

/// How the flows of a [`FlowReport`] are scaled.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// Divided by the incoherent pump rate Γ.
    PerGamma,
    /// Divided by the coherent drive amplitude η.
    PerEta,
    /// In units of the zero-phonon decay rate.
    Raw,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::PerGamma => "per_Gamma",
            Normalization::PerEta => "per_eta",
            Normalization::Raw => "raw",
        }
    }
}

/// Steady-state transfer rates and occupations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowReport {
    /// Direct donor-to-acceptor flow `2Ω Im⟨σ_D σ_A†⟩`.
    pub j: f64,
    /// Donor-to-cavity flow `2g_D Im⟨σ_D a†⟩`.
    pub j_d: f64,
    /// Cavity-to-acceptor flow `2g_A Im⟨a σ_A†⟩`.
    pub j_a: f64,
    /// Dispersive counterpart `2Ω Re⟨σ_D σ_A†⟩`.
    pub j_r: f64,
    pub p_d: f64,
    pub p_a: f64,
    pub n: f64,
    pub normalization: Normalization,
}

impl FlowReport {
    /// Divides the four flows by `scale` and records the new normalization.
    /// Populations are left unchanged.
    pub fn normalized(self, normalization: Normalization, scale: f64) -> Self {
        Self {
            j: self.j / scale,
            j_d: self.j_d / scale,
            j_a: self.j_a / scale,
            j_r: self.j_r / scale,
            normalization,
            ..self
        }
    }

    /// Whether every entry is finite.
    pub fn is_finite(&self) -> bool {
        [self.j, self.j_d, self.j_a, self.j_r, self.p_d, self.p_a, self.n].iter().all(|v| v.is_finite())
    }
}

/// Flows and populations of a state, in units of γ.
pub fn energy_flows(rho: &DensityMatrix, spec: &SystemSpec, ops: &OperatorSet) -> Result<FlowReport> {
    let d = ops.layout.total_dim();
    if rho.layout().total_dim() != d {
        return Err(Error::DimensionMismatch { expected: d, found: rho.layout().total_dim() });
    }
    let (sd, sa, a) = (&ops.sigma_d, &ops.sigma_a, &ops.a);
    let ev = |op: ComplexMatrix| rho.expectation(&op);
    let da = ev(sd * &sa.adjoint())?;
    let dc = ev(sd * &a.adjoint())?;
    let ca = ev(a * &sa.adjoint())?;
    Ok(FlowReport {
        j: 2.0 * spec.omega * da.im,
        j_d: 2.0 * spec.g_d * dc.im,
        j_a: 2.0 * spec.g_a * ca.im,
        j_r: 2.0 * spec.omega * da.re,
        p_d: ev(&sd.adjoint() * sd)?.re,
        p_a: ev(&sa.adjoint() * sa)?.re,
        n: ev(&a.adjoint() * a)?.re,
        normalization: Normalization::Raw,
    })
}

fn sigma_y() -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    ComplexMatrix::from_fn(2, 2, |r, c| match (r, c) {
        (0, 1) => -i,
        (1, 0) => i,
        _ => C64::default(),
    })
}

/// Two-qubit concurrence of the donor-acceptor state, after tracing out every
/// other subsystem.
pub fn concurrence(rho: &DensityMatrix) -> Result<f64> {
    let dims = rho.layout().subsystem_dims();
    if dims.len() < 2 || dims[0] != 2 || dims[1] != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: dims.first().copied().unwrap_or(0) });
    }
    let pair = if dims.len() == 2 { rho.clone() } else { rho.partial_trace(&[0, 1])? };
    let p = pair.matrix();
    let yy = kron(&sigma_y(), &sigma_y());
    let flipped = &(&yy * &p.conj()) * &yy;
    let mut lambdas = Vec::with_capacity(4);
    for z in eig_general(&(p * &flipped))? {
        if z.re < -tolerances::CONCURRENCE_CLAMP {
            return Err(Error::NonPhysicalState { reason: format!("negative eigenvalue {:.3e} of rho*rho~", z.re) });
        }
        lambdas.push(z.re.max(0.0).sqrt());
    }
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).max(0.0))
}
