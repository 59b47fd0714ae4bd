//! The donor-acceptor-cavity model: parameters, operators, Hamiltonian and
//! dissipators.
//!
//! The composite space is ordered donor ⊗ acceptor ⊗ cavity. Each emitter has
//! ground state at local index 0 and excited state at index 1; the cavity
//! carries Fock states `0..=n_cav`. All rates and energies are in units of the
//! zero-phonon decay rate γ.

use crate::algebra::{kron, re, ComplexMatrix, HilbertLayout, C64};
use crate::error::{Error, Result};
use crate::geometry::{dipole_shift, mutual_decay, EmitterRates, GeometrySpec};
use crate::tolerances;

/// How the donor is excited.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PumpMode {
    /// Incoherent pump on the donor at rate Γ with a matching drain on the acceptor.
    Incoherent,
    /// Monochromatic drive on the donor, amplitude η at laser detuning ω_L.
    Coherent,
    /// No excitation.
    None,
}

impl PumpMode {
    /// Lower-case name used in configuration files and messages.
    pub fn name(self) -> &'static str {
        match self {
            PumpMode::Incoherent => "incoherent",
            PumpMode::Coherent => "coherent",
            PumpMode::None => "none",
        }
    }
}

/// Pump parameters. Fields irrelevant to the active mode are ignored.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PumpSpec {
    pub mode: PumpMode,
    /// Incoherent pump and drain rate Γ.
    pub gamma_pump: f64,
    /// Coherent drive amplitude η.
    pub eta: f64,
    /// Laser detuning from the acceptor ω_L.
    pub omega_l: f64,
}

impl PumpSpec {
    /// Incoherent pump at rate `gamma_pump`.
    pub fn incoherent(gamma_pump: f64) -> Self {
        Self { mode: PumpMode::Incoherent, gamma_pump, eta: 0.0, omega_l: 0.0 }
    }

    /// Coherent drive of amplitude `eta` at laser detuning `omega_l`.
    pub fn coherent(eta: f64, omega_l: f64) -> Self {
        Self { mode: PumpMode::Coherent, gamma_pump: 0.0, eta, omega_l }
    }

    /// No pump.
    pub fn none() -> Self {
        Self { mode: PumpMode::None, gamma_pump: 0.0, eta: 0.0, omega_l: 0.0 }
    }
}

/// Complete parameter set of one simulation run.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemSpec {
    /// Donor-acceptor detuning Δ = ω_D − ω_A.
    pub delta_da: f64,
    /// Cavity-acceptor detuning δ = ω − ω_A.
    pub delta_c: f64,
    /// Dipole-dipole exchange shift Ω.
    pub omega: f64,
    /// Mutual decay rate γ̄.
    pub gamma_bar: f64,
    pub rates: EmitterRates,
    /// Donor-cavity coupling.
    pub g_d: f64,
    /// Acceptor-cavity coupling.
    pub g_a: f64,
    /// Cavity field decay rate κ.
    pub kappa: f64,
    pub pump: PumpSpec,
    /// Photon-number cutoff; the cavity space has dimension `n_cav + 1`.
    pub n_cav: usize,
}

impl Default for SystemSpec {
    fn default() -> Self {
        Self {
            delta_da: 0.0,
            delta_c: 0.0,
            omega: 0.0,
            gamma_bar: 0.0,
            rates: EmitterRates::default(),
            g_d: 0.0,
            g_a: 0.0,
            kappa: 1.0,
            pump: PumpSpec::incoherent(1e-3),
            n_cav: tolerances::DEFAULT_N_CAV,
        }
    }
}

impl SystemSpec {
    /// Sets Ω and γ̄ from a dipole geometry and the current emitter rates.
    pub fn with_geometry(mut self, geom: &GeometrySpec) -> Result<Self> {
        self.omega = dipole_shift(geom, &self.rates)?;
        self.gamma_bar = mutual_decay(geom, &self.rates);
        Ok(self)
    }

    /// Hilbert-space layout implied by the cavity cutoff.
    pub fn layout(&self) -> HilbertLayout {
        HilbertLayout::donor_acceptor_cavity(self.n_cav)
    }

    /// Largest admissible |γ̄|.
    pub fn mutual_decay_bound(&self) -> f64 {
        (self.rates.gamma_d * self.rates.gamma_a).sqrt()
    }

    /// Checks every documented invariant.
    pub fn validate(&self) -> Result<()> {
        self.rates.validate()?;
        let finite = [
            ("Delta", self.delta_da),
            ("delta", self.delta_c),
            ("Omega", self.omega),
            ("gamma_bar", self.gamma_bar),
            ("g_D", self.g_d),
            ("g_A", self.g_a),
            ("kappa", self.kappa),
            ("Gamma", self.pump.gamma_pump),
            ("eta", self.pump.eta),
            ("omega_L", self.pump.omega_l),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(Error::InvalidSpec { reason: format!("{name} must be finite, got {v}") });
            }
        }
        if self.n_cav < 1 {
            return Err(Error::InvalidSpec { reason: "n_cav must be at least 1".into() });
        }
        if self.kappa < 0.0 {
            return Err(Error::InvalidSpec { reason: format!("kappa must be non-negative, got {}", self.kappa) });
        }
        if self.pump.gamma_pump < 0.0 {
            return Err(Error::InvalidSpec { reason: format!("Gamma must be non-negative, got {}", self.pump.gamma_pump) });
        }
        let bound = self.mutual_decay_bound();
        if self.gamma_bar.abs() > bound * (1.0 + 1e-12) {
            return Err(Error::UnphysicalMutualDecay { gamma_bar: self.gamma_bar, bound });
        }
        Ok(())
    }
}

/// Lowering and annihilation operators on the composite space.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub sigma_d: ComplexMatrix,
    pub sigma_a: ComplexMatrix,
    pub a: ComplexMatrix,
    pub layout: HilbertLayout,
}

impl OperatorSet {
    /// Total excitation number `σ_D†σ_D + σ_A†σ_A + a†a`.
    pub fn excitation_number(&self) -> ComplexMatrix {
        let nd = &self.sigma_d.adjoint() * &self.sigma_d;
        let na = &self.sigma_a.adjoint() * &self.sigma_a;
        let nc = &self.a.adjoint() * &self.a;
        &(&nd + &na) + &nc
    }
}

/// Two-level lowering operator `|g⟩⟨e|`.
pub fn qubit_lowering() -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[0.0, 1.0], &[0.0, 0.0]])
}

/// Truncated annihilation operator on `dim` Fock states.
pub fn annihilation(dim: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { re((j as f64).sqrt()) } else { C64::default() })
}

/// Embeds the three local operators into donor ⊗ acceptor ⊗ cavity.
pub fn build_operators(spec: &SystemSpec) -> OperatorSet {
    let layout = spec.layout();
    let i2 = ComplexMatrix::identity(2);
    let ic = ComplexMatrix::identity(spec.n_cav + 1);
    let s = qubit_lowering();
    OperatorSet {
        sigma_d: kron(&kron(&s, &i2), &ic),
        sigma_a: kron(&kron(&i2, &s), &ic),
        a: kron(&kron(&i2, &i2), &annihilation(spec.n_cav + 1)),
        layout,
    }
}

/// System Hamiltonian.
///
/// With an incoherent pump (or none) the frame rotates at the acceptor
/// frequency. With a coherent drive the frame rotates at the laser frequency,
/// which shifts every bare energy by −ω_L and makes the drive term static.
pub fn build_hamiltonian(spec: &SystemSpec, ops: &OperatorSet) -> ComplexMatrix {
    let sd = &ops.sigma_d;
    let sa = &ops.sigma_a;
    let a = &ops.a;
    let (sdd, sad, ad) = (sd.adjoint(), sa.adjoint(), a.adjoint());
    let nd = &sdd * sd;
    let na = &sad * sa;
    let nc = &ad * a;

    let (e_d, e_a, e_c) = match spec.pump.mode {
        PumpMode::Coherent => {
            let w = spec.pump.omega_l;
            (spec.delta_da - w, -w, spec.delta_c - w)
        }
        PumpMode::Incoherent | PumpMode::None => (spec.delta_da, 0.0, spec.delta_c),
    };

    let mut h = nd.scale(re(e_d));
    h = &h + &na.scale(re(e_a));
    h = &h + &nc.scale(re(e_c));
    h = &h + &(&(&sdd * sa) + &(&sad * sd)).scale(re(spec.omega));
    h = &h + &(&(&sdd * a) + &(&ad * sd)).scale(re(spec.g_d));
    h = &h + &(&(&sad * a) + &(&ad * sa)).scale(re(spec.g_a));
    if spec.pump.mode == PumpMode::Coherent {
        h = &h + &(sd + &sdd).scale(re(spec.pump.eta));
    }
    h
}

/// One Lindblad channel `rate · D[op]`.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub label: &'static str,
    pub rate: f64,
    pub op: ComplexMatrix,
}

/// The cross-emitter dissipator
/// `γ̄ (σ_D ρ σ_A† + σ_A ρ σ_D† − ½{σ_A†σ_D + σ_D†σ_A, ρ})`.
#[derive(Clone, Debug)]
pub struct CollectiveDissipator {
    pub gamma_bar: f64,
    pub sigma_d: ComplexMatrix,
    pub sigma_a: ComplexMatrix,
}

/// All dissipative channels of a run.
#[derive(Clone, Debug, Default)]
pub struct DissipatorList {
    pub entries: Vec<Dissipator>,
    pub collective: Option<CollectiveDissipator>,
}

/// `σ^z = σ†σ − σσ†`.
pub fn pauli_z(sigma: &ComplexMatrix) -> ComplexMatrix {
    &(&sigma.adjoint() * sigma) - &(sigma * &sigma.adjoint())
}

/// Dissipators of the model. Channels with zero rate are omitted.
///
/// Dephasing uses the collapse operator σ^z at rate γ_φ/2, which damps each
/// emitter coherence at rate γ_φ and the donor-acceptor coherence at 2γ_φ.
pub fn build_dissipators(spec: &SystemSpec, ops: &OperatorSet) -> Result<DissipatorList> {
    let bound = spec.mutual_decay_bound();
    if spec.gamma_bar.abs() > bound * (1.0 + 1e-12) {
        return Err(Error::UnphysicalMutualDecay { gamma_bar: spec.gamma_bar, bound });
    }
    let r = &spec.rates;
    let mut candidates = vec![
        Dissipator { label: "donor decay", rate: r.gamma_tot_d(), op: ops.sigma_d.clone() },
        Dissipator { label: "acceptor decay", rate: r.gamma_tot_a(), op: ops.sigma_a.clone() },
        Dissipator { label: "donor dephasing", rate: r.gamma_phi / 2.0, op: pauli_z(&ops.sigma_d) },
        Dissipator { label: "acceptor dephasing", rate: r.gamma_phi / 2.0, op: pauli_z(&ops.sigma_a) },
        Dissipator { label: "cavity decay", rate: spec.kappa, op: ops.a.clone() },
    ];
    if spec.pump.mode == PumpMode::Incoherent {
        candidates.push(Dissipator { label: "donor pump", rate: spec.pump.gamma_pump, op: ops.sigma_d.adjoint() });
        candidates.push(Dissipator { label: "acceptor drain", rate: spec.pump.gamma_pump, op: ops.sigma_a.clone() });
    }
    let entries = candidates.into_iter().filter(|d| d.rate != 0.0).collect();
    let collective = (spec.gamma_bar != 0.0).then(|| CollectiveDissipator {
        gamma_bar: spec.gamma_bar,
        sigma_d: ops.sigma_d.clone(),
        sigma_a: ops.sigma_a.clone(),
    });
    Ok(DissipatorList { entries, collective })
}
