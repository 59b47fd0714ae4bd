//! End-to-end steady-state solves of a [`SystemSpec`], including the search
//! for a converged cavity cutoff.

use crate::error::{Error, Result};
use crate::master::{liouvillian, steady_state, DensityMatrix, Liouvillian};
use crate::model::{build_dissipators, build_hamiltonian, build_operators, OperatorSet, PumpMode, SystemSpec};
use crate::observables::{concurrence, energy_flows, FlowReport, Normalization};
use crate::tolerances;

/// Generator and operators of a specification.
pub fn build_liouvillian(spec: &SystemSpec) -> Result<(Liouvillian, OperatorSet)> {
    spec.validate()?;
    let ops = build_operators(spec);
    let h = build_hamiltonian(spec, &ops);
    let diss = build_dissipators(spec, &ops)?;
    Ok((liouvillian(&h, &diss, &ops.layout)?, ops))
}

/// Steady state of one specification at its own cutoff.
#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub rho: DensityMatrix,
    pub ops: OperatorSet,
    pub observables: Observables,
}

/// Raw flows, populations and donor-acceptor concurrence.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Observables {
    pub flows: FlowReport,
    pub concurrence: f64,
}

impl Observables {
    /// Names accepted by [`Observables::get`].
    pub const NAMES: [&'static str; 8] = ["J", "J_D", "J_A", "J_r", "p_D", "p_A", "n", "concurrence"];

    /// Looks up one observable by name.
    pub fn get(&self, name: &str) -> Option<f64> {
        let f = &self.flows;
        Some(match name {
            "J" => f.j,
            "J_D" => f.j_d,
            "J_A" => f.j_a,
            "J_r" => f.j_r,
            "p_D" => f.p_d,
            "p_A" => f.p_a,
            "n" => f.n,
            "concurrence" => self.concurrence,
            _ => return None,
        })
    }

    fn floor(name: &str) -> f64 {
        if name == "concurrence" {
            tolerances::CONCURRENCE_FLOOR
        } else {
            tolerances::TRUNCATION_FLOOR
        }
    }

    /// Largest change between two solutions, relative to `reference`.
    /// Each observable uses an absolute floor below which changes count as
    /// converged.
    pub fn relative_change(&self, reference: &Observables) -> f64 {
        Self::NAMES
            .iter()
            .map(|name| {
                let (a, b) = (self.get(name).unwrap(), reference.get(name).unwrap());
                let scale = b.abs().max(Self::floor(name) / tolerances::TRUNCATION_RELATIVE);
                (a - b).abs() / scale
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the master equation at `spec.n_cav`.
pub fn solve_master(spec: &SystemSpec) -> Result<MasterSolution> {
    let (l, ops) = build_liouvillian(spec)?;
    let rho = steady_state(&l)?;
    let flows = energy_flows(&rho, spec, &ops)?;
    let c = concurrence(&rho)?;
    Ok(MasterSolution { rho, ops, observables: Observables { flows, concurrence: c } })
}

/// Observables at a cutoff that passed the doubling test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Converged {
    pub observables: Observables,
    /// Cutoff of the reported solution.
    pub ncav_used: usize,
    /// Relative change from the previous cutoff.
    pub change: f64,
}

/// Whether the cavity is decoupled from both emitters. Its state is then
/// exactly the vacuum and the cutoff does not affect any observable.
pub fn cavity_decoupled(spec: &SystemSpec) -> bool {
    spec.g_d == 0.0 && spec.g_a == 0.0
}

/// Solves at `spec.n_cav`, then doubles the cutoff until every observable
/// changes by less than the relative tolerance. The cutoff is capped at
/// `max(MAX_N_CAV, 2·spec.n_cav)`.
///
/// A decoupled cavity is solved once with a single-photon cutoff and reports
/// a change of zero.
pub fn solve_converged(spec: &SystemSpec) -> Result<Converged> {
    if cavity_decoupled(spec) {
        let s = solve_master(&SystemSpec { n_cav: 1, ..spec.clone() })?;
        return Ok(Converged { observables: s.observables, ncav_used: 1, change: 0.0 });
    }
    let cap = tolerances::MAX_N_CAV.max(2 * spec.n_cav);
    let mut n = spec.n_cav;
    let mut prev = solve_master(spec)?.observables;
    loop {
        let next = (2 * n).min(cap);
        if next == n {
            return Err(Error::TruncationNotConverged { n_cav: n, change: f64::NAN });
        }
        let cur = solve_master(&SystemSpec { n_cav: next, ..spec.clone() })?.observables;
        let change = cur.relative_change(&prev);
        if change < tolerances::TRUNCATION_RELATIVE {
            return Ok(Converged { observables: cur, ncav_used: next, change });
        }
        if next == cap {
            return Err(Error::TruncationNotConverged { n_cav: next, change });
        }
        prev = cur;
        n = next;
    }
}

/// The natural normalization of a specification's flows and its scale:
/// per Γ for an incoherent pump, per η for a coherent drive.
pub fn default_normalization(spec: &SystemSpec) -> (Normalization, f64) {
    match spec.pump.mode {
        PumpMode::Incoherent => (Normalization::PerGamma, spec.pump.gamma_pump),
        PumpMode::Coherent => (Normalization::PerEta, spec.pump.eta),
        PumpMode::None => (Normalization::Raw, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PumpSpec;
    use approx::assert_abs_diff_eq;

    #[test]
    fn decoupled_cavity_uses_minimal_cutoff() {
        let spec = SystemSpec { omega: 2.0, delta_da: 1.0, ..SystemSpec::default() };
        let c = solve_converged(&spec).unwrap();
        assert_eq!(c.ncav_used, 1);
        let full = solve_master(&spec).unwrap().observables;
        assert!(c.observables.relative_change(&full) < 1e-9);
    }

    #[test]
    fn weak_pump_converges_at_first_doubling() {
        let spec = SystemSpec { g_d: 2.0, g_a: 3.0, kappa: 5.0, delta_da: 4.0, ..SystemSpec::default() };
        let c = solve_converged(&spec).unwrap();
        assert_eq!(c.ncav_used, 10);
        assert!(c.change < tolerances::TRUNCATION_RELATIVE);
        let f = c.observables.flows;
        assert_abs_diff_eq!(spec.kappa * f.n, f.j_d - f.j_a, epsilon = 1e-12);
    }

    #[test]
    fn bright_cavity_needs_more_photons_than_the_cap() {
        let spec = SystemSpec {
            g_d: 5.0,
            kappa: 0.05,
            pump: PumpSpec::coherent(3.0, 0.0),
            n_cav: 2,
            ..SystemSpec::default()
        };
        assert!(matches!(solve_converged(&spec), Err(Error::TruncationNotConverged { .. })));
    }

    #[test]
    fn change_respects_absolute_floors() {
        let base = solve_master(&SystemSpec { n_cav: 1, ..SystemSpec::default() }).unwrap().observables;
        let mut nudged = base;
        nudged.concurrence += 0.5 * tolerances::CONCURRENCE_FLOOR;
        assert!(nudged.relative_change(&base) < tolerances::TRUNCATION_RELATIVE);
        nudged.concurrence += 2.0 * tolerances::CONCURRENCE_FLOOR;
        assert!(nudged.relative_change(&base) > tolerances::TRUNCATION_RELATIVE);
    }

    #[test]
    fn normalization_follows_the_pump() {
        assert_eq!(default_normalization(&SystemSpec::default()), (Normalization::PerGamma, 1e-3));
        let driven = SystemSpec { pump: PumpSpec::coherent(0.1, 0.0), ..SystemSpec::default() };
        assert_eq!(default_normalization(&driven), (Normalization::PerEta, 0.1));
    }
}
