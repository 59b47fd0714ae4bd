//! Closed-form transfer rates.
//!
//! Each expression is written out in its original, unsimplified form so that
//! the reductions between them are checked by tests rather than assumed by
//! the code.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::SystemSpec;
use crate::moments::adiabatic_cavity_rates;
use crate::polariton::optimal_cavity_detuning;
use crate::tolerances;

/// Which closed form produced a [`FlowResult`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FormulaId {
    FreeSpaceFull,
    FreeSpaceSimple,
    DistinctEmitters,
    CoherentFree,
    CavityCooperativity,
    CoherentCavity,
    IntermediateLevel,
}

impl FormulaId {
    pub const ALL: [FormulaId; 7] = [
        FormulaId::FreeSpaceFull,
        FormulaId::FreeSpaceSimple,
        FormulaId::DistinctEmitters,
        FormulaId::CoherentFree,
        FormulaId::CavityCooperativity,
        FormulaId::CoherentCavity,
        FormulaId::IntermediateLevel,
    ];

    /// Command-line name.
    pub fn name(self) -> &'static str {
        match self {
            FormulaId::FreeSpaceFull => "free-space-full",
            FormulaId::FreeSpaceSimple => "free-space-simple",
            FormulaId::DistinctEmitters => "distinct-emitters",
            FormulaId::CoherentFree => "coherent-free",
            FormulaId::CavityCooperativity => "cavity-cooperativity",
            FormulaId::CoherentCavity => "coherent-cavity",
            FormulaId::IntermediateLevel => "intermediate-level",
        }
    }

    /// Inverse of [`FormulaId::name`].
    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A closed-form flow value. A pole of the expression yields a non-finite
/// `value`, reported by [`FlowResult::is_singular`] rather than clamped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowResult {
    pub value: f64,
    pub formula: FormulaId,
}

impl FlowResult {
    fn new(value: f64, formula: FormulaId) -> Self {
        Self { value, formula }
    }

    pub fn is_singular(&self) -> bool {
        !self.value.is_finite()
    }
}

/// `J/Γ` in free space with extra decay γ′, dephasing γ_φ and mutual decay γ̄,
/// to first order in the pump.
pub fn j_free_space_full(
    delta: f64,
    omega: f64,
    gamma: f64,
    gamma_prime: f64,
    gamma_phi: f64,
    gamma_bar: f64,
) -> FlowResult {
    let gt = gamma + gamma_prime;
    let ratio = (gamma + gamma_prime + 2.0 * gamma_phi) / gt;
    let num = 2.0 * omega.powi(2) * (ratio - gamma_bar.powi(2) / gt.powi(2)) + gamma_bar * delta * omega / gt;
    let den = delta.powi(2) + 4.0 * omega.powi(2) * ratio + (gamma + gamma_prime + 2.0 * gamma_phi).powi(2)
        - gamma_bar.powi(2) * (4.0 * omega.powi(2) / gt.powi(2) + ratio);
    FlowResult::new(num / den, FormulaId::FreeSpaceFull)
}

/// `J/Γ = 2Ω² / (Δ² + 4Ω² + γ_tot²)`.
pub fn j_free_space_simple(delta: f64, omega: f64, gamma_tot: f64) -> FlowResult {
    let value = 2.0 * omega.powi(2) / (delta.powi(2) + 4.0 * omega.powi(2) + gamma_tot.powi(2));
    FlowResult::new(value, FormulaId::FreeSpaceSimple)
}

/// `J/Γ` for emitters with different decay rates.
pub fn j_distinct_emitters(delta: f64, omega: f64, gamma_d: f64, gamma_a: f64) -> FlowResult {
    let sum = gamma_a + gamma_d;
    let value = 4.0 * gamma_a * sum * omega.powi(2)
        / (gamma_a * gamma_d * (4.0 * delta.powi(2) + sum.powi(2)) + 4.0 * sum.powi(2) * omega.powi(2));
    FlowResult::new(value, FormulaId::DistinctEmitters)
}

/// Raw flow `J` for a coherently driven donor in free space.
pub fn j_coherent_free(delta: f64, omega: f64, gamma: f64, eta: f64, omega_l: f64) -> FlowResult {
    let g2 = gamma * gamma;
    let num = 16.0 * gamma * eta.powi(2) * omega.powi(2);
    let den = (g2 + 4.0 * omega_l.powi(2)) * (g2 + 4.0 * ((delta - omega_l).powi(2) + 2.0 * eta.powi(2)))
        + 8.0 * omega.powi(2) * (g2 + 4.0 * omega_l * (delta - omega_l))
        + 16.0 * omega.powi(4);
    FlowResult::new(num / den, FormulaId::CoherentFree)
}

/// `J/Γ` with cavity-modified rates, assuming equal effective emitter decay
/// `gamma_eff` and cavity-mediated mutual decay `gamma_ad_eff`.
pub fn j_cavity_cooperativity(delta: f64, omega: f64, gamma_eff: f64, gamma_ad_eff: f64) -> FlowResult {
    let (g, gad) = (gamma_eff, gamma_ad_eff);
    let num = omega * (2.0 * g * g * omega - 2.0 * gad * gad * omega + g * gad * delta);
    let den = g.powi(4) - 4.0 * gad * gad * omega * omega + g * g * (delta * delta + 4.0 * omega * omega - gad * gad);
    FlowResult::new(num / den, FormulaId::CavityCooperativity)
}

/// [`j_cavity_cooperativity`] with rates taken from [`adiabatic_cavity_rates`].
///
/// The common effective decay is the mean of the donor and acceptor
/// cavity-modified rates plus γ′.
pub fn j_cavity_for_spec(spec: &SystemSpec) -> FlowResult {
    let r = adiabatic_cavity_rates(spec);
    let gamma_eff = 0.5 * (r.gamma_a_eff + r.gamma_d_eff) + spec.rates.gamma_prime;
    j_cavity_cooperativity(spec.delta_da, spec.omega, gamma_eff, r.gamma_ad_eff)
}

/// The resonance bracket `g_A²(Δ−ω_L) + ω_L(−g_D² + (δ−ω_L)(Δ−ω_L))` whose
/// square is the denominator of [`j_a_coherent_cavity`]. It equals
/// `−det(H₃ − ω_L)` for the single-excitation polariton matrix.
pub fn coherent_cavity_bracket(delta: f64, delta_c: f64, g_d: f64, g_a: f64, omega_l: f64) -> f64 {
    g_a.powi(2) * (delta - omega_l) + omega_l * (-g_d.powi(2) + (delta_c - omega_l) * (delta - omega_l))
}

/// Raw cavity-to-acceptor flow `J_A` for a weakly driven donor, distant
/// emitters and a lossless cavity.
pub fn j_a_coherent_cavity(
    delta: f64,
    delta_c: f64,
    g_d: f64,
    g_a: f64,
    gamma: f64,
    eta: f64,
    omega_l: f64,
) -> Result<FlowResult> {
    let bracket = coherent_cavity_bracket(delta, delta_c, g_d, g_a, omega_l);
    if bracket == 0.0 {
        return Err(Error::SingularResonance);
    }
    let value = g_a.powi(2) * g_d.powi(2) * gamma * eta.powi(2) / bracket.powi(2);
    Ok(FlowResult::new(value, FormulaId::CoherentCavity))
}

/// Flow `J_i/Γ` into an intermediate acceptor level and the associated
/// transfer rate `k_FS`.
pub fn j_intermediate_level(omega: f64, gamma_d: f64, gamma_nr: f64) -> (FlowResult, FlowResult) {
    let o2 = 4.0 * omega * omega;
    (
        FlowResult::new(o2 / (gamma_d * gamma_nr + o2), FormulaId::IntermediateLevel),
        FlowResult::new(o2 / gamma_nr, FormulaId::IntermediateLevel),
    )
}

/// Two-level pump parameters obtained by eliminating a fast intermediate level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectivePump {
    /// `4η²γ_ie / (4η² + (γ_ie + γ_ig)²)`.
    pub gamma_eff: f64,
    /// Limit `4η²/γ_ie` for fast intermediate decay.
    pub gamma_eff_limit: f64,
    /// Extra coherence damping `2η² / (γ_ie + γ_ig + γ_eg)`.
    pub pump_dephasing: f64,
    /// Whether γ_ie exceeds η, γ_ig and γ_eg by the required margin.
    pub elimination_valid: bool,
}

/// Effective incoherent pump of a three-level donor driven on `g ↔ i` with
/// amplitude η, where `i` relaxes to `e` at `gamma_ie` and to `g` at
/// `gamma_ig`, and `e ↔ g` coherence decays at `gamma_eg`.
pub fn effective_pump_rate(eta: f64, gamma_ie: f64, gamma_ig: f64, gamma_eg: f64) -> EffectivePump {
    let e2 = 4.0 * eta * eta;
    let ratio = tolerances::PUMP_ELIMINATION_RATIO;
    EffectivePump {
        gamma_eff: e2 * gamma_ie / (e2 + (gamma_ie + gamma_ig).powi(2)),
        gamma_eff_limit: e2 / gamma_ie,
        pump_dephasing: 2.0 * eta * eta / (gamma_ie + gamma_ig + gamma_eg),
        elimination_valid: gamma_ie >= ratio * eta.abs()
            && gamma_ie >= ratio * gamma_ig
            && gamma_ie >= ratio * gamma_eg,
    }
}

/// Names accepted by [`oracle`] beyond the [`FormulaId`] names.
pub const EXTRA_ORACLES: [&str; 3] = ["effective-pump", "adiabatic-rates", "optimal-detuning"];

/// Parameter names and defaults of each oracle, in units of γ.
pub fn oracle_parameters(name: &str) -> Option<&'static [(&'static str, f64)]> {
    Some(match name {
        "free-space-full" => {
            &[("Delta", 0.0), ("Omega", 0.0), ("gamma", 1.0), ("gamma_prime", 0.0), ("gamma_phi", 0.0), ("gamma_bar", 0.0)]
        }
        "free-space-simple" => &[("Delta", 0.0), ("Omega", 0.0), ("gamma_tot", 1.0)],
        "distinct-emitters" => &[("Delta", 0.0), ("Omega", 0.0), ("gamma_D", 1.0), ("gamma_A", 1.0)],
        "coherent-free" => &[("Delta", 0.0), ("Omega", 0.0), ("gamma", 1.0), ("eta", 0.01), ("omega_L", 0.0)],
        "cavity-cooperativity" => &[("Delta", 0.0), ("Omega", 0.0), ("gamma_eff", 1.0), ("gamma_AD_eff", 0.0)],
        "coherent-cavity" => &[
            ("Delta", 0.0),
            ("delta", 0.0),
            ("g_D", 0.0),
            ("g_A", 0.0),
            ("gamma", 1.0),
            ("eta", 0.01),
            ("omega_L", 0.0),
        ],
        "intermediate-level" => &[("Omega", 0.0), ("gamma_D", 1.0), ("gamma_nr", 1.0)],
        "effective-pump" => &[("eta", 1.0), ("gamma_ie", 100.0), ("gamma_ig", 0.0), ("gamma_eg", 0.0)],
        "adiabatic-rates" => {
            &[("Delta", 0.0), ("delta", 0.0), ("g_D", 0.0), ("g_A", 0.0), ("kappa", 1.0), ("gamma_D", 1.0), ("gamma_A", 1.0)]
        }
        "optimal-detuning" => &[("Delta", 1.0), ("g_D", 0.0), ("g_A", 0.0)],
        _ => return None,
    })
}

/// Evaluates a named closed form at one parameter point. Missing parameters
/// take the defaults from [`oracle_parameters`]; unknown ones are rejected.
pub fn oracle(name: &str, params: &BTreeMap<String, f64>) -> Result<Vec<(&'static str, f64)>> {
    let table = oracle_parameters(name).ok_or_else(|| Error::InvalidSpec { reason: format!("unknown formula '{name}'") })?;
    if let Some(bad) = params.keys().find(|k| !table.iter().any(|(n, _)| n == k)) {
        return Err(Error::InvalidSpec { reason: format!("formula '{name}' has no parameter '{bad}'") });
    }
    let p = |key: &str| {
        params.get(key).copied().unwrap_or_else(|| table.iter().find(|(n, _)| *n == key).expect("known key").1)
    };
    Ok(match name {
        "free-space-full" => vec![(
            "J_over_Gamma",
            j_free_space_full(p("Delta"), p("Omega"), p("gamma"), p("gamma_prime"), p("gamma_phi"), p("gamma_bar")).value,
        )],
        "free-space-simple" => vec![("J_over_Gamma", j_free_space_simple(p("Delta"), p("Omega"), p("gamma_tot")).value)],
        "distinct-emitters" => {
            vec![("J_over_Gamma", j_distinct_emitters(p("Delta"), p("Omega"), p("gamma_D"), p("gamma_A")).value)]
        }
        "coherent-free" => {
            vec![("J", j_coherent_free(p("Delta"), p("Omega"), p("gamma"), p("eta"), p("omega_L")).value)]
        }
        "cavity-cooperativity" => vec![(
            "J_over_Gamma",
            j_cavity_cooperativity(p("Delta"), p("Omega"), p("gamma_eff"), p("gamma_AD_eff")).value,
        )],
        "coherent-cavity" => vec![(
            "J_A",
            j_a_coherent_cavity(p("Delta"), p("delta"), p("g_D"), p("g_A"), p("gamma"), p("eta"), p("omega_L"))?.value,
        )],
        "intermediate-level" => {
            let (ji, kfs) = j_intermediate_level(p("Omega"), p("gamma_D"), p("gamma_nr"));
            vec![("J_i_over_Gamma", ji.value), ("k_FS", kfs.value)]
        }
        "effective-pump" => {
            let e = effective_pump_rate(p("eta"), p("gamma_ie"), p("gamma_ig"), p("gamma_eg"));
            vec![
                ("Gamma_eff", e.gamma_eff),
                ("Gamma_eff_limit", e.gamma_eff_limit),
                ("pump_dephasing", e.pump_dephasing),
                ("elimination_valid", if e.elimination_valid { 1.0 } else { 0.0 }),
            ]
        }
        "adiabatic-rates" => {
            let mut spec = SystemSpec {
                delta_da: p("Delta"),
                delta_c: p("delta"),
                g_d: p("g_D"),
                g_a: p("g_A"),
                kappa: p("kappa"),
                ..SystemSpec::default()
            };
            spec.rates.gamma_d = p("gamma_D");
            spec.rates.gamma_a = p("gamma_A");
            let r = adiabatic_cavity_rates(&spec);
            vec![
                ("gamma_A_eff", r.gamma_a_eff),
                ("gamma_D_eff", r.gamma_d_eff),
                ("gamma_AD_eff", r.gamma_ad_eff),
                ("adiabatic", if r.adiabatic { 1.0 } else { 0.0 }),
            ]
        }
        "optimal-detuning" => vec![("delta_opt", optimal_cavity_detuning(p("Delta"), p("g_D"), p("g_A"))?)],
        _ => unreachable!("name validated above"),
    })
}
