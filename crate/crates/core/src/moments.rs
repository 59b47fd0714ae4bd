//! Linearized equations of motion for second moments, and the bad-cavity
//! elimination of the field.
//!
//! The closure keeps every term linear in the six moments
//! `p_D, p_A, n, ⟨σ_D†σ_A⟩, ⟨a†σ_D⟩, ⟨a†σ_A⟩` and drops all products of a
//! population with a coherence. It is exact to first order in the pump rate.

use crate::algebra::{eig_real, re, solve_linear, ComplexMatrix, C64};
use crate::error::{Error, Result};
use crate::model::{PumpMode, SystemSpec};
use crate::observables::{FlowReport, Normalization};
use crate::tolerances;

/// Number of real unknowns: three populations and three complex coherences.
pub const MOMENT_DIM: usize = 9;

/// Steady-state second moments.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentState {
    /// Donor excited population `⟨σ_D†σ_D⟩`.
    pub p_d: f64,
    /// Acceptor excited population `⟨σ_A†σ_A⟩`.
    pub p_a: f64,
    /// Photon number `⟨a†a⟩`.
    pub n: f64,
    /// Donor-acceptor coherence `⟨σ_D†σ_A⟩`.
    pub c_da: C64,
    /// Field-donor correlation `⟨a†σ_D⟩`.
    pub c_ad: C64,
    /// Field-acceptor correlation `⟨a†σ_A⟩`.
    pub c_aa: C64,
}

impl MomentState {
    /// Packs into the real vector `(p_D, p_A, n, Re/Im c_DA, Re/Im c_aD, Re/Im c_aA)`.
    pub fn to_vector(&self) -> [f64; MOMENT_DIM] {
        [
            self.p_d,
            self.p_a,
            self.n,
            self.c_da.re,
            self.c_da.im,
            self.c_ad.re,
            self.c_ad.im,
            self.c_aa.re,
            self.c_aa.im,
        ]
    }

    /// Inverse of [`MomentState::to_vector`].
    pub fn from_vector(x: &[f64; MOMENT_DIM]) -> Self {
        Self {
            p_d: x[0],
            p_a: x[1],
            n: x[2],
            c_da: C64::new(x[3], x[4]),
            c_ad: C64::new(x[5], x[6]),
            c_aa: C64::new(x[7], x[8]),
        }
    }

    /// Energy flows implied by the moments.
    pub fn flows(&self, spec: &SystemSpec) -> FlowReport {
        FlowReport {
            j: -2.0 * spec.omega * self.c_da.im,
            j_d: 2.0 * spec.g_d * self.c_ad.im,
            j_a: -2.0 * spec.g_a * self.c_aa.im,
            j_r: 2.0 * spec.omega * self.c_da.re,
            p_d: self.p_d,
            p_a: self.p_a,
            n: self.n,
            normalization: Normalization::Raw,
        }
    }
}

/// Linear system `dx/dt = drift · x + source` on the real moment vector.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentSystem {
    /// Row-major 9×9 drift matrix.
    pub drift: [[f64; MOMENT_DIM]; MOMENT_DIM],
    pub source: [f64; MOMENT_DIM],
}

impl MomentSystem {
    /// Drift eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        let flat: Vec<f64> = self.drift.iter().flatten().copied().collect();
        eig_real(MOMENT_DIM, &flat)
    }

    /// `drift · x + source`.
    pub fn rate(&self, x: &[f64; MOMENT_DIM]) -> [f64; MOMENT_DIM] {
        let mut out = self.source;
        for (o, row) in out.iter_mut().zip(&self.drift) {
            *o += row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        }
        out
    }
}

/// Time derivative of the moments at `x`.
fn moment_rates(spec: &SystemSpec, x: &[f64; MOMENT_DIM]) -> [f64; MOMENT_DIM] {
    let m = MomentState::from_vector(x);
    let (c, ud, ua) = (m.c_da, m.c_ad, m.c_aa);
    let i = C64::new(0.0, 1.0);
    let r = &spec.rates;
    let gam = spec.pump.gamma_pump;
    let (om, gb, gd, ga) = (spec.omega, spec.gamma_bar, spec.g_d, spec.g_a);
    let (big_delta, delta, kappa, phi) = (spec.delta_da, spec.delta_c, spec.kappa, r.gamma_phi);
    let loss_d = gam + r.gamma_tot_d();
    let loss_a = gam + r.gamma_tot_a();

    let dp_d = gam - loss_d * m.p_d + 2.0 * om * c.im - 2.0 * gd * ud.im - gb * c.re;
    let dp_a = -loss_a * m.p_a - 2.0 * om * c.im - 2.0 * ga * ua.im - gb * c.re;
    let dn = -kappa * m.n + 2.0 * gd * ud.im + 2.0 * ga * ua.im;
    let dc = i * om * (m.p_a - m.p_d) - (re((loss_d + loss_a) / 2.0 + 2.0 * phi) - i * big_delta) * c + i * gd * ua
        - i * ga * ud.conj()
        - re(gb / 2.0 * (m.p_a + m.p_d));
    let dud = i * gd * (m.p_d - m.n) - (re((loss_d + kappa) / 2.0 + phi) - i * (delta - big_delta)) * ud - i * om * ua
        + i * ga * c.conj()
        - ua * (gb / 2.0);
    let dua = i * ga * (m.p_a - m.n) - (re((loss_a + kappa) / 2.0 + phi) - i * delta) * ua - i * om * ud + i * gd * c
        - ud * (gb / 2.0);
    [dp_d, dp_a, dn, dc.re, dc.im, dud.re, dud.im, dua.re, dua.im]
}

/// Drift matrix and source vector of the linearized moment equations.
pub fn build_moment_system(spec: &SystemSpec) -> Result<MomentSystem> {
    if spec.pump.mode == PumpMode::Coherent {
        return Err(Error::UnsupportedPump { mode: PumpMode::Coherent.name() });
    }
    let mut spec = spec.clone();
    if spec.pump.mode == PumpMode::None {
        spec.pump.gamma_pump = 0.0;
    }
    let source = moment_rates(&spec, &[0.0; MOMENT_DIM]);
    let mut drift = [[0.0; MOMENT_DIM]; MOMENT_DIM];
    for j in 0..MOMENT_DIM {
        let mut e = [0.0; MOMENT_DIM];
        e[j] = 1.0;
        let col = moment_rates(&spec, &e);
        for k in 0..MOMENT_DIM {
            drift[k][j] = col[k] - source[k];
        }
    }
    Ok(MomentSystem { drift, source })
}

/// Steady state of the linearized moment equations.
pub fn moment_steady_state(spec: &SystemSpec) -> Result<MomentState> {
    let sys = build_moment_system(spec)?;
    let max_real = sys.eigenvalues()?.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
    if max_real >= 0.0 {
        return Err(Error::Unstable { max_real });
    }
    let a = ComplexMatrix::from_fn(MOMENT_DIM, MOMENT_DIM, |i, j| re(sys.drift[i][j]));
    let b: Vec<C64> = sys.source.iter().map(|v| re(-v)).collect();
    let x = solve_linear(&a, &b)?;
    let mut v = [0.0; MOMENT_DIM];
    for (slot, z) in v.iter_mut().zip(x) {
        *slot = z.re;
    }
    Ok(MomentState::from_vector(&v))
}

/// Linearized drift of the single-operator averages `(⟨a⟩, ⟨σ_D⟩, ⟨σ_A⟩)`.
pub fn single_operator_drift(spec: &SystemSpec) -> ComplexMatrix {
    let i = C64::new(0.0, 1.0);
    let r = &spec.rates;
    let gam = if spec.pump.mode == PumpMode::Incoherent { spec.pump.gamma_pump } else { 0.0 };
    let cross = -i * spec.omega - re(spec.gamma_bar / 2.0);
    let mut m = ComplexMatrix::zeros(3, 3);
    m[(0, 0)] = -i * spec.delta_c - re(spec.kappa / 2.0);
    m[(0, 1)] = -i * spec.g_d;
    m[(0, 2)] = -i * spec.g_a;
    m[(1, 0)] = -i * spec.g_d;
    m[(1, 1)] = -i * spec.delta_da - re((r.gamma_tot_d() + gam) / 2.0 + r.gamma_phi);
    m[(1, 2)] = cross;
    m[(2, 0)] = -i * spec.g_a;
    m[(2, 1)] = cross;
    m[(2, 2)] = -re((r.gamma_tot_a() + gam) / 2.0 + r.gamma_phi);
    m
}

/// Cavity-modified decay rates after eliminating a fast-decaying field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EffectiveRates {
    /// Purcell-enhanced acceptor decay γ̃_A.
    pub gamma_a_eff: f64,
    /// Purcell-enhanced donor decay γ̃_D.
    pub gamma_d_eff: f64,
    /// Cavity-mediated mutual decay γ̃_AD.
    pub gamma_ad_eff: f64,
    /// Whether `κ ≥ 10 max(g_D, g_A)`, the regime where the elimination holds.
    pub adiabatic: bool,
}

/// `g² κ / ((κ/2)² + detuning²)`, zero for a decoupled emitter.
fn purcell_term(g: f64, kappa: f64, detuning: f64) -> f64 {
    if g == 0.0 {
        0.0
    } else {
        g * g * kappa / ((kappa / 2.0).powi(2) + detuning * detuning)
    }
}

/// Bad-cavity effective rates.
pub fn adiabatic_cavity_rates(spec: &SystemSpec) -> EffectiveRates {
    let r = &spec.rates;
    let (gd, ga, kappa) = (spec.g_d, spec.g_a, spec.kappa);
    let gamma_ad_eff = if gd * ga == 0.0 { 0.0 } else { gd * ga * kappa / (kappa / 2.0).powi(2) };
    EffectiveRates {
        gamma_a_eff: r.gamma_a + purcell_term(ga, kappa, spec.delta_c),
        gamma_d_eff: r.gamma_d + purcell_term(gd, kappa, spec.delta_c - spec.delta_da),
        gamma_ad_eff,
        adiabatic: kappa >= tolerances::ADIABATIC_RATIO * gd.abs().max(ga.abs()),
    }
}
