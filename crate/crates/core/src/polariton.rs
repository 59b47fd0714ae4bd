//! Single-excitation eigenstates of the donor-cavity-acceptor Hamiltonian.

use crate::algebra::{eig_hermitian, ComplexMatrix};
use crate::error::{Error, Result};

/// Lower, middle and upper polaritons.
#[derive(Clone, Debug, PartialEq)]
pub struct PolaritonSet {
    /// Energies in ascending order.
    pub energies: [f64; 3],
    /// Row `p` holds the donor, cavity and acceptor weights of polariton `p`.
    pub hopfield: [[f64; 3]; 3],
}

/// Index of the lower polariton in a [`PolaritonSet`].
pub const LOWER: usize = 0;
/// Index of the middle polariton in a [`PolaritonSet`].
pub const MIDDLE: usize = 1;
/// Index of the upper polariton in a [`PolaritonSet`].
pub const UPPER: usize = 2;

/// Column of the donor weight in a Hopfield row.
pub const DONOR: usize = 0;
/// Column of the cavity weight in a Hopfield row.
pub const CAVITY: usize = 1;
/// Column of the acceptor weight in a Hopfield row.
pub const ACCEPTOR: usize = 2;

/// The 3×3 single-excitation Hamiltonian in the basis (donor, cavity, acceptor).
pub fn single_excitation_hamiltonian(delta: f64, delta_c: f64, g_d: f64, g_a: f64) -> ComplexMatrix {
    ComplexMatrix::from_real_rows(&[&[delta, g_d, 0.0], &[g_d, delta_c, g_a], &[0.0, g_a, 0.0]])
}

/// Diagonalizes the single-excitation Hamiltonian.
///
/// Polaritons are labelled by energy order. Exactly degenerate energies are
/// ordered lexicographically by their Hopfield rows.
pub fn polariton_modes(delta: f64, delta_c: f64, g_d: f64, g_a: f64) -> PolaritonSet {
    let h = single_excitation_hamiltonian(delta, delta_c, g_d, g_a);
    let e = eig_hermitian(&h).expect("real symmetric 3x3 matrix");
    let mut rows: Vec<(f64, [f64; 3])> = (0..3)
        .map(|p| (e.values[p], [0, 1, 2].map(|k| e.vectors[(k, p)].norm_sqr())))
        .collect();
    rows.sort_by(|a, b| {
        a.0.total_cmp(&b.0).then_with(|| {
            a.1.iter().zip(&b.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    PolaritonSet { energies: [rows[0].0, rows[1].0, rows[2].0], hopfield: [rows[0].1, rows[1].1, rows[2].1] }
}

/// Energies of the donor-cavity and acceptor-cavity dressed states, each
/// ignoring the third party.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BarePolaritons {
    pub donor_minus: f64,
    pub donor_plus: f64,
    pub acceptor_minus: f64,
    pub acceptor_plus: f64,
}

impl BarePolaritons {
    pub fn as_array(&self) -> [f64; 4] {
        [self.donor_minus, self.donor_plus, self.acceptor_minus, self.acceptor_plus]
    }
}

/// Pairwise dressed-state energies. The acceptor branch uses the acceptor
/// coupling `g_a`.
pub fn bare_polaritons(delta: f64, delta_c: f64, g_d: f64, g_a: f64) -> BarePolaritons {
    let root_d = (4.0 * g_d * g_d + (delta - delta_c).powi(2)).sqrt();
    let root_a = (4.0 * g_a * g_a + delta_c * delta_c).sqrt();
    BarePolaritons {
        donor_minus: (delta + delta_c - root_d) / 2.0,
        donor_plus: (delta + delta_c + root_d) / 2.0,
        acceptor_minus: (delta_c - root_a) / 2.0,
        acceptor_plus: (delta_c + root_a) / 2.0,
    }
}

/// Cavity detuning at which the middle polariton has equal donor and
/// acceptor weight.
pub fn optimal_cavity_detuning(delta: f64, g_d: f64, g_a: f64) -> Result<f64> {
    if delta == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    Ok((g_d * g_d - g_a * g_a) / delta + g_a * delta / (g_a + g_d))
}

/// [`optimal_cavity_detuning`] extended to `Δ = 0` for equal couplings, where
/// the symmetric configuration gives `δ = 0`.
pub fn optimal_cavity_detuning_or_limit(delta: f64, g_d: f64, g_a: f64) -> Result<f64> {
    if delta == 0.0 && g_d == g_a {
        Ok(0.0)
    } else {
        optimal_cavity_detuning(delta, g_d, g_a)
    }
}

/// `|α_MD|² − |α_MA|²` of the middle polariton.
pub fn middle_weight_imbalance(delta: f64, delta_c: f64, g_d: f64, g_a: f64) -> f64 {
    let h = polariton_modes(delta, delta_c, g_d, g_a).hopfield[MIDDLE];
    h[DONOR] - h[ACCEPTOR]
}

/// Bisection root of [`middle_weight_imbalance`] in cavity detuning over
/// `[lo, hi]`, which must bracket a sign change.
pub fn hopfield_crossing(delta: f64, g_d: f64, g_a: f64, lo: f64, hi: f64) -> Result<f64> {
    let f = |x: f64| middle_weight_imbalance(delta, x, g_d, g_a);
    let (mut a, mut b) = (lo, hi);
    let (mut fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::InvalidSpec { reason: format!("no sign change of the weight imbalance on [{lo}, {hi}]") });
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 || (b - a).abs() < 1e-13 * (1.0 + m.abs()) {
            return Ok(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Ok(0.5 * (a + b))
}
