//! Vacuum-mediated coupling between two point dipoles: the coherent exchange
//! shift Ω(d) and the mutual decay rate γ̄(d).

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::tolerances;

/// Real 3-vector.
pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn check_unit(v: &Vec3, name: &str) -> Result<()> {
    let norm = dot(v, v).sqrt();
    if (norm - 1.0).abs() > tolerances::UNIT_VECTOR {
        return Err(Error::InvalidSpec { reason: format!("{name} must be a unit vector, has norm {norm}") });
    }
    Ok(())
}

/// Named relative orientations of two identical dipoles and their axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Orientation {
    /// Both dipoles along the interparticle axis.
    Parallel,
    /// Both dipoles normal to the interparticle axis.
    Perpendicular,
    /// Both dipoles at the given angle (degrees) to the interparticle axis.
    Angle(f64),
}

impl Orientation {
    /// Angle between the dipoles and the axis, in degrees.
    pub fn theta_deg(self) -> f64 {
        match self {
            Orientation::Parallel => 0.0,
            Orientation::Perpendicular => 90.0,
            Orientation::Angle(t) => t,
        }
    }
}

/// Positions and orientations of the donor and acceptor dipoles.
#[derive(Clone, Debug, PartialEq)]
pub struct GeometrySpec {
    separation: f64,
    wavelength: f64,
    mu_d: Vec3,
    mu_a: Vec3,
    d_hat: Vec3,
}

impl GeometrySpec {
    /// Validated geometry. Separation and wavelength share one length unit.
    pub fn new(separation: f64, wavelength: f64, mu_d: Vec3, mu_a: Vec3, d_hat: Vec3) -> Result<Self> {
        if !(separation >= 0.0 && separation.is_finite()) {
            return Err(Error::InvalidSpec { reason: format!("separation must be finite and non-negative, got {separation}") });
        }
        if !(wavelength > 0.0 && wavelength.is_finite()) {
            return Err(Error::InvalidSpec { reason: format!("wavelength must be positive, got {wavelength}") });
        }
        check_unit(&mu_d, "donor dipole")?;
        check_unit(&mu_a, "acceptor dipole")?;
        check_unit(&d_hat, "interparticle axis")?;
        Ok(Self { separation, wavelength, mu_d, mu_a, d_hat })
    }

    /// Identical dipoles at a named orientation to an axis along z.
    pub fn oriented(separation: f64, wavelength: f64, orientation: Orientation) -> Result<Self> {
        let t = orientation.theta_deg().to_radians();
        let mu = match orientation {
            Orientation::Parallel => [0.0, 0.0, 1.0],
            Orientation::Perpendicular => [1.0, 0.0, 0.0],
            Orientation::Angle(_) => [t.sin(), 0.0, t.cos()],
        };
        Self::new(separation, wavelength, mu, mu, [0.0, 0.0, 1.0])
    }

    pub fn separation(&self) -> f64 {
        self.separation
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn mu_d(&self) -> Vec3 {
        self.mu_d
    }

    pub fn mu_a(&self) -> Vec3 {
        self.mu_a
    }

    pub fn d_hat(&self) -> Vec3 {
        self.d_hat
    }

    /// Dimensionless separation `k d = 2π d / λ`.
    pub fn kd(&self) -> f64 {
        2.0 * PI * self.separation / self.wavelength
    }

    /// Same orientations at another separation.
    pub fn with_separation(&self, separation: f64) -> Result<Self> {
        Self::new(separation, self.wavelength, self.mu_d, self.mu_a, self.d_hat)
    }

    /// The two orientation factors: the transverse projection
    /// `μ_D·μ_A − (μ_D·d̂)(μ_A·d̂)` and the near-field projection
    /// `μ_D·μ_A − 3(μ_D·d̂)(μ_A·d̂)`.
    fn projections(&self) -> (f64, f64) {
        let mm = dot(&self.mu_d, &self.mu_a);
        let pp = dot(&self.mu_d, &self.d_hat) * dot(&self.mu_a, &self.d_hat);
        (mm - pp, mm - 3.0 * pp)
    }
}

/// Radiative and non-radiative rates of the two emitters, in units of γ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmitterRates {
    /// Donor zero-phonon radiative rate.
    pub gamma_d: f64,
    /// Acceptor zero-phonon radiative rate.
    pub gamma_a: f64,
    /// Additional radiative decay into other ground-state vibrational levels.
    pub gamma_prime: f64,
    /// Pure dephasing rate.
    pub gamma_phi: f64,
    /// Non-radiative relaxation within the ground manifold.
    pub gamma_nr: f64,
}

impl Default for EmitterRates {
    fn default() -> Self {
        Self { gamma_d: 1.0, gamma_a: 1.0, gamma_prime: 0.0, gamma_phi: 0.0, gamma_nr: 0.0 }
    }
}

impl EmitterRates {
    /// Identical emitters with zero-phonon rate `gamma` and extra decay `gamma_prime`.
    pub fn identical(gamma: f64, gamma_prime: f64) -> Self {
        Self { gamma_d: gamma, gamma_a: gamma, gamma_prime, ..Self::default() }
    }

    /// Total population decay of the donor.
    pub fn gamma_tot_d(&self) -> f64 {
        self.gamma_d + self.gamma_prime
    }

    /// Total population decay of the acceptor.
    pub fn gamma_tot_a(&self) -> f64 {
        self.gamma_a + self.gamma_prime
    }

    /// Checks that every rate is finite and non-negative.
    pub fn validate(&self) -> Result<()> {
        let all = [
            ("gamma_d", self.gamma_d),
            ("gamma_a", self.gamma_a),
            ("gamma_prime", self.gamma_prime),
            ("gamma_phi", self.gamma_phi),
            ("gamma_nr", self.gamma_nr),
        ];
        for (name, v) in all {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidSpec { reason: format!("{name} must be finite and non-negative, got {v}") });
            }
        }
        Ok(())
    }
}

/// Coherent dipole-dipole exchange shift Ω.
pub fn dipole_shift(geom: &GeometrySpec, rates: &EmitterRates) -> Result<f64> {
    let x = geom.kd();
    if x == 0.0 {
        return Err(Error::ZeroSeparation);
    }
    let (transverse, near) = geom.projections();
    let (s, c) = x.sin_cos();
    let bracket = -transverse * c / x + near * (s / (x * x) + c / (x * x * x));
    Ok(1.5 * (rates.gamma_d * rates.gamma_a).sqrt() * bracket)
}

/// `cos x / x² − sin x / x³`, with its Taylor series near the origin where
/// the two terms cancel.
fn near_field_decay_kernel(x: f64) -> f64 {
    if x < 1e-2 {
        let x2 = x * x;
        -1.0 / 3.0 + x2 / 30.0 - x2 * x2 / 840.0
    } else {
        let (s, c) = x.sin_cos();
        c / (x * x) - s / (x * x * x)
    }
}

/// `sin x / x`, equal to one at the origin.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// Mutual decay rate γ̄. Finite at zero separation, where it equals
/// `√(γ_D γ_A) (μ_D·μ_A)`.
pub fn mutual_decay(geom: &GeometrySpec, rates: &EmitterRates) -> f64 {
    let x = geom.kd();
    let (transverse, near) = geom.projections();
    let bracket = transverse * sinc(x) + near * near_field_decay_kernel(x);
    1.5 * (rates.gamma_d * rates.gamma_a).sqrt() * bracket
}

/// Superradiant and subradiant decay rates `(γ + γ̄, γ − γ̄)`.
pub fn collective_rates(gamma: f64, gamma_bar: f64) -> Result<(f64, f64)> {
    if gamma_bar.abs() > gamma {
        return Err(Error::UnphysicalMutualDecay { gamma_bar, bound: gamma });
    }
    Ok((gamma + gamma_bar, gamma - gamma_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn at_kd(kd: f64, orientation: Orientation) -> GeometrySpec {
        GeometrySpec::oriented(kd / (2.0 * PI), 1.0, orientation).unwrap()
    }

    #[test]
    fn far_field_vanishes() {
        let r = EmitterRates::default();
        for o in [Orientation::Parallel, Orientation::Perpendicular, Orientation::Angle(33.0)] {
            let g = at_kd(1e6, o);
            assert!(dipole_shift(&g, &r).unwrap().abs() < 1e-5);
            assert!(mutual_decay(&g, &r).abs() < 1e-5);
        }
    }

    #[test]
    fn shift_matches_term_by_term_value() {
        let g = at_kd(0.5, Orientation::Perpendicular);
        let r = EmitterRates::default();
        assert_relative_eq!(dipole_shift(&g, &r).unwrap(), 10.774_796_288_638_572, max_relative = 1e-13);
    }

    #[test]
    fn mutual_decay_matches_term_by_term_value() {
        let g = at_kd(1.0, Orientation::Perpendicular);
        let r = EmitterRates::default();
        assert_relative_eq!(mutual_decay(&g, &r), 0.810_453_458_802_209_6, max_relative = 1e-13);
    }

    #[test]
    fn reversing_one_dipole_flips_the_shift() {
        let r = EmitterRates::default();
        let mu = [1.0, 0.0, 0.0];
        let a = GeometrySpec::new(0.05, 1.0, mu, mu, [0.0, 0.0, 1.0]).unwrap();
        let b = GeometrySpec::new(0.05, 1.0, mu, [-1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).unwrap();
        assert_relative_eq!(dipole_shift(&a, &r).unwrap(), -dipole_shift(&b, &r).unwrap(), max_relative = 1e-15);
    }

    #[test]
    fn zero_separation() {
        let r = EmitterRates::default();
        let g = GeometrySpec::oriented(0.0, 1.0, Orientation::Parallel).unwrap();
        assert_eq!(dipole_shift(&g, &r), Err(Error::ZeroSeparation));
        assert_relative_eq!(mutual_decay(&g, &r), 1.0, max_relative = 1e-15);
        let distinct = EmitterRates { gamma_d: 4.0, gamma_a: 1.0, ..EmitterRates::default() };
        assert_relative_eq!(mutual_decay(&g, &distinct), 2.0, max_relative = 1e-15);
    }

    #[test]
    fn series_and_closed_form_agree_at_the_switch() {
        let below = near_field_decay_kernel(1e-2 * (1.0 - 1e-12));
        let x: f64 = 1e-2;
        let exact = x.cos() / (x * x) - x.sin() / (x * x * x);
        assert!((below - exact).abs() < 1e-9);
    }

    #[test]
    fn collective_rate_examples() {
        assert_eq!(collective_rates(1.0, 1.0).unwrap(), (2.0, 0.0));
        assert_eq!(collective_rates(1.0, 0.0).unwrap(), (1.0, 1.0));
        assert_eq!(collective_rates(1.0, 0.5).unwrap(), (1.5, 0.5));
        assert!(matches!(collective_rates(1.0, 1.1), Err(Error::UnphysicalMutualDecay { .. })));
    }

    #[test]
    fn geometry_validation() {
        assert!(GeometrySpec::new(1.0, 1.0, [1.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0]).is_err());
        assert!(GeometrySpec::oriented(-1.0, 1.0, Orientation::Parallel).is_err());
        assert!(GeometrySpec::oriented(1.0, 0.0, Orientation::Parallel).is_err());
    }

    #[test]
    fn mutual_decay_bounded_on_dense_grid() {
        let r = EmitterRates::default();
        for o in [Orientation::Parallel, Orientation::Perpendicular, Orientation::Angle(54.7)] {
            for i in 0..=2000 {
                let d = 1e-3 * 10f64.powf(4.0 * i as f64 / 2000.0);
                let g = GeometrySpec::oriented(d, 1.0, o).unwrap();
                assert!(mutual_decay(&g, &r).abs() <= 1.0 + 1e-12, "{o:?} d={d}");
            }
        }
    }

    #[test]
    fn near_field_shift_scales_as_inverse_cube() {
        let r = EmitterRates::default();
        let n = 41;
        let (lo, hi) = (1e-3f64.ln(), 5e-2f64.ln());
        let pts: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let kd = (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp();
                let om = dipole_shift(&at_kd(kd, Orientation::Perpendicular), &r).unwrap();
                (kd.ln(), om.abs().ln())
            })
            .collect();
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n as f64;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n as f64;
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope + 3.0).abs() < 0.05, "slope {slope}");
    }

    fn unit(v: Vec3) -> Vec3 {
        let n = dot(&v, &v).sqrt();
        [v[0] / n, v[1] / n, v[2] / n]
    }

    proptest! {
        #[test]
        fn exchange_symmetry(
            a in prop::array::uniform3(-1.0f64..1.0),
            b in prop::array::uniform3(-1.0f64..1.0),
            axis in prop::array::uniform3(-1.0f64..1.0),
            gd in 0.1f64..3.0, ga in 0.1f64..3.0, d in 0.001f64..2.0,
        ) {
            prop_assume!(dot(&a, &a) > 1e-3 && dot(&b, &b) > 1e-3 && dot(&axis, &axis) > 1e-3);
            let (a, b, axis) = (unit(a), unit(b), unit(axis));
            let r1 = EmitterRates { gamma_d: gd, gamma_a: ga, ..EmitterRates::default() };
            let r2 = EmitterRates { gamma_d: ga, gamma_a: gd, ..EmitterRates::default() };
            let g1 = GeometrySpec::new(d, 1.0, a, b, axis).unwrap();
            let g2 = GeometrySpec::new(d, 1.0, b, a, axis).unwrap();
            let (o1, o2) = (dipole_shift(&g1, &r1).unwrap(), dipole_shift(&g2, &r2).unwrap());
            prop_assert!((o1 - o2).abs() <= 1e-12 * o1.abs().max(1.0));
            let (m1, m2) = (mutual_decay(&g1, &r1), mutual_decay(&g2, &r2));
            prop_assert!((m1 - m2).abs() <= 1e-12 * m1.abs().max(1.0));
        }
    }
}
