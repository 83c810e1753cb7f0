//! Parameter types for the four-level ladder system and the elementary
//! conversions used by every other module.
//!
//! Level scheme: ground |1>, degenerate intermediate pair |2>,|3>, upper |4>.
//! Pump 2 drives 1-3, pump 1 drives 3-4; the signal pair is emitted on
//! 4-2 (signal 1) and 2-1 (signal 2). Populations of |2>,|3> decay at
//! 2*gamma1 and |4> at 2*Gamma1; `gamma1`/`big_gamma1` store the half-rates
//! that enter the complex coherence relaxation rates, never FWHM linewidths.
//!
//! Detuning sign convention (red shift positive):
//!   delta1  = omega_43 - omega_p1        (pump 1)
//!   delta1' = omega_p2 - omega_31        (pump 2)
//!   delta2  = omega_42 - omega_s1        (signal 1)
//!   delta2' = omega_s2 - omega_21        (signal 2)
//! Two-photon closure means delta1 - delta1' = delta2 - delta2'.

use num_complex::Complex64;

use crate::constants::{HBAR, K_B};
use crate::error::{Result, SfwmError};

/// Electric dipole matrix elements (C m) of the four transitions, real and
/// non-negative; any phase convention is absorbed into the field amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DipoleMoments {
    /// 2-1 transition (signal 2, 780 nm band).
    pub u21: f64,
    /// 1-3 transition (pump 2, 780 nm band).
    pub u13: f64,
    /// 3-4 transition (pump 1, 1529 nm band).
    pub u34: f64,
    /// 4-2 transition (signal 1, 1529 nm band).
    pub u42: f64,
}

/// Static properties of the atomic medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicSystem {
    /// Half decay rate of the degenerate states |2>,|3> (rad/s); the full
    /// population decay rate is 2*gamma1.
    pub gamma1: f64,
    /// Half decay rate of |4> (rad/s); full rate 2*Gamma1.
    pub big_gamma1: f64,
    /// Number density of active atoms (m^-3).
    pub density: f64,
    /// Vapor temperature (K).
    pub temperature: f64,
    /// Atomic mass (kg).
    pub mass: f64,
    /// Medium length along the propagation axis (m).
    pub length: f64,
    pub dipoles: DipoleMoments,
}

impl AtomicSystem {
    pub fn validate(&self) -> Result<()> {
        let mut check = |ok: bool, what: &str| {
            if ok {
                Ok(())
            } else {
                Err(SfwmError::InvalidParameter(what.to_string()))
            }
        };
        check(self.gamma1 > 0.0, "gamma1 must be > 0")?;
        check(self.big_gamma1 > 0.0, "Gamma1 must be > 0")?;
        check(self.density >= 0.0, "density must be >= 0")?;
        check(self.temperature > 0.0, "temperature must be > 0")?;
        check(self.mass > 0.0, "mass must be > 0")?;
        check(self.length > 0.0, "length must be > 0")?;
        let d = &self.dipoles;
        check(
            d.u21 >= 0.0 && d.u13 >= 0.0 && d.u34 >= 0.0 && d.u42 >= 0.0,
            "dipole moments must be real and >= 0",
        )
    }

    /// Most probable thermal speed of this vapor.
    pub fn most_probable_speed(&self) -> f64 {
        most_probable_speed(self.temperature, self.mass)
    }
}

/// Pump and signal fields: frequencies, detunings, drive strengths.
///
/// `eps_p1`/`eps_p2` are the classical pump field amplitudes entering the
/// pair-generation prefactor. They are carried separately from the Rabi
/// frequencies so that configurations may quote measured Rabi frequencies
/// directly instead of deriving them from beam parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldDrive {
    /// Optical angular frequencies (rad/s).
    pub omega_p1: f64,
    pub omega_p2: f64,
    pub omega_s1: f64,
    pub omega_s2: f64,
    /// Detunings (rad/s), signs as in the module docs.
    pub delta1: f64,
    pub delta1_prime: f64,
    pub delta2: f64,
    pub delta2_prime: f64,
    /// Complex pump Rabi frequencies (rad/s).
    pub rabi_p1: Complex64,
    pub rabi_p2: Complex64,
    /// Pump field amplitudes (V/m).
    pub eps_p1: f64,
    pub eps_p2: f64,
    /// Beam cross-section (m^2); metadata for mode normalization.
    pub mode_area: f64,
}

impl FieldDrive {
    /// Two-photon closure residual (delta1 - delta1') - (delta2 - delta2').
    pub fn two_photon_residual(&self) -> f64 {
        (self.delta1 - self.delta1_prime) - (self.delta2 - self.delta2_prime)
    }

    /// Magnitude scale of the detunings, used for relative closure checks.
    pub fn detuning_scale(&self) -> f64 {
        self.delta1
            .abs()
            .max(self.delta1_prime.abs())
            .max(self.delta2.abs())
            .max(self.delta2_prime.abs())
            .max(1.0)
    }
}

/// The five complex coherence relaxation rates of the ladder system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationRates {
    pub g21: Complex64,
    pub g31: Complex64,
    pub g42: Complex64,
    pub g43: Complex64,
    pub g41: Complex64,
}

/// Rabi frequency mu * E / hbar of a field of amplitude `field` coupling a
/// transition with dipole moment `dipole`.
#[inline]
pub fn rabi_frequency(dipole: f64, field: Complex64) -> Complex64 {
    field * (dipole / HBAR)
}

/// Most probable speed sqrt(2 k_B T / m) of a thermal vapor.
#[inline]
pub fn most_probable_speed(temperature: f64, mass: f64) -> f64 {
    debug_assert!(temperature > 0.0 && mass > 0.0);
    (2.0 * K_B * temperature / mass).sqrt()
}

/// Complex relaxation rates of the six driven coherences.
///
/// The coherence rho_21 is driven at the signal-2 frequency and rho_31 at the
/// pump-2 frequency, so delta2' and delta1' enter their rates; with zero
/// two-photon detuning (delta1 = delta1', delta2 = delta2', the regime of all
/// shipped presets) these coincide with the unprimed detunings.
pub fn relaxation_rates(system: &AtomicSystem, drive: &FieldDrive) -> RelaxationRates {
    let g = system.gamma1;
    let gg = system.big_gamma1;
    RelaxationRates {
        g21: Complex64::new(g, -drive.delta2_prime),
        g31: Complex64::new(g, -drive.delta1_prime),
        g42: Complex64::new(2.0 * gg + g, -drive.delta2),
        g43: Complex64::new(2.0 * gg + g, -drive.delta1),
        g41: Complex64::new(2.0 * gg, drive.delta2 - drive.delta1),
    }
}

/// Relaxation rate of the intermediate coherence rho_32 (both states decay),
/// needed to close the equation set; not part of the printed five.
pub fn relaxation_rate_32(system: &AtomicSystem, drive: &FieldDrive) -> Complex64 {
    Complex64::new(
        2.0 * system.gamma1,
        drive.delta2_prime - drive.delta1_prime,
    )
}

/// Soft validity diagnostics for the perturbative treatment.
#[derive(Debug, Clone, PartialEq)]
pub enum RegimeWarning {
    /// |Omega_p2| / |Omega_p1| exceeds 0.1: the zeroth-order expansion in the
    /// strong pump is no longer well separated from the weak fields.
    PumpHierarchyViolated { ratio: f64 },
    /// Two-photon closure broken beyond 1e-9 relative.
    TwoPhotonClosureBroken { residual: f64, scale: f64 },
}

/// Checks the perturbation hierarchy and two-photon closure. Emits warnings,
/// never rejects: callers decide whether a violated regime matters.
pub fn validate_regime(drive: &FieldDrive) -> Vec<RegimeWarning> {
    let mut warnings = Vec::new();
    let p1 = drive.rabi_p1.norm();
    let p2 = drive.rabi_p2.norm();
    if p1 > 0.0 {
        let ratio = p2 / p1;
        if ratio > 0.1 {
            warnings.push(RegimeWarning::PumpHierarchyViolated { ratio });
        }
    } else if p2 > 0.0 {
        warnings.push(RegimeWarning::PumpHierarchyViolated { ratio: f64::INFINITY });
    }
    let residual = drive.two_photon_residual().abs();
    let scale = drive.detuning_scale();
    if residual >= 1e-9 * scale {
        warnings.push(RegimeWarning::TwoPhotonClosureBroken { residual, scale });
    }
    warnings
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::TWO_PI_MHZ;
    use proptest::prelude::*;

    fn drive_with_detunings(d1: f64, d1p: f64, d2: f64, d2p: f64) -> FieldDrive {
        FieldDrive {
            omega_p1: 1.23e15,
            omega_p2: 2.41e15,
            omega_s1: 1.23e15,
            omega_s2: 2.41e15,
            delta1: d1,
            delta1_prime: d1p,
            delta2: d2,
            delta2_prime: d2p,
            rabi_p1: Complex64::new(60.0 * TWO_PI_MHZ, 0.0),
            rabi_p2: Complex64::new(0.6 * TWO_PI_MHZ, 0.0),
            eps_p1: 4.0e3,
            eps_p2: 160.0,
            mode_area: 1e-6,
        }
    }

    fn system(gamma1: f64, big_gamma1: f64) -> AtomicSystem {
        AtomicSystem {
            gamma1,
            big_gamma1,
            density: 1.4e19,
            temperature: 383.15,
            mass: crate::constants::RB85_MASS,
            length: 0.05,
            dipoles: DipoleMoments {
                u21: 3.58e-29,
                u13: 3.58e-29,
                u34: 1.0e-29,
                u42: 1.0e-29,
            },
        }
    }

    #[test]
    fn rabi_zero_dipole_and_zero_field() {
        assert_eq!(
            rabi_frequency(0.0, Complex64::new(1e4, 0.0)),
            Complex64::new(0.0, 0.0)
        );
        assert_eq!(
            rabi_frequency(1e-29, Complex64::new(0.0, 0.0)),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn rabi_direct_arithmetic() {
        // mu = 1.0e-29 C m, E = 1.0e4 V/m -> 1.0e-25 / hbar ~ 9.48e8 rad/s
        let omega = rabi_frequency(1.0e-29, Complex64::new(1.0e4, 0.0));
        let expected = 1.0e-25 / HBAR;
        assert!((omega.re - expected).abs() / expected < 1e-12);
        assert!((expected - 9.48e8).abs() / 9.48e8 < 1e-2);
    }

    #[test]
    fn relaxation_zero_detuning_is_real() {
        let (a, b) = (7.0e6, 2.0e6);
        let rates = relaxation_rates(&system(a, b), &drive_with_detunings(0.0, 0.0, 0.0, 0.0));
        for (rate, expect) in [
            (rates.g21, a),
            (rates.g31, a),
            (rates.g42, 2.0 * b + a),
            (rates.g43, 2.0 * b + a),
            (rates.g41, 2.0 * b),
        ] {
            assert_eq!(rate.im, 0.0);
            assert!((rate.re - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn relaxation_fig3a_g31() {
        let sys = system(3.0 * TWO_PI_MHZ, 1.0 * TWO_PI_MHZ);
        let drive = drive_with_detunings(
            25.0 * TWO_PI_MHZ,
            25.0 * TWO_PI_MHZ,
            0.0,
            0.0,
        );
        let rates = relaxation_rates(&sys, &drive);
        let expected = Complex64::new(3.0, -25.0) * TWO_PI_MHZ;
        assert!((rates.g31 - expected).norm() / expected.norm() < 1e-12);
    }

    #[test]
    fn relaxation_conjugate_identity() {
        let sys = system(5.0e6, 3.0e6);
        let d = drive_with_detunings(2.0e8, 1.5e8, -4.0e7, 1.0e7);
        let mut neg = d.clone();
        neg.delta1 = -d.delta1;
        neg.delta1_prime = -d.delta1_prime;
        neg.delta2 = -d.delta2;
        neg.delta2_prime = -d.delta2_prime;
        let r = relaxation_rates(&sys, &d);
        let rn = relaxation_rates(&sys, &neg);
        assert_eq!(rn.g21, r.g21.conj());
        assert_eq!(rn.g31, r.g31.conj());
        assert_eq!(rn.g42, r.g42.conj());
        assert_eq!(rn.g43, r.g43.conj());
        assert_eq!(rn.g41, r.g41.conj());
    }

    #[test]
    fn speed_scaling_and_value() {
        let m = 1.410e-25;
        let u1 = most_probable_speed(300.0, m);
        let u4 = most_probable_speed(1200.0, m);
        assert!((u4 / u1 - 2.0).abs() < 1e-12);
        // 110 C Rb-85
        let u = most_probable_speed(383.15, 1.410e-25);
        assert!((u - 274.0).abs() < 1.0, "u = {u}");
        // frozen limit
        assert!(most_probable_speed(1e-30, m) > 0.0);
        assert!(most_probable_speed(1e-30, m) < 1e-3);
    }

    #[test]
    fn regime_warnings() {
        let mut d = drive_with_detunings(1.0e9, 1.0e9, 0.0, 0.0);
        d.rabi_p1 = Complex64::new(100.0, 0.0);
        d.rabi_p2 = Complex64::new(1.0, 0.0);
        assert!(validate_regime(&d).is_empty());

        d.rabi_p2 = d.rabi_p1;
        let w = validate_regime(&d);
        assert!(matches!(w[0], RegimeWarning::PumpHierarchyViolated { .. }));

        let mut d2 = drive_with_detunings(1.0e9, 1.0e9, 0.0, 0.0);
        d2.delta1 += 1.0; // 1 rad/s at 1e9 scale
        let w2 = validate_regime(&d2);
        assert!(w2
            .iter()
            .any(|w| matches!(w, RegimeWarning::TwoPhotonClosureBroken { .. })));
    }

    proptest! {
        #[test]
        fn relaxation_real_parts(g in 1e5f64..1e10, gg in 1e5f64..1e10) {
            let rates = relaxation_rates(
                &system(g, gg),
                &drive_with_detunings(1.0e8, 2.0e8, 3.0e7, -7.0e7),
            );
            prop_assert!((rates.g21.re - g).abs() <= 1e-12 * g);
            prop_assert!((rates.g31.re - g).abs() <= 1e-12 * g);
            prop_assert!((rates.g42.re - (2.0 * gg + g)).abs() <= 1e-12 * (2.0 * gg + g));
            prop_assert!((rates.g43.re - (2.0 * gg + g)).abs() <= 1e-12 * (2.0 * gg + g));
            prop_assert!((rates.g41.re - 2.0 * gg).abs() <= 1e-12 * 2.0 * gg);
        }

        #[test]
        fn speed_monotone(t1 in 1e-3f64..1e3, dt in 1e-3f64..1e3,
                          m1 in 1e-27f64..1e-24, dm in 1e-27f64..1e-24) {
            let m = 1.4e-25;
            prop_assert!(most_probable_speed(t1 + dt, m) > most_probable_speed(t1, m));
            prop_assert!(most_probable_speed(300.0, m1 + dm) < most_probable_speed(300.0, m1));
        }
    }
}
