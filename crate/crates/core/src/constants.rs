//! Physical constants (CODATA 2018) and unit helpers.
//!
//! Every module takes its constants from here; no magic numbers elsewhere.
//! All frequencies and rates throughout the crate are *angular* (rad/s).
//! Config layers that speak in "MHz x 2pi" convert through
//! [`mhz_2pi_to_angular`] / [`angular_to_mhz_2pi`].

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Boltzmann constant (J/K), exact in the 2019 SI.
pub const K_B: f64 = 1.380_649e-23;

/// Speed of light in vacuum (m/s), exact.
pub const C_LIGHT: f64 = 299_792_458.0;

/// Vacuum permittivity (F/m).
pub const EPSILON_0: f64 = 8.854_187_8128e-12;

/// Atomic mass unit (kg).
pub const AMU: f64 = 1.660_539_066_60e-27;

/// Mass of a Rb-85 atom (kg): 84.911789738 u.
pub const RB85_MASS: f64 = 84.911_789_738 * AMU;

/// One "MHz x 2pi" in angular units (rad/s).
pub const TWO_PI_MHZ: f64 = 2.0 * std::f64::consts::PI * 1.0e6;

/// Convert a rate quoted in MHz x 2pi to angular rad/s.
#[inline]
pub fn mhz_2pi_to_angular(mhz: f64) -> f64 {
    mhz * TWO_PI_MHZ
}

/// Inverse of [`mhz_2pi_to_angular`]. The round trip is exact to 1 ulp.
#[inline]
pub fn angular_to_mhz_2pi(angular: f64) -> f64 {
    angular / TWO_PI_MHZ
}

/// Angular frequency of light at the given vacuum wavelength (m).
#[inline]
pub fn omega_from_wavelength(lambda: f64) -> f64 {
    2.0 * std::f64::consts::PI * C_LIGHT / lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mhz_round_trip_is_1_ulp() {
        for &x in &[3.0, 25.0, 60.0, 210.0, 2500.0, 0.173, 9.99e4] {
            let back = angular_to_mhz_2pi(mhz_2pi_to_angular(x));
            let ulp = f64::EPSILON * x.abs();
            assert!(
                (back - x).abs() <= ulp,
                "round trip of {x} drifted by {} (> 1 ulp)",
                (back - x).abs()
            );
        }
    }

    #[test]
    fn wavelength_conversion() {
        let omega = omega_from_wavelength(780e-9);
        assert!((omega / C_LIGHT - 8.055_366e6).abs() / 8.055e6 < 1e-4);
    }
}
