//! Noise floor, normalized cross-correlation, detector response and the
//! non-classicality figures of merit.
//!
//! The dominant measurement noise is Doppler-broadened fluorescence driven
//! by pump 2; its strength enters through a transition coefficient
//! `A = kappa_a * |Omega_p2|` whose proportionality constant is a
//! calibration parameter. The normalized cross-correlation is
//! `g2(tau) = (s * G2(tau) + B) / B`, so its baseline far from the peak
//! tends to 1 and the peak height is set by the signal-to-noise ratio.

use num_complex::Complex64;

use crate::biphoton::{CorrelationTrace, DopplerQuadrature, QUADRATURE_STABILITY_TOL};
use crate::error::{Result, SfwmError};
use crate::model::AtomicSystem;
use crate::susceptibility::chi1_two_level;

/// Fluorescence-noise model: a two-level line driven by pump 2, Doppler
/// averaged over the vapor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    /// Calibration constant linking the transition coefficient to the
    /// pump-2 Rabi frequency: A = kappa_a * |Omega_p2|. Not derivable from
    /// first principles here; exposed in configuration.
    pub kappa_a: f64,
    /// |Omega_p2| (rad/s).
    pub rabi_p2: f64,
    /// Coherence half-width gamma1 of the fluorescing transition (rad/s).
    pub gamma: f64,
    /// Pump-2 detuning delta1' (rad/s), the knob swept in detuning scans.
    pub detuning: f64,
    /// Optical wavenumber omega_p2 / c (rad/m) setting the Doppler shift
    /// k v of the moving atoms.
    pub wavenumber: f64,
    pub doppler: DopplerQuadrature,
}

impl NoiseModel {
    pub fn transition_coefficient(&self) -> f64 {
        self.kappa_a * self.rabi_p2
    }

    pub fn validate(&self) -> Result<()> {
        if self.kappa_a < 0.0 {
            return Err(SfwmError::InvalidParameter(format!(
                "kappa_a = {} must be >= 0",
                self.kappa_a
            )));
        }
        self.doppler.validate()
    }
}

fn averaged_two_level(model: &NoiseModel, nodes: &[(f64, f64)]) -> Complex64 {
    let a = model.transition_coefficient();
    nodes
        .iter()
        .map(|&(v, w)| chi1_two_level(a, model.detuning + model.wavenumber * v, model.gamma) * w)
        .sum()
}

/// Noise factor B: squared modulus of the velocity-averaged two-level
/// response, B = |< A / (delta1'_D - i gamma) >|^2. Exactly quadratic in A.
pub fn noise_factor_b(model: &NoiseModel, system: &AtomicSystem) -> Result<f64> {
    model.validate()?;
    let u = system.most_probable_speed();
    let coarse_nodes = model.doppler.velocity_nodes(u);
    let coarse = averaged_two_level(model, &coarse_nodes).norm_sqr();
    if coarse_nodes.len() == 1 {
        return Ok(coarse);
    }
    let fine = averaged_two_level(model, &model.doppler.doubled().velocity_nodes(u)).norm_sqr();
    let rel = (coarse - fine).abs() / fine.max(f64::MIN_POSITIVE);
    if rel >= QUADRATURE_STABILITY_TOL {
        return Err(SfwmError::QuadratureNotConverged {
            coarse,
            fine,
            rel_change: rel,
            tolerance: QUADRATURE_STABILITY_TOL,
        });
    }
    Ok(fine)
}

/// A correlation trace on the normalized scale where uncorrelated events
/// sit at baseline 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTrace {
    pub tau: Vec<f64>,
    pub g2: Vec<f64>,
}

impl NormalizedTrace {
    pub fn peak(&self) -> (usize, f64) {
        let mut best = (0, f64::NEG_INFINITY);
        for (i, &g) in self.g2.iter().enumerate() {
            if g > best.1 {
                best = (i, g);
            }
        }
        best
    }

    pub fn step(&self) -> f64 {
        if self.tau.len() > 1 {
            self.tau[1] - self.tau[0]
        } else {
            0.0
        }
    }
}

/// Total normalized correlation (s G2 + B)/B. `B = 0` is the noise-free
/// idealization and is rejected so callers handle it explicitly.
pub fn total_g2(
    trace: &CorrelationTrace,
    noise_floor: f64,
    signal_scale: f64,
) -> Result<NormalizedTrace> {
    if noise_floor == 0.0 {
        return Err(SfwmError::ZeroNoiseFloor);
    }
    if noise_floor < 0.0 || !noise_floor.is_finite() {
        return Err(SfwmError::InvalidParameter(format!(
            "noise floor B = {noise_floor} must be positive and finite"
        )));
    }
    Ok(NormalizedTrace {
        tau: trace.tau.clone(),
        g2: trace
            .g2_unnormalized
            .iter()
            .map(|&g| (signal_scale * g + noise_floor) / noise_floor)
            .collect(),
    })
}

/// Detector chain response: Gaussian timing jitter of the given FWHM
/// followed by a box average over one histogram bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorModel {
    /// Timing response FWHM (s); zero for an ideal detector.
    pub response_fwhm: f64,
    /// Histogram / delay-scan step size (s).
    pub bin_width: f64,
    /// Photon detection probability in [0, 1].
    pub efficiency: f64,
    /// Dark counts per second.
    pub dark_rate: f64,
}

impl DetectorModel {
    pub fn validate(&self) -> Result<()> {
        let mut check = |ok: bool, what: String| {
            if ok {
                Ok(())
            } else {
                Err(SfwmError::InvalidParameter(what))
            }
        };
        check(
            self.response_fwhm >= 0.0,
            format!("response_fwhm = {} must be >= 0", self.response_fwhm),
        )?;
        check(
            self.bin_width > 0.0,
            format!("bin_width = {} must be > 0", self.bin_width),
        )?;
        check(
            (0.0..=1.0).contains(&self.efficiency),
            format!("efficiency = {} outside [0, 1]", self.efficiency),
        )?;
        check(
            self.dark_rate >= 0.0,
            format!("dark_rate = {} must be >= 0", self.dark_rate),
        )
    }
}

/// Convolves a normalized trace with the detector response. The discrete
/// kernel is normalized to unit sum, so constant regions (the baseline) are
/// preserved exactly; edges clamp to the boundary value.
pub fn convolve_detector(trace: &NormalizedTrace, det: &DetectorModel) -> Result<NormalizedTrace> {
    det.validate()?;
    let h = trace.step();
    if h <= 0.0 {
        return Err(SfwmError::InvalidParameter(
            "trace needs at least two samples".into(),
        ));
    }
    if det.response_fwhm > 0.0 && h > det.response_fwhm / 5.0 {
        return Err(SfwmError::GridTooCoarse {
            context: "detector response sampling",
            required: det.response_fwhm / 5.0,
            actual: h,
        });
    }

    let n = trace.g2.len();
    let clamped = |v: &[f64], i: isize| -> f64 {
        let i = i.clamp(0, n as isize - 1) as usize;
        v[i]
    };

    // Gaussian jitter stage.
    let jittered: Vec<f64> = if det.response_fwhm > 0.0 {
        let sigma = det.response_fwhm / (8.0 * 2.0f64.ln()).sqrt();
        let half = ((5.0 * sigma / h).ceil() as isize).max(1);
        let mut kernel = Vec::with_capacity((2 * half + 1) as usize);
        for k in -half..=half {
            kernel.push((-0.5 * (k as f64 * h / sigma).powi(2)).exp());
        }
        let total: f64 = kernel.iter().sum();
        (0..n as isize)
            .map(|i| {
                let mut acc = 0.0;
                for (j, w) in kernel.iter().enumerate() {
                    acc += w * clamped(&trace.g2, i + j as isize - half);
                }
                acc / total
            })
            .collect()
    } else {
        trace.g2.clone()
    };

    // Box average over one bin.
    let mut width = (det.bin_width / h).round() as isize;
    if width < 1 {
        width = 1;
    }
    if width % 2 == 0 {
        width += 1;
    }
    let half = width / 2;
    let averaged: Vec<f64> = (0..n as isize)
        .map(|i| {
            let mut acc = 0.0;
            for k in -half..=half {
                acc += clamped(&jittered, i + k);
            }
            acc / width as f64
        })
        .collect();

    Ok(NormalizedTrace {
        tau: trace.tau.clone(),
        g2: averaged,
    })
}

/// Cauchy-Schwarz ratio R = g2_cross^2 / (g_auto1 g_auto2); classical fields
/// satisfy R <= 1. `g_cross_sq` is the already-squared cross-correlation.
pub fn cauchy_schwarz_r(g_cross_sq: f64, g_auto1: f64, g_auto2: f64) -> f64 {
    debug_assert!(g_auto1 > 0.0 && g_auto2 > 0.0);
    g_cross_sq / (g_auto1 * g_auto2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioWithUncertainty {
    pub value: f64,
    pub sigma: f64,
}

/// First-order error propagation for the Cauchy-Schwarz ratio from the
/// standard errors of the squared cross-correlation and the two
/// autocorrelations.
pub fn cauchy_schwarz_r_with_uncertainty(
    g_cross_sq: f64,
    sigma_cross_sq: f64,
    g_auto1: f64,
    sigma_auto1: f64,
    g_auto2: f64,
    sigma_auto2: f64,
) -> RatioWithUncertainty {
    let value = cauchy_schwarz_r(g_cross_sq, g_auto1, g_auto2);
    let rel = (sigma_cross_sq / g_cross_sq).powi(2)
        + (sigma_auto1 / g_auto1).powi(2)
        + (sigma_auto2 / g_auto2).powi(2);
    RatioWithUncertainty {
        value,
        sigma: value * rel.sqrt(),
    }
}

/// Pair production rate M = S1 S2 / Rc from the two singles rates and the
/// cross-coincidence rate. Applies when the detected singles are dominated
/// by pair photons (each rate proportional to the true pair rate through
/// one detection efficiency).
pub fn pair_production_rate(s1: f64, s2: f64, rc: f64) -> f64 {
    debug_assert!(rc > 0.0);
    s1 * s2 / rc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::biphoton::{g2_closed_form, tau_grid};
    use crate::constants::TWO_PI_MHZ;
    use crate::presets;
    use proptest::prelude::*;

    fn test_noise(detuning: f64) -> (NoiseModel, AtomicSystem) {
        let p = presets::experiment();
        let mut noise = p.noise.unwrap();
        noise.detuning = detuning;
        (noise, p.system)
    }

    #[test]
    fn noise_factor_zero_and_quadratic() {
        let (mut noise, sys) = test_noise(2.5e3 * TWO_PI_MHZ);
        noise.kappa_a = 0.0;
        assert_eq!(noise_factor_b(&noise, &sys).unwrap(), 0.0);

        noise.kappa_a = 1.0;
        let b1 = noise_factor_b(&noise, &sys).unwrap();
        noise.kappa_a = 2.0;
        let b2 = noise_factor_b(&noise, &sys).unwrap();
        assert!((b2 - 4.0 * b1).abs() <= 1e-12 * b2);
    }

    #[test]
    fn noise_factor_far_detuned_frozen_limit() {
        let (mut noise, mut sys) = test_noise(0.0);
        sys.temperature = 1e-18;
        noise.detuning = 80.0 * noise.gamma;
        let b = noise_factor_b(&noise, &sys).unwrap();
        let a = noise.transition_coefficient();
        let asymptotic = (a / noise.detuning).powi(2);
        assert!((b - asymptotic).abs() / asymptotic < 0.01);
    }

    #[test]
    fn noise_factor_monotone_in_detuning() {
        let mut last = f64::INFINITY;
        for i in 0..=12 {
            let det = (500.0 + 2500.0 * i as f64 / 12.0) * TWO_PI_MHZ; // 0.5..3 GHz
            let (noise, sys) = test_noise(det);
            let b = noise_factor_b(&noise, &sys).unwrap();
            assert!(b < last, "B not decreasing at detuning index {i}");
            last = b;
        }
    }

    fn flat_trace(len: usize, value: f64) -> CorrelationTrace {
        CorrelationTrace {
            tau: (0..len).map(|i| i as f64 * 1e-10).collect(),
            amplitude: vec![num_complex::Complex64::new(0.0, 0.0); len],
            g2_unnormalized: vec![value; len],
            scale: 1.0,
            method: crate::biphoton::TraceMethod::ClosedForm,
        }
    }

    #[test]
    fn total_g2_floor_and_limits() {
        let zero = flat_trace(16, 0.0);
        let g = total_g2(&zero, 1.0, 1.0).unwrap();
        assert!(g.g2.iter().all(|&x| x == 1.0));

        let sig = flat_trace(16, 2.0);
        let g = total_g2(&sig, 1e12, 1.0).unwrap();
        assert!(g.g2.iter().all(|&x| (x - 1.0).abs() < 1e-11));

        assert!(matches!(
            total_g2(&sig, 0.0, 1.0),
            Err(SfwmError::ZeroNoiseFloor)
        ));
    }

    #[test]
    fn total_g2_scaled_to_measured_peak() {
        let p = presets::experiment();
        let tau = tau_grid(-5e-9, 30e-9, 0.02e-9);
        let trace = g2_closed_form(&p.system, &p.drive, &tau, &p.doppler).unwrap();
        let b = noise_factor_b(&p.noise.unwrap(), &p.system).unwrap();
        // fit the display scale so the peak reaches 6.8
        let peak_raw = trace.peak().1;
        let scale = (6.8 - 1.0) * b / peak_raw;
        let g = total_g2(&trace, b, scale).unwrap();
        let peak = g.peak().1;
        assert!((peak - 6.8).abs() < 1e-9);
        assert!((peak * peak - 46.3).abs() < 0.1); // 6.8^2 = 46.24
    }

    #[test]
    fn convolution_identity_and_baseline() {
        let mut trace = NormalizedTrace {
            tau: (0..2000).map(|i| (i as f64 - 1000.0) * 1e-11).collect(),
            g2: vec![1.0; 2000],
        };
        // a delta-ish feature on a baseline of 1
        trace.g2[1000] = 7.0;
        let det = DetectorModel {
            response_fwhm: 0.0,
            bin_width: 1e-11,
            efficiency: 0.5,
            dark_rate: 0.0,
        };
        let out = convolve_detector(&trace, &det).unwrap();
        for (a, b) in trace.g2.iter().zip(&out.g2) {
            assert!((a - b).abs() < 1e-12);
        }

        let det = DetectorModel {
            response_fwhm: 1e-9,
            bin_width: 1e-10,
            efficiency: 0.5,
            dark_rate: 0.0,
        };
        let out = convolve_detector(&trace, &det).unwrap();
        // far from the feature the baseline must be exactly preserved
        for i in (0..400).chain(1600..2000) {
            assert!((out.g2[i] - 1.0).abs() < 1e-9, "baseline drift at {i}");
        }
    }

    #[test]
    fn convolution_broadens_delta_to_fwhm() {
        let n = 4001;
        let h = 2e-11;
        let mut trace = NormalizedTrace {
            tau: (0..n).map(|i| (i as f64 - 2000.0) * h).collect(),
            g2: vec![0.0; n],
        };
        trace.g2[2000] = 1.0;
        let fwhm = 1e-9;
        let det = DetectorModel {
            response_fwhm: fwhm,
            bin_width: h,
            efficiency: 1.0,
            dark_rate: 0.0,
        };
        let out = convolve_detector(&trace, &det).unwrap();
        let peak = out.peak().1;
        let above: Vec<usize> = (0..n).filter(|&i| out.g2[i] >= peak / 2.0).collect();
        let measured = (above.last().unwrap() - above.first().unwrap()) as f64 * h;
        assert!(
            (measured - fwhm).abs() / fwhm < 0.02,
            "measured fwhm {measured:.3e}"
        );
    }

    #[test]
    fn convolution_rejects_coarse_grid() {
        let trace = NormalizedTrace {
            tau: (0..100).map(|i| i as f64 * 1e-9).collect(),
            g2: vec![1.0; 100],
        };
        let det = DetectorModel {
            response_fwhm: 1e-9,
            bin_width: 1e-9,
            efficiency: 1.0,
            dark_rate: 0.0,
        };
        assert!(matches!(
            convolve_detector(&trace, &det),
            Err(SfwmError::GridTooCoarse { .. })
        ));
    }

    #[test]
    fn cauchy_schwarz_values() {
        assert_eq!(cauchy_schwarz_r(1.0, 1.0, 1.0), 1.0);
        assert_eq!(cauchy_schwarz_r(46.3, 1.0, 1.0), 46.3);
        // split thermal light sits exactly on the classical boundary
        assert_eq!(cauchy_schwarz_r(2.0 * 2.0, 2.0, 2.0), 1.0);
    }

    #[test]
    fn cauchy_schwarz_uncertainty_brackets() {
        let r = cauchy_schwarz_r_with_uncertainty(46.3, 2.7, 1.00, 0.04, 1.00, 0.14);
        assert_eq!(r.value, 46.3);
        assert!(r.sigma >= 5.0 && r.sigma <= 12.0, "sigma_R = {}", r.sigma);
    }

    #[test]
    fn pair_rate_values() {
        assert_eq!(pair_production_rate(7.0, 7.0, 7.0), 7.0);
        assert_eq!(pair_production_rate(8000.0, 50000.0, 40.0), 1.0e7);
        assert_eq!(pair_production_rate(8000.0, 50000.0, 4000.0), 1.0e5);
    }

    proptest! {
        /// R is a ratio of ratios: rescaling all raw coincidence counts by a
        /// common factor cancels.
        #[test]
        fn r_invariant_under_count_rescale(
            scale in 0.01f64..100.0,
            c_cross in 10.0f64..1e5,
            c_a1 in 10.0f64..1e5,
            c_a2 in 10.0f64..1e5,
            acc in 1.0f64..1e4,
        ) {
            let g = |c: f64, acc: f64| c / acc;
            let r0 = cauchy_schwarz_r(
                g(c_cross, acc).powi(2),
                g(c_a1, acc),
                g(c_a2, acc),
            );
            let r1 = cauchy_schwarz_r(
                g(scale * c_cross, scale * acc).powi(2),
                g(scale * c_a1, scale * acc),
                g(scale * c_a2, scale * acc),
            );
            prop_assert!((r0 - r1).abs() <= 1e-9 * r0.abs());
        }

        /// large-noise limit drives the normalized correlation to 1 pointwise
        #[test]
        fn noise_dominated_limit(b in 1e6f64..1e12, sig in 0.0f64..10.0) {
            let trace = flat_trace(8, sig);
            let g = total_g2(&trace, b, 1.0).unwrap();
            prop_assert!(g.g2.iter().all(|&x| x >= 1.0 && x - 1.0 <= 10.0 / 1e6 + 1e-12));
        }
    }
}
