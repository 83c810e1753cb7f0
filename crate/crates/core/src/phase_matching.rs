//! Beam geometry, wave-vector mismatch, signal dispersion and the sinc
//! phase-matching envelope.
//!
//! The geometry keeps full small-angle cosine projections so the real
//! crossed-beam layout is representable; the collinear 1-D treatment is
//! recovered at zero angles. The transverse mismatch is computed and
//! reported as metadata but does not enter the 1-D correlation model.

use num_complex::Complex64;

use crate::biphoton::{g2_closed_form, tau_grid, DopplerQuadrature};
use crate::constants::C_LIGHT;
use crate::error::{Result, SfwmError};
use crate::model::{AtomicSystem, FieldDrive};

/// Propagation direction of each field along z (+1 forward, -1 backward).
/// The default layout counter-propagates the pumps (p1 forward, p2 backward)
/// and emits signal 1 along pump 1, signal 2 along pump 2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationSigns {
    pub p1: f64,
    pub p2: f64,
    pub s1: f64,
    pub s2: f64,
}

impl Default for PropagationSigns {
    fn default() -> Self {
        PropagationSigns {
            p1: 1.0,
            p2: -1.0,
            s1: 1.0,
            s2: -1.0,
        }
    }
}

/// Crossed-beam layout. Angles are measured between beam lines:
/// `alpha` between pump 1 and signal 2, `beta` between pump 2 and signal 1,
/// `pump_angle` between the two pumps. In the unit-vector realization pump 1
/// defines the z axis, pump 2 and signal 2 tilt toward +x, and signal 1 sits
/// at the signed angle `pump_angle - beta` from z.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamGeometry {
    pub alpha: f64,
    pub beta: f64,
    pub pump_angle: f64,
    pub signs: PropagationSigns,
}

impl BeamGeometry {
    pub fn counter_propagating(alpha: f64, beta: f64, pump_angle: f64) -> Self {
        BeamGeometry {
            alpha,
            beta,
            pump_angle,
            signs: PropagationSigns::default(),
        }
    }

    pub fn collinear() -> Self {
        Self::counter_propagating(0.0, 0.0, 0.0)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("pump_angle", self.pump_angle),
        ] {
            if !(0.0..std::f64::consts::FRAC_PI_2).contains(&a) {
                return Err(SfwmError::InvalidParameter(format!(
                    "angle {name} = {a} outside [0, pi/2)"
                )));
            }
        }
        for (name, s) in [
            ("p1", self.signs.p1),
            ("p2", self.signs.p2),
            ("s1", self.signs.s1),
            ("s2", self.signs.s2),
        ] {
            if s != 1.0 && s != -1.0 {
                return Err(SfwmError::InvalidParameter(format!(
                    "propagation sign {name} = {s} not +-1"
                )));
            }
        }
        Ok(())
    }

    /// (x, z) direction unit vectors for p1, p2, s1, s2.
    pub fn unit_vectors(&self) -> [[f64; 2]; 4] {
        let s = &self.signs;
        let th_s1 = self.pump_angle - self.beta;
        [
            [0.0, s.p1],
            [self.pump_angle.sin(), s.p2 * self.pump_angle.cos()],
            [th_s1.sin(), s.s1 * th_s1.cos()],
            [self.alpha.sin(), s.s2 * self.alpha.cos()],
        ]
    }
}

/// Complex wavenumbers of the four fields (rad/m).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub p1: Complex64,
    pub p2: Complex64,
    pub s1: Complex64,
    pub s2: Complex64,
}

impl Wavenumbers {
    /// Vacuum dispersion at the drive's central frequencies.
    pub fn vacuum(drive: &FieldDrive) -> Wavenumbers {
        Wavenumbers {
            p1: Complex64::new(drive.omega_p1 / C_LIGHT, 0.0),
            p2: Complex64::new(drive.omega_p2 / C_LIGHT, 0.0),
            s1: Complex64::new(drive.omega_s1 / C_LIGHT, 0.0),
            s2: Complex64::new(drive.omega_s2 / C_LIGHT, 0.0),
        }
    }
}

/// First-order dispersion k = omega/c + (omega/2c) chi1 of a signal field.
/// A purely imaginary chi1 (absorption only) leaves Re k at omega/c.
pub fn signal_wavenumber(omega: f64, chi1: Complex64) -> Complex64 {
    omega / C_LIGHT + chi1 * (omega / (2.0 * C_LIGHT))
}

/// Longitudinal (z) and transverse (x) components of the momentum mismatch
/// delta_k = k_p1 + k_p2 - k_s1 - k_s2 between absorbed pump photons and
/// emitted signal photons, with each wave vector projected along its
/// propagation direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WavevectorMismatch {
    pub longitudinal: Complex64,
    pub transverse: Complex64,
}

pub fn wavevector_mismatch(geometry: &BeamGeometry, ks: &Wavenumbers) -> WavevectorMismatch {
    let u = geometry.unit_vectors();
    let fields = [(ks.p1, 1.0), (ks.p2, 1.0), (ks.s1, -1.0), (ks.s2, -1.0)];
    let mut x = Complex64::new(0.0, 0.0);
    let mut z = Complex64::new(0.0, 0.0);
    for (i, (k, sign)) in fields.iter().enumerate() {
        x += k * u[i][0] * *sign;
        z += k * u[i][1] * *sign;
    }
    WavevectorMismatch {
        longitudinal: z,
        transverse: x,
    }
}

fn complex_sinc(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Phase-matching envelope sinc(delta_k L / 2) exp(i k_sum L / 2), where
/// `k_sum` is the longitudinal sum k_s1 + k_s2 entering the printed phase
/// factor (pass zero when only the envelope magnitude matters).
pub fn phase_matching_function(delta_k: Complex64, k_sum: Complex64, length: f64) -> Complex64 {
    debug_assert!(length > 0.0);
    let half = 0.5 * length;
    complex_sinc(delta_k * half) * (Complex64::new(0.0, 1.0) * k_sum * half).exp()
}

/// Result of the kernel-width comparison underlying the delta-function
/// approximation of the phase-matching transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaApproxReport {
    /// Equivalent width (L1/Linf) of the time-domain phase-matching kernel.
    pub kernel_width: f64,
    /// Equivalent width of the G2 correlation trace.
    pub correlation_width: f64,
    pub ratio: f64,
    /// Set when the kernel is no longer narrow against the correlation
    /// (ratio above 0.1), i.e. the delta approximation is degraded.
    pub degraded: bool,
}

/// Flag threshold for [`delta_approximation_check`].
pub const DELTA_APPROX_RATIO_LIMIT: f64 = 0.1;

/// Numerically transforms the phase-matching envelope over the signal
/// bandwidth and compares the resulting kernel width to the correlation
/// width of the closed-form G2 trace.
///
/// `bandwidth` is the angular full width of the signal spectrum the kernel
/// is evaluated over; the frequency window also covers the sinc decay.
pub fn delta_approximation_check(
    system: &AtomicSystem,
    drive: &FieldDrive,
    geometry: &BeamGeometry,
    quad: &DopplerQuadrature,
    bandwidth: f64,
) -> Result<DeltaApproxReport> {
    geometry.validate()?;
    // Frequency window: at least the signal bandwidth, and wide enough to
    // see many sinc lobes of the kernel.
    let u = geometry.unit_vectors();
    let slope = (u[2][1].abs() + u[3][1].abs()) / C_LIGHT; // d(delta_k_z)/d(delta)
    let lobe = 2.0 * std::f64::consts::PI / (system.length * slope.max(1e-300));
    let half_window = (0.5 * bandwidth).max(40.0 * lobe);
    let n_omega = 8192;
    let step = 2.0 * half_window / (n_omega - 1) as f64;

    let phi = |delta: f64| -> Complex64 {
        let ks = Wavenumbers {
            p1: Complex64::new(drive.omega_p1 / C_LIGHT, 0.0),
            p2: Complex64::new(drive.omega_p2 / C_LIGHT, 0.0),
            s1: Complex64::new((drive.omega_s1 - delta) / C_LIGHT, 0.0),
            s2: Complex64::new((drive.omega_s2 + delta) / C_LIGHT, 0.0),
        };
        let mm = wavevector_mismatch(geometry, &ks);
        // Global unit-modulus phase dropped; it shifts the kernel, not its width.
        complex_sinc(mm.longitudinal * (0.5 * system.length))
    };

    // Kernel on a time grid matched to the window (Nyquist) and long enough
    // to hold the kernel support.
    let dt = std::f64::consts::PI / half_window;
    let t_max = 40.0 * system.length * slope.max(1e-300) + 200.0 * dt;
    let n_t = ((2.0 * t_max / dt).ceil() as usize).min(200_000);
    let mut kernel = Vec::with_capacity(n_t);
    for j in 0..n_t {
        let t = -t_max + j as f64 * dt;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n_omega {
            let d = -half_window + i as f64 * step;
            let w = if i == 0 || i == n_omega - 1 { 0.5 } else { 1.0 };
            acc += phi(d) * Complex64::new(0.0, -d * t).exp() * w;
        }
        kernel.push((acc * step).norm());
    }
    let kernel_peak = kernel.iter().cloned().fold(0.0f64, f64::max);
    let kernel_width = kernel.iter().sum::<f64>() * dt / kernel_peak.max(f64::MIN_POSITIVE);

    let tau = tau_grid(0.0, 50e-9, 0.02e-9);
    let trace = g2_closed_form(system, drive, &tau, quad)?;
    let peak = trace.peak().1;
    let correlation_width = trace.g2_unnormalized.iter().sum::<f64>() * 0.02e-9
        / peak.max(f64::MIN_POSITIVE);

    let ratio = kernel_width / correlation_width;
    Ok(DeltaApproxReport {
        kernel_width,
        correlation_width,
        ratio,
        degraded: ratio > DELTA_APPROX_RATIO_LIMIT,
    })
}
