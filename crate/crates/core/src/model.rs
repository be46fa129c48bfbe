//! Domain types, unit conventions and pulse envelopes.
//!
//! Every quantity in the crate uses one unit system: energies in meV, times in
//! ps and angular frequencies in rad/ps. The conversion between an energy and
//! an angular frequency always goes through [`HBAR`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduced Planck constant in meV·ps.
pub const HBAR: f64 = 0.658_211_956_9;

/// Number of standard deviations at which Gaussian tails are cut.
pub const GAUSSIAN_CUTOFF: f64 = 8.0;

/// The single conversion point between energies and angular frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnitSystem {
    pub hbar: f64,
}

impl Default for UnitSystem {
    fn default() -> Self {
        UnitSystem { hbar: HBAR }
    }
}

impl UnitSystem {
    /// meV -> rad/ps
    pub fn energy_to_angular(&self, energy: f64) -> f64 {
        energy / self.hbar
    }

    /// rad/ps -> meV
    pub fn angular_to_energy(&self, omega: f64) -> f64 {
        omega * self.hbar
    }
}

/// meV -> rad/ps with the crate-wide ħ.
pub fn mev_to_rad_per_ps(energy: f64) -> f64 {
    energy / HBAR
}

/// rad/ps -> meV with the crate-wide ħ.
pub fn rad_per_ps_to_mev(omega: f64) -> f64 {
    omega * HBAR
}

/// Converts the intensity FWHM of a Gaussian pulse into the standard
/// deviation of its field envelope, `tau_p = 2 sqrt(ln 2) sigma`.
pub fn fwhm_to_sigma(tau_p: f64) -> Result<f64> {
    if !(tau_p > 0.0) || !tau_p.is_finite() {
        return Err(Error::Domain(format!(
            "pulse FWHM must be positive and finite, got {tau_p}"
        )));
    }
    Ok(tau_p / (2.0 * std::f64::consts::LN_2.sqrt()))
}

/// Inverse of [`fwhm_to_sigma`].
pub fn sigma_to_fwhm(sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::Domain(format!(
            "field standard deviation must be positive and finite, got {sigma}"
        )));
    }
    Ok(2.0 * std::f64::consts::LN_2.sqrt() * sigma)
}

/// Temporal profile of the drive.
///
/// `FlatTop` has a plateau of length `duration` centred on the pulse centre
/// and half-Gaussian edges of standard deviation `ramp / 4`, cut after
/// `2 * ramp` like the Gaussian shape is cut after eight standard deviations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PulseShape {
    Gaussian { sigma: f64 },
    FlatTop { duration: f64, ramp: f64 },
}

/// A single drive pulse in the rotating frame of its own carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub shape: PulseShape,
    /// Pulse area in radians (time integral of the Rabi envelope).
    pub area: f64,
    /// Pulse centre in ps.
    pub center: f64,
    /// Laser minus transition energy in meV; positive means blue detuned.
    pub detuning: f64,
}

impl PulseSpec {
    pub fn gaussian(area: f64, sigma: f64) -> Self {
        PulseSpec {
            shape: PulseShape::Gaussian { sigma },
            area,
            center: 0.0,
            detuning: 0.0,
        }
    }

    /// Gaussian pulse given by its intensity FWHM in ps.
    pub fn gaussian_fwhm(area: f64, fwhm: f64) -> Result<Self> {
        Ok(Self::gaussian(area, fwhm_to_sigma(fwhm)?))
    }

    pub fn flat_top(area: f64, duration: f64, ramp: f64) -> Self {
        PulseSpec {
            shape: PulseShape::FlatTop { duration, ramp },
            area,
            center: 0.0,
            detuning: 0.0,
        }
    }

    /// Flat-top pulse whose plateau Rabi energy is `rabi_mev`.
    pub fn flat_top_with_rabi(rabi_mev: f64, duration: f64, ramp: f64) -> Self {
        let width = flat_top_equivalent_width(duration, ramp);
        Self::flat_top(mev_to_rad_per_ps(rabi_mev) * width, duration, ramp)
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = center;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_area(mut self, area: f64) -> Self {
        self.area = area;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.area >= 0.0) || !self.area.is_finite() {
            return Err(Error::Domain(format!(
                "pulse area must be >= 0, got {}",
                self.area
            )));
        }
        if !self.center.is_finite() || !self.detuning.is_finite() {
            return Err(Error::Domain(
                "pulse centre and detuning must be finite".into(),
            ));
        }
        match self.shape {
            PulseShape::Gaussian { sigma } => {
                if !(sigma > 0.0) || !sigma.is_finite() {
                    return Err(Error::Domain(format!("sigma must be > 0, got {sigma}")));
                }
            }
            PulseShape::FlatTop { duration, ramp } => {
                if !(duration > 0.0) || !duration.is_finite() {
                    return Err(Error::Domain(format!(
                        "duration must be > 0, got {duration}"
                    )));
                }
                if !(ramp >= 0.0) || !(ramp < duration / 2.0) {
                    return Err(Error::Domain(format!(
                        "ramp must satisfy 0 <= ramp < duration/2, got {ramp}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Laser minus transition frequency in rad/ps.
    pub fn detuning_rad(&self) -> f64 {
        mev_to_rad_per_ps(self.detuning)
    }

    /// Maximum of the envelope in rad/ps.
    pub fn peak_rabi(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian { sigma } => self.area / (2.0 * PI * sigma * sigma).sqrt(),
            PulseShape::FlatTop { duration, ramp } => {
                self.area / flat_top_equivalent_width(duration, ramp)
            }
        }
    }

    /// Shortest time scale on which the envelope changes.
    pub fn time_scale(&self) -> f64 {
        match self.shape {
            PulseShape::Gaussian { sigma } => sigma,
            PulseShape::FlatTop { duration, ramp } => {
                if ramp > 0.0 {
                    ramp / 4.0
                } else {
                    duration
                }
            }
        }
    }

    /// Instantaneous Rabi rate Ω₀(t) in rad/ps.
    ///
    /// The optical carrier never appears: the rotating frame at the laser
    /// frequency leaves a real, non-negative envelope.
    pub fn envelope(&self, t: f64) -> f64 {
        if self.area == 0.0 {
            return 0.0;
        }
        let x = t - self.center;
        match self.shape {
            PulseShape::Gaussian { sigma } => {
                if x.abs() > GAUSSIAN_CUTOFF * sigma {
                    return 0.0;
                }
                self.peak_rabi() * (-0.5 * x * x / (sigma * sigma)).exp()
            }
            PulseShape::FlatTop { duration, ramp } => {
                let half = 0.5 * duration;
                let edge = x.abs() - half;
                if edge <= 0.0 {
                    return self.peak_rabi();
                }
                if ramp == 0.0 || edge > 2.0 * ramp {
                    return 0.0;
                }
                let s = ramp / 4.0;
                self.peak_rabi() * (-0.5 * edge * edge / (s * s)).exp()
            }
        }
    }

    /// Interval outside of which the envelope vanishes.
    pub fn support(&self) -> (f64, f64) {
        let half = match self.shape {
            PulseShape::Gaussian { sigma } => GAUSSIAN_CUTOFF * sigma,
            PulseShape::FlatTop { duration, ramp } => 0.5 * duration + 2.0 * ramp,
        };
        (self.center - half, self.center + half)
    }
}

/// Plateau length that, multiplied by the plateau height, gives the area of a
/// flat-top pulse with half-Gaussian edges.
fn flat_top_equivalent_width(duration: f64, ramp: f64) -> f64 {
    let s = ramp / 4.0;
    let cut = 2.0 * ramp;
    let edge = if s > 0.0 {
        // area of one truncated half-Gaussian edge
        s * (PI / 2.0).sqrt() * erf(cut / (s * std::f64::consts::SQRT_2))
    } else {
        0.0
    };
    duration + 2.0 * edge
}

/// Free-function form of [`PulseSpec::envelope`].
pub fn envelope(pulse: &PulseSpec, t: f64) -> f64 {
    pulse.envelope(t)
}

/// Free-function form of [`PulseSpec::support`].
pub fn pulse_support(pulse: &PulseSpec) -> (f64, f64) {
    pulse.support()
}

// Abramowitz-Stegun 7.1.26 is too coarse for the 1e-9 area tolerance, so the
// error function is evaluated from its series / continued fraction.
fn erf(x: f64) -> f64 {
    if x < 0.0 {
        return -erf(-x);
    }
    if x < 3.0 {
        // Maclaurin series, converges quickly for moderate x.
        let mut sum = x;
        let mut term = x;
        let x2 = x * x;
        let mut n = 0.0;
        loop {
            n += 1.0;
            term *= -x2 / n;
            let add = term / (2.0 * n + 1.0);
            sum += add;
            if add.abs() < 1e-17 * sum.abs() {
                break;
            }
        }
        sum * 2.0 / PI.sqrt()
    } else {
        // Lentz continued fraction for erfc.
        let x2 = x * x;
        let tiny = 1e-300;
        let mut f = x;
        let mut c = x;
        let mut d = 0.0;
        for k in 1..200 {
            let a = k as f64 / 2.0;
            d = x + a * d;
            if d.abs() < tiny {
                d = tiny;
            }
            d = 1.0 / d;
            c = x + a / c;
            if c.abs() < tiny {
                c = tiny;
            }
            let delta = c * d;
            f *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        1.0 - (-x2).exp() / (f * PI.sqrt())
    }
}

/// Emitter parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams {
    /// Radiative decay rate in 1/ps.
    pub gamma: f64,
    /// Extra pure-dephasing rate of the coherence in 1/ps.
    pub dephasing: f64,
    /// Simulation horizon in ps. `None` means pulse end plus three lifetimes.
    pub t_end: Option<f64>,
}

impl Default for SystemParams {
    fn default() -> Self {
        SystemParams {
            gamma: 1.0 / 65.0,
            dephasing: 0.0,
            t_end: None,
        }
    }
}

impl SystemParams {
    pub fn with_lifetime(lifetime: f64) -> Self {
        SystemParams {
            gamma: 1.0 / lifetime,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0) || !self.gamma.is_finite() {
            return Err(Error::Domain(format!(
                "gamma must be >= 0, got {}",
                self.gamma
            )));
        }
        if !(self.dephasing >= 0.0) || !self.dephasing.is_finite() {
            return Err(Error::Domain(format!(
                "dephasing must be >= 0, got {}",
                self.dephasing
            )));
        }
        Ok(())
    }

    /// Horizon for a given pulse; explicit `t_end` must lie past the pulse.
    pub fn horizon(&self, pulse: &PulseSpec) -> Result<f64> {
        let (_, stop) = pulse.support();
        match self.t_end {
            Some(t) if t > stop => Ok(t),
            Some(t) => Err(Error::Config(format!(
                "t_end = {t} ps does not lie after the pulse end {stop} ps"
            ))),
            None if self.gamma > 0.0 => Ok(stop + 3.0 / self.gamma),
            None => Err(Error::Config("t_end is required when gamma = 0".into())),
        }
    }
}

/// State of the {|g>, |x>} system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityMatrix {
    pub rho_gg: f64,
    pub rho_xx: f64,
    /// ⟨g|ρ|x⟩
    pub rho_gx: Complex64,
}

impl DensityMatrix {
    pub fn ground() -> Self {
        DensityMatrix {
            rho_gg: 1.0,
            rho_xx: 0.0,
            rho_gx: Complex64::new(0.0, 0.0),
        }
    }

    pub fn excited() -> Self {
        DensityMatrix {
            rho_gg: 0.0,
            rho_xx: 1.0,
            rho_gx: Complex64::new(0.0, 0.0),
        }
    }

    pub fn trace(&self) -> f64 {
        self.rho_gg + self.rho_xx
    }

    /// Smallest eigenvalue of the 2x2 Hermitian matrix.
    pub fn min_eigenvalue(&self) -> f64 {
        let mean = 0.5 * (self.rho_gg + self.rho_xx);
        let diff = 0.5 * (self.rho_gg - self.rho_xx);
        mean - (diff * diff + self.rho_gx.norm_sqr()).sqrt()
    }

    /// Checks the trace, positivity and finiteness invariants.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.rho_gg.is_finite()
            && self.rho_xx.is_finite()
            && self.rho_gx.re.is_finite()
            && self.rho_gx.im.is_finite()
            && (self.trace() - 1.0).abs() <= tol
            && self.rho_gg * self.rho_xx >= self.rho_gx.norm_sqr() - tol
    }
}
