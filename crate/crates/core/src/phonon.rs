//! LA-phonon coupling through the deformation potential.
//!
//! For a spherical dot with Gaussian electron and hole wavefunctions and a
//! linear acoustic dispersion the spectral density has the closed form
//!
//! ```text
//! J(ω) = ω³ / (4π² ρ ħ c⁵) · (D_e exp(-ω²ℓ_e²/4c²) - D_h exp(-ω²ℓ_h²/4c²))²
//! ```
//!
//! The exact (non-Markovian) phonon dynamics is not modelled. Instead the
//! phonons enter the master equation as a pure-dephasing rate
//! `(π/2) J(Ω) coth(ħΩ / 2k_BT)` evaluated at the instantaneous Rabi frequency
//! Ω. This weak-coupling rate reproduces the excitation-induced damping of
//! Rabi rotations qualitatively; the phonon sideband amplitudes it produces
//! are not quantitative. The polaron shift is absorbed into the transition
//! energy, so "resonant" always means resonant with the polaron-shifted line.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HBAR;

/// Boltzmann constant in meV/K.
pub const K_B: f64 = 0.086_173_332_62;
const EV: f64 = 1.602_176_634e-19;
/// ħ in J·s, consistent with [`HBAR`].
const HBAR_SI: f64 = HBAR * 1e-3 * EV * 1e-12;

/// Material and dot parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhononParams {
    /// kg/m³
    pub mass_density: f64,
    /// m/s
    pub sound_speed: f64,
    /// eV
    pub def_potential_e: f64,
    /// eV
    pub def_potential_h: f64,
    /// Electron localisation length in nm.
    pub loc_length_e: f64,
    /// Hole localisation length in nm.
    pub loc_length_h: f64,
    /// K
    pub temperature: f64,
}

impl Default for PhononParams {
    /// GaAs values for a 5 nm spherical dot at 4.2 K.
    fn default() -> Self {
        PhononParams {
            mass_density: 5370.0,
            sound_speed: 5110.0,
            def_potential_e: 7.0,
            def_potential_h: -3.5,
            loc_length_e: 5.0,
            loc_length_h: 5.0,
            temperature: 4.2,
        }
    }
}

impl PhononParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("mass_density", self.mass_density),
            ("sound_speed", self.sound_speed),
            ("loc_length_e", self.loc_length_e),
            ("loc_length_h", self.loc_length_h),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Domain(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(self.temperature >= 0.0) || !self.temperature.is_finite() {
            return Err(Error::Domain(format!(
                "temperature must be >= 0, got {}",
                self.temperature
            )));
        }
        if !self.def_potential_e.is_finite() || !self.def_potential_h.is_finite() {
            return Err(Error::Domain(
                "deformation potentials must be finite".into(),
            ));
        }
        Ok(())
    }

    /// Same parameters with both deformation potentials multiplied by `c`.
    pub fn scale_coupling(mut self, c: f64) -> Self {
        self.def_potential_e *= c;
        self.def_potential_h *= c;
        self
    }

    /// `J(ω)` in 1/ps for `ω` in rad/ps. Negative frequencies are rejected.
    pub fn spectral_density(&self, omega: f64) -> Result<f64> {
        if !(omega >= 0.0) {
            return Err(Error::Domain(format!("omega must be >= 0, got {omega}")));
        }
        Ok(self.spectral_density_unchecked(omega))
    }

    pub(crate) fn spectral_density_unchecked(&self, omega: f64) -> f64 {
        let w = omega * 1e12;
        let c = self.sound_speed;
        let le = self.loc_length_e * 1e-9;
        let lh = self.loc_length_h * 1e-9;
        let form_e = (-(w * le).powi(2) / (4.0 * c * c)).exp();
        let form_h = (-(w * lh).powi(2) / (4.0 * c * c)).exp();
        let coupling = (self.def_potential_e * form_e - self.def_potential_h * form_h) * EV;
        let j = w.powi(3) * coupling * coupling
            / (4.0 * PI * PI * self.mass_density * HBAR_SI * c.powi(5));
        j * 1e-12
    }

    /// Frequency (rad/ps) above which J has dropped below ~1e-30 of its scale.
    pub fn cutoff_frequency(&self) -> f64 {
        let l = self.loc_length_e.min(self.loc_length_h) * 1e-9;
        12.0 * (2.0f64).sqrt() * self.sound_speed / l * 1e-12
    }

    /// `ħ ∫₀^∞ J(ω)/ω dω` in meV.
    pub fn polaron_shift(&self) -> Result<f64> {
        self.validate()?;
        let upper = self.cutoff_frequency();
        let integral = quadrature::adaptive(
            |w| {
                if w == 0.0 {
                    0.0
                } else {
                    self.spectral_density_unchecked(w) / w
                }
            },
            0.0,
            upper,
            1e-10,
            1e-8,
        )?;
        Ok(HBAR * integral)
    }

    /// Weak-coupling dephasing rate `(π/2) J(Ω) coth(ħΩ / 2k_BT)` in 1/ps.
    pub fn markovian_dephasing_rate(&self, rabi: f64) -> f64 {
        if !(rabi > 0.0) {
            return 0.0;
        }
        let j = self.spectral_density_unchecked(rabi);
        let x = HBAR * rabi / (2.0 * K_B * self.temperature);
        0.5 * PI * j / x.tanh()
    }
}

/// Free-function form of [`PhononParams::spectral_density`].
pub fn spectral_density(p: &PhononParams, omega: f64) -> Result<f64> {
    p.spectral_density(omega)
}

/// Free-function form of [`PhononParams::polaron_shift`].
pub fn polaron_shift(p: &PhononParams) -> Result<f64> {
    p.polaron_shift()
}

/// Free-function form of [`PhononParams::markovian_dephasing_rate`].
pub fn markovian_dephasing_rate(p: &PhononParams, rabi: f64) -> f64 {
    p.markovian_dephasing_rate(rabi)
}

pub mod quadrature {
    //! Globally adaptive Gauss-Kronrod (7/15) quadrature.
    #![allow(clippy::excessive_precision)]

    use crate::error::{Error, Result};

    const XGK: [f64; 8] = [
        0.991_455_371_120_812_639_206_854_697_526_329,
        0.949_107_912_342_758_524_526_189_684_047_851,
        0.864_864_423_359_769_072_789_712_788_640_926,
        0.741_531_185_599_394_439_863_864_773_280_788,
        0.586_087_235_467_691_130_294_144_845_693_013,
        0.405_845_151_377_397_166_906_606_412_076_961,
        0.207_784_955_007_898_467_600_689_403_773_245,
        0.000_000_000_000_000_000_000_000_000_000_000,
    ];
    const WGK: [f64; 8] = [
        0.022_935_322_010_529_224_963_732_008_058_970,
        0.063_092_092_629_978_553_290_700_663_189_204,
        0.104_790_010_322_250_183_839_876_322_541_518,
        0.140_653_259_715_525_918_745_189_590_510_238,
        0.169_004_726_639_267_902_826_583_426_598_550,
        0.190_350_578_064_785_409_913_256_402_421_014,
        0.204_432_940_075_298_892_414_161_999_234_649,
        0.209_482_141_084_727_828_012_999_174_891_714,
    ];
    const WG: [f64; 4] = [
        0.129_484_966_168_869_693_270_611_432_679_082,
        0.279_705_391_489_276_667_901_467_771_423_780,
        0.381_830_050_505_118_944_950_369_775_488_975,
        0.417_959_183_673_469_387_755_102_040_816_327,
    ];

    const MAX_INTERVALS: usize = 500;

    fn gk15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let fc = f(c);
        let mut kronrod = fc * WGK[7];
        let mut gauss = fc * WG[3];
        for j in 0..7 {
            let x = h * XGK[j];
            let pair = f(c - x) + f(c + x);
            kronrod += WGK[j] * pair;
            if j % 2 == 1 {
                gauss += WG[j / 2] * pair;
            }
        }
        (kronrod * h, ((kronrod - gauss) * h).abs())
    }

    /// Integrates `f` over `[a, b]` until the estimated error is below
    /// `max(abs_tol, rel_tol * |I|)`.
    pub fn adaptive(
        f: impl Fn(f64) -> f64,
        a: f64,
        b: f64,
        abs_tol: f64,
        rel_tol: f64,
    ) -> Result<f64> {
        let mut pieces = vec![(a, b, gk15(&f, a, b))];
        loop {
            let total: f64 = pieces.iter().map(|p| p.2 .0).sum();
            let error: f64 = pieces.iter().map(|p| p.2 .1).sum();
            if !total.is_finite() {
                return Err(Error::Numerical(format!(
                    "quadrature over [{a}, {b}] produced a non-finite value"
                )));
            }
            if error <= abs_tol.max(rel_tol * total.abs()) {
                return Ok(total);
            }
            if pieces.len() >= MAX_INTERVALS {
                return Err(Error::Numerical(format!(
                    "quadrature over [{a}, {b}] did not converge: estimate {total:e}, \
                     error {error:e} after {} subintervals",
                    pieces.len()
                )));
            }
            let (worst, _) = pieces
                .iter()
                .enumerate()
                .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
                .expect("at least one interval");
            let (lo, hi, _) = pieces.swap_remove(worst);
            let mid = 0.5 * (lo + hi);
            pieces.push((lo, mid, gk15(&f, lo, mid)));
            pieces.push((mid, hi, gk15(&f, mid, hi)));
        }
    }
}
