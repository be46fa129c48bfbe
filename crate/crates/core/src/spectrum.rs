//! Time-integrated emission spectra.
//!
//! `S(ω) = Re Σ_t w_t Σ_τ w_τ G¹(t,τ) e^{-iωτ}` with trapezoid weights on both
//! axes (half weight at τ = 0). Because the transform is linear the t-sum is
//! taken first, leaving a single zero-padded FFT over τ. The FFT frequencies
//! live in the laser frame; they are shifted by the detuning so that 0 on the
//! output axis is the emitter transition, and then averaged over the output
//! bins. Bin averaging (rather than point sampling) keeps the integral of the
//! spectrum exact, so that `∫S dω = π Σ_t w_t G(t,0)` holds up to the part of
//! the spectrum outside the output window.
//!
//! Intensities are in arbitrary "simulator counts" and maps are stored on a
//! linear scale.

use std::io::{BufRead, Write};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::correlation::{trapezoid_weights, CorrelationGrid};
use crate::error::{Error, Result};
use crate::model::HBAR;

/// Output energy axis, `E_m = (m - bins/2) · 2·half_span/bins` for
/// `m = 0..bins`, in meV relative to the transition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrequencyAxis {
    pub half_span: f64,
    pub bins: usize,
}

impl Default for FrequencyAxis {
    fn default() -> Self {
        FrequencyAxis {
            half_span: 8.0,
            bins: 2048,
        }
    }
}

impl FrequencyAxis {
    pub fn bin_width(&self) -> f64 {
        2.0 * self.half_span / self.bins as f64
    }

    pub fn energies(&self) -> Vec<f64> {
        let d = self.bin_width();
        let mid = (self.bins / 2) as f64;
        (0..self.bins).map(|m| (m as f64 - mid) * d).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumOptions {
    pub axis: FrequencyAxis,
    /// Minimum ratio of FFT length to the number of delay samples.
    pub pad_factor: usize,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions {
            axis: FrequencyAxis::default(),
            pad_factor: 4,
        }
    }
}

/// A single spectrum (`sweep_axis == None`, one row) or a stack of spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    /// meV relative to the emitter transition, ascending.
    pub omega_axis: Vec<f64>,
    pub sweep_axis: Option<Vec<f64>>,
    /// One row per sweep value.
    pub values: Vec<Vec<f64>>,
}

impl SpectrumMap {
    pub fn single(omega_axis: Vec<f64>, values: Vec<f64>) -> Self {
        SpectrumMap {
            omega_axis,
            sweep_axis: None,
            values: vec![values],
        }
    }

    pub fn rows(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i]
    }

    /// Row `i` as a one-dimensional spectrum.
    pub fn row_map(&self, i: usize) -> SpectrumMap {
        SpectrumMap::single(self.omega_axis.clone(), self.values[i].clone())
    }

    pub fn bin_width(&self) -> f64 {
        if self.omega_axis.len() < 2 {
            0.0
        } else {
            self.omega_axis[1] - self.omega_axis[0]
        }
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .flatten()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// `∫ S dE` of row `i` by the trapezoid rule, in counts·meV.
    pub fn integral(&self, i: usize) -> f64 {
        trapezoid_weights(&self.omega_axis)
            .iter()
            .zip(&self.values[i])
            .map(|(w, s)| w * s)
            .sum()
    }

    /// Axes ascending, values finite.
    pub fn validate(&self) -> Result<()> {
        if self.omega_axis.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "omega axis must be strictly ascending".into(),
            ));
        }
        if let Some(s) = &self.sweep_axis {
            if s.len() != self.values.len() {
                return Err(Error::Config(
                    "sweep axis length does not match rows".into(),
                ));
            }
            if s.windows(2).any(|w| w[1] < w[0]) {
                return Err(Error::Config("sweep axis must be ascending".into()));
            }
        }
        for row in &self.values {
            if row.len() != self.omega_axis.len() {
                return Err(Error::Config("row length does not match omega axis".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numerical(
                    "spectrum contains non-finite values".into(),
                ));
            }
        }
        Ok(())
    }

    /// Writes the matrix CSV: first row is the omega axis behind an empty
    /// corner cell, first column is the sweep axis (empty for single spectra).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let mut line = String::new();
        for e in &self.omega_axis {
            line.push(',');
            line.push_str(&format_number(*e));
        }
        line.push('\n');
        w.write_all(line.as_bytes())?;
        for (i, row) in self.values.iter().enumerate() {
            line.clear();
            if let Some(s) = &self.sweep_axis {
                line.push_str(&format_number(s[i]));
            }
            for v in row {
                line.push(',');
                line.push_str(&format_number(*v));
            }
            line.push('\n');
            w.write_all(line.as_bytes())?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Config("empty spectrum CSV".into()))??;
        let mut cells = header.split(',');
        if !cells.next().unwrap_or("x").trim().is_empty() {
            return Err(Error::Config(
                "spectrum CSV must start with an empty corner cell".into(),
            ));
        }
        let omega_axis = cells.map(parse_number).collect::<Result<Vec<_>>>()?;
        let mut sweep = Vec::new();
        let mut values = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut cells = line.split(',');
            let first = cells.next().unwrap_or("").trim();
            sweep.push(if first.is_empty() {
                None
            } else {
                Some(parse_number(first)?)
            });
            let row = cells.map(parse_number).collect::<Result<Vec<_>>>()?;
            values.push(row);
        }
        let sweep_axis = if sweep.iter().all(Option::is_some) && !sweep.is_empty() {
            Some(sweep.into_iter().map(|s| s.expect("checked")).collect())
        } else if sweep.iter().all(Option::is_none) {
            None
        } else {
            return Err(Error::Config("sweep column is partially empty".into()));
        };
        let map = SpectrumMap {
            omega_axis,
            sweep_axis,
            values,
        };
        map.validate()?;
        Ok(map)
    }
}

/// Shortest round-trip representation; identical values give identical bytes.
pub fn format_number(x: f64) -> String {
    format!("{x:e}")
}

fn parse_number(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::Config(format!("cannot parse number {s:?}")))
}

/// Spectrum of `G` for a laser detuned by `delta` meV from the transition.
pub fn spectrum_from_g1(g: &CorrelationGrid, delta: f64, opts: &SpectrumOptions) -> SpectrumMap {
    let n_tau = g.tau_grid.len();
    let dtau = g.tau_step();
    let t_weights = trapezoid_weights(&g.t_grid);

    // Σ_t w_t G(t, τ_j), then the τ trapezoid weights.
    let mut column = vec![Complex64::new(0.0, 0.0); n_tau];
    for (i, w) in t_weights.iter().enumerate() {
        for (c, v) in column.iter_mut().zip(g.row(i)) {
            *c += *v * *w;
        }
    }
    let n_fft = (opts.pad_factor.max(1) * n_tau).next_power_of_two();
    let mut buf = vec![Complex64::new(0.0, 0.0); n_fft];
    for (j, c) in column.iter().enumerate() {
        let w = if j == 0 { 0.5 * dtau } else { dtau };
        buf[j] = *c * w;
    }
    let fft: Arc<dyn Fft<f64>> = FftPlanner::new().plan_fft_forward(n_fft);
    fft.process(&mut buf);
    let fine: Vec<f64> = buf.iter().map(|z| z.re).collect();

    // FFT bin k sits at ω = 2πk/(N dτ) (periodic), i.e. at energy k·de in the laser frame.
    let de = HBAR * 2.0 * std::f64::consts::PI / (n_fft as f64 * dtau);
    let axis = opts.axis.energies();
    let width = opts.axis.bin_width();
    let values = axis
        .iter()
        .map(|e| {
            let lo = (e - 0.5 * width - delta) / de;
            let hi = (e + 0.5 * width - delta) / de;
            integrate_periodic_linear(&fine, lo, hi) * de / width
        })
        .collect();
    SpectrumMap::single(axis, values)
}

/// Integral over `[lo, hi]` (index units) of the periodic linear interpolant.
fn integrate_periodic_linear(f: &[f64], lo: f64, hi: f64) -> f64 {
    let n = f.len() as i64;
    let at = |k: i64| f[k.rem_euclid(n) as usize];
    let mut sum = 0.0;
    let mut k = lo.floor() as i64;
    while (k as f64) < hi {
        let u0 = (lo - k as f64).max(0.0);
        let u1 = (hi - k as f64).min(1.0);
        if u1 > u0 {
            let (a, b) = (at(k), at(k + 1));
            sum += (u1 - u0) * a + 0.5 * (b - a) * (u1 * u1 - u0 * u0);
        }
        k += 1;
    }
    sum
}

/// Relative violation of `∫S dω = π Σ_t w_t G(t,0)` for row 0 of `s`.
///
/// Returns 0 when both sides vanish (G ≡ 0).
pub fn sum_rule_check(g: &CorrelationGrid, s: &SpectrumMap) -> f64 {
    sum_rule_error(g.integrated_population(), s.integral(0))
}

/// Sum-rule error from the precomputed population integral and `∫S dE` (meV).
pub fn sum_rule_error(integrated_population: f64, spectrum_integral: f64) -> f64 {
    let lhs = spectrum_integral / HBAR;
    let rhs = std::f64::consts::PI * integrated_population;
    if rhs.abs() < f64::MIN_POSITIVE {
        return if lhs.abs() < 1e-300 {
            0.0
        } else {
            f64::INFINITY
        };
    }
    (lhs - rhs).abs() / rhs.abs()
}

/// Stacks one-dimensional spectra into a map ordered by sweep value.
pub fn assemble_map(mut rows: Vec<(f64, SpectrumMap)>) -> Result<SpectrumMap> {
    let Some(first) = rows.first() else {
        return Err(Error::Config("cannot assemble an empty map".into()));
    };
    let axis = first.1.omega_axis.clone();
    if rows
        .iter()
        .any(|(_, m)| m.omega_axis != axis || m.rows() != 1)
    {
        return Err(Error::Config("rows have mismatched omega axes".into()));
    }
    if rows.iter().any(|(v, _)| !v.is_finite()) {
        return Err(Error::Config("sweep values must be finite".into()));
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let sweep = rows.iter().map(|(v, _)| *v).collect();
    let values = rows
        .into_iter()
        .map(|(_, mut m)| m.values.remove(0))
        .collect();
    Ok(SpectrumMap {
        omega_axis: axis,
        sweep_axis: Some(sweep),
        values,
    })
}
