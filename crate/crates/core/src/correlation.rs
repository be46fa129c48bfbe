//! First-order two-time correlation `G¹(t,τ) = ⟨σ†(t+τ) σ(t)⟩`.
//!
//! For a Markovian generator the quantum regression procedure is exact: the
//! operator `B(0) = σ ρ(t)` is evolved over τ with the same master equation
//! (time argument shifted by `t`, so the pulse is still active if it overlaps
//! `t + τ`) and `G¹(t,τ) = Tr[σ† B(τ)]`. A non-Markovian bath would need a
//! different treatment; the phonon model of this crate is Markovian by
//! construction.
//!
//! Only τ >= 0 is computed. The spectrum takes the real part of the one-sided
//! transform, which supplies the τ < 0 half through `G(t,-τ) = G(t,τ)*`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{
    propagate_with, validate_grid, IntegratorOptions, Liouvillian, Operator2, Stepper,
};
use crate::error::{Error, Result};
use crate::model::{DensityMatrix, PulseSpec, SystemParams};

/// Sampling of the (t, τ) plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    /// Step of the emission-time axis (ps).
    pub t_step: f64,
    /// Step of the delay axis (ps).
    pub tau_step: f64,
    /// Delay window in radiative lifetimes.
    pub tau_lifetimes: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            t_step: 0.5,
            tau_step: 0.25,
            tau_lifetimes: 8.0,
        }
    }
}

impl GridSpec {
    /// Both steps divided by `factor`, same windows.
    pub fn refined(&self, factor: f64) -> GridSpec {
        GridSpec {
            t_step: self.t_step / factor,
            tau_step: self.tau_step / factor,
            ..*self
        }
    }

    /// From the start of the pulse support to the system horizon.
    pub fn t_grid(&self, pulse: &PulseSpec, system: &SystemParams) -> Result<Vec<f64>> {
        let (start, _) = pulse.support();
        let end = system.horizon(pulse)?;
        uniform(start, end, self.t_step)
    }

    pub fn tau_grid(&self, system: &SystemParams) -> Result<Vec<f64>> {
        if !(system.gamma > 0.0) {
            return Err(Error::Config("the delay window needs gamma > 0".into()));
        }
        uniform(0.0, self.tau_lifetimes / system.gamma, self.tau_step)
    }
}

fn uniform(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() || !(end > start) {
        return Err(Error::Config(format!(
            "cannot build a grid from {start} to {end} with step {step}"
        )));
    }
    let n = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|k| start + k as f64 * step).collect())
}

/// `G¹(t_i, τ_j)` stored row-major (one row per emission time).
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationGrid {
    pub t_grid: Vec<f64>,
    pub tau_grid: Vec<f64>,
    pub values: Vec<Complex64>,
}

impl CorrelationGrid {
    pub fn zeros(t_grid: Vec<f64>, tau_grid: Vec<f64>) -> Self {
        let n = t_grid.len() * tau_grid.len();
        CorrelationGrid {
            t_grid,
            tau_grid,
            values: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.tau_grid.len() + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        let n = self.tau_grid.len();
        &self.values[i * n..(i + 1) * n]
    }

    pub fn tau_step(&self) -> f64 {
        if self.tau_grid.len() < 2 {
            0.0
        } else {
            self.tau_grid[1] - self.tau_grid[0]
        }
    }

    /// Trapezoid weights of the t axis.
    pub fn t_weights(&self) -> Vec<f64> {
        trapezoid_weights(&self.t_grid)
    }

    /// `Σ_t w_t G(t, 0)`, the time-integrated excited population.
    pub fn integrated_population(&self) -> f64 {
        self.t_weights()
            .iter()
            .enumerate()
            .map(|(i, w)| w * self.get(i, 0).re)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Writes the grid as one JSON header line followed by little-endian
    /// `f64` pairs `(re, im)`, row-major in (t, τ).
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let header = DumpHeader {
            format: "g1-grid".into(),
            version: 1,
            layout: "row-major (t, tau); interleaved little-endian f64 (re, im)".into(),
            n_t: self.t_grid.len(),
            n_tau: self.tau_grid.len(),
            t_grid: self.t_grid.clone(),
            tau_grid: self.tau_grid.clone(),
        };
        let line = serde_json::to_string(&header).map_err(|e| Error::Config(e.to_string()))?;
        w.write_all(line.as_bytes())?;
        w.write_all(b"\n")?;
        let mut buf = Vec::with_capacity(self.values.len() * 16);
        for v in &self.values {
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_binary<R: BufRead>(mut r: R) -> Result<Self> {
        let mut line = String::new();
        r.read_line(&mut line)?;
        let header: DumpHeader = serde_json::from_str(line.trim_end())
            .map_err(|e| Error::Config(format!("bad correlation header: {e}")))?;
        if header.format != "g1-grid"
            || header.t_grid.len() != header.n_t
            || header.tau_grid.len() != header.n_tau
        {
            return Err(Error::Config("inconsistent correlation header".into()));
        }
        let n = header.n_t * header.n_tau;
        let mut bytes = vec![0u8; n * 16];
        r.read_exact(&mut bytes)?;
        let values = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().expect("8 bytes"));
                let im = f64::from_le_bytes(c[8..].try_into().expect("8 bytes"));
                Complex64::new(re, im)
            })
            .collect();
        Ok(CorrelationGrid {
            t_grid: header.t_grid,
            tau_grid: header.tau_grid,
            values,
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DumpHeader {
    format: String,
    version: u32,
    layout: String,
    n_t: usize,
    n_tau: usize,
    t_grid: Vec<f64>,
    tau_grid: Vec<f64>,
}

/// Trapezoid weights; a single sample gets weight 1 (a δ in time).
pub(crate) fn trapezoid_weights(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    if n == 1 {
        return vec![1.0];
    }
    let mut w = vec![0.0; n];
    for k in 0..n.saturating_sub(1) {
        let h = 0.5 * (x[k + 1] - x[k]);
        w[k] += h;
        w[k + 1] += h;
    }
    w
}

fn check_alignment(t_grid: &[f64], tau_grid: &[f64]) -> Result<f64> {
    validate_grid(t_grid)?;
    validate_grid(tau_grid)?;
    if tau_grid[0] != 0.0 {
        return Err(Error::Config("tau grid must start at 0".into()));
    }
    if tau_grid.len() < 2 {
        return Err(Error::Config("tau grid needs at least two points".into()));
    }
    let step = tau_grid[1];
    for (k, tau) in tau_grid.iter().enumerate() {
        if (tau - k as f64 * step).abs() > 1e-9 * step.max(1.0) * (k as f64).max(1.0) {
            return Err(Error::Config("tau grid must be uniform".into()));
        }
    }
    for w in t_grid.windows(2) {
        let ratio = (w[1] - w[0]) / step;
        if (ratio - ratio.round()).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "t grid spacing {} is not a multiple of the tau step {step}",
                w[1] - w[0]
            )));
        }
    }
    Ok(step)
}

/// Computes `G¹(t,τ)` on the given grids starting from `rho0` at `t_grid[0]`.
pub fn g1(
    l: &Liouvillian,
    rho0: DensityMatrix,
    t_grid: &[f64],
    tau_grid: &[f64],
) -> Result<CorrelationGrid> {
    g1_with(l, rho0, t_grid, tau_grid, &IntegratorOptions::default())
}

pub fn g1_with(
    l: &Liouvillian,
    rho0: DensityMatrix,
    t_grid: &[f64],
    tau_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<CorrelationGrid> {
    check_alignment(t_grid, tau_grid)?;
    let traj = propagate_with(l, rho0, t_grid, opts)?;
    let stepper = Stepper::new(l, opts)?;
    let free_rate = l.free_coherence_rate();
    let drive_end = if l.pulse.area == 0.0 {
        f64::NEG_INFINITY
    } else {
        l.pulse.support().1
    };
    let closed_form = !opts.rk4_everywhere;

    let rows: Vec<Vec<Complex64>> = traj
        .times
        .par_iter()
        .zip(traj.states.par_iter())
        .map(|(&t, rho)| {
            let mut row = Vec::with_capacity(tau_grid.len());
            let mut b: Operator2 = Operator2::from(*rho).lower_left();
            row.push(b.expect_raising());
            for w in tau_grid.windows(2) {
                if closed_form && t + w[0] >= drive_end {
                    // Drive is over: only the coherence matters and it decays freely.
                    let g0 = b.expect_raising();
                    let tau0 = w[0];
                    row.extend(
                        tau_grid[row.len()..]
                            .iter()
                            .map(|tau| g0 * (free_rate * (tau - tau0)).exp()),
                    );
                    break;
                }
                b = stepper.advance(b, t + w[0], t + w[1]);
                row.push(b.expect_raising());
            }
            row
        })
        .collect();

    Ok(CorrelationGrid {
        t_grid: t_grid.to_vec(),
        tau_grid: tau_grid.to_vec(),
        values: rows.into_iter().flatten().collect(),
    })
}
