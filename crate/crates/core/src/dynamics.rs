//! Lindblad dynamics of the driven two-level system in the laser frame.
//!
//! In the frame rotating at the laser frequency the Hamiltonian is
//!
//! ```text
//! H/ħ = -Δ |x⟩⟨x| - Ω₀(t)/2 (|g⟩⟨x| + |x⟩⟨g|),     Δ = ω_L - ω₀
//! ```
//!
//! and the dissipator contains radiative decay through `σ = |g⟩⟨x|` at rate γ
//! and pure dephasing through `|x⟩⟨x|` at rate `2 * dephasing`, so that the
//! coherence decays at `γ/2 + dephasing`.
//!
//! The generator is linear and is applied to arbitrary (not necessarily
//! Hermitian) 2x2 operators, which is what the correlation module needs.
//! Outside the pulse support the generator is time independent and the exact
//! exponential is used instead of Runge-Kutta steps.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DensityMatrix, PulseSpec, SystemParams};
use crate::phonon::PhononParams;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// A general 2x2 complex operator in the {|g>, |x>} basis.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Operator2 {
    pub gg: Complex64,
    pub gx: Complex64,
    pub xg: Complex64,
    pub xx: Complex64,
}

impl Operator2 {
    pub fn trace(&self) -> Complex64 {
        self.gg + self.xx
    }

    /// `σ·B` with `σ = |g⟩⟨x|`.
    pub fn lower_left(&self) -> Operator2 {
        Operator2 {
            gg: self.xg,
            gx: self.xx,
            ..Default::default()
        }
    }

    /// `Tr[σ† B]` with `σ† = |x⟩⟨g|`, i.e. `⟨g|B|x⟩`.
    pub fn expect_raising(&self) -> Complex64 {
        self.gx
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, o: Operator2) -> Operator2 {
        Operator2 {
            gg: self.gg + o.gg,
            gx: self.gx + o.gx,
            xg: self.xg + o.xg,
            xx: self.xx + o.xx,
        }
    }
}

impl Mul<f64> for Operator2 {
    type Output = Operator2;
    fn mul(self, s: f64) -> Operator2 {
        Operator2 {
            gg: self.gg * s,
            gx: self.gx * s,
            xg: self.xg * s,
            xx: self.xx * s,
        }
    }
}

impl From<DensityMatrix> for Operator2 {
    fn from(r: DensityMatrix) -> Self {
        Operator2 {
            gg: r.rho_gg.into(),
            gx: r.rho_gx,
            xg: r.rho_gx.conj(),
            xx: r.rho_xx.into(),
        }
    }
}

impl From<Operator2> for DensityMatrix {
    /// Keeps the Hermitian part.
    fn from(b: Operator2) -> Self {
        DensityMatrix {
            rho_gg: b.gg.re,
            rho_xx: b.xx.re,
            rho_gx: 0.5 * (b.gx + b.xg.conj()),
        }
    }
}

/// Time-dependent master-equation generator.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Liouvillian {
    pub pulse: PulseSpec,
    /// ω_L - ω₀ in rad/ps.
    pub delta: f64,
    pub gamma: f64,
    pub dephasing: f64,
    /// Adds a Markovian phonon dephasing rate driven by the instantaneous Rabi
    /// frequency.
    pub phonon: Option<PhononParams>,
}

impl Liouvillian {
    pub fn new(pulse: PulseSpec, system: &SystemParams) -> Self {
        Liouvillian {
            pulse,
            delta: pulse.detuning_rad(),
            gamma: system.gamma,
            dephasing: system.dephasing,
            phonon: None,
        }
    }

    pub fn with_phonons(mut self, phonon: Option<PhononParams>) -> Self {
        self.phonon = phonon;
        self
    }

    pub fn rabi(&self, t: f64) -> f64 {
        self.pulse.envelope(t)
    }

    /// Total pure-dephasing rate of the coherence at time `t`.
    pub fn dephasing_at(&self, t: f64) -> f64 {
        match &self.phonon {
            Some(p) => self.dephasing + p.markovian_dephasing_rate(self.rabi(t)),
            None => self.dephasing,
        }
    }

    /// `L_t(B)`, valid for any operator `B`.
    pub fn apply(&self, t: f64, b: &Operator2) -> Operator2 {
        let half_rabi = 0.5 * self.rabi(t);
        let coh = 0.5 * self.gamma + self.dephasing_at(t);
        let drive_pop = I * half_rabi * (b.xg - b.gx);
        let drive_coh = I * half_rabi * (b.xx - b.gg);
        Operator2 {
            gg: drive_pop + self.gamma * b.xx,
            gx: drive_coh - I * self.delta * b.gx - coh * b.gx,
            xg: -drive_coh + I * self.delta * b.xg - coh * b.xg,
            xx: -drive_pop - self.gamma * b.xx,
        }
    }

    /// Exact propagation over `dt` with the drive switched off.
    pub fn free_propagate(&self, b: &Operator2, dt: f64) -> Operator2 {
        let decay = (-self.gamma * dt).exp();
        let coh = Complex64::new(-0.5 * self.gamma - self.dephasing, -self.delta) * dt;
        Operator2 {
            gg: b.gg + b.xx * (1.0 - decay),
            gx: b.gx * coh.exp(),
            xg: b.xg * coh.conj().exp(),
            xx: b.xx * decay,
        }
    }

    /// Complex rate of the undriven coherence `⟨g|B|x⟩`.
    pub fn free_coherence_rate(&self) -> Complex64 {
        Complex64::new(-0.5 * self.gamma - self.dephasing, -self.delta)
    }

    /// True when the drive is non-zero somewhere in `(a, b)`.
    pub fn is_driven(&self, a: f64, b: f64) -> bool {
        if self.pulse.area == 0.0 {
            return false;
        }
        let (s0, s1) = self.pulse.support();
        b > s0 && a < s1
    }

    /// Default Runge-Kutta step: min(T/50, 0.1/γ, 0.02/Ω_eff, 0.1/γ_φ,max)
    /// where T is the pulse time scale and Ω_eff = sqrt(Ω_peak² + Δ²).
    pub fn default_step(&self) -> f64 {
        let mut dt = self.pulse.time_scale() / 50.0;
        if self.gamma > 0.0 {
            dt = dt.min(0.1 / self.gamma);
        }
        let peak = self.pulse.peak_rabi();
        let eff = (peak * peak + self.delta * self.delta).sqrt();
        if eff > 0.0 {
            dt = dt.min(0.02 / eff);
        }
        let mut deph = self.dephasing;
        if let Some(p) = &self.phonon {
            deph += (0..=64)
                .map(|k| p.markovian_dephasing_rate(peak * k as f64 / 64.0))
                .fold(0.0, f64::max);
        }
        if deph > 0.0 {
            dt = dt.min(0.1 / deph);
        }
        dt
    }
}

/// `dρ/dt` in the laser frame.
pub fn rotating_frame_rhs(l: &Liouvillian, t: f64, rho: &DensityMatrix) -> Operator2 {
    l.apply(t, &Operator2::from(*rho))
}

/// Integrator settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    /// Overrides the default RK4 step (ps).
    pub max_step: Option<f64>,
    /// Take Runge-Kutta steps also where the drive vanishes.
    pub rk4_everywhere: bool,
}

/// Fixed-step RK4 with exact free evolution outside the pulse.
#[derive(Debug, Clone, Copy)]
pub struct Stepper<'a> {
    l: &'a Liouvillian,
    step: f64,
    rk4_everywhere: bool,
}

impl<'a> Stepper<'a> {
    pub fn new(l: &'a Liouvillian, opts: &IntegratorOptions) -> Result<Self> {
        let default = l.default_step();
        let step = match opts.max_step {
            None => default,
            Some(h) => {
                let bound = l.pulse.time_scale() / 10.0;
                if !(h > 0.0) || !h.is_finite() || h > bound {
                    return Err(Error::Config(format!(
                        "step {h} ps does not resolve the pulse (must be in (0, {bound}])"
                    )));
                }
                h
            }
        };
        Ok(Stepper {
            l,
            step,
            rk4_everywhere: opts.rk4_everywhere,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    fn rk4(&self, b: Operator2, t: f64, h: f64) -> Operator2 {
        let l = self.l;
        let k1 = l.apply(t, &b);
        let k2 = l.apply(t + 0.5 * h, &(b + k1 * (0.5 * h)));
        let k3 = l.apply(t + 0.5 * h, &(b + k2 * (0.5 * h)));
        let k4 = l.apply(t + h, &(b + k3 * h));
        b + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
    }

    /// Evolves `b` from `t0` to `t1 >= t0`.
    pub fn advance(&self, b: Operator2, t0: f64, t1: f64) -> Operator2 {
        let span = t1 - t0;
        if span <= 0.0 {
            return b;
        }
        if !self.rk4_everywhere && !self.l.is_driven(t0, t1) {
            return self.l.free_propagate(&b, span);
        }
        let n = (span / self.step - 1e-9).ceil().max(1.0) as usize;
        let h = span / n as f64;
        let mut out = b;
        for k in 0..n {
            out = self.rk4(out, t0 + k as f64 * h, h);
        }
        out
    }
}

/// States on a time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl Trajectory {
    pub fn last(&self) -> Option<&DensityMatrix> {
        self.states.last()
    }

    pub fn excited_population(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.rho_xx).collect()
    }

    /// γ·∫ρ_xx dt by the trapezoid rule: the expected number of photons
    /// emitted inside the trajectory window.
    pub fn emitted_photons(&self, gamma: f64) -> f64 {
        let pop = self.excited_population();
        gamma
            * self
                .times
                .windows(2)
                .zip(pop.windows(2))
                .map(|(t, p)| 0.5 * (t[1] - t[0]) * (p[0] + p[1]))
                .sum::<f64>()
    }
}

pub(crate) fn validate_grid(t_grid: &[f64]) -> Result<()> {
    if t_grid.is_empty() {
        return Err(Error::Config("empty time grid".into()));
    }
    if t_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::Config("time grid contains non-finite values".into()));
    }
    if t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Config("time grid must be strictly ascending".into()));
    }
    Ok(())
}

/// Propagates `rho0` given at `t_grid[0]` along the grid.
pub fn propagate(l: &Liouvillian, rho0: DensityMatrix, t_grid: &[f64]) -> Result<Trajectory> {
    propagate_with(l, rho0, t_grid, &IntegratorOptions::default())
}

pub fn propagate_with(
    l: &Liouvillian,
    rho0: DensityMatrix,
    t_grid: &[f64],
    opts: &IntegratorOptions,
) -> Result<Trajectory> {
    validate_grid(t_grid)?;
    let stepper = Stepper::new(l, opts)?;
    let mut states = Vec::with_capacity(t_grid.len());
    let mut b = Operator2::from(rho0);
    states.push(rho0);
    for w in t_grid.windows(2) {
        b = stepper.advance(b, w[0], w[1]);
        states.push(DensityMatrix::from(b));
    }
    Ok(Trajectory {
        times: t_grid.to_vec(),
        states,
    })
}

/// Final excited population for each pulse area, read out at the end of the
/// pulse support (t₀ + 8σ for Gaussian pulses), starting from |g⟩.
pub fn rabi_rotation_scan(
    system: &SystemParams,
    pulse: &PulseSpec,
    areas: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if let Some(a) = areas.iter().find(|a| !(**a >= 0.0)) {
        return Err(Error::Domain(format!("pulse areas must be >= 0, got {a}")));
    }
    system.validate()?;
    areas
        .par_iter()
        .map(|&area| {
            let p = pulse.with_area(area);
            p.validate()?;
            let l = Liouvillian::new(p, system);
            let (start, stop) = p.support();
            let traj = propagate(&l, DensityMatrix::ground(), &[start, stop])?;
            Ok((area, traj.states[1].rho_xx))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fwhm_to_sigma;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn lossless() -> SystemParams {
        SystemParams {
            gamma: 0.0,
            dephasing: 0.0,
            t_end: None,
        }
    }

    #[test]
    fn ground_state_is_stationary_without_drive() {
        let l = Liouvillian::new(PulseSpec::gaussian(0.0, 5.0), &SystemParams::default());
        let d = rotating_frame_rhs(&l, 0.0, &DensityMatrix::ground());
        assert_eq!(d, Operator2::default());
    }

    #[test]
    fn excited_state_decays_at_gamma() {
        let sys = SystemParams::default();
        let l = Liouvillian::new(PulseSpec::gaussian(0.0, 5.0).with_detuning(0.3), &sys);
        let d = rotating_frame_rhs(&l, 1.0, &DensityMatrix::excited());
        assert!((d.xx.re + sys.gamma).abs() < 1e-15);
        assert!((d.gg.re - sys.gamma).abs() < 1e-15);
    }

    #[test]
    fn pi_and_two_pi_pulses() {
        let sigma = fwhm_to_sigma(12.0).unwrap();
        for (area, want) in [(PI, 1.0), (2.0 * PI, 0.0)] {
            let l = Liouvillian::new(PulseSpec::gaussian(area, sigma), &lossless());
            let (a, b) = l.pulse.support();
            let traj = propagate(&l, DensityMatrix::ground(), &[a, b]).unwrap();
            assert!((traj.last().unwrap().rho_xx - want).abs() < 1e-6);
        }
    }

    #[test]
    fn rejects_bad_grids_and_steps() {
        let l = Liouvillian::new(PulseSpec::gaussian(PI, 5.0), &lossless());
        assert!(matches!(
            propagate(&l, DensityMatrix::ground(), &[0.0, 0.0]),
            Err(Error::Config(_))
        ));
        assert!(propagate(&l, DensityMatrix::ground(), &[]).is_err());
        let opts = IntegratorOptions {
            max_step: Some(2.0),
            ..Default::default()
        };
        assert!(matches!(
            propagate_with(&l, DensityMatrix::ground(), &[0.0, 1.0], &opts),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn rabi_scan_lossless() {
        let sigma = fwhm_to_sigma(12.0).unwrap();
        let areas = [0.0, PI, 2.0 * PI, 3.0 * PI, 4.0 * PI];
        let out =
            rabi_rotation_scan(&lossless(), &PulseSpec::gaussian(0.0, sigma), &areas).unwrap();
        assert_eq!(out[0], (0.0, 0.0));
        for (a, p) in out {
            assert!((p - (a / 2.0).sin().powi(2)).abs() < 1e-6, "{a}: {p}");
        }
        assert!(
            rabi_rotation_scan(&lossless(), &PulseSpec::gaussian(0.0, sigma), &[-1.0]).is_err()
        );
    }

    #[test]
    fn zero_drive_matches_closed_form_with_rk4() {
        let sys = SystemParams {
            gamma: 1.0 / 65.0,
            dephasing: 0.004,
            t_end: None,
        };
        let l = Liouvillian::new(PulseSpec::gaussian(0.0, 5.0).with_detuning(0.05), &sys);
        let rho0 = DensityMatrix {
            rho_gg: 0.4,
            rho_xx: 0.6,
            rho_gx: Complex64::new(0.3, -0.2),
        };
        let grid: Vec<f64> = (0..=400).map(|k| k as f64 * 0.5).collect();
        for rk4_everywhere in [false, true] {
            let opts = IntegratorOptions {
                max_step: None,
                rk4_everywhere,
            };
            let traj = propagate_with(&l, rho0, &grid, &opts).unwrap();
            let mut err: f64 = 0.0;
            for (t, s) in traj.times.iter().zip(&traj.states) {
                let xx = 0.6 * (-sys.gamma * t).exp();
                let gx = rho0.rho_gx
                    * (Complex64::new(-0.5 * sys.gamma - sys.dephasing, -l.delta) * t).exp();
                err = err.max((s.rho_xx - xx).abs()).max((s.rho_gx - gx).norm());
            }
            assert!(err < 1e-8, "rk4_everywhere={rk4_everywhere}: {err}");
        }
    }

    #[test]
    fn step_halving_converges_at_fourth_order() {
        let sigma = fwhm_to_sigma(12.0).unwrap();
        let l = Liouvillian::new(
            PulseSpec::gaussian(5.0 * PI, sigma).with_detuning(0.2),
            &SystemParams::default(),
        );
        let (a, b) = l.pulse.support();
        let h = l.default_step();
        let run = |step: f64| {
            let opts = IntegratorOptions {
                max_step: Some(step),
                rk4_everywhere: false,
            };
            propagate_with(&l, DensityMatrix::ground(), &[a, b], &opts)
                .unwrap()
                .last()
                .unwrap()
                .rho_xx
        };
        let (p1, p2) = (run(h), run(h / 2.0));
        assert!((p1 - p2).abs() < 1e-8, "{}", (p1 - p2).abs());
        // observed order from three coarser steps
        let (c1, c2, c3) = (run(8.0 * h), run(4.0 * h), run(2.0 * h));
        let order = ((c1 - c2) / (c2 - c3)).abs().log2();
        assert!(order >= 3.8, "order {order}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn rhs_is_trace_free(
            gg in 0.0f64..1.0,
            re in -0.5f64..0.5,
            im in -0.5f64..0.5,
            t in -30.0f64..30.0,
            area in 0.0f64..20.0,
            det in -1.0f64..1.0,
            deph in 0.0f64..0.1,
        ) {
            let sys = SystemParams { gamma: 1.0 / 65.0, dephasing: deph, t_end: None };
            let l = Liouvillian::new(PulseSpec::gaussian(area, 5.0).with_detuning(det), &sys)
                .with_phonons(Some(PhononParams::default()));
            let rho = DensityMatrix { rho_gg: gg, rho_xx: 1.0 - gg, rho_gx: Complex64::new(re, im) };
            let d = rotating_frame_rhs(&l, t, &rho);
            prop_assert!(d.trace().norm() < 1e-12);
        }

        #[test]
        fn trajectories_stay_physical(area in 0.0f64..12.0, det in -0.7f64..0.7, deph in 0.0f64..0.05) {
            let sys = SystemParams { gamma: 1.0 / 65.0, dephasing: deph, t_end: None };
            let l = Liouvillian::new(PulseSpec::gaussian(area * PI, 4.0).with_detuning(det), &sys);
            let grid: Vec<f64> = (0..=200).map(|k| -32.0 + k as f64 * 0.5).collect();
            let traj = propagate(&l, DensityMatrix::ground(), &grid).unwrap();
            for s in &traj.states {
                prop_assert!((s.trace() - 1.0).abs() < 1e-9);
                prop_assert!(s.min_eigenvalue() >= -1e-9);
            }
        }
    }
}
