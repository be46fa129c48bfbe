//! End-to-end spectrum simulation: dynamics, correlation and transform.

use serde::{Deserialize, Serialize};

use crate::correlation::{g1_with, CorrelationGrid, GridSpec};
use crate::dynamics::{propagate_with, IntegratorOptions, Liouvillian, Trajectory};
use crate::error::{Error, Result};
use crate::model::{DensityMatrix, PulseSpec, SystemParams};
use crate::phonon::PhononParams;
use crate::spectrum::{spectrum_from_g1, sum_rule_error, SpectrumMap, SpectrumOptions};

/// Everything needed to compute one spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub pulse: PulseSpec,
    pub system: SystemParams,
    #[serde(default)]
    pub phonon: Option<PhononParams>,
    #[serde(default)]
    pub grids: GridSpec,
    #[serde(default)]
    pub spectrum: SpectrumOptions,
    #[serde(default)]
    pub integrator: IntegratorOptions,
}

/// Result of [`Simulation::run`].
#[derive(Debug, Clone)]
pub struct SpectrumRun {
    pub spectrum: SpectrumMap,
    /// Relative violation of the spectral sum rule.
    pub sum_rule_error: f64,
    /// `Σ_t w_t ρ_xx(t)` over the emission-time grid (ps).
    pub integrated_population: f64,
    pub correlation: Option<CorrelationGrid>,
}

impl Simulation {
    pub fn new(pulse: PulseSpec, system: SystemParams) -> Self {
        Simulation {
            pulse,
            system,
            phonon: None,
            grids: GridSpec::default(),
            spectrum: SpectrumOptions::default(),
            integrator: IntegratorOptions::default(),
        }
    }

    pub fn with_phonons(mut self, phonon: Option<PhononParams>) -> Self {
        self.phonon = phonon;
        self
    }

    pub fn with_grids(mut self, grids: GridSpec) -> Self {
        self.grids = grids;
        self
    }

    pub fn with_spectrum(mut self, spectrum: SpectrumOptions) -> Self {
        self.spectrum = spectrum;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.pulse.validate()?;
        self.system.validate()?;
        if let Some(p) = &self.phonon {
            p.validate()?;
        }
        if self.spectrum.axis.bins < 2 || !(self.spectrum.axis.half_span > 0.0) {
            return Err(Error::Config(
                "frequency axis needs >= 2 bins and a positive span".into(),
            ));
        }
        Ok(())
    }

    pub fn liouvillian(&self) -> Liouvillian {
        Liouvillian::new(self.pulse, &self.system).with_phonons(self.phonon)
    }

    /// ρ(t) from the ground state on the emission-time grid.
    pub fn trajectory(&self) -> Result<Trajectory> {
        self.validate()?;
        let t = self.grids.t_grid(&self.pulse, &self.system)?;
        propagate_with(
            &self.liouvillian(),
            DensityMatrix::ground(),
            &t,
            &self.integrator,
        )
    }

    pub fn correlation(&self) -> Result<CorrelationGrid> {
        self.validate()?;
        let t = self.grids.t_grid(&self.pulse, &self.system)?;
        let tau = self.grids.tau_grid(&self.system)?;
        g1_with(
            &self.liouvillian(),
            DensityMatrix::ground(),
            &t,
            &tau,
            &self.integrator,
        )
    }

    /// Computes the spectrum; the correlation grid is kept on request.
    pub fn run(&self, keep_correlation: bool) -> Result<SpectrumRun> {
        let g = self.correlation()?;
        let spectrum = spectrum_from_g1(&g, self.pulse.detuning, &self.spectrum);
        spectrum.validate()?;
        let integrated_population = g.integrated_population();
        let sum_rule_error = sum_rule_error(integrated_population, spectrum.integral(0));
        Ok(SpectrumRun {
            spectrum,
            sum_rule_error,
            integrated_population,
            correlation: keep_correlation.then_some(g),
        })
    }
}
