//! Resonance-fluorescence spectra of a two-level emitter driven by finite
//! laser pulses.
//!
//! The crate follows the emitter from the pulse envelope to the measured
//! spectrum:
//!
//! * [`model`]: units, pulses, emitter parameters and the density matrix.
//! * [`dynamics`]: the Lindblad master equation in the laser frame.
//! * [`correlation`]: `G¹(t,τ)` by quantum regression.
//! * [`spectrum`]: the time-integrated spectrum and spectral maps.
//! * [`phonon`]: LA-phonon spectral density, polaron shift and a Markovian
//!   dephasing rate.
//! * [`analysis`]: peak lists, sidepeak slopes and intensity ratios.
//! * [`pipeline`]: the whole chain behind one [`Simulation`] value.
//!
//! Energies are in meV, times in ps and angular frequencies in rad/ps.
//!
//! ```
//! use dressed_core::{PulseSpec, Simulation, SystemParams};
//! use std::f64::consts::PI;
//!
//! let pulse = PulseSpec::gaussian_fwhm(PI, 12.0).unwrap();
//! let run = Simulation::new(pulse, SystemParams::default()).run(false).unwrap();
//! assert!(run.sum_rule_error < 0.01);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod correlation;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod phonon;
pub mod pipeline;
pub mod spectrum;

pub use analysis::{find_peaks, PeakList, PeakSettings, Side, SlopeFit};
pub use correlation::{g1, CorrelationGrid, GridSpec};
pub use dynamics::{propagate, Liouvillian, Trajectory};
pub use error::{Error, Result};
pub use model::{DensityMatrix, PulseShape, PulseSpec, SystemParams, HBAR};
pub use phonon::PhononParams;
pub use pipeline::{Simulation, SpectrumRun};
pub use spectrum::{assemble_map, spectrum_from_g1, sum_rule_check, SpectrumMap, SpectrumOptions};
