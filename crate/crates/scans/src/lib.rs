//! Sweep orchestration for pulsed resonance-fluorescence spectra.
//!
//! The `dressed-spectra` binary is a thin wrapper around [`cli::main_with_args`].
//! The same modes are available as functions in [`sweeps`], each returning the
//! files it would write so that callers can inspect or persist them.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod sweeps;

pub use config::{Mode, ScanConfig};
pub use error::{ScanError, ScanResult};
