//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::Parser;

use crate::config::{Mode, ScanConfig};
use crate::error::{ScanError, ScanResult};
use crate::output::write_all;
use crate::sweeps;

/// Pulsed resonance-fluorescence spectra: single spectra, power, detuning and
/// pulse-length maps, population dynamics and the phonon spectral density.
#[derive(Debug, Parser)]
#[command(name = "dressed-spectra", version)]
pub struct Cli {
    /// What to compute.
    #[arg(value_enum)]
    pub mode: Mode,
    /// TOML configuration or a JSON sidecar of an earlier run.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
    /// Sets a configuration value, e.g. `pulse.fwhm=8`. Repeatable.
    #[arg(long = "override", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Spectrum map read by `analyze`; overrides `analysis.input`.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
}

/// Parses `args`, runs the mode and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    match execute(&cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Loads the configuration and runs the mode on a pool of the requested size.
pub fn execute(cli: &Cli) -> ScanResult<Vec<PathBuf>> {
    let cfg = configure(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(ScanError::Usage("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool
        .build()
        .map_err(|e| ScanError::Usage(format!("cannot start worker pool: {e}")))?;
    let artifacts = pool.install(|| sweeps::run(&cfg))?;
    write_all(&cfg.output.dir, &artifacts)
}

pub fn configure(cli: &Cli) -> ScanResult<ScanConfig> {
    let mut cfg = ScanConfig::load_for(cli.mode, cli.config.as_deref(), &cli.overrides)?;
    if let Some(out) = &cli.out {
        cfg.output.dir = out.clone();
    }
    if let Some(input) = &cli.input {
        cfg.analysis.input = Some(input.clone());
    }
    Ok(cfg)
}
