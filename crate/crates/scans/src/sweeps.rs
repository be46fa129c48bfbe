//! The scan modes. Each returns the files it wants written; nothing touches
//! the file system here except reading the input of `analyze`.

use std::io::BufReader;

use dressed_core::analysis::{
    find_peaks_in, local_maxima, outermost_sidepeak_slope, sideband_center, sidepeak_center_ratio,
};
use dressed_core::model::HBAR;
use dressed_core::{
    assemble_map, PhononParams, PulseSpec, Side, Simulation, SlopeFit, SpectrumMap,
};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Mode, PulseTemplate, ScanConfig};
use crate::error::{ScanError, ScanResult};
use crate::output::{Artifact, Sidecar, Table};

/// Largest tolerated relative sum-rule violation of an emitted spectrum.
pub const SUM_RULE_LIMIT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RowStats {
    pub sweep: f64,
    pub sum_rule_error: f64,
    pub integrated_population: f64,
}

/// Runs the mode recorded in a resolved configuration.
pub fn run(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let mode = cfg
        .mode
        .ok_or_else(|| ScanError::Usage("configuration has no mode".into()))?;
    match mode {
        Mode::Spectrum => run_spectrum(cfg),
        Mode::SweepPower => run_sweep_power(cfg),
        Mode::SweepDetuning => run_sweep_detuning(cfg),
        Mode::SweepLength => run_sweep_length(cfg),
        Mode::Dynamics => run_dynamics(cfg),
        Mode::PhononJw => run_phonon_jw(cfg),
        Mode::Analyze => run_analyze(cfg),
    }
}

pub fn simulation(cfg: &ScanConfig, pulse: PulseSpec) -> Simulation {
    Simulation {
        pulse,
        system: cfg.system,
        phonon: cfg.phonon,
        grids: cfg.grids,
        spectrum: cfg.spectrum,
        integrator: cfg.integrator,
    }
}

/// Spectra for each `(sweep value, pulse)`, computed in parallel and
/// assembled in sweep order.
pub fn simulate_rows(
    cfg: &ScanConfig,
    rows: &[(f64, PulseSpec)],
) -> ScanResult<(SpectrumMap, Vec<RowStats>)> {
    let runs: Vec<(f64, dressed_core::SpectrumRun)> = rows
        .par_iter()
        .map(|(x, p)| simulation(cfg, *p).run(false).map(|r| (*x, r)))
        .collect::<dressed_core::Result<_>>()?;
    let mut stats = Vec::with_capacity(runs.len());
    let mut spectra = Vec::with_capacity(runs.len());
    for (x, r) in runs {
        if !(r.sum_rule_error < SUM_RULE_LIMIT) {
            return Err(dressed_core::Error::Numerical(format!(
                "sum rule violated by {:.3e} at sweep value {x}",
                r.sum_rule_error
            ))
            .into());
        }
        stats.push(RowStats {
            sweep: x,
            sum_rule_error: r.sum_rule_error,
            integrated_population: r.integrated_population,
        });
        spectra.push((x, r.spectrum));
    }
    Ok((assemble_map(spectra)?, stats))
}

/// Power map of a pulse template: one row per area (π units) of the sweep.
pub fn power_map(
    cfg: &ScanConfig,
    template: PulseTemplate,
) -> ScanResult<(SpectrumMap, Vec<RowStats>)> {
    let rows = cfg
        .sweep_values()
        .into_iter()
        .map(|a| Ok((a, template.with_area_pi(a).build()?)))
        .collect::<ScanResult<Vec<_>>>()?;
    simulate_rows(cfg, &rows)
}

pub fn detuning_map(cfg: &ScanConfig) -> ScanResult<(SpectrumMap, Vec<RowStats>)> {
    let rows = cfg
        .sweep_values()
        .into_iter()
        .map(|d| Ok((d, cfg.pulse.with_detuning(d).build()?)))
        .collect::<ScanResult<Vec<_>>>()?;
    simulate_rows(cfg, &rows)
}

#[derive(Serialize)]
struct MapResults {
    rows: Vec<RowStats>,
}

pub fn run_spectrum(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let run = simulation(cfg, cfg.pulse.build()?).run(cfg.output.dump_g1)?;
    if !(run.sum_rule_error < SUM_RULE_LIMIT) {
        return Err(dressed_core::Error::Numerical(format!(
            "sum rule violated by {:.3e}",
            run.sum_rule_error
        ))
        .into());
    }
    let mut files = vec![Artifact::map_csv("spectrum.csv", &run.spectrum)?];
    if let Some(g) = &run.correlation {
        let mut bytes = Vec::new();
        g.write_binary(&mut bytes)?;
        files.push(Artifact::new("g1.bin", bytes));
    }
    let stats = RowStats {
        sweep: cfg.pulse.area_pi.unwrap_or(1.0),
        sum_rule_error: run.sum_rule_error,
        integrated_population: run.integrated_population,
    };
    finish(
        cfg,
        "spectrum.json",
        files,
        MapResults { rows: vec![stats] },
    )
}

pub fn run_sweep_power(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let (map, rows) = power_map(cfg, cfg.pulse)?;
    let files = vec![Artifact::map_csv("power_map.csv", &map)?];
    finish(cfg, "power_map.json", files, MapResults { rows })
}

pub fn run_sweep_detuning(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let (map, rows) = detuning_map(cfg)?;
    let files = vec![Artifact::map_csv("detuning_map.csv", &map)?];
    finish(cfg, "detuning_map.json", files, MapResults { rows })
}

/// Slopes and the sidepeak/center ratio of one pulse length.
#[derive(Debug, Clone, Serialize)]
pub struct LengthSummary {
    pub fwhm: f64,
    pub slope_blue: Option<SlopeFit>,
    pub slope_red: Option<SlopeFit>,
    pub ratio: f64,
    pub rows: Vec<RowStats>,
}

/// One power map per pulse length plus the slope and ratio summary.
pub fn length_scan(cfg: &ScanConfig) -> ScanResult<Vec<(SpectrumMap, LengthSummary)>> {
    let settings = cfg.analysis.slope();
    let mut out = Vec::new();
    for &fwhm in &cfg.lengths.fwhms {
        let template = cfg.pulse.with_fwhm(fwhm);
        let (map, rows) = power_map(cfg, template)?;
        let ratio_pulse = template.with_area_pi(cfg.lengths.ratio_area_pi).build()?;
        let (ratio_map, _) = simulate_rows(cfg, &[(cfg.lengths.ratio_area_pi, ratio_pulse)])?;
        let summary = LengthSummary {
            fwhm,
            slope_blue: outermost_sidepeak_slope(&map, Side::Blue, &settings).ok(),
            slope_red: outermost_sidepeak_slope(&map, Side::Red, &settings).ok(),
            ratio: sidepeak_center_ratio(&ratio_map)?,
            rows,
        };
        out.push((map, summary));
    }
    Ok(out)
}

/// File name of the power map of one pulse length.
pub fn length_map_name(fwhm: f64) -> String {
    format!("power_map_{fwhm}ps.csv")
}

pub fn run_sweep_length(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let scans = length_scan(cfg)?;
    let mut files = Vec::new();
    let mut table = Table::new(&[
        "fwhm_ps",
        "slope_blue_mev_per_pi",
        "residual_blue_mev",
        "slope_red_mev_per_pi",
        "residual_red_mev",
        "sidepeak_center_ratio",
    ]);
    for (map, s) in &scans {
        files.push(Artifact::map_csv(length_map_name(s.fwhm), map)?);
        table.row_opt(&[
            Some(s.fwhm),
            s.slope_blue.map(|f| f.slope),
            s.slope_blue.map(|f| f.residual),
            s.slope_red.map(|f| f.slope),
            s.slope_red.map(|f| f.residual),
            Some(s.ratio),
        ]);
    }
    files.push(table.into_artifact("length_summary.csv"));
    let summaries: Vec<LengthSummary> = scans.into_iter().map(|(_, s)| s).collect();
    finish(cfg, "sweep_length.json", files, summaries)
}

#[derive(Serialize)]
struct DynamicsResults {
    emitted_photons: f64,
    final_excited_population: f64,
}

pub fn run_dynamics(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let sim = simulation(cfg, cfg.pulse.build()?);
    let traj = sim.trajectory()?;
    let l = sim.liouvillian();
    let mut table = Table::new(&[
        "t_ps",
        "rho_gg",
        "rho_xx",
        "re_rho_gx",
        "im_rho_gx",
        "rabi_rad_per_ps",
    ]);
    for (t, r) in traj.times.iter().zip(&traj.states) {
        table.row(&[*t, r.rho_gg, r.rho_xx, r.rho_gx.re, r.rho_gx.im, l.rabi(*t)]);
    }
    let results = DynamicsResults {
        emitted_photons: traj.emitted_photons(cfg.system.gamma),
        final_excited_population: traj.last().map(|r| r.rho_xx).unwrap_or(0.0),
    };
    finish(
        cfg,
        "dynamics.json",
        vec![table.into_artifact("dynamics.csv")],
        results,
    )
}

#[derive(Serialize)]
struct PhononResults {
    polaron_shift_mev: f64,
    peak_energy_mev: f64,
}

pub fn run_phonon_jw(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let p: PhononParams = cfg.phonon.unwrap_or_default();
    let mut table = Table::new(&["energy_mev", "j_per_ps"]);
    let mut peak = (0.0, f64::NEG_INFINITY);
    for e in cfg.sweep_values() {
        let j = p.spectral_density(e / HBAR)?;
        if j > peak.1 {
            peak = (e, j);
        }
        table.row(&[e, j]);
    }
    let results = PhononResults {
        polaron_shift_mev: p.polaron_shift()?,
        peak_energy_mev: peak.0,
    };
    finish(
        cfg,
        "phonon_jw.json",
        vec![table.into_artifact("phonon_jw.csv")],
        results,
    )
}

/// Per-row analysis of a spectrum map.
#[derive(Debug, Clone, Serialize)]
pub struct RowAnalysis {
    pub sweep: Option<f64>,
    pub ratio: Option<f64>,
    pub sideband_center: Option<f64>,
    pub n_red: usize,
    pub n_blue: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct MapAnalysis {
    pub rows: Vec<RowAnalysis>,
    pub slope_blue: Option<SlopeFit>,
    pub slope_red: Option<SlopeFit>,
    /// Sweep values at which the ratio has a local maximum.
    pub ratio_maxima: Vec<f64>,
}

pub fn analyze_map(cfg: &ScanConfig, map: &SpectrumMap) -> (MapAnalysis, Table) {
    let peaks_cfg = cfg.analysis.peaks();
    let excl = cfg.analysis.center_exclusion;
    let mut table = Table::new(&["row", "sweep", "position_mev", "height", "prominence"]);
    let mut rows = Vec::new();
    for i in 0..map.rows() {
        let sweep = map.sweep_axis.as_ref().map(|s| s[i]);
        let peaks = find_peaks_in(&map.omega_axis, map.row(i), &peaks_cfg);
        for p in &peaks.peaks {
            table.row_opt(&[
                Some(i as f64),
                sweep,
                Some(p.position),
                Some(p.height),
                Some(p.prominence),
            ]);
        }
        rows.push(RowAnalysis {
            sweep,
            ratio: sidepeak_center_ratio(&map.row_map(i)).ok(),
            sideband_center: sideband_center(&peaks, excl).ok(),
            n_red: peaks.side(Side::Red, 0.0, excl).len(),
            n_blue: peaks.side(Side::Blue, 0.0, excl).len(),
        });
    }
    let slope = cfg.analysis.slope();
    let ratio_maxima = {
        let (x, y): (Vec<f64>, Vec<f64>) = rows
            .iter()
            .filter_map(|r| Some((r.sweep?, r.ratio?)))
            .unzip();
        local_maxima(&x, &y).into_iter().map(|(x, _)| x).collect()
    };
    let analysis = MapAnalysis {
        rows,
        slope_blue: outermost_sidepeak_slope(map, Side::Blue, &slope).ok(),
        slope_red: outermost_sidepeak_slope(map, Side::Red, &slope).ok(),
        ratio_maxima,
    };
    (analysis, table)
}

pub fn run_analyze(cfg: &ScanConfig) -> ScanResult<Vec<Artifact>> {
    let input = cfg.analysis.input.as_ref().ok_or_else(|| {
        ScanError::Usage("analyze needs an input map (analysis.input or --input)".into())
    })?;
    let f = std::fs::File::open(input)?;
    let map = SpectrumMap::read_csv(BufReader::new(f))?;
    let (analysis, peaks) = analyze_map(cfg, &map);
    let mut rows = Table::new(&["sweep", "ratio", "sideband_center_mev", "n_red", "n_blue"]);
    for r in &analysis.rows {
        rows.row_opt(&[
            r.sweep,
            r.ratio,
            r.sideband_center,
            Some(r.n_red as f64),
            Some(r.n_blue as f64),
        ]);
    }
    let files = vec![
        peaks.into_artifact("peaks.csv"),
        rows.into_artifact("rows.csv"),
    ];
    finish(cfg, "analysis.json", files, analysis)
}

fn finish<R: Serialize>(
    cfg: &ScanConfig,
    sidecar: &str,
    mut files: Vec<Artifact>,
    results: R,
) -> ScanResult<Vec<Artifact>> {
    let names = files.iter().map(|a| a.name.clone()).collect();
    files.push(Artifact::json(sidecar, &Sidecar::new(cfg, names, results))?);
    Ok(files)
}
