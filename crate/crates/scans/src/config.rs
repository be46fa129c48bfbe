//! Scan configuration.
//!
//! A configuration is a TOML file with dotted section keys
//! (`pulse.fwhm = 12.0`) or the JSON sidecar written next to a previous
//! result. `key=value` overrides are applied to the parsed tree before it is
//! turned into a [`ScanConfig`], so an override can touch any field.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use dressed_core::analysis::{PeakSettings, SlopeSettings};
use dressed_core::dynamics::IntegratorOptions;
use dressed_core::model::fwhm_to_sigma;
use dressed_core::{GridSpec, PhononParams, PulseSpec, SpectrumOptions, SystemParams};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{ScanError, ScanResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Spectrum,
    SweepPower,
    SweepDetuning,
    SweepLength,
    Dynamics,
    PhononJw,
    Analyze,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Spectrum => "spectrum",
            Mode::SweepPower => "sweep_power",
            Mode::SweepDetuning => "sweep_detuning",
            Mode::SweepLength => "sweep_length",
            Mode::Dynamics => "dynamics",
            Mode::PhononJw => "phonon_jw",
            Mode::Analyze => "analyze",
        }
    }

    /// Default sweep for modes that have one.
    pub fn default_sweep(self) -> Option<SweepRange> {
        match self {
            Mode::SweepPower | Mode::SweepLength => Some(SweepRange {
                start: 0.0,
                stop: 15.0,
                n_points: 61,
            }),
            Mode::SweepDetuning => Some(SweepRange {
                start: -0.7,
                stop: 0.7,
                n_points: 57,
            }),
            Mode::PhononJw => Some(SweepRange {
                start: 0.0,
                stop: 5.0,
                n_points: 501,
            }),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeKind {
    Gaussian,
    FlatTop,
}

/// Pulse description in laboratory units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PulseTemplate {
    pub shape: ShapeKind,
    /// Intensity FWHM of a Gaussian pulse (ps).
    pub fwhm: f64,
    /// Field standard deviation (ps); takes precedence over `fwhm`.
    pub sigma: Option<f64>,
    /// Pulse area in units of π; 11 for detuning sweeps and 1 otherwise.
    pub area_pi: Option<f64>,
    /// Laser minus transition energy (meV).
    pub detuning: f64,
    /// Pulse center (ps).
    pub center: f64,
    /// Flat-top plateau length (ps).
    pub duration: f64,
    /// Flat-top ramp length (ps).
    pub ramp: f64,
    /// Flat-top plateau Rabi energy (meV); replaces `area_pi` when set.
    pub plateau_rabi: Option<f64>,
}

impl Default for PulseTemplate {
    fn default() -> Self {
        PulseTemplate {
            shape: ShapeKind::Gaussian,
            fwhm: 12.0,
            sigma: None,
            area_pi: None,
            detuning: 0.0,
            center: 0.0,
            duration: 400.0,
            ramp: 5.0,
            plateau_rabi: None,
        }
    }
}

impl PulseTemplate {
    pub fn build(&self) -> ScanResult<PulseSpec> {
        let area = self.area_pi.unwrap_or(1.0) * std::f64::consts::PI;
        let pulse = match self.shape {
            ShapeKind::Gaussian => {
                let sigma = match self.sigma {
                    Some(s) => s,
                    None => fwhm_to_sigma(self.fwhm)?,
                };
                PulseSpec::gaussian(area, sigma)
            }
            ShapeKind::FlatTop => match self.plateau_rabi {
                Some(r) => PulseSpec::flat_top_with_rabi(r, self.duration, self.ramp),
                None => PulseSpec::flat_top(area, self.duration, self.ramp),
            },
        }
        .with_center(self.center)
        .with_detuning(self.detuning);
        pulse.validate()?;
        Ok(pulse)
    }

    pub fn with_area_pi(mut self, area_pi: f64) -> Self {
        self.area_pi = Some(area_pi);
        self.plateau_rabi = None;
        self
    }

    pub fn with_detuning(mut self, detuning: f64) -> Self {
        self.detuning = detuning;
        self
    }

    pub fn with_fwhm(mut self, fwhm: f64) -> Self {
        self.fwhm = fwhm;
        self.sigma = None;
        self
    }
}

/// Evenly spaced sweep values, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepRange {
    pub start: f64,
    pub stop: f64,
    pub n_points: usize,
}

impl SweepRange {
    pub fn validate(&self) -> ScanResult<()> {
        if self.n_points < 1 {
            return Err(ScanError::Usage("sweep.n_points must be at least 1".into()));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.stop < self.start {
            return Err(ScanError::Usage(format!(
                "sweep needs finite start <= stop, got {} and {}",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.n_points == 1 {
            return vec![self.start];
        }
        let m = (self.n_points - 1) as f64;
        (0..self.n_points)
            .map(|k| {
                let k = k as f64;
                (self.start * (m - k) + self.stop * k) / m
            })
            .collect()
    }
}

/// Pulse lengths of a `sweep_length` run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LengthSweep {
    /// Gaussian FWHM values (ps).
    pub fwhms: Vec<f64>,
    /// Area (π units) of the spectrum used for the ratio summary.
    pub ratio_area_pi: f64,
}

impl Default for LengthSweep {
    fn default() -> Self {
        LengthSweep {
            fwhms: vec![4.0, 6.0, 8.0, 10.0, 12.0],
            ratio_area_pi: 6.0,
        }
    }
}

/// Peak-finder and fit settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisConfig {
    pub min_prominence: f64,
    pub min_separation: f64,
    pub slope_points: usize,
    pub slope_min_area: f64,
    /// Half-width of the window around the transition (meV).
    pub center_exclusion: f64,
    /// Map read by the `analyze` mode.
    pub input: Option<PathBuf>,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        let p = PeakSettings::default();
        let s = SlopeSettings::default();
        AnalysisConfig {
            min_prominence: p.min_prominence,
            min_separation: p.min_separation,
            slope_points: s.n_points,
            slope_min_area: s.min_area,
            center_exclusion: s.center_exclusion,
            input: None,
        }
    }
}

impl AnalysisConfig {
    pub fn peaks(&self) -> PeakSettings {
        PeakSettings {
            min_prominence: self.min_prominence,
            min_separation: self.min_separation,
        }
    }

    pub fn slope(&self) -> SlopeSettings {
        SlopeSettings {
            peaks: self.peaks(),
            n_points: self.slope_points,
            center_exclusion: self.center_exclusion,
            min_area: self.slope_min_area,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Also write the correlation grid of a single spectrum.
    pub dump_g1: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: PathBuf::from("out"),
            dump_g1: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    pub mode: Option<Mode>,
    pub pulse: PulseTemplate,
    pub system: SystemParams,
    /// Phonon coupling; absent means no phonons.
    pub phonon: Option<PhononParams>,
    pub sweep: Option<SweepRange>,
    pub lengths: LengthSweep,
    pub grids: GridSpec,
    pub spectrum: SpectrumOptions,
    pub integrator: IntegratorOptions,
    pub analysis: AnalysisConfig,
    pub output: OutputConfig,
}

impl ScanConfig {
    /// Loads `path` (or starts from defaults) and applies `overrides`.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> ScanResult<Self> {
        Self::from_tree(Self::load_tree(path, overrides)?)
    }

    /// Like [`ScanConfig::load`] followed by [`ScanConfig::resolve`]; a
    /// partially given `sweep` is completed from the defaults of `mode`.
    pub fn load_for(mode: Mode, path: Option<&Path>, overrides: &[String]) -> ScanResult<Self> {
        let mut tree = Self::load_tree(path, overrides)?;
        if let (Some(Value::Object(sweep)), Some(default)) =
            (tree.get_mut("sweep"), mode.default_sweep())
        {
            let default =
                serde_json::to_value(default).map_err(|e| ScanError::Usage(e.to_string()))?;
            if let Value::Object(d) = default {
                for (k, v) in d {
                    sweep.entry(k).or_insert(v);
                }
            }
        }
        Self::from_tree(tree)?.resolve(mode)
    }

    fn load_tree(path: Option<&Path>, overrides: &[String]) -> ScanResult<Value> {
        let mut tree = match path {
            Some(p) => read_tree(p)?,
            None => Value::Object(Map::new()),
        };
        for o in overrides {
            apply_override(&mut tree, o)?;
        }
        Ok(tree)
    }

    fn from_tree(tree: Value) -> ScanResult<Self> {
        serde_json::from_value(tree)
            .map_err(|e| ScanError::Usage(format!("invalid configuration: {e}")))
    }

    /// Fixes the mode and fills in mode-dependent defaults.
    pub fn resolve(mut self, mode: Mode) -> ScanResult<Self> {
        if let Some(m) = self.mode {
            if m != mode {
                return Err(ScanError::Usage(format!(
                    "configuration is for mode {} but {} was requested",
                    m.name(),
                    mode.name()
                )));
            }
        }
        self.mode = Some(mode);
        if self.sweep.is_none() {
            self.sweep = mode.default_sweep();
        }
        if self.pulse.area_pi.is_none() && self.pulse.plateau_rabi.is_none() {
            self.pulse.area_pi = Some(if mode == Mode::SweepDetuning {
                11.0
            } else {
                1.0
            });
        }
        if let Some(s) = &self.sweep {
            s.validate()?;
        }
        if mode == Mode::PhononJw && self.phonon.is_none() {
            self.phonon = Some(PhononParams::default());
        }
        if mode == Mode::SweepLength && self.lengths.fwhms.is_empty() {
            return Err(ScanError::Usage("lengths.fwhms is empty".into()));
        }
        self.system.validate()?;
        if let Some(p) = &self.phonon {
            p.validate()?;
        }
        Ok(self)
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        self.sweep.map(|s| s.values()).unwrap_or_default()
    }
}

fn read_tree(path: &Path) -> ScanResult<Value> {
    let text = std::fs::read_to_string(path)?;
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    if is_json {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| ScanError::Usage(format!("{}: {e}", path.display())))?;
        // a sidecar carries the configuration under "config"
        match v {
            Value::Object(mut m) if m.contains_key("config") && m.contains_key("version") => {
                Ok(m.remove("config").expect("checked"))
            }
            other => Ok(other),
        }
    } else {
        let t = toml::Table::from_str(&text)
            .map_err(|e| ScanError::Usage(format!("{}: {e}", path.display())))?;
        serde_json::to_value(t).map_err(|e| ScanError::Usage(e.to_string()))
    }
}

/// Sets a dotted `key=value` in the tree. The value is read as JSON when it
/// parses, otherwise as a plain string.
pub fn apply_override(tree: &mut Value, spec: &str) -> ScanResult<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| ScanError::Usage(format!("override {spec:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(ScanError::Usage(format!(
            "override {spec:?} has an empty key"
        )));
    }
    let raw = raw.trim();
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut node = tree;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !node.is_object() {
            *node = Value::Object(Map::new());
        }
        let map = node.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert((*part).to_string(), value);
            return Ok(());
        }
        node = map.entry((*part).to_string()).or_insert(Value::Null);
    }
    Ok(())
}
