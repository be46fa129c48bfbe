//! Result files. Everything is rendered in memory first and then written in
//! one go; if a write fails, the files already written by the same call are
//! removed again.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use dressed_core::spectrum::format_number;
use dressed_core::SpectrumMap;
use serde::Serialize;

use crate::config::ScanConfig;
use crate::error::ScanResult;

/// A named file body.
#[derive(Debug, Clone, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn new(name: impl Into<String>, bytes: Vec<u8>) -> Self {
        Artifact {
            name: name.into(),
            bytes,
        }
    }

    pub fn map_csv(name: impl Into<String>, map: &SpectrumMap) -> ScanResult<Self> {
        let mut bytes = Vec::new();
        map.write_csv(&mut bytes)?;
        Ok(Artifact::new(name, bytes))
    }

    pub fn json<T: Serialize>(name: impl Into<String>, value: &T) -> ScanResult<Self> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(std::io::Error::other)?;
        bytes.push(b'\n');
        Ok(Artifact::new(name, bytes))
    }
}

/// A plain CSV table with a header row.
#[derive(Debug, Clone, Default)]
pub struct Table {
    text: String,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        let mut text = columns.join(",");
        text.push('\n');
        Table { text }
    }

    pub fn row(&mut self, cells: &[f64]) {
        let cells: Vec<String> = cells.iter().map(|c| format_number(*c)).collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    /// A row whose missing values are left empty.
    pub fn row_opt(&mut self, cells: &[Option<f64>]) {
        let cells: Vec<String> = cells
            .iter()
            .map(|c| c.map(format_number).unwrap_or_default())
            .collect();
        self.text.push_str(&cells.join(","));
        self.text.push('\n');
    }

    pub fn into_artifact(self, name: impl Into<String>) -> Artifact {
        Artifact::new(name, self.text.into_bytes())
    }
}

/// Metadata written next to every result.
#[derive(Debug, Serialize)]
pub struct Sidecar<'a, R: Serialize> {
    pub program: &'static str,
    pub version: &'static str,
    pub config: &'a ScanConfig,
    pub files: Vec<String>,
    pub results: R,
}

impl<'a, R: Serialize> Sidecar<'a, R> {
    pub fn new(config: &'a ScanConfig, files: Vec<String>, results: R) -> Self {
        Sidecar {
            program: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config,
            files,
            results,
        }
    }
}

/// Writes all artifacts into `dir`, creating it if needed.
pub fn write_all(dir: &Path, artifacts: &[Artifact]) -> ScanResult<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for a in artifacts {
        let path = dir.join(&a.name);
        match write_one(&path, &a.bytes) {
            Ok(()) => written.push(path),
            Err(e) => {
                for p in &written {
                    let _ = fs::remove_file(p);
                }
                return Err(e.into());
            }
        }
    }
    Ok(written)
}

fn write_one(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}
