//! Atomic file output. Every file is written to a temporary sibling and
//! renamed into place.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Column layouts of the CSV files. Bump on any change.
pub const CSV_SCHEMA_VERSION: u32 = 1;

pub const TIMESERIES_HEADER: [&str; 3] = ["time", "quantity", "value"];
pub const SCAN_HEADER: [&str; 3] = ["d", "delta", "F_D"];
pub const TRACE_HEADER: [&str; 6] = ["evaluation", "omega_p", "delta_p", "omega_c", "delta_c", "value"];
pub const SCALING_HEADER: [&str; 5] = ["n", "backend", "time", "F", "F_D"];
pub const JUMPS_HEADER: [&str; 3] = ["trajectory", "time", "channel"];
pub const CONTOUR_HEADER: [&str; 6] = ["level", "segment", "d1", "delta1", "d2", "delta2"];
pub const TABLE1_HEADER: [&str; 6] = ["row", "quantity", "quoted", "above", "ours", "pass"];

pub struct OutputDir {
    pub path: PathBuf,
    pub written: Vec<PathBuf>,
}

impl OutputDir {
    pub fn create(path: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self { path: path.to_path_buf(), written: Vec::new() })
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.path.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.path)?;
        tmp.write_all(bytes)?;
        tmp.as_file().sync_all()?;
        tmp.persist(&target).map_err(|e| CliError::Io(format!("{}: {e}", target.display())))?;
        self.written.push(target);
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Internal(e.to_string()))?;
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    /// Writes `rows` under `header`. Floats use the shortest round-trip form.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }
}

/// Long-format time series builder.
#[derive(Default)]
pub struct Series {
    pub rows: Vec<Vec<String>>,
}

impl Series {
    pub fn push(&mut self, time: f64, quantity: &str, value: f64) {
        self.rows.push(vec![time.to_string(), quantity.to_string(), value.to_string()]);
    }
}
