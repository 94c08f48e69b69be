//! Deterministic CSV and JSON emission. Files are written atomically
//! (temp file in the target directory, then rename). Numbers use scientific
//! notation with 10 significant digits and a '.' decimal separator.

use std::fs;
use std::path::{Path, PathBuf};

use crate::CliError;

pub fn format_number(x: f64) -> String {
    format!("{x:.9e}")
}

pub struct CsvWriter {
    header: Vec<String>,
    lines: Vec<String>,
}

impl CsvWriter {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            header: columns.iter().map(|c| c.to_string()).collect(),
            lines: Vec::new(),
        }
    }

    pub fn row(&mut self, values: &[f64]) -> Result<(), CliError> {
        if values.len() != self.header.len() {
            return Err(CliError::Config(format!(
                "csv row has {} values for {} columns",
                values.len(),
                self.header.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(CliError::Config("csv row contains non-finite value".into()));
        }
        self.lines.push(
            values
                .iter()
                .map(|v| format_number(*v))
                .collect::<Vec<_>>()
                .join(","),
        );
        Ok(())
    }

    pub fn write(self, path: &Path) -> Result<(), CliError> {
        let mut text = self.header.join(",");
        text.push('\n');
        for line in &self.lines {
            text.push_str(line);
            text.push('\n');
        }
        atomic_write(path, text.as_bytes())
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Config(format!("json serialization: {e}")))?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("create {dir:?}: {e}")))?;
    let mut tmp: PathBuf = path.to_path_buf();
    let name = path
        .file_name()
        .ok_or_else(|| CliError::Io(format!("invalid output path {path:?}")))?
        .to_string_lossy()
        .to_string();
    tmp.set_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes).map_err(|e| CliError::Io(format!("write {tmp:?}: {e}")))?;
    fs::rename(&tmp, path).map_err(|e| CliError::Io(format!("rename to {path:?}: {e}")))?;
    Ok(())
}

/// Physical-constant table included in every JSON summary.
pub fn constants_json() -> serde_json::Value {
    serde_json::json!({
        "hbar_j_s": phonon_chill::constants::HBAR,
        "k_b_j_per_k": phonon_chill::constants::K_B,
        "mu_b_j_per_t": phonon_chill::constants::MU_B,
        "g_e": phonon_chill::constants::G_E,
        "diamond_density_kg_per_m3": phonon_chill::constants::DIAMOND_DENSITY,
        "spectrum_calibration": phonon_chill::spectrum::SPECTRUM_CALIBRATION,
    })
}
