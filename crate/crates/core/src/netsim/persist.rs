//! Result files: one CSV per sweep axis and a JSON tree with the config echo.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::SimError;

use super::config::SimConfig;
use super::sweep::SweepResult;

pub const CSV_HEADER: &str = "axis,value,strategy,mean_energy_j,stderr_j,n_trials";

/// CSV rows for one sweep. Floats use Rust's shortest round-trip formatting.
pub fn sweep_csv(result: &SweepResult) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for point in &result.points {
        for st in &point.stats {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                result.axis, point.value, st.strategy, st.mean_energy_j, st.stderr_j, st.n_trials
            )
            .unwrap();
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultFile {
    pub config: SimConfig,
    pub sweeps: Vec<SweepResult>,
}

impl ResultFile {
    pub fn load(path: &Path) -> Result<Self, SimError> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Write `value` as pretty JSON to `path`.
pub fn persist<T: Serialize>(value: &T, path: &Path) -> Result<(), SimError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
