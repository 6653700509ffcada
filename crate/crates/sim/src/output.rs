//! Output rows and their CSV/JSON encodings.
//!
//! Unbounded time- and energy-to-solution (no successful run) is written as an
//! empty CSV field and as JSON `null`, so both encodings decode to the same rows.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Mode, OutputFormat};
use crate::error::CliError;

/// One instance under one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub instance_id: String,
    pub n: usize,
    pub density: f64,
    pub instance_seed: u64,
    pub mode: Mode,
    pub runs: usize,
    pub successes: usize,
    pub p_suc: f64,
    #[serde(rename = "best_H_found")]
    pub best_h_found: i64,
    #[serde(rename = "oracle_H")]
    pub oracle_h: i64,
    pub oracle_method: String,
    pub tts_seconds: Option<f64>,
    pub ets_joules: Option<f64>,
    pub lfsr_seed: u64,
    pub config_hash: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub instance_id: String,
    pub mode: Mode,
    pub run: usize,
    /// LFSR register that produced this run's initial voltages.
    pub lfsr_state: u64,
    pub initial_h: i64,
    pub final_h: i64,
    pub flips: u64,
    pub success: bool,
    pub spins: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub instance_id: String,
    pub mode: Mode,
    pub run: usize,
    pub t_seconds: f64,
    pub h: i64,
    pub flips: u64,
}

/// Mean success rate of one grid cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SrRow {
    pub mode: Mode,
    pub n: usize,
    pub density: f64,
    pub instances: usize,
    pub mean_p_suc: f64,
}

/// One step of the cumulative TTS distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsCdfRow {
    pub mode: Mode,
    pub tts_seconds: f64,
    pub solved: usize,
    pub fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TtsSummaryRow {
    pub mode: Mode,
    pub instances: usize,
    pub unsolved: usize,
    pub mean_p_suc: f64,
    pub mean_tts_seconds: Option<f64>,
    pub median_tts_seconds: Option<f64>,
    /// False flags a left-skewed distribution.
    pub median_le_mean: Option<bool>,
}

pub fn to_csv<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Output(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::Output(e.to_string()))
}

pub fn from_csv<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, CliError> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(CliError::from))
        .collect()
}

pub fn to_json<T: Serialize>(rows: &[T]) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(rows)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<Vec<T>, CliError> {
    Ok(serde_json::from_str(text)?)
}

pub fn encode<T: Serialize>(rows: &[T], format: OutputFormat) -> Result<String, CliError> {
    match format {
        OutputFormat::Csv => to_csv(rows),
        OutputFormat::Json => to_json(rows),
    }
}
