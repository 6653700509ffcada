//! Run configuration: defaults, `key=value` files and command-line overrides.
//!
//! Every key accepted in a file can also be given on the command line; later
//! assignments win, so the binary applies defaults, then the file, then flags.

use std::fmt;
use std::str::FromStr;

use cim_core::{DynamicsConfig, EnsembleSpec, PerturbationSchedule, TabuParams, COEFF_MAX};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;

/// Which dynamics a run uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Column refresh with gated DACs and leakage.
    Perturbed,
    /// Programmed couplings only.
    Gradient,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Perturbed => "perturbed",
            Mode::Gradient => "gradient",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationSetting {
    On,
    Off,
    Both,
}

impl PerturbationSetting {
    pub fn modes(self) -> &'static [Mode] {
        match self {
            PerturbationSetting::On => &[Mode::Perturbed],
            PerturbationSetting::Off => &[Mode::Gradient],
            PerturbationSetting::Both => &[Mode::Perturbed, Mode::Gradient],
        }
    }
}

impl FromStr for PerturbationSetting {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on" => Ok(Self::On),
            "off" => Ok(Self::Off),
            "both" => Ok(Self::Both),
            _ => Err(format!("expected on, off or both, got {s:?}")),
        }
    }
}

impl fmt::Display for PerturbationSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::On => "on",
            Self::Off => "off",
            Self::Both => "both",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            _ => Err(format!("expected csv or json, got {s:?}")),
        }
    }
}

impl fmt::Display for OutputFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Csv => "csv",
            Self::Json => "json",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub rho: f64,
    pub dt: f64,
    pub anneal_time: f64,
    pub column_dwell: f64,
    pub gate_period: f64,
    pub gate_off_fraction: f64,
    pub quiet_tail: f64,
    pub leak_tau: f64,
    pub perturbation: PerturbationSetting,
    /// `None` selects the generous budget for the instance size.
    pub tabu_tenure: Option<usize>,
    pub tabu_max_iterations: Option<usize>,
    pub tabu_restarts: Option<usize>,
    pub tabu_seed: u64,
    pub sizes: Vec<usize>,
    pub densities: Vec<f64>,
    pub instances_per_cell: usize,
    pub coeff_max: i8,
    pub base_seed: u64,
    pub runs_per_instance: usize,
    /// Combined with each instance seed to seed that instance's LFSR.
    pub run_seed: u64,
    pub output_format: OutputFormat,
    pub trace: bool,
    /// Chip power in watts.
    pub power: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            rho: DynamicsConfig::DEFAULT_RHO,
            dt: DynamicsConfig::DEFAULT_DT,
            anneal_time: DynamicsConfig::DEFAULT_ANNEAL_TIME,
            column_dwell: PerturbationSchedule::DEFAULT_DWELL,
            gate_period: PerturbationSchedule::DEFAULT_GATE_PERIOD,
            gate_off_fraction: PerturbationSchedule::DEFAULT_OFF_FRACTION,
            quiet_tail: PerturbationSchedule::DEFAULT_QUIET_TAIL,
            leak_tau: PerturbationSchedule::DEFAULT_LEAK_TAU,
            perturbation: PerturbationSetting::On,
            tabu_tenure: None,
            tabu_max_iterations: None,
            tabu_restarts: None,
            tabu_seed: 0,
            sizes: vec![16, 32, 48, 64],
            densities: vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9],
            instances_per_cell: 20,
            coeff_max: COEFF_MAX,
            base_seed: 1,
            runs_per_instance: 1000,
            run_seed: 1,
            output_format: OutputFormat::Csv,
            trace: false,
            power: 31.6e-3,
        }
    }
}

/// Keys in canonical order.
pub const KEYS: &[&str] = &[
    "rho",
    "dt",
    "anneal_time",
    "column_dwell",
    "gate_period",
    "gate_off_fraction",
    "quiet_tail",
    "leak_tau",
    "perturbation",
    "tabu_tenure",
    "tabu_max_iterations",
    "tabu_restarts",
    "tabu_seed",
    "sizes",
    "densities",
    "instances_per_cell",
    "coeff_max",
    "base_seed",
    "runs_per_instance",
    "run_seed",
    "output_format",
    "trace",
    "power",
];

/// Keys that change presentation only and are left out of the hash.
const PRESENTATION_KEYS: &[&str] = &["output_format", "trace"];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| CliError::Config(format!("{key}={value}: {e}")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>, CliError>
where
    T::Err: fmt::Display,
{
    value
        .split(',')
        .map(|item| parse(key, item.trim()))
        .collect()
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(CliError::Config(format!(
            "{key}={value}: expected true or false"
        ))),
    }
}

fn parse_optional(key: &str, value: &str) -> Result<Option<usize>, CliError> {
    if value == "auto" {
        Ok(None)
    } else {
        parse(key, value).map(Some)
    }
}

fn join<T: fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn show_optional(x: Option<usize>) -> String {
    x.map_or_else(|| "auto".to_string(), |v| v.to_string())
}

impl RunConfig {
    /// Assigns one key. Numeric values use plain SI units (seconds, watts).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        let value = value.trim();
        match key {
            "rho" => self.rho = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "anneal_time" => self.anneal_time = parse(key, value)?,
            "column_dwell" => self.column_dwell = parse(key, value)?,
            "gate_period" => self.gate_period = parse(key, value)?,
            "gate_off_fraction" => self.gate_off_fraction = parse(key, value)?,
            "quiet_tail" => self.quiet_tail = parse(key, value)?,
            "leak_tau" => self.leak_tau = parse(key, value)?,
            "perturbation" => self.perturbation = parse(key, value)?,
            "tabu_tenure" => self.tabu_tenure = parse_optional(key, value)?,
            "tabu_max_iterations" => self.tabu_max_iterations = parse_optional(key, value)?,
            "tabu_restarts" => self.tabu_restarts = parse_optional(key, value)?,
            "tabu_seed" => self.tabu_seed = parse(key, value)?,
            "sizes" => self.sizes = parse_list(key, value)?,
            "densities" => self.densities = parse_list(key, value)?,
            "instances_per_cell" => self.instances_per_cell = parse(key, value)?,
            "coeff_max" => self.coeff_max = parse(key, value)?,
            "base_seed" => self.base_seed = parse(key, value)?,
            "runs_per_instance" => self.runs_per_instance = parse(key, value)?,
            "run_seed" => self.run_seed = parse(key, value)?,
            "output_format" => self.output_format = parse(key, value)?,
            "trace" => self.trace = parse_bool(key, value)?,
            "power" => self.power = parse(key, value)?,
            _ => return Err(CliError::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        Some(match key {
            "rho" => self.rho.to_string(),
            "dt" => self.dt.to_string(),
            "anneal_time" => self.anneal_time.to_string(),
            "column_dwell" => self.column_dwell.to_string(),
            "gate_period" => self.gate_period.to_string(),
            "gate_off_fraction" => self.gate_off_fraction.to_string(),
            "quiet_tail" => self.quiet_tail.to_string(),
            "leak_tau" => self.leak_tau.to_string(),
            "perturbation" => self.perturbation.to_string(),
            "tabu_tenure" => show_optional(self.tabu_tenure),
            "tabu_max_iterations" => show_optional(self.tabu_max_iterations),
            "tabu_restarts" => show_optional(self.tabu_restarts),
            "tabu_seed" => self.tabu_seed.to_string(),
            "sizes" => join(&self.sizes),
            "densities" => join(&self.densities),
            "instances_per_cell" => self.instances_per_cell.to_string(),
            "coeff_max" => self.coeff_max.to_string(),
            "base_seed" => self.base_seed.to_string(),
            "runs_per_instance" => self.runs_per_instance.to_string(),
            "run_seed" => self.run_seed.to_string(),
            "output_format" => self.output_format.to_string(),
            "trace" => self.trace.to_string(),
            "power" => self.power.to_string(),
            _ => return None,
        })
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("line {}: expected key=value", idx + 1)))?;
            self.set(key.trim(), value)
                .map_err(|e| CliError::Config(format!("line {}: {e}", idx + 1)))?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self, CliError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    /// All keys, one `key=value` per line, readable by [`RunConfig::from_text`].
    pub fn to_text(&self) -> String {
        KEYS.iter()
            .map(|k| format!("{k}={}\n", self.get(k).expect("known key")))
            .collect()
    }

    /// First 16 hex digits of the SHA-256 of every result-affecting key.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for key in KEYS.iter().filter(|k| !PRESENTATION_KEYS.contains(k)) {
            hasher.update(format!("{key}={}\n", self.get(key).expect("known key")));
        }
        hasher.finalize()[..8]
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn dynamics(&self) -> DynamicsConfig {
        DynamicsConfig {
            rho: self.rho,
            dt: self.dt,
            anneal_time: self.anneal_time,
            trace: self.trace,
        }
    }

    pub fn schedule(&self, n: usize) -> PerturbationSchedule {
        PerturbationSchedule {
            column_dwell: self.column_dwell,
            n_columns: n,
            gate_period: self.gate_period,
            gate_off_fraction: self.gate_off_fraction,
            quiet_tail: self.quiet_tail,
            leak_tau: self.leak_tau,
            enabled: true,
        }
    }

    pub fn tabu(&self, n: usize) -> TabuParams {
        let generous = TabuParams::generous(n, self.tabu_seed);
        TabuParams {
            tenure: self.tabu_tenure.unwrap_or(generous.tenure),
            max_iterations: self.tabu_max_iterations.unwrap_or(generous.max_iterations),
            restarts: self.tabu_restarts.unwrap_or(generous.restarts),
            seed: self.tabu_seed,
        }
    }

    pub fn ensemble(&self) -> EnsembleSpec {
        EnsembleSpec {
            sizes: self.sizes.clone(),
            densities: self.densities.clone(),
            instances_per_cell: self.instances_per_cell,
            coeff_max: self.coeff_max,
            base_seed: self.base_seed,
        }
    }

    /// Checks everything that does not depend on the instance size.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.runs_per_instance == 0 {
            return Err(CliError::Config(
                "runs_per_instance must be at least 1".into(),
            ));
        }
        if !(self.power.is_finite() && self.power > 0.0) {
            return Err(CliError::Config(format!(
                "power must be positive, got {}",
                self.power
            )));
        }
        self.validate_for(cim_core::MAX_SPINS)
    }

    /// Checks the size-dependent parts for `n` spins.
    pub fn validate_for(&self, n: usize) -> Result<(), CliError> {
        let sched = self.schedule(n);
        sched.validate()?;
        self.dynamics().validate(Some(&sched))?;
        if n > cim_core::solvers::BRUTE_FORCE_LIMIT
            || self.tabu_tenure.is_some()
            || self.tabu_max_iterations.is_some()
            || self.tabu_restarts.is_some()
        {
            self.tabu(n).validate(n)?;
        }
        Ok(())
    }

    pub fn validate_ensemble(&self) -> Result<(), CliError> {
        self.validate()?;
        self.ensemble().validate()?;
        for &n in &self.sizes {
            self.validate_for(n)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig::default();
        cfg.set("leak_tau", "inf").unwrap();
        cfg.set("sizes", "16, 64").unwrap();
        cfg.set("tabu_restarts", "7").unwrap();
        cfg.set("perturbation", "both").unwrap();
        let back = RunConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
    }

    #[test]
    fn later_assignments_win() {
        let cfg = RunConfig::from_text("dt = 1e-9\n# comment\ndt=2.5e-10 # trailing\n").unwrap();
        assert_eq!(cfg.dt, 2.5e-10);
    }

    #[test]
    fn hash_tracks_results_not_presentation() {
        let base = RunConfig::default();
        let mut other = base.clone();
        other.output_format = OutputFormat::Json;
        other.trace = true;
        assert_eq!(base.hash(), other.hash());
        other.run_seed += 1;
        assert_ne!(base.hash(), other.hash());
        assert_eq!(base.hash().len(), 16);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(RunConfig::from_text("nonsense").is_err());
        assert!(RunConfig::from_text("unknown=1").is_err());
        assert!(RunConfig::from_text("dt=fast").is_err());
        assert!(RunConfig::from_text("perturbation=maybe").is_err());
        assert!(RunConfig::from_text("dt=-1").unwrap().validate().is_err());
        assert!(RunConfig::from_text("dt=3e-9").unwrap().validate().is_err());
        assert!(RunConfig::from_text("runs_per_instance=0")
            .unwrap()
            .validate()
            .is_err());
        assert!(RunConfig::from_text("gate_off_fraction=1.5")
            .unwrap()
            .validate()
            .is_err());
        assert!(RunConfig::from_text("sizes=65")
            .unwrap()
            .validate_ensemble()
            .is_err());
        assert!(RunConfig::from_text("tabu_tenure=0")
            .unwrap()
            .validate()
            .is_err());
        assert!(RunConfig::default().validate_ensemble().is_ok());
    }
}
