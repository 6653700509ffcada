//! Success judgment and figures of merit.

use alloc::vec::Vec;

use crate::error::{invalid, Error, Result};

/// Whether a run reaching `energy` counts as a success against `best`.
///
/// For negative `best` the run must reach 99% of it. `best == 0` allows no
/// slack (`energy <= 0`) and positive `best` allows 1% relative slack above
/// it. All comparisons are done in integers.
pub fn is_success(energy: i64, best: i64) -> bool {
    let (e, b) = (energy as i128, best as i128);
    match best {
        b0 if b0 < 0 => 100 * e <= 99 * b,
        0 => energy <= 0,
        _ => 99 * e <= 100 * b,
    }
}

/// Time to reach 99% cumulative success: `tau * ln(0.01) / ln(1 - p)`.
///
/// Returns `tau` once `p >= 0.99` and `f64::INFINITY` for `p == 0`.
pub fn tts(tau: f64, p_suc: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_suc) {
        return Err(invalid("p_suc", "must lie in [0, 1]"));
    }
    if p_suc == 0.0 {
        return Ok(f64::INFINITY);
    }
    if p_suc >= 0.99 {
        return Ok(tau);
    }
    Ok(tau * libm::log(0.01) / libm::log(1.0 - p_suc))
}

/// Energy to solution, `power * tts`.
pub fn ets(power: f64, tts_value: f64) -> Result<f64> {
    if power.is_nan() || tts_value.is_nan() || power.is_infinite() {
        return Err(Error::NonFinite("ets input"));
    }
    if tts_value.is_infinite() {
        return Ok(f64::INFINITY);
    }
    Ok(power * tts_value)
}

/// ETS per edge-bit: `ets / (log2(levels) * n_spins * interactions / 2)`.
pub fn normalized_ets(ets_value: f64, levels: u32, n_spins: u32, interactions: u32) -> Result<f64> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two coefficient levels"));
    }
    let edges = n_spins as f64 * interactions as f64 / 2.0;
    if edges <= 0.0 {
        return Err(invalid(
            "edges",
            "spin and interaction counts must be positive",
        ));
    }
    Ok(ets_value / (libm::log2(levels as f64) * edges))
}

/// Per-spin area over `log2(levels) * directionality * interactions`.
pub fn normalized_spin_area(
    core_area: f64,
    n_spins: u32,
    levels: u32,
    directionality: u32,
    interactions: u32,
) -> Result<f64> {
    if levels < 2 {
        return Err(invalid("levels", "need at least two coefficient levels"));
    }
    if !(1..=2).contains(&directionality) {
        return Err(invalid(
            "directionality",
            "must be 1 (undirected) or 2 (directed)",
        ));
    }
    if n_spins == 0 || interactions == 0 || core_area.is_nan() || core_area <= 0.0 {
        return Err(invalid(
            "area",
            "area, spins and interactions must be positive",
        ));
    }
    let spin_area = core_area / n_spins as f64;
    Ok(spin_area / (libm::log2(levels as f64) * directionality as f64 * interactions as f64))
}

/// Inputs for the hardware figures of merit.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MeritInputs {
    /// Watts.
    pub power: f64,
    /// Per-run anneal time, seconds.
    pub anneal_time: f64,
    pub coeff_levels: u32,
    pub n_spins: u32,
    pub interactions_per_spin: u32,
    /// 2 for directed coupling, 1 for undirected.
    pub directionality: u32,
}

impl MeritInputs {
    /// 31.6 mW, 3 us, 31 levels, 64 spins with 63 directed interactions each.
    pub fn this_machine() -> Self {
        Self {
            power: 31.6e-3,
            anneal_time: 3e-6,
            coeff_levels: crate::COEFF_LEVELS,
            n_spins: 64,
            interactions_per_spin: 63,
            directionality: 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.power > 0.0 && self.anneal_time > 0.0) {
            return Err(invalid("merit", "power and anneal time must be positive"));
        }
        if self.coeff_levels < 2 || self.n_spins == 0 || self.interactions_per_spin == 0 {
            return Err(invalid(
                "merit",
                "levels, spins and interactions must be positive",
            ));
        }
        if !(1..=2).contains(&self.directionality) {
            return Err(invalid("directionality", "must be 1 or 2"));
        }
        Ok(())
    }

    pub fn normalized_ets(&self, ets_value: f64) -> Result<f64> {
        normalized_ets(
            ets_value,
            self.coeff_levels,
            self.n_spins,
            self.interactions_per_spin,
        )
    }
}

/// Outcome of a batch of runs on one instance.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunStats {
    pub runs: usize,
    pub successes: usize,
    pub p_suc: f64,
    pub best_energy_found: i64,
    pub oracle_energy: i64,
    pub tts: f64,
    pub ets: f64,
}

impl RunStats {
    pub fn from_energies(
        energies: &[i64],
        oracle_energy: i64,
        tau: f64,
        power: f64,
    ) -> Result<Self> {
        if energies.is_empty() {
            return Err(Error::Empty("run energies"));
        }
        let runs = energies.len();
        let successes = energies
            .iter()
            .filter(|&&e| is_success(e, oracle_energy))
            .count();
        let p_suc = successes as f64 / runs as f64;
        let tts_value = tts(tau, p_suc)?;
        Ok(Self {
            runs,
            successes,
            p_suc,
            best_energy_found: *energies.iter().min().expect("non-empty"),
            oracle_energy,
            tts: tts_value,
            ets: ets(power, tts_value)?,
        })
    }
}

/// Ensemble summary over many instances.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BatchStats {
    pub instances: Vec<RunStats>,
    pub mean_p_suc: f64,
    /// Over instances with finite TTS; `None` when nothing was solved.
    pub mean_tts: Option<f64>,
    pub median_tts: Option<f64>,
    /// Instances whose runs never succeeded.
    pub unsolved: usize,
    /// `(tts, instances solved within tts)`, ascending.
    pub cumulative: Vec<(f64, usize)>,
}

/// Median of an ascending slice.
fn median_sorted(xs: &[f64]) -> Option<f64> {
    match xs.len() {
        0 => None,
        n if n % 2 == 1 => Some(xs[n / 2]),
        n => Some(0.5 * (xs[n / 2 - 1] + xs[n / 2])),
    }
}

pub fn median(xs: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    median_sorted(&v)
}

/// Aggregates per-run energies of several instances, each paired with its
/// oracle energy.
pub fn aggregate_batch(
    per_instance: &[(Vec<i64>, i64)],
    tau: f64,
    power: f64,
) -> Result<BatchStats> {
    let stats = per_instance
        .iter()
        .map(|(energies, oracle)| RunStats::from_energies(energies, *oracle, tau, power))
        .collect::<Result<Vec<_>>>()?;
    summarize(stats)
}

/// Builds the ensemble summary from already computed per-instance stats.
pub fn summarize(instances: Vec<RunStats>) -> Result<BatchStats> {
    if instances.is_empty() {
        return Err(Error::Empty("batch"));
    }
    let mut solved: Vec<f64> = instances
        .iter()
        .map(|s| s.tts)
        .filter(|t| t.is_finite())
        .collect();
    solved.sort_by(f64::total_cmp);
    let unsolved = instances.len() - solved.len();
    let mean_tts = (!solved.is_empty()).then(|| solved.iter().sum::<f64>() / solved.len() as f64);
    let median_tts = median_sorted(&solved);
    let mut cumulative: Vec<(f64, usize)> = Vec::new();
    for (k, &t) in solved.iter().enumerate() {
        match cumulative.last_mut() {
            Some(last) if last.0 == t => last.1 = k + 1,
            _ => cumulative.push((t, k + 1)),
        }
    }
    let mean_p_suc = instances.iter().map(|s| s.p_suc).sum::<f64>() / instances.len() as f64;
    Ok(BatchStats {
        instances,
        mean_p_suc,
        mean_tts,
        median_tts,
        unsolved,
        cumulative,
    })
}
