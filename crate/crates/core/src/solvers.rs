//! Software oracles for best-known energies.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{invalid, Error, Result};
use crate::instances::mix64;
use crate::ising::{energy_unchecked, field_unchecked, ProblemInstance, SpinVector};

/// Largest instance [`brute_force`] will enumerate.
pub const BRUTE_FORCE_LIMIT: usize = 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum OracleMethod {
    Brute,
    Tabu,
}

impl OracleMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleMethod::Brute => "brute",
            OracleMethod::Tabu => "tabu",
        }
    }
}

impl core::fmt::Display for OracleMethod {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleResult {
    pub best_energy: i64,
    pub best_config: SpinVector,
    pub method: OracleMethod,
    /// Configurations visited (brute force) or flips performed (Tabu).
    pub iterations_used: u64,
}

/// Sort key for the tie-break among equal-energy configurations: spin 0 is the
/// most significant position and +1 sorts before -1.
#[inline]
fn lex_key(down_mask: u64) -> u64 {
    down_mask.reverse_bits()
}

/// Exact minimum over all `2^n` configurations.
///
/// Enumerates half the space in Gray-code order with spin 0 held at +1 (the
/// other half is the global flip), updating energy and fields per flip. Among
/// optimal configurations the lexicographically smallest is returned, with +1
/// ordered before -1.
pub fn brute_force(inst: &ProblemInstance) -> Result<OracleResult> {
    let n = inst.n();
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooManySpins {
            n,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    inst.validate()?;
    if n == 0 {
        return Ok(OracleResult {
            best_energy: 0,
            best_config: SpinVector::all_up(0),
            method: OracleMethod::Brute,
            iterations_used: 1,
        });
    }
    let mut spins = vec![1i8; n];
    let mut fields: Vec<i64> = (0..n).map(|i| field_unchecked(inst, &spins, i)).collect();
    let mut energy = energy_unchecked(inst, &spins);
    // bit k set means spin k is -1
    let mut down = 0u64;
    let mut best = (energy, down);
    let states = 1u64 << (n - 1);
    for step in 1..states {
        let k = step.trailing_zeros() as usize + 1;
        energy += 2 * spins[k] as i64 * fields[k];
        spins[k] = -spins[k];
        down ^= 1 << k;
        let s = 2 * spins[k] as i64;
        for (i, f) in fields.iter_mut().enumerate() {
            *f += inst.coupling(i, k) as i64 * s;
        }
        if energy < best.0 || (energy == best.0 && lex_key(down) < lex_key(best.1)) {
            best = (energy, down);
        }
    }
    let best_config = SpinVector::from_bits(!best.1, n)?;
    debug_assert_eq!(energy_unchecked(inst, best_config.as_slice()), best.0);
    Ok(OracleResult {
        best_energy: best.0,
        best_config,
        method: OracleMethod::Brute,
        iterations_used: states,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TabuParams {
    /// Iterations a flipped spin stays tabu.
    pub tenure: usize,
    /// Flips per restart.
    pub max_iterations: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl TabuParams {
    /// The budget used for best-known energies: tenure `n/4`, `100 n`
    /// iterations, 20 restarts.
    pub fn generous(n: usize, seed: u64) -> Self {
        Self {
            tenure: (n / 4).max(1),
            max_iterations: 100 * n.max(1),
            restarts: 20,
            seed,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.tenure == 0 {
            return Err(invalid("tenure", "must be at least 1"));
        }
        if self.max_iterations < n {
            return Err(invalid(
                "max_iterations",
                format!("must be at least n = {n}"),
            ));
        }
        if self.restarts == 0 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        Ok(())
    }
}

struct TabuRun {
    best_energy: i64,
    best_spins: Vec<i8>,
    flips: u64,
}

/// Single-flip best-improvement Tabu search from one random start.
///
/// `on_incumbent` sees every new incumbent energy in order.
fn tabu_restart(
    inst: &ProblemInstance,
    params: &TabuParams,
    seed: u64,
    mut on_incumbent: impl FnMut(i64),
) -> TabuRun {
    let n = inst.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spins: Vec<i8> = (0..n)
        .map(|_| if rng.random::<bool>() { 1 } else { -1 })
        .collect();
    let mut fields: Vec<i64> = (0..n).map(|i| field_unchecked(inst, &spins, i)).collect();
    let mut energy = energy_unchecked(inst, &spins);
    let mut best_energy = energy;
    let mut best_spins = spins.clone();
    on_incumbent(best_energy);
    let mut tabu_until = vec![0usize; n];
    let mut flips = 0u64;

    for iter in 1..=params.max_iterations {
        let mut choice: Option<(usize, i64)> = None;
        for k in 0..n {
            let delta = 2 * spins[k] as i64 * fields[k];
            let allowed = tabu_until[k] < iter || energy + delta < best_energy;
            if allowed && choice.is_none_or(|(_, d)| delta < d) {
                choice = Some((k, delta));
            }
        }
        // every move tabu and none aspirating
        let Some((k, delta)) = choice else { continue };
        energy += delta;
        spins[k] = -spins[k];
        let s = 2 * spins[k] as i64;
        for (i, f) in fields.iter_mut().enumerate() {
            *f += inst.coupling(i, k) as i64 * s;
        }
        tabu_until[k] = iter + params.tenure;
        flips += 1;
        if energy < best_energy {
            best_energy = energy;
            best_spins.copy_from_slice(&spins);
            on_incumbent(best_energy);
        }
    }
    TabuRun {
        best_energy,
        best_spins,
        flips,
    }
}

fn restart_seed(seed: u64, restart: usize) -> u64 {
    mix64(seed ^ mix64(restart as u64))
}

/// Tabu search with aspiration over `params.restarts` random starts.
///
/// The best restart wins; equal energies go to the lowest restart index.
pub fn tabu_search(inst: &ProblemInstance, params: &TabuParams) -> Result<OracleResult> {
    tabu_search_observed(inst, params, |_, _| {})
}

/// [`tabu_search`] reporting `(restart, incumbent)` each time a restart's
/// incumbent improves.
pub fn tabu_search_observed(
    inst: &ProblemInstance,
    params: &TabuParams,
    mut observer: impl FnMut(usize, i64),
) -> Result<OracleResult> {
    inst.validate()?;
    params.validate(inst.n())?;
    let mut best: Option<TabuRun> = None;
    let mut total = 0u64;
    for r in 0..params.restarts {
        let run = tabu_restart(inst, params, restart_seed(params.seed, r), |e| {
            observer(r, e)
        });
        total += run.flips;
        if best
            .as_ref()
            .is_none_or(|b| run.best_energy < b.best_energy)
        {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    let best_config = SpinVector::new(best.best_spins)?;
    if energy_unchecked(inst, best_config.as_slice()) != best.best_energy {
        return Err(Error::Integration {
            t: 0.0,
            reason: "tabu incumbent does not reproduce its energy".into(),
        });
    }
    Ok(OracleResult {
        best_energy: best.best_energy,
        best_config,
        method: OracleMethod::Tabu,
        iterations_used: total,
    })
}

/// Exact for `n <= 24`, otherwise Tabu with [`TabuParams::generous`].
pub fn best_known(inst: &ProblemInstance, seed: u64) -> Result<OracleResult> {
    if inst.n() <= BRUTE_FORCE_LIMIT {
        brute_force(inst)
    } else {
        tabu_search(inst, &TabuParams::generous(inst.n(), seed))
    }
}
