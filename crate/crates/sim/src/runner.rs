//! Solving instances and running benchmark grids.
//!
//! Each instance owns one LFSR stream seeded from the run seed and the
//! instance seed, advanced once per run. Both modes start from the same
//! stream, so every perturbed run has a gradient-only twin with identical
//! initial voltages. Grid cells are independent; results are collected in
//! canonical order (instance, then mode) whatever the worker count.

use std::collections::BTreeMap;

use cim_core::instances::mix64;
use cim_core::metrics::{summarize, BatchStats, RunStats};
use cim_core::solvers::{best_known, BRUTE_FORCE_LIMIT};
use cim_core::{brute_force, run_anneal, tabu_search, Lfsr, OracleResult, ProblemInstance};
use rayon::prelude::*;

use crate::config::{Mode, RunConfig};
use crate::error::CliError;
use crate::output::{RunRow, SrRow, SummaryRow, TraceRow, TtsCdfRow, TtsSummaryRow};

/// Upper bound on `sum(n * steps * runs)` a bench may schedule without `force`.
pub const NODE_STEP_BUDGET: f64 = 5e10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleChoice {
    /// Exhaustive up to the brute-force limit, Tabu above.
    Auto,
    Brute,
    Tabu,
}

/// An instance with the identity it is reported under.
#[derive(Debug, Clone)]
pub struct Job {
    pub instance_id: String,
    /// Nominal density for generated instances, realised density otherwise.
    pub density: f64,
    pub instance: ProblemInstance,
}

impl Job {
    pub fn from_instance(instance_id: impl Into<String>, instance: ProblemInstance) -> Self {
        Self {
            instance_id: instance_id.into(),
            density: instance.density(),
            instance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct InstanceOutcome {
    pub summary: SummaryRow,
    pub stats: RunStats,
    pub runs: Vec<RunRow>,
    pub traces: Vec<TraceRow>,
}

/// LFSR seed for one instance; never zero.
pub fn lfsr_seed(run_seed: u64, instance_seed: u64) -> u64 {
    match mix64(run_seed ^ mix64(instance_seed)) {
        0 => 1,
        s => s,
    }
}

pub fn compute_oracle(
    inst: &ProblemInstance,
    cfg: &RunConfig,
    choice: OracleChoice,
) -> Result<OracleResult, CliError> {
    let n = inst.n();
    let mut params = cfg.tabu(n);
    params.seed = mix64(cfg.tabu_seed ^ inst.seed());
    let result = match choice {
        OracleChoice::Brute if n > BRUTE_FORCE_LIMIT => {
            return Err(CliError::Refused(format!(
                "brute force covers at most {BRUTE_FORCE_LIMIT} spins, this instance has {n}; use --method tabu"
            )))
        }
        OracleChoice::Brute => brute_force(inst)?,
        OracleChoice::Tabu => tabu_search(inst, &params)?,
        OracleChoice::Auto if n <= BRUTE_FORCE_LIMIT => best_known(inst, params.seed)?,
        OracleChoice::Auto => tabu_search(inst, &params)?,
    };
    Ok(result)
}

/// Runs `cfg.runs_per_instance` anneals of one instance in one mode.
///
/// Per-run rows are kept when `detail` is set; trace rows when `cfg.trace` is.
pub fn solve_instance(
    job: &Job,
    cfg: &RunConfig,
    mode: Mode,
    oracle: &OracleResult,
    detail: bool,
) -> Result<InstanceOutcome, CliError> {
    let inst = &job.instance;
    let n = inst.n();
    cfg.validate()?;
    cfg.validate_for(n)?;
    let dynamics = cfg.dynamics();
    let sched = (mode == Mode::Perturbed).then(|| cfg.schedule(n));
    let seed = lfsr_seed(cfg.run_seed, inst.seed());
    let mut lfsr = Lfsr::new(seed)?;

    let mut energies = Vec::with_capacity(cfg.runs_per_instance);
    let mut runs = Vec::new();
    let mut traces = Vec::new();
    for run in 0..cfg.runs_per_instance {
        let init = lfsr.init_voltages(n)?;
        let result = run_anneal(inst, &dynamics, sched.as_ref(), &init)?;
        energies.push(result.energy);
        if detail {
            runs.push(RunRow {
                instance_id: job.instance_id.clone(),
                mode,
                run,
                lfsr_state: lfsr.reg(),
                initial_h: result.initial_energy,
                final_h: result.energy,
                flips: result.flips,
                success: cim_core::metrics::is_success(result.energy, oracle.best_energy),
                spins: result.spins.to_string(),
            });
        }
        if let Some(trace) = result.trace {
            traces.extend(trace.into_iter().map(|p| TraceRow {
                instance_id: job.instance_id.clone(),
                mode,
                run,
                t_seconds: p.t,
                h: p.energy,
                flips: p.flips,
            }));
        }
        lfsr = lfsr.next();
    }

    let stats = RunStats::from_energies(&energies, oracle.best_energy, cfg.anneal_time, cfg.power)?;
    let finite = |x: f64| x.is_finite().then_some(x);
    let summary = SummaryRow {
        instance_id: job.instance_id.clone(),
        n,
        density: job.density,
        instance_seed: inst.seed(),
        mode,
        runs: stats.runs,
        successes: stats.successes,
        p_suc: stats.p_suc,
        best_h_found: stats.best_energy_found,
        oracle_h: oracle.best_energy,
        oracle_method: oracle.method.to_string(),
        tts_seconds: finite(stats.tts),
        ets_joules: finite(stats.ets),
        lfsr_seed: seed,
        config_hash: cfg.hash(),
    };
    Ok(InstanceOutcome {
        summary,
        stats,
        runs,
        traces,
    })
}

/// Everything a bench produces, each table in canonical order.
#[derive(Debug, Clone, Default)]
pub struct BenchReport {
    pub summary: Vec<SummaryRow>,
    pub sr_grid: Vec<SrRow>,
    pub tts_cdf: Vec<TtsCdfRow>,
    pub tts_summary: Vec<TtsSummaryRow>,
    pub runs: Vec<RunRow>,
    pub traces: Vec<TraceRow>,
}

pub fn estimate_node_steps(cfg: &RunConfig) -> f64 {
    let per_size: f64 = cfg.sizes.iter().map(|&n| n as f64).sum();
    let steps = (cfg.anneal_time / cfg.dt).round();
    per_size
        * cfg.densities.len() as f64
        * cfg.instances_per_cell as f64
        * cfg.perturbation.modes().len() as f64
        * cfg.runs_per_instance as f64
        * steps
}

pub fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {workers} workers: {e}")))
}

/// Generates the ensemble of `cfg` and computes each instance's oracle.
pub fn prepare(
    cfg: &RunConfig,
    pool: &rayon::ThreadPool,
) -> Result<Vec<(Job, OracleResult)>, CliError> {
    let spec = cfg.ensemble();
    let cells: Vec<_> = spec.cells().collect();
    pool.install(|| {
        cells
            .par_iter()
            .map(|cell| {
                let instance = cell.generate(spec.coeff_max)?;
                let job = Job {
                    instance_id: instance.label().to_string(),
                    density: cell.density,
                    instance,
                };
                let oracle = compute_oracle(&job.instance, cfg, OracleChoice::Auto)?;
                Ok((job, oracle))
            })
            .collect()
    })
}

/// Runs the full grid of `cfg` on `workers` threads.
pub fn bench(
    cfg: &RunConfig,
    workers: usize,
    force: bool,
    detail: bool,
) -> Result<BenchReport, CliError> {
    cfg.validate_ensemble()?;
    let estimate = estimate_node_steps(cfg);
    if estimate > NODE_STEP_BUDGET && !force {
        return Err(CliError::Resource(format!(
            "about {estimate:.2e} node-steps exceed the budget of {NODE_STEP_BUDGET:.0e}; \
             shrink the grid or pass --force"
        )));
    }
    let pool = thread_pool(workers)?;
    let prepared = prepare(cfg, &pool)?;
    let modes = cfg.perturbation.modes();
    let cells: Vec<(usize, Mode)> = (0..prepared.len())
        .flat_map(|i| modes.iter().map(move |&m| (i, m)))
        .collect();
    let outcomes: Vec<InstanceOutcome> = pool.install(|| {
        cells
            .par_iter()
            .map(|&(i, mode)| solve_instance(&prepared[i].0, cfg, mode, &prepared[i].1, detail))
            .collect::<Result<_, CliError>>()
    })?;
    tabulate(outcomes)
}

/// Builds the SR grid and TTS tables from per-instance outcomes.
pub fn tabulate(outcomes: Vec<InstanceOutcome>) -> Result<BenchReport, CliError> {
    let mut report = BenchReport::default();

    // BTreeMap on the bit pattern keeps grid order stable for positive densities
    let mut grid: BTreeMap<(Mode, usize, u64), (f64, Vec<f64>)> = BTreeMap::new();
    let mut per_mode: BTreeMap<Mode, Vec<RunStats>> = BTreeMap::new();
    for o in outcomes {
        let s = &o.summary;
        grid.entry((s.mode, s.n, s.density.to_bits()))
            .or_insert_with(|| (s.density, Vec::new()))
            .1
            .push(s.p_suc);
        per_mode.entry(s.mode).or_default().push(o.stats);
        report.summary.push(o.summary);
        report.runs.extend(o.runs);
        report.traces.extend(o.traces);
    }

    report.sr_grid = grid
        .into_iter()
        .map(|((mode, n, _), (density, p))| SrRow {
            mode,
            n,
            density,
            instances: p.len(),
            mean_p_suc: p.iter().sum::<f64>() / p.len() as f64,
        })
        .collect();

    for (mode, stats) in per_mode {
        let batch: BatchStats = summarize(stats)?;
        let total = batch.instances.len();
        report
            .tts_cdf
            .extend(batch.cumulative.iter().map(|&(t, solved)| TtsCdfRow {
                mode,
                tts_seconds: t,
                solved,
                fraction: solved as f64 / total as f64,
            }));
        report.tts_summary.push(TtsSummaryRow {
            mode,
            instances: total,
            unsolved: batch.unsolved,
            mean_p_suc: batch.mean_p_suc,
            mean_tts_seconds: batch.mean_tts,
            median_tts_seconds: batch.median_tts,
            median_le_mean: batch
                .mean_tts
                .zip(batch.median_tts)
                .map(|(mean, med)| med <= mean),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> RunConfig {
        RunConfig {
            sizes: vec![8, 12],
            densities: vec![0.5, 0.9],
            instances_per_cell: 2,
            runs_per_instance: 5,
            perturbation: crate::config::PerturbationSetting::Both,
            ..RunConfig::default()
        }
    }

    #[test]
    fn lfsr_seed_is_never_zero() {
        for a in 0..1000 {
            assert_ne!(lfsr_seed(a, a.wrapping_mul(7)), 0);
        }
        assert_ne!(lfsr_seed(1, 2), lfsr_seed(2, 1));
    }

    #[test]
    fn modes_share_initial_states() {
        let cfg = small();
        let pool = thread_pool(1).unwrap();
        let (job, oracle) = prepare(&cfg, &pool).unwrap().remove(0);
        let a = solve_instance(&job, &cfg, Mode::Perturbed, &oracle, true).unwrap();
        let b = solve_instance(&job, &cfg, Mode::Gradient, &oracle, true).unwrap();
        for (x, y) in a.runs.iter().zip(&b.runs) {
            assert_eq!(x.lfsr_state, y.lfsr_state);
            assert_eq!(x.initial_h, y.initial_h);
        }
        assert_eq!(a.summary.lfsr_seed, b.summary.lfsr_seed);
        // one shift per run
        assert_eq!(
            Lfsr::new(a.runs[0].lfsr_state).unwrap().next().reg(),
            a.runs[1].lfsr_state
        );
    }

    #[test]
    fn bench_tables_have_expected_shape() {
        let report = bench(&small(), 2, false, false).unwrap();
        assert_eq!(report.summary.len(), 2 * 2 * 2 * 2);
        assert_eq!(report.sr_grid.len(), 2 * 2 * 2);
        assert_eq!(report.tts_summary.len(), 2);
        assert!(report.runs.is_empty());
        assert_eq!(report.summary[0].mode, Mode::Perturbed);
        assert_eq!(report.summary[1].mode, Mode::Gradient);
        assert_eq!(report.summary[0].instance_id, report.summary[1].instance_id);
    }

    #[test]
    fn resource_guard() {
        let cfg = RunConfig {
            runs_per_instance: 100_000,
            ..RunConfig::default()
        };
        assert!(matches!(
            bench(&cfg, 1, false, false),
            Err(CliError::Resource(_))
        ));
    }

    #[test]
    fn brute_force_refused_above_limit() {
        let inst = cim_core::generate_random_qubo(30, 0.5, 15, 1).unwrap();
        let err = compute_oracle(&inst, &RunConfig::default(), OracleChoice::Brute).unwrap_err();
        assert!(matches!(err, CliError::Refused(_)));
        assert!(err.to_string().contains("tabu"));
    }
}
