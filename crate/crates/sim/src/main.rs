use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cim_core::generate_random_qubo;
use cim_sim::output::{encode, TtsSummaryRow};
use cim_sim::runner::{bench, compute_oracle, solve_instance, Job, OracleChoice};
use cim_sim::{read_instance, write_instance, CliError, OutputFormat, RunConfig};

#[derive(Parser)]
#[command(
    name = "cim",
    version,
    about = "Simulator for a 64-spin all-to-all CMOS Ising machine"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one random instance file named q{n}_d{density}_s{seed}.txt.
    Generate {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        density: f64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "15")]
        coeff_max: i8,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Anneal one instance repeatedly and report the success statistics.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
        /// How the reference energy is obtained.
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        oracle: Method,
        /// Also write one row per run to this file.
        #[arg(long)]
        runs_out: Option<PathBuf>,
        /// Write energy traces to this file (implies trace=true).
        #[arg(long)]
        trace_out: Option<PathBuf>,
    },
    /// Compute the best-known energy of one instance.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Run a seeded grid of random instances and tabulate SR and TTS.
    Bench {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated spin counts.
        #[arg(long)]
        sizes: Option<String>,
        /// Comma-separated densities.
        #[arg(long)]
        densities: Option<String>,
        #[arg(long)]
        instances_per_cell: Option<usize>,
        #[arg(long)]
        base_seed: Option<u64>,
        /// Worker threads; output does not depend on it.
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Ignore the resource guard.
        #[arg(long)]
        force: bool,
        /// Also write per-run rows.
        #[arg(long)]
        per_run: bool,
        #[arg(long, default_value = "bench_out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Auto,
    Brute,
    Tabu,
}

impl From<Method> for OracleChoice {
    fn from(m: Method) -> Self {
        match m {
            Method::Auto => OracleChoice::Auto,
            Method::Brute => OracleChoice::Brute,
            Method::Tabu => OracleChoice::Tabu,
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// key=value file applied over the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Extra key=value assignment, applied after the file (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// on, off or both.
    #[arg(long)]
    perturbation: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    run_seed: Option<u64>,
    /// csv or json.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    trace: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ConfigArgs {
    fn resolve(&self, extra: &[(&str, Option<String>)]) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            cfg.apply_text(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        }
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set {item:?}: expected KEY=VALUE")))?;
            cfg.set(k.trim(), v)?;
        }
        let flags = [
            ("perturbation", self.perturbation.clone()),
            ("runs_per_instance", self.runs.map(|v| v.to_string())),
            ("run_seed", self.run_seed.map(|v| v.to_string())),
            ("output_format", self.format.clone()),
            ("trace", self.trace.then(|| "true".to_string())),
        ];
        for (key, value) in flags.iter().chain(extra) {
            if let Some(v) = value {
                cfg.set(key, v)?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn load(path: &Path) -> Result<cim_core::ProblemInstance, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    read_instance(&text).map_err(|source| CliError::Format {
        path: path.to_path_buf(),
        source,
    })
}

fn instance_id(path: &Path, inst: &cim_core::ProblemInstance) -> String {
    if inst.label().is_empty() {
        path.file_stem()
            .map_or_else(String::new, |s| s.to_string_lossy().into_owned())
    } else {
        inst.label().to_string()
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn extension(format: OutputFormat) -> &'static str {
    match format {
        OutputFormat::Csv => "csv",
        OutputFormat::Json => "json",
    }
}

#[derive(Serialize)]
struct OracleRow {
    instance_id: String,
    n: usize,
    method: String,
    best_h: i64,
    config: String,
    iterations: u64,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Generate {
            size,
            density,
            seed,
            coeff_max,
            out,
        } => {
            let inst = generate_random_qubo(size, density, coeff_max, seed)?;
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let path = out.join(format!("q{size}_d{density}_s{seed}.txt"));
            write_file(&path, &write_instance(&inst))?;
            println!("{}", path.display());
        }
        Command::Solve {
            instance,
            config,
            oracle,
            runs_out,
            trace_out,
        } => {
            let inst = load(&instance)?;
            let trace = trace_out.as_ref().map(|_| "true".to_string());
            let cfg = config.resolve(&[("trace", trace)])?;
            cfg.validate_for(inst.n())?;
            let job = Job::from_instance(instance_id(&instance, &inst), inst);
            let best = compute_oracle(&job.instance, &cfg, oracle.into())?;
            let mut summary = Vec::new();
            let mut runs = Vec::new();
            let mut traces = Vec::new();
            for &mode in cfg.perturbation.modes() {
                let o = solve_instance(&job, &cfg, mode, &best, runs_out.is_some())?;
                summary.push(o.summary);
                runs.extend(o.runs);
                traces.extend(o.traces);
            }
            print!("{}", encode(&summary, cfg.output_format)?);
            if let Some(path) = runs_out {
                write_file(&path, &encode(&runs, cfg.output_format)?)?;
            }
            if let Some(path) = trace_out {
                write_file(&path, &encode(&traces, cfg.output_format)?)?;
            }
        }
        Command::Oracle {
            instance,
            method,
            config,
        } => {
            let inst = load(&instance)?;
            let cfg = config.resolve(&[])?;
            let result = compute_oracle(&inst, &cfg, method.into())?;
            let row = OracleRow {
                instance_id: instance_id(&instance, &inst),
                n: inst.n(),
                method: result.method.to_string(),
                best_h: result.best_energy,
                config: result.best_config.to_string(),
                iterations: result.iterations_used,
            };
            print!("{}", encode(&[row], cfg.output_format)?);
        }
        Command::Bench {
            config,
            sizes,
            densities,
            instances_per_cell,
            base_seed,
            workers,
            force,
            per_run,
            out,
        } => {
            let cfg = config.resolve(&[
                ("sizes", sizes),
                ("densities", densities),
                (
                    "instances_per_cell",
                    instances_per_cell.map(|v| v.to_string()),
                ),
                ("base_seed", base_seed.map(|v| v.to_string())),
            ])?;
            let report = bench(&cfg, workers.max(1), force, per_run)?;
            fs::create_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
            let ext = extension(cfg.output_format);
            let f = cfg.output_format;
            write_file(&out.join("config.txt"), &cfg.to_text())?;
            write_file(
                &out.join(format!("summary.{ext}")),
                &encode(&report.summary, f)?,
            )?;
            write_file(
                &out.join(format!("sr_grid.{ext}")),
                &encode(&report.sr_grid, f)?,
            )?;
            write_file(
                &out.join(format!("tts_cdf.{ext}")),
                &encode(&report.tts_cdf, f)?,
            )?;
            write_file(
                &out.join(format!("tts_summary.{ext}")),
                &encode(&report.tts_summary, f)?,
            )?;
            if per_run {
                write_file(&out.join(format!("runs.{ext}")), &encode(&report.runs, f)?)?;
            }
            if cfg.trace {
                write_file(
                    &out.join(format!("traces.{ext}")),
                    &encode(&report.traces, f)?,
                )?;
            }
            print_synopsis(&report.sr_grid, &report.tts_summary, &out);
        }
    }
    Ok(())
}

fn print_synopsis(grid: &[cim_sim::output::SrRow], tts: &[TtsSummaryRow], out: &Path) {
    println!(
        "{:<10} {:>4} {:>8} {:>9} {:>10}",
        "mode", "n", "density", "instances", "mean_SR"
    );
    for r in grid {
        println!(
            "{:<10} {:>4} {:>8} {:>9} {:>10.4}",
            r.mode.as_str(),
            r.n,
            r.density,
            r.instances,
            r.mean_p_suc
        );
    }
    let show = |x: Option<f64>| x.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
    for r in tts {
        let flag = if r.median_le_mean == Some(false) {
            "  (median > mean)"
        } else {
            ""
        };
        println!(
            "{}: TTS mean {} s, median {} s, unsolved {}/{}{flag}",
            r.mode,
            show(r.mean_tts_seconds),
            show(r.median_tts_seconds),
            r.unsolved,
            r.instances
        );
    }
    println!("tables written to {}", out.display());
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code())
        }
    }
}
