//! `hypowalk`: run walk-forward validations, generate synthetic panels and
//! recompute statistics from fold returns.
//!
//! Exit codes: 0 success, 1 configuration error, 2 data error, 3 runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hypowalk::config::RunConfig;
use hypowalk::marketdata::{generate_synthetic, write_panel, SynthSpec};
use hypowalk::par::Schedule;
use hypowalk::pipeline;
use hypowalk::report::{emit_report, read_fold_summaries, RunManifest};
use hypowalk::stats::{PerformanceReport, StatsOptions};
use hypowalk::walkforward::schedule;

#[derive(Parser)]
#[command(
    name = "hypowalk",
    version,
    about = "Walk-forward validation of hypothesis-driven trading strategies"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load data, run every fold and write the report.
    Run {
        /// TOML run configuration.
        config: PathBuf,
        /// Directory holding the manifest and bar files (overrides [data] dir).
        #[arg(long, env = "HYPOWALK_DATA_DIR")]
        data_dir: Option<PathBuf>,
        /// Output directory (overrides [run] output_dir).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads; 1 runs sequentially, 0 uses every core.
        #[arg(long)]
        jobs: Option<usize>,
    },
    /// Write a synthetic panel and its manifest.
    Synth {
        /// TOML synthetic-panel spec; defaults apply when omitted.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Print the performance report for a CSV of fold returns.
    Stats {
        /// CSV with a fold_return column (folds.csv works as is).
        folds: PathBuf,
        /// Optional run configuration supplying [stats] options.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Print a configuration file holding every key at its default.
    Defaults,
    /// Print the fold schedule for a panel length.
    Schedule {
        #[arg(long)]
        days: usize,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 1,
            message: e.to_string(),
        }
    }
    fn data(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 2,
            message: e.to_string(),
        }
    }
    fn runtime(e: impl std::fmt::Display) -> Self {
        Failure {
            code: 3,
            message: e.to_string(),
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig, Failure> {
    match path {
        Some(p) => RunConfig::load(p).map_err(Failure::config),
        None => Ok(RunConfig::default()),
    }
}

fn cmd_run(
    config: &Path,
    data_dir: Option<PathBuf>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    jobs: Option<usize>,
) -> Result<(), Failure> {
    let mut cfg = load_config(Some(config))?;
    if let Some(s) = seed {
        cfg.run.seed = s;
    }
    if let Some(j) = jobs {
        cfg.run.jobs = j;
    }
    if let Some(o) = out {
        cfg.run.output_dir = o;
    }
    let result = pipeline::run(&cfg, data_dir.as_deref(), Schedule::from_jobs(cfg.run.jobs)).map_err(|e| Failure {
        code: e.exit_code() as u8,
        message: e.to_string(),
    })?;
    let manifest = RunManifest::new(&cfg, result.load_report.as_ref());
    let written = emit_report(&result, &cfg, manifest, &cfg.run.output_dir).map_err(Failure::runtime)?;

    let p = &result.performance;
    println!(
        "{} folds, {} trades, mean fold return {}, Sharpe {}",
        result.folds.len(),
        p.trading.total_trades,
        fmt_opt(p.strategy.mean_return),
        fmt_opt(p.strategy.sharpe_ratio)
    );
    println!("wrote {} files to {}", written.len(), cfg.run.output_dir.display());
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into())
}

fn cmd_synth(spec: Option<&Path>, out: &Path, seed: u64) -> Result<(), Failure> {
    let spec: SynthSpec = match spec {
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?;
            toml::from_str(&text).map_err(|e| Failure::config(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    let panel = generate_synthetic(&spec, seed).map_err(Failure::config)?;
    let manifest = write_panel(&panel, out).map_err(Failure::runtime)?;
    println!(
        "wrote {} symbols x {} days; manifest {}",
        panel.num_symbols(),
        panel.num_days(),
        manifest.display()
    );
    Ok(())
}

fn cmd_stats(folds: &Path, config: Option<&Path>, seed: u64, jobs: usize) -> Result<(), Failure> {
    let opts: StatsOptions = load_config(config)?.stats;
    let rows = read_fold_summaries(folds).map_err(Failure::data)?;
    let report = PerformanceReport::compute(&rows, &opts, seed, Schedule::from_jobs(jobs));
    println!("{}", serde_json::to_string_pretty(&report).map_err(Failure::runtime)?);
    Ok(())
}

fn cmd_schedule(days: usize, config: Option<&Path>) -> Result<(), Failure> {
    let cfg = load_config(config)?;
    let specs = schedule(days, &cfg.walkforward).map_err(Failure::config)?;
    println!("{}", serde_json::to_string_pretty(&specs).map_err(Failure::runtime)?);
    Ok(())
}

fn cmd_defaults() -> Result<(), Failure> {
    print!("{}", toml::to_string(&RunConfig::default()).map_err(Failure::runtime)?);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            data_dir,
            out,
            seed,
            jobs,
        } => cmd_run(&config, data_dir, out, seed, jobs),
        Command::Synth { spec, out, seed } => cmd_synth(spec.as_deref(), &out, seed),
        Command::Stats {
            folds,
            config,
            seed,
            jobs,
        } => cmd_stats(&folds, config.as_deref(), seed, jobs),
        Command::Schedule { days, config } => cmd_schedule(days, config.as_deref()),
        Command::Defaults => cmd_defaults(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
