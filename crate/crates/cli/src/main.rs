use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dodgeball_core::env::{write_trace, EnvConfig, ObsMode};
use dodgeball_core::harness::eval::{probe_headings, walker_headings};
use dodgeball_core::harness::plot::emit_plot;
use dodgeball_core::harness::train::load_low;
use dodgeball_core::harness::{
    run_eval, run_gradcheck_suite, run_seed_with, DodgePolicy, ExperimentConfig, MetricsRecord, Mode,
};

const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Parser)]
#[command(name = "dodgeball", version, about = "Feudal dodge-ball workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum TrainMode {
    Hrl,
    E2e,
}

#[derive(Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
enum Obs {
    Full,
    Partial,
}

impl From<Obs> for ObsMode {
    fn from(o: Obs) -> Self {
        match o {
            Obs::Full => ObsMode::Full,
            Obs::Partial => ObsMode::Partial,
        }
    }
}

#[derive(Args)]
struct RunArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Train only this seed instead of the configured list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Pretrain the direction-following walker.
    Pretrain(RunArgs),
    /// Train a hierarchical or end-to-end dodge agent.
    Train {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum)]
        mode: Option<TrainMode>,
        #[arg(long, value_enum)]
        obs: Option<Obs>,
        /// Pretrained walker (file or checkpoint directory); required for hrl.
        #[arg(long)]
        low: Option<PathBuf>,
    },
    /// Evaluate a checkpoint (or `scripted` / `stationary`) with deterministic actions.
    Eval {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 20)]
        episodes: usize,
        #[arg(long, value_enum, default_value = "full")]
        obs: Obs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Configuration supplying the environment constants.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Write the report as JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Roll out a checkpoint and write per-step traces.
    Replay {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1)]
        episodes: usize,
        #[arg(long, value_enum, default_value = "full")]
        obs: Obs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Directory receiving `episode-<n>.jsonl`.
        #[arg(long, default_value = "traces")]
        out: PathBuf,
    },
    /// Draw learning curves from metrics files.
    Plot {
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
        #[arg(long, default_value = "curves.svg")]
        out: PathBuf,
    },
    /// Run the finite-difference gradient suite.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<dodgeball_core::Error> for Failure {
    fn from(e: dodgeball_core::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

fn load_config(path: Option<&Path>) -> Result<ExperimentConfig, Failure> {
    Ok(match path {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    })
}

fn env_config(path: Option<&Path>) -> Result<EnvConfig, Failure> {
    Ok(load_config(path)?.env)
}

/// `scripted` and `stationary` name the built-in reference controllers;
/// anything else is a checkpoint path.
fn load_policy(checkpoint: &Path) -> Result<DodgePolicy, Failure> {
    Ok(match checkpoint.to_str() {
        Some("scripted") => DodgePolicy::Scripted,
        Some("stationary") => DodgePolicy::Stationary,
        _ => DodgePolicy::load(checkpoint)?,
    })
}

fn print_progress(r: &MetricsRecord) {
    if let Some(ret) = r.eval_mean_return {
        let dodge = r.eval_dodge_rate.map(|d| format!(" dodge {d:.2}")).unwrap_or_default();
        eprintln!("epoch {:>5}  steps {:>8}  eval return {ret:>8.2}{dodge}", r.epoch, r.env_steps_total);
    }
}

fn train_all(cfg: &ExperimentConfig, seed: Option<u64>) -> Result<Vec<PathBuf>, Failure> {
    let seeds = seed.map(|s| vec![s]).unwrap_or_else(|| cfg.seeds.clone());
    let mut finals = Vec::new();
    for s in seeds {
        eprintln!("{} seed {s} -> {}", cfg.mode, cfg.run_dir(s).display());
        let outcome = run_seed_with(cfg, s, &mut print_progress)?;
        println!("{}", outcome.final_checkpoint.display());
        finals.push(outcome.final_checkpoint);
    }
    Ok(finals)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Pretrain(args) => {
            let mut cfg = load_config(args.config.as_deref())?;
            cfg.mode = Mode::Pretrain;
            if let Some(out) = args.out {
                cfg.output_dir = out;
            }
            for ckpt in train_all(&cfg, args.seed)? {
                let low = load_low(&ckpt)?;
                let rollouts = walker_headings(&low, &probe_headings(16), 100, &cfg.env)?;
                let mean = rollouts.iter().map(|r| r.velocity).sum::<f64>() / rollouts.len() as f64;
                eprintln!("mean velocity toward 16 probe headings: {mean:.3} m/s");
            }
        }
        Command::Train { run, mode, obs, low } => {
            let mut cfg = load_config(run.config.as_deref())?;
            match mode {
                Some(TrainMode::Hrl) => cfg.mode = Mode::Hrl,
                Some(TrainMode::E2e) => cfg.mode = Mode::E2e,
                None => {}
            }
            if let Some(o) = obs {
                cfg.obs_mode = o.into();
            }
            if let Some(out) = run.out {
                cfg.output_dir = out;
            }
            if let Some(l) = low {
                cfg.low_checkpoint = Some(l);
            }
            if cfg.mode == Mode::Hrl && cfg.low_checkpoint.is_none() {
                return Err(Failure::Usage(
                    "train --mode hrl needs a pretrained walker: pass --low <checkpoint>".into(),
                ));
            }
            train_all(&cfg, run.seed)?;
        }
        Command::Eval {
            checkpoint,
            episodes,
            obs,
            seed,
            config,
            out,
        } => {
            if episodes == 0 {
                return Err(Failure::Usage("--episodes must be at least 1".into()));
            }
            let env = env_config(config.as_deref())?;
            let policy = load_policy(&checkpoint)?;
            let report = run_eval(&policy, &env, obs.into(), episodes, seed, false)?;
            let json = serde_json::to_string_pretty(&report)?;
            if let Some(path) = out {
                fs::write(path, json + "\n")?;
            }
            println!(
                "episodes {}  mean return {:.2} ± {:.2}  dodge rate {:.3}  latency {}",
                report.episodes,
                report.mean_return,
                report.std_return,
                report.dodge_rate,
                report
                    .mean_latency_steps
                    .map(|l| format!("{l:.2} steps"))
                    .unwrap_or_else(|| "n/a".into())
            );
        }
        Command::Replay {
            checkpoint,
            episodes,
            obs,
            seed,
            config,
            out,
        } => {
            if episodes == 0 {
                return Err(Failure::Usage("--episodes must be at least 1".into()));
            }
            let env = env_config(config.as_deref())?;
            let policy = load_policy(&checkpoint)?;
            let report = run_eval(&policy, &env, obs.into(), episodes, seed, true)?;
            fs::create_dir_all(&out)?;
            for (i, trace) in report.traces.iter().flatten().enumerate() {
                let path = out.join(format!("episode-{i}.jsonl"));
                write_trace(&path, trace)?;
                println!("{}  return {:.1}", path.display(), report.returns[i]);
            }
        }
        Command::Plot { metrics, out } => {
            let files: Vec<&Path> = metrics.iter().map(PathBuf::as_path).collect();
            emit_plot(&files, &out)?;
            println!("{}", out.display());
        }
        Command::Gradcheck { seed } => {
            let report = run_gradcheck_suite(seed)?;
            println!(
                "gradcheck: {} networks, max relative error {:.3e}",
                report.networks(),
                report.max_rel_err
            );
            if !report.passed(GRADCHECK_TOLERANCE) {
                return Err(Failure::Runtime(format!(
                    "max relative error exceeds {GRADCHECK_TOLERANCE:e}"
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
