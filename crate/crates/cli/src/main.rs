use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use scma_core::ripcheck::{ripcheck_csv, run_ripcheck, RipCheckConfig};
use scma_core::sim::{experiment_csv, run_ber_experiment, run_mae_experiment, summarize};
use scma_core::{selftest, ExperimentConfig};

#[derive(Parser)]
#[command(name = "scma", version, about = "Asynchronous SCMA uplink simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ExperimentArgs {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: PathBuf,
    /// Master seed; overrides the configuration's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Replace system and frame with the full-size K=12, J=18, N=224 setting.
    #[arg(long)]
    paper_scale: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Delay-estimation MAE sweep.
    Mae(ExperimentArgs),
    /// Bit-error-rate sweep.
    Ber(ExperimentArgs),
    /// Gram, Gershgorin, concentration and RIP checks.
    Ripcheck {
        /// Check configuration (JSON); built-in defaults when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the acceptance checks and report one line per criterion.
    Selftest {
        /// Run only these criteria (1-10).
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
    },
    /// Print a default experiment configuration.
    Template,
}

fn load_experiment(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let mut cfg = ExperimentConfig::from_json(&text).with_context(|| format!("parsing {}", args.config.display()))?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.paper_scale {
        cfg = cfg.paper_scale();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Mae(args) => {
            let cfg = load_experiment(&args)?;
            let trials = run_mae_experiment(&cfg)?;
            write(&args.out, &experiment_csv("mae", &cfg, &summarize(&cfg, &trials))?)?;
        }
        Command::Ber(args) => {
            let cfg = load_experiment(&args)?;
            let trials = run_ber_experiment(&cfg)?;
            write(&args.out, &experiment_csv("ber", &cfg, &summarize(&cfg, &trials))?)?;
        }
        Command::Ripcheck { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
                    RipCheckConfig::from_json(&text).with_context(|| format!("parsing {}", path.display()))?
                }
                None => RipCheckConfig::default(),
            };
            let rows = run_ripcheck(&cfg)?;
            write(&out, &ripcheck_csv(&rows))?;
            return Ok(rows.iter().all(|r| r.verdict != scma_core::ripcheck::Verdict::Fail));
        }
        Command::Selftest { only } => {
            let ids: Vec<u8> = if only.is_empty() { selftest::ALL.to_vec() } else { only };
            let mut ok = true;
            for id in ids {
                let outcome = selftest::run(id)?;
                println!("{}", outcome.line());
                ok &= outcome.passed;
            }
            return Ok(ok);
        }
        Command::Template => println!("{}", ExperimentConfig::default().to_json()?),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
