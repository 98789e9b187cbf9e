use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use wiretap_cli::{cmd_beta, cmd_discriminate, cmd_selftest, cmd_wiretap, stamp, ExperimentConfig, Outcome};

#[derive(Parser, Debug)]
#[command(name = "wiretap-converse", version, about = "Hypothesis-testing converse experiments for wiretap channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// JSON experiment config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV output path (stdout when absent).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel sections.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Cap on enumerated outcome cells and protocol states.
    #[arg(long, global = true)]
    cap_states: Option<u64>,
    #[arg(long, global = true)]
    tol: Option<f64>,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Command {
    /// Exact beta and Stein exponent for a pair of distributions.
    Beta,
    /// Adaptive versus non-adaptive channel discrimination.
    Discriminate,
    /// Wiretap quantities, converse bounds and code validation.
    Wiretap,
    /// Randomized invariant checks.
    Selftest,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Beta => "beta",
            Command::Discriminate => "discriminate",
            Command::Wiretap => "wiretap",
            Command::Selftest => "selftest",
        }
    }
}

fn run(cli: &Cli) -> Result<Outcome> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.params.seed = Some(s);
    }
    if let Some(t) = cli.tol {
        cfg.params.tol = Some(t);
    }
    if let Some(c) = cli.cap_states {
        cfg.params.caps.outcome_cells = c;
        cfg.params.caps.protocol_states = c;
    }
    if let Some(o) = &cli.out {
        cfg.out = Some(o.clone());
    }
    let mut outcome = match cli.command {
        Command::Beta => cmd_beta(&cfg)?,
        Command::Discriminate => cmd_discriminate(&cfg)?,
        Command::Wiretap => cmd_wiretap(&cfg)?,
        Command::Selftest => cmd_selftest(&cfg)?,
    };
    stamp(&mut outcome.table, cli.command.name(), &cfg);
    let csv = outcome.table.to_csv();
    match &cfg.out {
        Some(path) => {
            let path = if path.is_relative() && cli.out.is_none() { cfg.base_dir.join(path) } else { path.clone() };
            std::fs::write(&path, csv).with_context(|| format!("cannot write {}", path.display()))?
        }
        None => print!("{csv}"),
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot configure thread pool: {e}");
            return ExitCode::from(1);
        }
    }
    match run(&cli) {
        Ok(outcome) if outcome.failures.is_empty() => ExitCode::SUCCESS,
        Ok(outcome) => {
            for f in &outcome.failures {
                eprintln!("violation: {f}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
