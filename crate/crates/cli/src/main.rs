use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use homoglab_cli::config::ExperimentConfig;
use homoglab_cli::{experiment_names, lookup, run, validate, CliError, Overrides};

#[derive(Parser)]
#[command(
    name = "homoglab",
    version,
    about = "Stochastic homogenization experiments on periodic lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads; defaults to all cores.
    #[arg(long, env = "HOMOGLAB_THREADS")]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Check a configuration and estimate its cost without sampling.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Run the experiment named in the configuration.
    Run(RunArgs),
    /// List the registered experiments.
    List,
    /// Print a starter configuration for an experiment.
    Template { name: String },
    /// Run a named experiment, overriding `experiment.name`.
    #[command(external_subcommand)]
    Named(Vec<String>),
}

#[derive(Parser)]
#[command(no_binary_name = true)]
struct NamedArgs {
    #[command(flatten)]
    args: RunArgs,
}

/// `println!` that reports a closed pipe as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {
        writeln!(std::io::stdout(), $($arg)*)?
    };
}

fn load(path: &Path) -> anyhow::Result<ExperimentConfig> {
    ExperimentConfig::load(path).with_context(|| format!("loading {}", path.display()))
}

fn execute(args: RunArgs, experiment: Option<String>) -> anyhow::Result<()> {
    let mut cfg = load(&args.config)?;
    Overrides {
        experiment,
        seed: args.seed,
        samples: args.samples,
        out: args.out,
    }
    .apply(&mut cfg);
    let summary = run(&cfg, args.threads)?;
    for c in &summary.checks {
        out!(
            "{:<48} slope {:+.3} ci [{:+.3}, {:+.3}] target {:+.3} {}",
            c.label,
            c.slope,
            c.ci.0,
            c.ci.1,
            c.target,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    out!("wrote {}", cfg.output.directory.display());
    Ok(())
}

fn main_inner() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Validate { config } => {
            let cfg = load(&config)?;
            let report = validate(&cfg);
            out!("{}", serde_json::to_string_pretty(&report)?);
            if let Some(v) = report.violations.first() {
                return Err(CliError::ConfigInvalid {
                    path: v.path.clone(),
                    message: v.message.clone(),
                }
                .into());
            }
            Ok(())
        }
        Command::Run(args) => execute(args, None),
        Command::List => {
            for name in experiment_names() {
                out!(
                    "{name:<14} {}",
                    lookup(name).map(|e| e.describe()).unwrap_or_default()
                );
            }
            Ok(())
        }
        Command::Template { name } => {
            if lookup(&name).is_none() {
                anyhow::bail!("unknown experiment `{name}`");
            }
            out!("{}", ExperimentConfig::template(&name).to_json());
            Ok(())
        }
        Command::Named(mut words) => {
            let name = words.remove(0);
            if lookup(&name).is_none() {
                anyhow::bail!(
                    "unknown command `{name}`; experiments are {}",
                    experiment_names().collect::<Vec<_>>().join(", ")
                );
            }
            let named = NamedArgs::try_parse_from(words).unwrap_or_else(|e| e.exit());
            execute(named.args, Some(name))
        }
    }
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<CliError>() {
                Some(CliError::ConfigInvalid { .. }) => ExitCode::from(2),
                _ => ExitCode::FAILURE,
            }
        }
    }
}
