use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use emphace_core::harness::{self, analyze::analyze, RunConfig, SweepSpec};
use emphace_core::verify;

#[derive(Parser)]
#[command(name = "emphace", version, about = "Emphatic off-policy actor-critic experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and write its CSV log.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override a config key, e.g. `--set actor.alpha=0.25`. Repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output file; defaults to the config's `output` key, else stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every combination of a sweep file over its seeds.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, env = "EMPHACE_WORKERS")]
        workers: Option<usize>,
    },
    /// Print exact quantities of a fixed policy as JSON.
    Analyze {
        #[arg(long)]
        env: String,
        #[arg(long)]
        policy: PathBuf,
    },
    /// Run the acceptance checks; exits nonzero if any fails.
    Verify {
        /// Only these criterion numbers.
        #[arg(long, value_delimiter = ',')]
        only: Vec<u8>,
        /// Print the report as JSON instead of text.
        #[arg(long)]
        json: bool,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    match real_main() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn real_main() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Run { config, seed, overrides, out } => {
            let mut cfg = RunConfig::from_file(&config)?;
            let mut pairs = Vec::new();
            for o in &overrides {
                let Some((k, v)) = o.split_once('=') else {
                    bail!("--set expects KEY=VALUE, got {o:?}");
                };
                pairs.push((k.trim(), v.trim().to_string()));
            }
            if !pairs.is_empty() {
                cfg = cfg.with_overrides(pairs)?;
            }
            if let Some(seed) = seed {
                cfg = cfg.with_seed(seed)?;
            }
            let log = harness::run(&cfg)?;
            match out.or_else(|| cfg.output.as_ref().map(PathBuf::from)) {
                Some(path) => {
                    log.write(&path).with_context(|| format!("writing {}", path.display()))?;
                    eprintln!("wrote {}", path.display());
                }
                None => std::io::stdout().write_all(log.to_csv().as_bytes())?,
            }
            if let Some(msg) = &log.failure {
                eprintln!("run failed: {msg}");
                return Ok(ExitCode::from(1));
            }
        }
        Command::Sweep { spec, out, workers } => {
            let spec = SweepSpec::from_file(&spec).with_context(|| format!("reading {}", spec.display()))?;
            let summary = harness::sweep(&spec, &out, workers.unwrap_or_else(default_workers))?;
            let failed: usize = summary.rows.iter().map(|r| r.n_failed).sum();
            eprintln!(
                "{} configurations, {} failed runs; summary in {}",
                summary.rows.len(),
                failed,
                out.join("summary.csv").display()
            );
        }
        Command::Analyze { env, policy } => {
            let text = std::fs::read_to_string(&policy).with_context(|| format!("reading {}", policy.display()))?;
            let report = analyze(&env, &text)?;
            println!("{}", serde_json::to_string_pretty(&report)?);
        }
        Command::Verify { only, json } => {
            let reports = verify::run_selected(&only);
            if json {
                println!("{}", serde_json::to_string_pretty(&reports)?);
            } else {
                for r in &reports {
                    println!("{r}");
                }
            }
            if reports.iter().any(|r| !r.passed) {
                return Ok(ExitCode::from(1));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}
