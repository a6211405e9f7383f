//! `ssmfit`: state-space model estimation experiments from the command line.
//!
//! Subcommands: `generate` (simulate a dataset), `estimate` (replicated
//! estimation runs), `summarize` (merge report files into a table),
//! `diagnose` (re-emit filter degeneracy diagnostics).
//!
//! Any configuration field can be overridden with a dotted flag of the same
//! name, e.g. `--algorithm.M 1000` or `--model.theta.sigma_x 2.5`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 estimation failure
//! (every replicate failed), 1 anything else.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ssm_saem::error::Error;
use ssm_saem::experiment::{
    run_diagnose, run_estimate, run_generate, summarize_reports, write_summary_csv,
    write_summary_text, ExperimentConfig, ExperimentReport,
};

#[derive(Parser)]
#[command(name = "ssmfit", version, about = "State-space model estimation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a dataset (and its ground-truth latent path) from the
    /// configured model at the true parameters.
    Generate {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Output file stem: <stem>.csv and <stem>_truth.csv.
        #[arg(long, default_value = "dataset")]
        stem: String,
    },
    /// Run the configured algorithm across replicates and write traces,
    /// diagnostics, report.json and aggregate.csv.
    Estimate {
        #[arg(long)]
        config: PathBuf,
        /// Dataset CSV (header `time,y`); omitted: simulate from the config.
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Worker threads (0 = default).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Merge one or more report.json files into a comparison table.
    Summarize {
        /// Report files produced by `estimate`.
        reports: Vec<PathBuf>,
        /// Also write the table as CSV here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-run the configured filter at the true parameters and emit
    /// per-time ESS / distinct-particle diagnostics.
    Diagnose {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        dataset: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

/// Split dotted `--path.to.field value` overrides from the raw argument
/// list so clap only sees its own flags.
fn extract_overrides(args: Vec<String>) -> (Vec<String>, Vec<(String, String)>) {
    let mut plain = Vec::with_capacity(args.len());
    let mut overrides = Vec::new();
    let mut it = args.into_iter().peekable();
    while let Some(arg) = it.next() {
        if let Some(name) = arg.strip_prefix("--") {
            if name.contains('.') {
                if let Some((key, value)) = name.split_once('=') {
                    overrides.push((key.to_string(), value.to_string()));
                    continue;
                }
                match it.next() {
                    Some(value) => overrides.push((name.to_string(), value)),
                    None => {
                        eprintln!("error: override --{name} is missing a value");
                        std::process::exit(2);
                    }
                }
                continue;
            }
        }
        plain.push(arg);
    }
    (plain, overrides)
}

fn apply_overrides(
    text: &str,
    overrides: &[(String, String)],
    seed: Option<u64>,
) -> Result<ExperimentConfig, Error> {
    let mut value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config {
        field: "<document>".to_string(),
        why: e.to_string(),
    })?;
    for (path, raw) in overrides {
        let parsed: serde_json::Value = serde_json::from_str(raw)
            .unwrap_or_else(|_| serde_json::Value::String(raw.clone()));
        let (parent, key) = match path.rsplit_once('.') {
            Some((parent, key)) => (value.pointer_mut(&format!("/{}", parent.replace('.', "/"))), key),
            None => (Some(&mut value), path.as_str()),
        };
        let map = parent
            .and_then(|v| v.as_object_mut())
            .ok_or_else(|| Error::Config {
                field: path.clone(),
                why: "override path does not address an object in the config".to_string(),
            })?;
        map.insert(key.to_string(), parsed);
    }
    if let Some(seed) = seed {
        value["seed"] = serde_json::json!(seed);
    }
    serde_json::from_value(value).map_err(|e| Error::Config {
        field: "<document>".to_string(),
        why: e.to_string(),
    })
}

fn load_config(
    path: &PathBuf,
    overrides: &[(String, String)],
    seed: Option<u64>,
) -> Result<ExperimentConfig, Error> {
    let text = fs::read_to_string(path)?;
    apply_overrides(&text, overrides, seed)
}

fn run(cli: Cli, overrides: Vec<(String, String)>) -> Result<(), Error> {
    match cli.command {
        Command::Generate {
            config,
            seed,
            out,
            stem,
        } => {
            let cfg = load_config(&config, &overrides, seed)?;
            let built = cfg.build()?;
            let path = run_generate(&built, &out, &stem)?;
            println!("wrote {}", path.display());
            Ok(())
        }
        Command::Estimate {
            config,
            dataset,
            seed,
            jobs,
            out,
        } => {
            ssm_saem::exec::configure_threads(jobs).map_err(|e| Error::Config {
                field: "--jobs".to_string(),
                why: e,
            })?;
            let cfg = load_config(&config, &overrides, seed)?;
            let built = cfg.build()?;
            let report = run_estimate(&built, dataset.as_deref(), &out)?;
            println!(
                "{}: {} replicates ok, {} failed; report at {}",
                report.algorithm,
                report.succeeded,
                report.failed,
                out.join("report.json").display()
            );
            let rows = summarize_reports(std::slice::from_ref(&report))?;
            let mut text = Vec::new();
            write_summary_text(&rows, &mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
            Ok(())
        }
        Command::Summarize { reports, out } => {
            if reports.is_empty() {
                return Err(Error::Config {
                    field: "reports".to_string(),
                    why: "need at least one report file".to_string(),
                });
            }
            let mut parsed = Vec::with_capacity(reports.len());
            for path in &reports {
                parsed.push(ExperimentReport::from_json(&fs::read_to_string(path)?)?);
            }
            let rows = summarize_reports(&parsed)?;
            let mut text = Vec::new();
            write_summary_text(&rows, &mut text)?;
            print!("{}", String::from_utf8_lossy(&text));
            if let Some(out) = out {
                let mut csv = Vec::new();
                write_summary_csv(&rows, &mut csv)?;
                fs::write(&out, csv)?;
                println!("wrote {}", out.display());
            }
            Ok(())
        }
        Command::Diagnose {
            config,
            dataset,
            seed,
            repetitions,
            out,
        } => {
            let cfg = load_config(&config, &overrides, seed)?;
            let built = cfg.build()?;
            let summary = run_diagnose(&built, dataset.as_deref(), repetitions, &out)?;
            println!(
                "{} repetitions: mean ESS {:.2}, mean distinct particles {:.2}",
                summary.repetitions, summary.mean_ess, summary.mean_distinct
            );
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (plain, overrides) = extract_overrides(std::env::args().collect());
    let cli = Cli::parse_from(plain);
    match run(cli, overrides) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e @ (Error::Config { .. } | Error::Invalid { .. })) => {
            eprintln!("configuration error: {e}");
            ExitCode::from(2)
        }
        Err(e @ Error::AllReplicatesFailed { .. }) => {
            eprintln!("estimation failure: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
