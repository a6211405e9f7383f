//! Replicated experiment execution: dataset generation, estimation runs
//! with per-replicate seeds, diagnostics re-emission, and report files.
//!
//! Replicate `i` is seeded as `master ⊕ i`; every derived generator comes
//! from labelled children of that seed, so a report is reproducible from
//! (config, master seed) alone. Replicates run concurrently; all files are
//! written by the collecting thread afterwards.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bayes::{pmm_run, run_gibbs, write_gibbs_csv, write_pmm_csv, GibbsTarget, PmmOptions};
use crate::error::{Error, Result};
use crate::experiment::config::{
    AlgorithmConfig, BuiltExperiment, DataMode, ExperimentConfig, ModelId,
};
use crate::experiment::csvio;
use crate::experiment::summary::QuartileSummary;
use crate::filters::{run_abc_smc, run_bootstrap};
use crate::model::simulate_dataset;

use crate::rng::{child_seed, replicate_seed, rng_from_seed};
use crate::saem::{run_saem, write_trace_csv, FilterChoice};
use crate::series::ObservationSeries;
use crate::stats;

const DATA_LABEL: u64 = 0xD47A;
const START_LABEL: u64 = 0x57A7;
const RUN_LABEL: u64 = 0x5EED;
const DIAG_LABEL: u64 = 0xD1A6_0000;

/// Per-replicate entry of the report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReplicateReport {
    pub index: usize,
    pub seed: u64,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub se_natural: Option<BTreeMap<String, f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace_file: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics_file: Option<String>,
    pub wall_time_s: f64,
}

/// Everything an estimation run produces.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub algorithm: String,
    pub config: ExperimentConfig,
    pub replicates: Vec<ReplicateReport>,
    pub aggregate: BTreeMap<String, QuartileSummary>,
    pub succeeded: usize,
    pub failed: usize,
    pub wall_time_s: f64,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config {
            field: "<report>".to_string(),
            why: e.to_string(),
        })
    }

    /// Recompute the aggregate table from the per-replicate entries.
    pub fn recompute_aggregate(&self) -> BTreeMap<String, QuartileSummary> {
        aggregate_thetas(
            self.replicates
                .iter()
                .filter_map(|r| r.theta.as_ref())
                .collect::<Vec<_>>()
                .as_slice(),
        )
    }
}

fn aggregate_thetas(thetas: &[&BTreeMap<String, f64>]) -> BTreeMap<String, QuartileSummary> {
    let mut out = BTreeMap::new();
    if thetas.is_empty() {
        return out;
    }
    for key in thetas[0].keys() {
        let values: Vec<f64> = thetas.iter().map(|t| t[key]).collect();
        out.insert(key.clone(), QuartileSummary::from_values(&values));
    }
    out
}

/// Generate a dataset (plus ground-truth latent path) and write both files.
/// Returns the dataset path.
pub fn run_generate(built: &BuiltExperiment, out_dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(out_dir)?;
    let mut rng = rng_from_seed(child_seed(built.config.seed, DATA_LABEL));
    let (path, y) = simulate_dataset(built.model.as_ref(), &built.truth, &mut rng);

    let data_path = out_dir.join(format!("{stem}.csv"));
    let mut buf = Vec::new();
    csvio::write_dataset(built.model.grid(), &y, &mut buf)?;
    fs::write(&data_path, buf)?;

    let truth_path = out_dir.join(format!("{stem}_truth.csv"));
    let mut buf = Vec::new();
    csvio::write_truth(built.model.grid(), &path, &mut buf)?;
    fs::write(truth_path, buf)?;

    Ok(data_path)
}

fn load_dataset(built: &BuiltExperiment, path: &Path) -> Result<ObservationSeries> {
    let file = fs::File::open(path)?;
    csvio::read_dataset(&mut BufReader::new(file), built.model.grid())
}

/// Simulated or loaded observations for one replicate.
fn replicate_dataset(
    built: &BuiltExperiment,
    shared: &Option<ObservationSeries>,
    rep_seed: u64,
) -> ObservationSeries {
    match shared {
        Some(y) => y.clone(),
        None => {
            let mut rng = rng_from_seed(child_seed(rep_seed, DATA_LABEL));
            simulate_dataset(built.model.as_ref(), &built.truth, &mut rng).1
        }
    }
}

struct ReplicateOutcome {
    report: ReplicateReport,
    trace_csv: Option<Vec<u8>>,
    diagnostics_csv: Option<Vec<u8>>,
}

/// Run the configured algorithm across replicates and write all outputs
/// under `out_dir`. Fails with [`Error::AllReplicatesFailed`] only when no
/// replicate succeeded (the report is still written first).
pub fn run_estimate(
    built: &BuiltExperiment,
    dataset: Option<&Path>,
    out_dir: &Path,
) -> Result<ExperimentReport> {
    fs::create_dir_all(out_dir)?;
    let started = Instant::now();
    let config = &built.config;

    let shared: Option<ObservationSeries> = match config.data_mode {
        DataMode::Shared => Some(match dataset {
            Some(path) => load_dataset(built, path)?,
            None => {
                let path = run_generate(built, out_dir, "dataset")?;
                load_dataset(built, &path)?
            }
        }),
        DataMode::FreshPerReplicate => {
            if dataset.is_some() {
                return Err(Error::Config {
                    field: "data_mode".to_string(),
                    why: "fresh-per-replicate simulates its own data; drop the dataset argument"
                        .to_string(),
                });
            }
            None
        }
    };

    let outcomes: Vec<ReplicateOutcome> = crate::exec::map_indexed(config.replicates, |i| {
        let rep_seed = replicate_seed(config.seed, i);
        let rep_start = Instant::now();
        let y = replicate_dataset(built, &shared, rep_seed);
        let result = run_replicate(built, &y, rep_seed);
        let wall = rep_start.elapsed().as_secs_f64();
        match result {
            Ok(ok) => ReplicateOutcome {
                report: ReplicateReport {
                    index: i,
                    seed: rep_seed,
                    status: "ok".to_string(),
                    error: None,
                    theta: Some(ok.theta),
                    se_natural: ok.se_natural,
                    trace_file: Some(format!("replicate_{i:03}_trace.csv")),
                    diagnostics_file: ok
                        .diagnostics_csv
                        .is_some()
                        .then(|| format!("replicate_{i:03}_diagnostics.csv")),
                    wall_time_s: wall,
                },
                trace_csv: Some(ok.trace_csv),
                diagnostics_csv: ok.diagnostics_csv,
            },
            Err(e) => ReplicateOutcome {
                report: ReplicateReport {
                    index: i,
                    seed: rep_seed,
                    status: "failed".to_string(),
                    error: Some(e.to_string()),
                    theta: None,
                    se_natural: None,
                    trace_file: None,
                    diagnostics_file: None,
                    wall_time_s: wall,
                },
                trace_csv: None,
                diagnostics_csv: None,
            },
        }
    });

    // Single collector writes every file.
    for outcome in &outcomes {
        if let (Some(csv), Some(name)) = (&outcome.trace_csv, &outcome.report.trace_file) {
            fs::write(out_dir.join(name), csv)?;
        }
        if let (Some(csv), Some(name)) = (&outcome.diagnostics_csv, &outcome.report.diagnostics_file)
        {
            fs::write(out_dir.join(name), csv)?;
        }
    }

    let replicates: Vec<ReplicateReport> = outcomes.into_iter().map(|o| o.report).collect();
    let succeeded = replicates.iter().filter(|r| r.status == "ok").count();
    let failed = replicates.len() - succeeded;
    let aggregate = aggregate_thetas(
        replicates
            .iter()
            .filter_map(|r| r.theta.as_ref())
            .collect::<Vec<_>>()
            .as_slice(),
    );

    let report = ExperimentReport {
        algorithm: config.algorithm.kind_name().to_string(),
        config: config.clone(),
        replicates,
        aggregate,
        succeeded,
        failed,
        wall_time_s: started.elapsed().as_secs_f64(),
    };

    fs::write(out_dir.join("report.json"), report.to_json())?;
    let mut agg_csv = Vec::new();
    crate::experiment::summary::write_aggregate_csv(&report, &mut agg_csv)?;
    fs::write(out_dir.join("aggregate.csv"), agg_csv)?;

    if succeeded == 0 {
        let first = report
            .replicates
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_else(|| "unknown".to_string());
        return Err(Error::AllReplicatesFailed {
            total: report.replicates.len(),
            first,
        });
    }
    Ok(report)
}

struct ReplicateSuccess {
    theta: BTreeMap<String, f64>,
    se_natural: Option<BTreeMap<String, f64>>,
    trace_csv: Vec<u8>,
    diagnostics_csv: Option<Vec<u8>>,
}

fn named(names: &[&str], values: &[f64]) -> BTreeMap<String, f64> {
    names
        .iter()
        .zip(values)
        .map(|(n, v)| (n.to_string(), *v))
        .collect()
}

/// JSON has no NaN, so unavailable standard errors are omitted rather than
/// serialized as null; an empty map collapses to "no standard errors".
fn named_finite(names: &[&str], values: &[f64]) -> Option<BTreeMap<String, f64>> {
    let map: BTreeMap<String, f64> = names
        .iter()
        .zip(values)
        .filter(|(_, v)| v.is_finite())
        .map(|(n, v)| (n.to_string(), *v))
        .collect();
    (!map.is_empty()).then_some(map)
}

fn run_replicate(
    built: &BuiltExperiment,
    y: &ObservationSeries,
    rep_seed: u64,
) -> Result<ReplicateSuccess> {
    let config = &built.config;
    let model = built.model.as_ref();
    let mut start_rng = rng_from_seed(child_seed(rep_seed, START_LABEL));
    let theta0 = config.starting_values(&built.truth, &mut start_rng)?;
    let mut rng = rng_from_seed(child_seed(rep_seed, RUN_LABEL));
    let names = built.truth.names();

    match &config.algorithm {
        AlgorithmConfig::SaemAbc {
            particles,
            ess_threshold,
            iterations,
            warmup,
            schedule,
            kernel,
        } => {
            let filter = FilterChoice::Abc {
                kernel: kernel.to_spec(),
                schedule: config.threshold_schedule(schedule)?,
                particles: *particles,
                ess_threshold: *ess_threshold,
            };
            let sched = config.step_schedule(*iterations, *warmup)?;
            let run = run_saem(model, y, &theta0, &sched, &filter, &mut rng)?;
            let mut trace_csv = Vec::new();
            write_trace_csv(&run.trace, &names, &mut trace_csv)?;
            // Final-configuration filter diagnostics at the estimate.
            let final_delta = schedule.last().expect("validated non-empty").delta;
            let (_, diag) = run_abc_smc(
                model,
                y,
                &run.theta,
                *particles,
                *ess_threshold,
                final_delta,
                &kernel.to_spec(),
                &mut rng,
            )?;
            let mut diag_csv = Vec::new();
            diag.write_csv(&mut diag_csv)?;
            Ok(ReplicateSuccess {
                theta: named(&names, run.theta.values()),
                se_natural: run.standard_errors.and_then(|se| named_finite(&names, &se.natural)),
                trace_csv,
                diagnostics_csv: Some(diag_csv),
            })
        }
        AlgorithmConfig::SaemSmc {
            particles,
            ess_threshold,
            iterations,
            warmup,
        } => {
            let filter = FilterChoice::Bootstrap {
                particles: *particles,
                ess_threshold: *ess_threshold,
            };
            let sched = config.step_schedule(*iterations, *warmup)?;
            let run = run_saem(model, y, &theta0, &sched, &filter, &mut rng)?;
            let mut trace_csv = Vec::new();
            write_trace_csv(&run.trace, &names, &mut trace_csv)?;
            let (_, diag) =
                run_bootstrap(model, y, &run.theta, *particles, *ess_threshold, &mut rng)?;
            let mut diag_csv = Vec::new();
            diag.write_csv(&mut diag_csv)?;
            Ok(ReplicateSuccess {
                theta: named(&names, run.theta.values()),
                se_natural: run.standard_errors.and_then(|se| named_finite(&names, &se.natural)),
                trace_csv,
                diagnostics_csv: Some(diag_csv),
            })
        }
        AlgorithmConfig::RejectionSaem {
            iterations,
            warmup,
            schedule,
            max_attempts,
        } => {
            let filter = FilterChoice::Rejection {
                schedule: config.threshold_schedule(schedule)?,
                distance: crate::kernel::Distance::Euclidean,
                summary: crate::kernel::Summary::Identity,
                max_attempts: *max_attempts,
            };
            let sched = config.step_schedule(*iterations, *warmup)?;
            let run = run_saem(model, y, &theta0, &sched, &filter, &mut rng)?;
            let mut trace_csv = Vec::new();
            write_trace_csv(&run.trace, &names, &mut trace_csv)?;
            Ok(ReplicateSuccess {
                theta: named(&names, run.theta.values()),
                se_natural: run.standard_errors.and_then(|se| named_finite(&names, &se.natural)),
                trace_csv,
                diagnostics_csv: None,
            })
        }
        AlgorithmConfig::Gibbs {
            priors,
            chain_length,
            target_acceptance,
        } => {
            let target = match built.config.model.id {
                ModelId::NonlinearGaussian => GibbsTarget::nonlinear_gaussian(y.len()),
                ModelId::LinearGaussian => {
                    GibbsTarget::linear(built.truth.by_name("a").unwrap_or(0.0), y.len())
                }
                ModelId::Theophylline => unreachable!("rejected at validation"),
            };
            let prior_spec = config.prior_spec(priors)?;
            let sx0 = theta0.by_name("sigma_x").ok_or_else(|| Error::Config {
                field: "start".to_string(),
                why: "gibbs needs sigma_x in the starting values".to_string(),
            })?;
            let sy0 = theta0.by_name("sigma_y").ok_or_else(|| Error::Config {
                field: "start".to_string(),
                why: "gibbs needs sigma_y in the starting values".to_string(),
            })?;
            let chain = run_gibbs(
                &target,
                y,
                &prior_spec,
                sx0,
                sy0,
                *chain_length,
                *target_acceptance,
                &mut rng,
            )?;
            let half = chain.sigma_x.len() / 2;
            let sx = &chain.sigma_x[half..];
            let sy = &chain.sigma_y[half..];
            let mut theta = BTreeMap::new();
            theta.insert("sigma_x".to_string(), stats::mean(sx));
            theta.insert("sigma_y".to_string(), stats::mean(sy));
            let mut se = BTreeMap::new();
            se.insert("sigma_x".to_string(), stats::sample_variance(sx).sqrt());
            se.insert("sigma_y".to_string(), stats::sample_variance(sy).sqrt());
            let mut trace_csv = Vec::new();
            write_gibbs_csv(&chain, &mut trace_csv)?;
            Ok(ReplicateSuccess {
                theta,
                se_natural: Some(se),
                trace_csv,
                diagnostics_csv: None,
            })
        }
        AlgorithmConfig::Pmm {
            priors,
            particles,
            ess_threshold,
            chain_length,
            target_acceptance,
            initial_step,
        } => {
            let prior_spec = config.prior_spec(priors)?;
            let opts = PmmOptions {
                iterations: *chain_length,
                target_acceptance: Some(*target_acceptance),
                initial_step: *initial_step,
            };
            let chain = pmm_run(
                model,
                y,
                &prior_spec,
                &theta0,
                *particles,
                ess_threshold.unwrap_or(*particles),
                &opts,
                &mut rng,
            )?;
            let half = chain.draws.len() / 2;
            let mut theta = BTreeMap::new();
            let mut se = BTreeMap::new();
            for (p, name) in names.iter().enumerate() {
                let draws: Vec<f64> = chain.draws[half..].iter().map(|d| d[p]).collect();
                theta.insert(name.to_string(), stats::mean(&draws));
                se.insert(name.to_string(), stats::sample_variance(&draws).sqrt());
            }
            let mut trace_csv = Vec::new();
            write_pmm_csv(&chain, &mut trace_csv)?;
            Ok(ReplicateSuccess {
                theta,
                se_natural: Some(se),
                trace_csv,
                diagnostics_csv: None,
            })
        }
    }
}

/// Per-repetition filter diagnostics summary.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnoseSummary {
    pub repetitions: usize,
    pub mean_ess: f64,
    pub mean_distinct: f64,
    pub per_repetition: Vec<(f64, f64)>,
}

/// Re-run the configured filter at the true parameters and emit per-time
/// diagnostics CSVs plus a summary. ABC algorithms use their smallest
/// scheduled threshold.
pub fn run_diagnose(
    built: &BuiltExperiment,
    dataset: Option<&Path>,
    repetitions: usize,
    out_dir: &Path,
) -> Result<DiagnoseSummary> {
    fs::create_dir_all(out_dir)?;
    let config = &built.config;
    let model = built.model.as_ref();
    let y = match dataset {
        Some(path) => load_dataset(built, path)?,
        None => {
            let mut rng = rng_from_seed(child_seed(config.seed, DATA_LABEL));
            simulate_dataset(model, &built.truth, &mut rng).1
        }
    };

    enum Which {
        Abc { delta: f64, kernel: KernelKindLocal, particles: usize, ess_threshold: usize },
        Bootstrap { particles: usize, ess_threshold: usize },
    }
    use crate::experiment::config::KernelKind as KernelKindLocal;

    let which = match &config.algorithm {
        AlgorithmConfig::SaemAbc {
            particles,
            ess_threshold,
            schedule,
            kernel,
            ..
        } => Which::Abc {
            delta: schedule.last().expect("validated non-empty").delta,
            kernel: *kernel,
            particles: *particles,
            ess_threshold: *ess_threshold,
        },
        AlgorithmConfig::SaemSmc {
            particles,
            ess_threshold,
            ..
        } => Which::Bootstrap {
            particles: *particles,
            ess_threshold: *ess_threshold,
        },
        AlgorithmConfig::Pmm {
            particles,
            ess_threshold,
            ..
        } => Which::Bootstrap {
            particles: *particles,
            ess_threshold: ess_threshold.unwrap_or(*particles),
        },
        _ => {
            return Err(Error::Config {
                field: "algorithm.kind".to_string(),
                why: "diagnose needs a particle-filter algorithm (saem-abc, saem-smc, pmm)"
                    .to_string(),
            })
        }
    };

    let mut per_repetition = Vec::with_capacity(repetitions);
    for rep in 0..repetitions {
        let mut rng = rng_from_seed(child_seed(config.seed, DIAG_LABEL + rep as u64));
        let diag = match &which {
            Which::Abc {
                delta,
                kernel,
                particles,
                ess_threshold,
            } => {
                let (_, diag) = run_abc_smc(
                    model,
                    &y,
                    &built.truth,
                    *particles,
                    *ess_threshold,
                    *delta,
                    &kernel.to_spec(),
                    &mut rng,
                )?;
                diag
            }
            Which::Bootstrap {
                particles,
                ess_threshold,
            } => {
                let (_, diag) =
                    run_bootstrap(model, &y, &built.truth, *particles, *ess_threshold, &mut rng)?;
                diag
            }
        };
        let mut csv = Vec::new();
        diag.write_csv(&mut csv)?;
        fs::write(out_dir.join(format!("diagnostics_rep_{rep:03}.csv")), csv)?;
        per_repetition.push((diag.mean_ess(), diag.mean_distinct()));
    }

    let mean_ess = stats::mean(&per_repetition.iter().map(|p| p.0).collect::<Vec<_>>());
    let mean_distinct = stats::mean(&per_repetition.iter().map(|p| p.1).collect::<Vec<_>>());
    let summary = DiagnoseSummary {
        repetitions,
        mean_ess,
        mean_distinct,
        per_repetition,
    };

    let mut csv = Vec::new();
    use std::io::Write as _;
    writeln!(csv, "repetition,mean_ess,mean_distinct")?;
    for (i, (e, d)) in summary.per_repetition.iter().enumerate() {
        writeln!(csv, "{i},{e},{d}")?;
    }
    writeln!(csv, "overall,{mean_ess},{mean_distinct}")?;
    fs::write(out_dir.join("diagnose_summary.csv"), csv)?;
    Ok(summary)
}
