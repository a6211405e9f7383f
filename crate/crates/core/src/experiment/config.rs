//! Experiment configuration: a single JSON document validated before any
//! run starts. Rejected configs name the offending field.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bayes::{Prior, PriorSpec};
use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::model::StateSpaceModel;
use crate::models::{LinearGaussianModel, NonlinearGaussianModel, TheophyllineModel};
use crate::params::ParameterVector;
use crate::schedule::{StepSizeSchedule, ThresholdSchedule};

fn err(field: &str, why: impl Into<String>) -> Error {
    Error::Config {
        field: field.to_string(),
        why: why.into(),
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub grid: GridConfig,
    pub algorithm: AlgorithmConfig,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    pub start: StartLaw,
    #[serde(default)]
    pub data_mode: DataMode,
    pub seed: u64,
}

fn default_replicates() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: ModelId,
    /// True parameter values by name (used for data generation and as the
    /// default center of starting-value laws).
    pub theta: BTreeMap<String, f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelId {
    NonlinearGaussian,
    Theophylline,
    LinearGaussian,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_substeps", rename = "R")]
    pub substeps: usize,
}

fn default_delta() -> f64 {
    1.0
}

fn default_substeps() -> usize {
    1
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub delta: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    #[default]
    Gaussian,
    Uniform,
}

impl KernelKind {
    pub fn to_spec(self) -> KernelSpec {
        match self {
            KernelKind::Gaussian => KernelSpec::Gaussian,
            KernelKind::Uniform => KernelSpec::uniform(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum AlgorithmConfig {
    SaemAbc {
        #[serde(rename = "M")]
        particles: usize,
        #[serde(rename = "Mbar")]
        ess_threshold: usize,
        #[serde(rename = "K")]
        iterations: usize,
        #[serde(rename = "K1")]
        warmup: usize,
        schedule: Vec<LevelConfig>,
        #[serde(default)]
        kernel: KernelKind,
    },
    SaemSmc {
        #[serde(rename = "M")]
        particles: usize,
        #[serde(rename = "Mbar")]
        ess_threshold: usize,
        #[serde(rename = "K")]
        iterations: usize,
        #[serde(rename = "K1")]
        warmup: usize,
    },
    RejectionSaem {
        #[serde(rename = "K")]
        iterations: usize,
        #[serde(rename = "K1")]
        warmup: usize,
        schedule: Vec<LevelConfig>,
        #[serde(default = "default_max_attempts")]
        max_attempts: usize,
    },
    Gibbs {
        priors: Vec<PriorConfig>,
        chain_length: usize,
        #[serde(default = "default_gibbs_acceptance")]
        target_acceptance: f64,
    },
    Pmm {
        priors: Vec<PriorConfig>,
        #[serde(rename = "M")]
        particles: usize,
        #[serde(rename = "Mbar", default)]
        ess_threshold: Option<usize>,
        chain_length: usize,
        #[serde(default = "default_pmm_acceptance")]
        target_acceptance: f64,
        #[serde(default = "default_initial_step")]
        initial_step: f64,
    },
}

fn default_max_attempts() -> usize {
    100_000
}

fn default_gibbs_acceptance() -> f64 {
    0.44
}

fn default_pmm_acceptance() -> f64 {
    0.07
}

fn default_initial_step() -> f64 {
    0.1
}

impl AlgorithmConfig {
    pub fn kind_name(&self) -> &'static str {
        match self {
            AlgorithmConfig::SaemAbc { .. } => "saem-abc",
            AlgorithmConfig::SaemSmc { .. } => "saem-smc",
            AlgorithmConfig::RejectionSaem { .. } => "rejection-saem",
            AlgorithmConfig::Gibbs { .. } => "gibbs",
            AlgorithmConfig::Pmm { .. } => "pmm",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PriorConfig {
    Uniform { lo: f64, hi: f64 },
    FlatOnLog,
}

impl PriorConfig {
    fn to_prior(&self) -> Prior {
        match self {
            PriorConfig::Uniform { lo, hi } => Prior::Uniform { lo: *lo, hi: *hi },
            PriorConfig::FlatOnLog => Prior::FlatOnLog,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StartLaw {
    /// Every replicate starts from these natural-scale values.
    Fixed { values: BTreeMap<String, f64> },
    /// Working-scale Gaussian around a center, independent components with
    /// a common standard deviation.
    GaussianAround { center: CenterSpec, sd: f64 },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CenterSpec {
    Keyword(String),
    Values(BTreeMap<String, f64>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DataMode {
    /// One dataset shared by every replicate; replicates differ only in
    /// starting values and filter randomness.
    #[default]
    Shared,
    /// Each replicate simulates its own dataset at the true parameters.
    FreshPerReplicate,
}

/// A validated, ready-to-run experiment.
pub struct BuiltExperiment {
    pub config: ExperimentConfig,
    pub model: Box<dyn StateSpaceModel + Send + Sync>,
    pub truth: ParameterVector,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<ExperimentConfig> {
        serde_json::from_str(text).map_err(|e| err("<document>", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Validate everything and build the model at the true parameters.
    pub fn build(&self) -> Result<BuiltExperiment> {
        if self.replicates == 0 {
            return Err(err("replicates", "must be at least 1"));
        }
        if self.grid.n == 0 {
            return Err(err("grid.n", "must be at least 1"));
        }
        if self.grid.substeps == 0 {
            return Err(err("grid.R", "must be a positive integer"));
        }
        if !(self.grid.delta > 0.0) {
            return Err(err("grid.delta", "must be positive"));
        }

        let model: Box<dyn StateSpaceModel + Send + Sync> = match self.model.id {
            ModelId::NonlinearGaussian => {
                if self.grid.substeps != 1 {
                    return Err(err("grid.R", "nonlinear-gaussian is a discrete map; R must be 1"));
                }
                if self.grid.delta != 1.0 {
                    return Err(err("grid.delta", "nonlinear-gaussian uses a unit sampling interval"));
                }
                let sx = self.theta_value("sigma_x")?;
                let sy = self.theta_value("sigma_y")?;
                Box::new(
                    NonlinearGaussianModel::new(sx, sy, self.grid.n)
                        .map_err(|e| err("model.theta", e.to_string()))?,
                )
            }
            ModelId::Theophylline => {
                if self.grid.delta != 1.0 {
                    return Err(err("grid.delta", "theophylline uses a unit sampling interval"));
                }
                let defaults = [
                    self.theta_value("k_e")?,
                    self.theta_value("cl")?,
                    self.theta_value("sigma")?,
                    self.theta_value("sigma_eps")?,
                ];
                Box::new(
                    TheophyllineModel::with_defaults(self.grid.n, self.grid.substeps, defaults)
                        .map_err(|e| err("model.theta", e.to_string()))?,
                )
            }
            ModelId::LinearGaussian => {
                if self.grid.substeps != 1 {
                    return Err(err("grid.R", "linear-gaussian is a discrete map; R must be 1"));
                }
                let a = self.theta_value("a")?;
                let sx = self.theta_value("sigma_x")?;
                let sy = self.theta_value("sigma_y")?;
                Box::new(
                    LinearGaussianModel::new(a, sx, sy, 0.0, self.grid.n)
                        .map_err(|e| err("model.theta", e.to_string()))?,
                )
            }
        };

        let truth = model.param_template();
        for name in self.model.theta.keys() {
            if !truth.names().contains(&name.as_str()) {
                return Err(err(
                    "model.theta",
                    format!("unknown parameter `{name}` for this model"),
                ));
            }
        }

        self.validate_algorithm(&truth)?;
        self.validate_start(&truth)?;

        Ok(BuiltExperiment {
            config: self.clone(),
            model,
            truth,
        })
    }

    fn theta_value(&self, name: &str) -> Result<f64> {
        self.model
            .theta
            .get(name)
            .copied()
            .ok_or_else(|| err("model.theta", format!("missing parameter `{name}`")))
    }

    fn validate_algorithm(&self, truth: &ParameterVector) -> Result<()> {
        match &self.algorithm {
            AlgorithmConfig::SaemAbc {
                particles,
                ess_threshold,
                iterations,
                warmup,
                schedule,
                ..
            } => {
                validate_filter_sizes(*particles, *ess_threshold)?;
                let sched = self.threshold_schedule(schedule)?;
                validate_saem_sizes(*iterations, *warmup)?;
                if sched.total_iterations() != *iterations {
                    return Err(err(
                        "algorithm.schedule",
                        format!(
                            "level iterations sum to {}, but K = {iterations}",
                            sched.total_iterations()
                        ),
                    ));
                }
                Ok(())
            }
            AlgorithmConfig::SaemSmc {
                particles,
                ess_threshold,
                iterations,
                warmup,
            } => {
                validate_filter_sizes(*particles, *ess_threshold)?;
                validate_saem_sizes(*iterations, *warmup)
            }
            AlgorithmConfig::RejectionSaem {
                iterations,
                warmup,
                schedule,
                max_attempts,
            } => {
                if *max_attempts == 0 {
                    return Err(err("algorithm.max_attempts", "must be at least 1"));
                }
                let sched = self.threshold_schedule(schedule)?;
                validate_saem_sizes(*iterations, *warmup)?;
                if sched.total_iterations() != *iterations {
                    return Err(err(
                        "algorithm.schedule",
                        format!(
                            "level iterations sum to {}, but K = {iterations}",
                            sched.total_iterations()
                        ),
                    ));
                }
                Ok(())
            }
            AlgorithmConfig::Gibbs {
                priors,
                chain_length,
                target_acceptance,
            } => {
                if self.model.id == ModelId::Theophylline {
                    return Err(err(
                        "algorithm.kind",
                        "gibbs supports the scalar additive-noise models only",
                    ));
                }
                if *chain_length == 0 {
                    return Err(err("algorithm.chain_length", "must be positive"));
                }
                if !(0.0 < *target_acceptance && *target_acceptance < 1.0) {
                    return Err(err("algorithm.target_acceptance", "must be in (0, 1)"));
                }
                if priors.len() != 2 {
                    return Err(err("algorithm.priors", "gibbs needs priors for (sigma_x, sigma_y)"));
                }
                self.prior_spec(priors).map(|_| ())
            }
            AlgorithmConfig::Pmm {
                priors,
                particles,
                ess_threshold,
                chain_length,
                target_acceptance,
                initial_step,
            } => {
                validate_filter_sizes(*particles, ess_threshold.unwrap_or(*particles))?;
                if *chain_length == 0 {
                    return Err(err("algorithm.chain_length", "must be positive"));
                }
                if !(0.0 < *target_acceptance && *target_acceptance < 1.0) {
                    return Err(err("algorithm.target_acceptance", "must be in (0, 1)"));
                }
                if !(initial_step > &0.0) {
                    return Err(err("algorithm.initial_step", "must be positive"));
                }
                if priors.len() != truth.len() {
                    return Err(err(
                        "algorithm.priors",
                        format!("need {} priors, got {}", truth.len(), priors.len()),
                    ));
                }
                self.prior_spec(priors).map(|_| ())
            }
        }
    }

    fn validate_start(&self, truth: &ParameterVector) -> Result<()> {
        match &self.start {
            StartLaw::Fixed { values } => {
                for name in truth.names() {
                    if !values.contains_key(name) {
                        return Err(err("start.values", format!("missing parameter `{name}`")));
                    }
                }
                Ok(())
            }
            StartLaw::GaussianAround { center, sd } => {
                if !(sd > &0.0) {
                    return Err(err("start.sd", "must be positive"));
                }
                match center {
                    CenterSpec::Keyword(k) if k == "truth" => Ok(()),
                    CenterSpec::Keyword(k) => {
                        Err(err("start.center", format!("unknown keyword `{k}` (expected \"truth\")")))
                    }
                    CenterSpec::Values(values) => {
                        for name in truth.names() {
                            if !values.contains_key(name) {
                                return Err(err(
                                    "start.center",
                                    format!("missing parameter `{name}`"),
                                ));
                            }
                        }
                        Ok(())
                    }
                }
            }
        }
    }

    pub fn threshold_schedule(&self, levels: &[LevelConfig]) -> Result<ThresholdSchedule> {
        ThresholdSchedule::from_pairs(
            &levels
                .iter()
                .map(|l| (l.delta, l.iterations))
                .collect::<Vec<_>>(),
        )
        .map_err(|e| err("algorithm.schedule", e.to_string()))
    }

    pub fn step_schedule(&self, iterations: usize, warmup: usize) -> Result<StepSizeSchedule> {
        StepSizeSchedule::new(iterations, warmup).map_err(|e| err("algorithm.K1", e.to_string()))
    }

    pub fn prior_spec(&self, priors: &[PriorConfig]) -> Result<PriorSpec> {
        PriorSpec::new(priors.iter().map(|p| p.to_prior()).collect())
            .map_err(|e| err("algorithm.priors", e.to_string()))
    }

    /// Starting parameter vector for one replicate.
    pub fn starting_values(
        &self,
        truth: &ParameterVector,
        rng: &mut crate::rng::Rng,
    ) -> Result<ParameterVector> {
        match &self.start {
            StartLaw::Fixed { values } => {
                let ordered: Vec<f64> = truth
                    .names()
                    .iter()
                    .map(|n| values[*n])
                    .collect();
                ParameterVector::new(truth.defs().to_vec(), ordered)
            }
            StartLaw::GaussianAround { center, sd } => {
                let center_vec = match center {
                    CenterSpec::Keyword(_) => truth.clone(),
                    CenterSpec::Values(values) => {
                        let ordered: Vec<f64> =
                            truth.names().iter().map(|n| values[*n]).collect();
                        ParameterVector::new(truth.defs().to_vec(), ordered)?
                    }
                };
                let working: Vec<f64> = center_vec
                    .to_working()
                    .iter()
                    .map(|w| w + sd * rand::Rng::sample::<f64, _>(rng, rand_distr::StandardNormal))
                    .collect();
                center_vec.from_working(&working)
            }
        }
    }
}

fn validate_filter_sizes(particles: usize, ess_threshold: usize) -> Result<()> {
    if particles == 0 {
        return Err(err("algorithm.M", "must be at least 1"));
    }
    if ess_threshold > particles {
        return Err(err("algorithm.Mbar", "must not exceed M"));
    }
    Ok(())
}

fn validate_saem_sizes(iterations: usize, warmup: usize) -> Result<()> {
    if iterations == 0 {
        return Err(err("algorithm.K", "must be positive"));
    }
    if warmup >= iterations {
        return Err(err("algorithm.K1", "warmup must be smaller than K"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn table1_config() -> ExperimentConfig {
        let text = r#"{
            "model": {"id": "nonlinear-gaussian", "theta": {"sigma_x": 2.2360679774997896, "sigma_y": 2.2360679774997896}},
            "grid": {"n": 50},
            "algorithm": {"kind": "saem-abc", "M": 1000, "Mbar": 200, "K": 400, "K1": 300,
                          "schedule": [{"delta": 2.0, "iterations": 80}, {"delta": 1.7, "iterations": 70},
                                       {"delta": 1.3, "iterations": 50}, {"delta": 1.0, "iterations": 200}]},
            "replicates": 30,
            "start": {"law": "gaussian-around", "center": "truth", "sd": 1.4142135623730951},
            "seed": 1
        }"#;
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn valid_config_builds() {
        let cfg = table1_config();
        let built = cfg.build().unwrap();
        assert_eq!(built.truth.names(), vec!["sigma_x", "sigma_y"]);
    }

    #[test]
    fn invalid_substeps_names_the_field() {
        let mut cfg = table1_config();
        cfg.grid.substeps = 0;
        match cfg.build().err().expect("must reject") {
            Error::Config { field, .. } => assert_eq!(field, "grid.R"),
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn schedule_must_sum_to_k() {
        let mut cfg = table1_config();
        if let AlgorithmConfig::SaemAbc { iterations, .. } = &mut cfg.algorithm {
            *iterations = 401;
        }
        match cfg.build().err().expect("must reject") {
            Error::Config { field, .. } => assert_eq!(field, "algorithm.schedule"),
            other => panic!("expected config error, got {other}"),
        }
    }

    #[test]
    fn config_json_round_trips() {
        let cfg = table1_config();
        let text = cfg.to_json();
        let back = ExperimentConfig::from_json(&text).unwrap();
        assert_eq!(back.to_json(), text);
    }
}
