//! Sequential Monte Carlo filters: the ABC filter (kernel-weighted
//! pseudo-observations), the bootstrap filter (observation-density weights),
//! stratified resampling, genealogy tracing and degeneracy diagnostics.

mod engine;
mod genealogy;
mod rejection;
mod resample;

pub use engine::{run_abc_smc, run_bootstrap};
pub use genealogy::{path_from_indices, sample_genealogy_indices, sample_genealogy_path};
pub use rejection::rejection_abc_path;
pub use resample::{ess, stratified_resample};

use std::io::Write;

use crate::rng::StreamRoot;

/// Per-time-step particle arrays, stored flat (particle-major).
#[derive(Clone, Debug)]
pub struct StepRecord {
    /// Endpoint states at t_j (M × d_x).
    pub states: Vec<f64>,
    /// Fine-grid substates over ((j-1)·R, j·R] (M × R × d_x); the last
    /// substate of each particle equals its endpoint state.
    pub fine: Vec<f64>,
    /// Simulated pseudo-observations (M × d_y); ABC runs only.
    pub pseudo_obs: Option<Vec<f64>>,
    /// Log unnormalized weights W_j (M).
    pub log_unnorm: Vec<f64>,
    /// Normalized weights w_j before any resample reset (M).
    pub norm_weights: Vec<f64>,
    /// Parent index at level j-1 for each particle (identity permutation
    /// unless level j-1 resampled).
    pub parents: Vec<u32>,
    /// Ancestor indices drawn when ESS < M̄ triggered resampling here.
    pub resample_draw: Option<Vec<u32>>,
    /// Log weights carried into level j+1 (uniform after a resample).
    pub carried_log: Vec<f64>,
}

impl StepRecord {
    pub fn resampled(&self) -> bool {
        self.resample_draw.is_some()
    }
}

/// Full filter output: every per-time-step array plus the rng stream root,
/// which is enough to replay any traced lineage bit-exactly.
#[derive(Clone, Debug)]
pub struct ParticleSystem {
    pub particles: usize,
    pub state_dim: usize,
    pub obs_dim: usize,
    pub substeps: usize,
    pub root: StreamRoot,
    /// Initial draws from p(x0) (M × d_x).
    pub initial_states: Vec<f64>,
    /// Levels j = 1..n.
    pub steps: Vec<StepRecord>,
}

impl ParticleSystem {
    pub fn n_times(&self) -> usize {
        self.steps.len()
    }

    /// Endpoint state of particle `m` at level `j` (1-based).
    pub fn state(&self, j: usize, m: usize) -> &[f64] {
        let d = self.state_dim;
        &self.steps[j - 1].states[m * d..(m + 1) * d]
    }

    /// Fine-grid block of particle `m` at level `j` (R × d_x).
    pub fn fine_block(&self, j: usize, m: usize) -> &[f64] {
        let len = self.substeps * self.state_dim;
        &self.steps[j - 1].fine[m * len..(m + 1) * len]
    }

    pub fn initial_state(&self, m: usize) -> &[f64] {
        let d = self.state_dim;
        &self.initial_states[m * d..(m + 1) * d]
    }
}

/// Degeneracy diagnostics collected at every observation time.
#[derive(Clone, Debug)]
pub struct FilterDiagnostics {
    /// Effective sample size per time, from pre-reset normalized weights.
    pub ess_per_time: Vec<f64>,
    /// Number of distinct particle states per time (post-resample set when
    /// resampling fired, since duplication only arises from resampling).
    pub distinct_per_time: Vec<usize>,
    /// 1-based time indices where resampling fired.
    pub resample_events: Vec<usize>,
    /// Bootstrap runs accumulate the filter log-likelihood estimate.
    pub log_likelihood: Option<f64>,
}

impl FilterDiagnostics {
    pub fn mean_ess(&self) -> f64 {
        crate::stats::mean(&self.ess_per_time)
    }

    pub fn mean_distinct(&self) -> f64 {
        self.distinct_per_time.iter().sum::<usize>() as f64 / self.distinct_per_time.len() as f64
    }

    /// CSV export: `time_index,ess,distinct_count,resampled`.
    pub fn write_csv(&self, out: &mut dyn Write) -> std::io::Result<()> {
        writeln!(out, "time_index,ess,distinct_count,resampled")?;
        for (i, (ess, distinct)) in self
            .ess_per_time
            .iter()
            .zip(&self.distinct_per_time)
            .enumerate()
        {
            let t = i + 1;
            let resampled = u8::from(self.resample_events.contains(&t));
            writeln!(out, "{t},{ess},{distinct},{resampled}")?;
        }
        Ok(())
    }
}
