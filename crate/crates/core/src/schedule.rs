//! Deterministic schedules: decreasing ABC thresholds over blocks of
//! iterations, and the stochastic-approximation step sizes.

use crate::error::{Error, Result};

/// One threshold level: use `delta` for `iterations` consecutive iterations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdLevel {
    pub delta: f64,
    pub iterations: usize,
}

/// Strictly decreasing thresholds δ_1 > … > δ_L > 0, with per-level
/// iteration counts summing to the total number of iterations K.
///
/// Thresholds change deterministically: adaptive per-iteration thresholds
/// would make the objective drift between iterations of the outer
/// maximization, so they are deliberately not supported.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdSchedule {
    levels: Vec<ThresholdLevel>,
}

impl ThresholdSchedule {
    pub fn new(levels: Vec<ThresholdLevel>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::invalid("threshold schedule", "needs at least one level"));
        }
        for level in &levels {
            if !(level.delta > 0.0) || !level.delta.is_finite() {
                return Err(Error::invalid(
                    "threshold schedule",
                    format!("delta must be positive and finite, got {}", level.delta),
                ));
            }
            if level.iterations == 0 {
                return Err(Error::invalid(
                    "threshold schedule",
                    "every level needs a positive iteration count",
                ));
            }
        }
        for w in levels.windows(2) {
            if !(w[1].delta < w[0].delta) {
                return Err(Error::invalid(
                    "threshold schedule",
                    format!("deltas must strictly decrease: {} then {}", w[0].delta, w[1].delta),
                ));
            }
        }
        Ok(ThresholdSchedule { levels })
    }

    /// Convenience: pairs of (delta, iterations).
    pub fn from_pairs(pairs: &[(f64, usize)]) -> Result<Self> {
        ThresholdSchedule::new(
            pairs
                .iter()
                .map(|&(delta, iterations)| ThresholdLevel { delta, iterations })
                .collect(),
        )
    }

    pub fn levels(&self) -> &[ThresholdLevel] {
        &self.levels
    }

    /// Total iteration count K = Σ k_l.
    pub fn total_iterations(&self) -> usize {
        self.levels.iter().map(|l| l.iterations).sum()
    }

    /// δ for iteration `k` (1-based): the level whose cumulative window
    /// contains k. Piecewise constant and non-increasing in k.
    pub fn delta_at(&self, k: usize) -> Result<f64> {
        let total = self.total_iterations();
        if k == 0 || k > total {
            return Err(Error::invalid(
                "iteration index",
                format!("k = {k} outside 1..={total}"),
            ));
        }
        let mut upper = 0;
        for level in &self.levels {
            upper += level.iterations;
            if k <= upper {
                return Ok(level.delta);
            }
        }
        unreachable!("k validated against the cumulative total")
    }
}

/// Step sizes γ_k = 1 during the first `warmup` iterations, then
/// γ_k = (k − warmup)^{-1}. This family satisfies Σγ = ∞, Σγ² < ∞.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StepSizeSchedule {
    total: usize,
    warmup: usize,
}

impl StepSizeSchedule {
    pub fn new(total: usize, warmup: usize) -> Result<Self> {
        if total == 0 {
            return Err(Error::invalid("step-size schedule", "total iterations must be positive"));
        }
        if warmup >= total {
            return Err(Error::invalid(
                "step-size schedule",
                format!("warmup ({warmup}) must be smaller than total ({total})"),
            ));
        }
        Ok(StepSizeSchedule { total, warmup })
    }

    pub fn total_iterations(&self) -> usize {
        self.total
    }

    pub fn warmup(&self) -> usize {
        self.warmup
    }

    /// γ_k for 1-based k.
    pub fn gamma(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.total {
            return Err(Error::invalid(
                "iteration index",
                format!("k = {k} outside 1..={}", self.total),
            ));
        }
        Ok(if k <= self.warmup {
            1.0
        } else {
            1.0 / (k - self.warmup) as f64
        })
    }
}
