//! Independent per-parameter priors for the Bayesian baselines.

use crate::error::{Error, Result};

/// Supported prior families.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Prior {
    /// Uniform on the natural scale.
    Uniform { lo: f64, hi: f64 },
    /// Improper flat prior on the log scale: density ∝ 1/φ for φ > 0.
    FlatOnLog,
}

impl Prior {
    pub fn validate(&self) -> Result<()> {
        if let Prior::Uniform { lo, hi } = self {
            if !(lo < hi) {
                return Err(Error::invalid(
                    "prior",
                    format!("uniform bounds must satisfy lo < hi, got [{lo}, {hi}]"),
                ));
            }
        }
        Ok(())
    }

    /// Log-density on the natural scale (up to an additive constant for the
    /// improper family); -inf outside the support.
    pub fn log_density(&self, value: f64) -> f64 {
        match self {
            Prior::Uniform { lo, hi } => {
                if value >= *lo && value <= *hi {
                    -(hi - lo).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            Prior::FlatOnLog => {
                if value > 0.0 {
                    -value.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }
}

/// One prior per parameter, in parameter order.
#[derive(Clone, Debug, PartialEq)]
pub struct PriorSpec {
    priors: Vec<Prior>,
}

impl PriorSpec {
    pub fn new(priors: Vec<Prior>) -> Result<Self> {
        for p in &priors {
            p.validate()?;
        }
        Ok(PriorSpec { priors })
    }

    pub fn len(&self) -> usize {
        self.priors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.priors.is_empty()
    }

    pub fn get(&self, i: usize) -> &Prior {
        &self.priors[i]
    }

    /// Joint log-density at a natural-scale point.
    pub fn log_density(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.priors.len());
        self.priors
            .iter()
            .zip(values)
            .map(|(p, &v)| p.log_density(v))
            .sum()
    }
}
