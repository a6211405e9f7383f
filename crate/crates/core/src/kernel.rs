//! ABC kernels weighting simulated pseudo-observations against data.

use crate::error::{Error, Result};

/// Distance ρ(·,·) used by the uniform kernel and the rejection sampler.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Distance {
    #[default]
    Euclidean,
}

impl Distance {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Distance::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
        }
    }
}

/// Summary map η(·) applied before the distance. Informative summaries are
/// hard to come by for dynamical models, so the default is the identity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Summary {
    #[default]
    Identity,
}

impl Summary {
    pub fn apply<'a>(&self, y: &'a [f64]) -> &'a [f64] {
        match self {
            Summary::Identity => y,
        }
    }
}

/// Kernel choice for ABC weighting.
#[derive(Clone, Debug, PartialEq)]
pub enum KernelSpec {
    /// J_δ(y, y*) = (1/δ)·exp(−‖y*−y‖²/(2δ²)); strictly positive for all
    /// finite inputs, so an ABC filter with this kernel cannot degenerate.
    Gaussian,
    /// Indicator of ρ(η(y*), η(y)) ≤ δ.
    Uniform { distance: Distance, summary: Summary },
}

impl KernelSpec {
    pub fn uniform() -> Self {
        KernelSpec::Uniform {
            distance: Distance::default(),
            summary: Summary::default(),
        }
    }
}

/// log J_δ(y, y*).
///
/// Gaussian: −log δ − ‖y*−y‖²/(2δ²) (the scalar case matches the weighting
/// kernel exactly; vectors sum squared components). Uniform: 0 inside the
/// acceptance region, −∞ outside.
pub fn kernel_log_weight(spec: &KernelSpec, y: &[f64], y_star: &[f64], delta: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::invalid("delta", format!("must be > 0, got {delta}")));
    }
    if y.len() != y_star.len() {
        return Err(Error::DimensionMismatch {
            what: "kernel arguments",
            expected: y.len(),
            got: y_star.len(),
        });
    }
    match spec {
        KernelSpec::Gaussian => {
            let ss: f64 = y
                .iter()
                .zip(y_star)
                .map(|(a, b)| (b - a) * (b - a))
                .sum();
            Ok(-delta.ln() - ss / (2.0 * delta * delta))
        }
        KernelSpec::Uniform { distance, summary } => {
            let d = distance.eval(summary.apply(y_star), summary.apply(y));
            Ok(if d <= delta { 0.0 } else { f64::NEG_INFINITY })
        }
    }
}
