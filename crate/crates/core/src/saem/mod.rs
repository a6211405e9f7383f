//! The stochastic-approximation EM driver.
//!
//! Each iteration runs a particle filter at the current estimate, draws one
//! latent path by genealogy tracing, folds its sufficient statistics into
//! the running average, and applies the model's closed-form M-step. The
//! information recursion piggybacks on the same step sizes when the model
//! provides complete-likelihood derivatives.

mod update;

pub use update::{fisher_update, sa_update, standard_errors, FisherAccumulators, StandardErrors};

use std::io::Write;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::filters::{run_abc_smc, run_bootstrap, sample_genealogy_path};
use crate::kernel::{Distance, KernelSpec, Summary};
use crate::model::{DerivativeScale, StateSpaceModel};
use crate::params::ParameterVector;
use crate::rng::Rng;
use crate::schedule::{StepSizeSchedule, ThresholdSchedule};
use crate::series::ObservationSeries;

/// Which simulation-step machinery feeds the stochastic approximation.
#[derive(Clone, Debug)]
pub enum FilterChoice {
    /// ABC filter with a kernel and a deterministic threshold schedule.
    Abc {
        kernel: KernelSpec,
        schedule: ThresholdSchedule,
        particles: usize,
        ess_threshold: usize,
    },
    /// Bootstrap filter weighting by the observation density.
    Bootstrap {
        particles: usize,
        ess_threshold: usize,
    },
    /// Whole-trajectory acceptance-rejection (no filtering).
    Rejection {
        schedule: ThresholdSchedule,
        distance: Distance,
        summary: Summary,
        max_attempts: usize,
    },
}

/// One iteration of the trace.
#[derive(Clone, Debug)]
pub struct IterationRecord {
    pub iteration: usize,
    pub gamma: f64,
    /// ABC threshold in effect; `None` for the bootstrap filter.
    pub delta: Option<f64>,
    pub theta_natural: Vec<f64>,
    pub theta_working: Vec<f64>,
    pub ess_mean: f64,
    pub distinct_mean: f64,
}

/// Standard errors reported on the three scales of interest.
#[derive(Clone, Debug)]
pub struct SaemStandardErrors {
    /// Raw sqrt-diagonal of (−F)⁻¹ on the model's derivative scale.
    pub derivative_scale: Vec<f64>,
    /// Delta-method conversion to the natural parameter scale.
    pub natural: Vec<f64>,
    /// Delta-method conversion to the working (log) scale.
    pub working: Vec<f64>,
    pub information_definite: bool,
}

/// Output of a full run.
#[derive(Clone, Debug)]
pub struct SaemRun {
    pub theta: ParameterVector,
    pub standard_errors: Option<SaemStandardErrors>,
    pub fisher: Option<DMatrix<f64>>,
    pub trace: Vec<IterationRecord>,
    /// Number of iterations where the M-step was out of domain and the
    /// previous components were retained.
    pub mstep_warnings: usize,
}

pub fn run_saem<Mo>(
    model: &Mo,
    y: &ObservationSeries,
    theta0: &ParameterVector,
    sched: &StepSizeSchedule,
    filter: &FilterChoice,
    rng: &mut Rng,
) -> Result<SaemRun>
where
    Mo: StateSpaceModel + ?Sized,
{
    let k_total = sched.total_iterations();
    match filter {
        FilterChoice::Abc { schedule, .. } | FilterChoice::Rejection { schedule, .. } => {
            if schedule.total_iterations() != k_total {
                return Err(Error::invalid(
                    "threshold schedule",
                    format!(
                        "level iteration counts sum to {}, but the run has K = {k_total}",
                        schedule.total_iterations()
                    ),
                ));
            }
        }
        FilterChoice::Bootstrap { .. } => {}
    }

    let has_derivatives = !model.derivative_scales().is_empty();
    let dim = theta0.len();

    let mut theta = theta0.clone();
    let mut s = vec![0.0; model.stat_dim()];
    let mut acc = FisherAccumulators::zeros(dim);
    let mut trace = Vec::with_capacity(k_total);
    let mut mstep_warnings = 0usize;

    for k in 1..=k_total {
        let gamma = sched.gamma(k)?;

        let (path, delta, ess_mean, distinct_mean) = match filter {
            FilterChoice::Abc {
                kernel,
                schedule,
                particles,
                ess_threshold,
            } => {
                let delta = schedule.delta_at(k)?;
                let (ps, diag) = run_abc_smc(
                    model,
                    y,
                    &theta,
                    *particles,
                    *ess_threshold,
                    delta,
                    kernel,
                    rng,
                )?;
                let path = sample_genealogy_path(&ps, rng);
                (path, Some(delta), diag.mean_ess(), diag.mean_distinct())
            }
            FilterChoice::Bootstrap {
                particles,
                ess_threshold,
            } => {
                let (ps, diag) = run_bootstrap(model, y, &theta, *particles, *ess_threshold, rng)?;
                let path = sample_genealogy_path(&ps, rng);
                (path, None, diag.mean_ess(), diag.mean_distinct())
            }
            FilterChoice::Rejection {
                schedule,
                distance,
                summary,
                max_attempts,
            } => {
                let delta = schedule.delta_at(k)?;
                let path = crate::filters::rejection_abc_path(
                    model,
                    y,
                    &theta,
                    delta,
                    *distance,
                    *summary,
                    *max_attempts,
                    rng,
                )?;
                (path, Some(delta), f64::NAN, f64::NAN)
            }
        };

        let stat = model.sufficient_stats(y, &path)?;
        s = sa_update(&s, &stat, gamma)?;

        theta = match model.mstep(&s) {
            Ok(next) => next,
            Err(Error::MStepOutOfDomain { partial, invalid, why }) => {
                log::warn!("iteration {k}: {why}; retaining previous components {invalid:?}");
                mstep_warnings += 1;
                let mut merged = partial;
                for &i in &invalid {
                    merged = merged.with_value(i, theta.get(i))?;
                }
                merged
            }
            Err(other) => return Err(other),
        };

        if has_derivatives {
            if let Some((grad, hess)) = model.complete_derivatives(y, &path, &theta) {
                acc = fisher_update(&acc, &grad, &hess, gamma)?;
            }
        }

        trace.push(IterationRecord {
            iteration: k,
            gamma,
            delta,
            theta_natural: theta.values().to_vec(),
            theta_working: theta.to_working(),
            ess_mean,
            distinct_mean,
        });
    }

    let (fisher, ses) = if has_derivatives {
        let se = standard_errors(&acc.f);
        let scales = model.derivative_scales();
        let natural: Vec<f64> = se
            .values
            .iter()
            .zip(&scales)
            .zip(theta.values())
            .map(|((&v, scale), &phi)| match scale {
                DerivativeScale::Natural => v,
                DerivativeScale::SquareOfNatural => v / (2.0 * phi),
            })
            .collect();
        let working: Vec<f64> = natural
            .iter()
            .zip(theta.values())
            .map(|(&se_nat, &phi)| se_nat / phi)
            .collect();
        (
            Some(acc.f.clone()),
            Some(SaemStandardErrors {
                derivative_scale: se.values,
                natural,
                working,
                information_definite: se.information_definite,
            }),
        )
    } else {
        (None, None)
    };

    Ok(SaemRun {
        theta,
        standard_errors: ses,
        fisher,
        trace,
        mstep_warnings,
    })
}

/// Trace CSV: `iteration,gamma,delta,<param columns>,ess_mean,distinct_mean`
/// with parameters on the natural scale and delta written as NaN for the
/// bootstrap filter.
pub fn write_trace_csv(
    trace: &[IterationRecord],
    param_names: &[&str],
    out: &mut dyn Write,
) -> std::io::Result<()> {
    write!(out, "iteration,gamma,delta")?;
    for name in param_names {
        write!(out, ",{name}")?;
    }
    writeln!(out, ",ess_mean,distinct_mean")?;
    for rec in trace {
        write!(out, "{},{}", rec.iteration, rec.gamma)?;
        match rec.delta {
            Some(d) => write!(out, ",{d}")?,
            None => write!(out, ",NaN")?,
        }
        for v in &rec.theta_natural {
            write!(out, ",{v}")?;
        }
        writeln!(out, ",{},{}", rec.ess_mean, rec.distinct_mean)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NonlinearGaussianModel;
    use crate::rng::rng_from_seed;

    #[test]
    fn warmup_keeps_running_statistic_equal_to_latest_path_statistic() {
        // During γ = 1 the M-step input is exactly the latest S_c, so the
        // estimate equals mstep(S_c(Y, X^{(k)})) at every warmup iteration.
        let model = NonlinearGaussianModel::new(5f64.sqrt(), 5f64.sqrt(), 20).unwrap();
        let theta = model.param_template();
        let mut rng = rng_from_seed(31);
        let (_, y) = crate::model::simulate_dataset(&model, &theta, &mut rng);

        let sched = StepSizeSchedule::new(10, 8).unwrap();
        let filter = FilterChoice::Bootstrap {
            particles: 50,
            ess_threshold: 25,
        };
        let run = run_saem(&model, &y, &theta, &sched, &filter, &mut rng).unwrap();
        assert_eq!(run.trace.len(), 10);
        for rec in &run.trace[..8] {
            assert_eq!(rec.gamma, 1.0);
        }
        assert!(run.trace[8].gamma == 1.0 && run.trace[9].gamma == 0.5);
        assert!(run.standard_errors.is_some());
    }

    #[test]
    fn abc_schedule_must_cover_every_iteration() {
        let model = NonlinearGaussianModel::new(1.0, 1.0, 5).unwrap();
        let theta = model.param_template();
        let mut rng = rng_from_seed(32);
        let (_, y) = crate::model::simulate_dataset(&model, &theta, &mut rng);
        let sched = StepSizeSchedule::new(10, 5).unwrap();
        let filter = FilterChoice::Abc {
            kernel: KernelSpec::Gaussian,
            schedule: ThresholdSchedule::from_pairs(&[(1.0, 7)]).unwrap(),
            particles: 20,
            ess_threshold: 10,
        };
        assert!(run_saem(&model, &y, &theta, &sched, &filter, &mut rng).is_err());
    }
}
