//! The state-space-model contract consumed by filters and estimators.
//!
//! A model couples a latent Markov state (simulated on a fine time grid)
//! with conditionally independent noisy observations at sampling times:
//!
//! ```text
//! Y_j ~ f(y | X_{t_j}; θ)            observation density
//! X_i ~ p(x | X_{i-1}; θ)            transition on the fine grid
//! X_0 ~ p(x0)                        initial law (possibly a point mass)
//! ```
//!
//! Filters only need forward simulation plus either the observation density
//! (bootstrap) or an observation sampler (ABC). The transition density is an
//! optional capability; the stochastic EM machinery additionally uses
//! complete-data sufficient statistics, a closed-form M-step, and (for
//! standard errors) complete-likelihood derivatives.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::params::ParameterVector;
use crate::rng::Rng;
use crate::series::{LatentPath, ObservationSeries};

/// How a natural-scale standard error is obtained from a derivative-scale
/// one. Models state the scale their complete-likelihood derivatives use.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeScale {
    /// Derivative taken directly in the reported parameter.
    Natural,
    /// Derivative taken in the squared parameter (variance), while the
    /// reported natural parameter is its square root: se(φ) ≈ se(φ²)/(2φ).
    SquareOfNatural,
}

/// Behavioral contract for a state-space model.
///
/// Implementations are immutable after construction and safe to share
/// across threads; all randomness flows through the passed generator.
pub trait StateSpaceModel: Sync {
    fn state_dim(&self) -> usize;
    fn obs_dim(&self) -> usize;

    /// The time grid this model simulates on.
    fn grid(&self) -> &TimeGrid;

    /// Template parameter vector: names, domains, and a valid default.
    fn param_template(&self) -> ParameterVector;

    /// Draw from the initial law p(x0); a point mass returns the constant.
    fn sample_initial(&self, into: &mut [f64], rng: &mut Rng);

    /// One forward transition over a fine-grid interval [τ_prev, τ_next].
    fn simulate_transition(
        &self,
        from: &[f64],
        into: &mut [f64],
        tau_prev: f64,
        tau_next: f64,
        theta: &ParameterVector,
        rng: &mut Rng,
    );

    /// Optional capability: log p(x_to | x_from) over one fine-grid step
    /// starting at τ_prev. `None` means the model has no usable transition
    /// density (only a forward simulator).
    fn transition_logdensity(
        &self,
        _to: &[f64],
        _from: &[f64],
        _tau_prev: f64,
        _theta: &ParameterVector,
    ) -> Option<f64> {
        None
    }

    /// log f(y | x; θ).
    fn obs_logdensity(&self, y: &[f64], x: &[f64], theta: &ParameterVector) -> f64;

    /// Draw y ~ f(· | x; θ).
    fn simulate_obs(&self, x: &[f64], into: &mut [f64], theta: &ParameterVector, rng: &mut Rng);

    /// Dimension of the complete-data sufficient statistic vector.
    fn stat_dim(&self) -> usize;

    /// Minimal sufficient statistic of the complete model, S_c(Y, X).
    fn sufficient_stats(&self, y: &ObservationSeries, x: &LatentPath) -> Result<Vec<f64>>;

    /// Closed-form maximizer of the complete likelihood given a statistic
    /// vector (possibly a stochastic average of per-path statistics).
    fn mstep(&self, s: &[f64]) -> Result<ParameterVector>;

    /// Optional capability: gradient and Hessian of the complete-data
    /// log-likelihood, on the scale reported by [`derivative_scales`].
    ///
    /// [`derivative_scales`]: StateSpaceModel::derivative_scales
    fn complete_derivatives(
        &self,
        _y: &ObservationSeries,
        _x: &LatentPath,
        _theta: &ParameterVector,
    ) -> Option<(DVector<f64>, DMatrix<f64>)> {
        None
    }

    /// Scale of each derivative coordinate; length matches the parameter
    /// vector when derivatives are provided.
    fn derivative_scales(&self) -> Vec<DerivativeScale> {
        vec![]
    }
}

/// Complete-data log-likelihood Σ_j log f(Y_j|X_j;θ) + Σ_i log p(X_i|X_{i-1};θ),
/// the transition sum running over the fine grid.
///
/// Requires the model's transition-density capability. −∞ from any factor
/// is propagated (an absorbing zero).
pub fn complete_loglik<Mo>(
    model: &Mo,
    y: &ObservationSeries,
    x: &LatentPath,
    theta: &ParameterVector,
) -> Result<f64>
where
    Mo: StateSpaceModel + ?Sized,
{
    let grid = model.grid();
    y.check_grid(grid)?;
    x.check_grid(grid)?;
    if y.dim() != model.obs_dim() {
        return Err(Error::DimensionMismatch {
            what: "observation dim",
            expected: model.obs_dim(),
            got: y.dim(),
        });
    }

    let mut total = 0.0;
    for i in 1..=grid.n_fine() {
        let lp = model
            .transition_logdensity(x.at_fine(i), x.at_fine(i - 1), grid.fine_time(i - 1), theta)
            .ok_or_else(|| {
                Error::invalid(
                    "model capability",
                    "complete_loglik needs a transition density, which this model does not provide",
                )
            })?;
        if lp == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += lp;
    }
    for j in 1..=grid.n() {
        let lf = model.obs_logdensity(y.at(j), x.at_sampling(grid, j), theta);
        if lf == f64::NEG_INFINITY {
            return Ok(f64::NEG_INFINITY);
        }
        total += lf;
    }
    Ok(total)
}

/// Simulate a complete dataset: a latent path over the fine grid from the
/// initial law, plus observations drawn at sampling times only.
pub fn simulate_dataset<Mo>(
    model: &Mo,
    theta: &ParameterVector,
    rng: &mut Rng,
) -> (LatentPath, ObservationSeries)
where
    Mo: StateSpaceModel + ?Sized,
{
    let grid = model.grid();
    let dx = model.state_dim();
    let dy = model.obs_dim();
    let n_fine = grid.n_fine();

    let mut x0 = vec![0.0; dx];
    model.sample_initial(&mut x0, rng);

    let mut values = vec![0.0; n_fine * dx];
    let mut cur = x0.clone();
    let mut next = vec![0.0; dx];
    for i in 1..=n_fine {
        model.simulate_transition(
            &cur,
            &mut next,
            grid.fine_time(i - 1),
            grid.fine_time(i),
            theta,
            rng,
        );
        values[(i - 1) * dx..i * dx].copy_from_slice(&next);
        std::mem::swap(&mut cur, &mut next);
    }
    let path = LatentPath::new(x0, values, dx).expect("dimensions are consistent by construction");

    let mut obs = vec![0.0; grid.n() * dy];
    for j in 1..=grid.n() {
        let mut buf = vec![0.0; dy];
        model.simulate_obs(path.at_sampling(grid, j), &mut buf, theta, rng);
        obs[(j - 1) * dy..j * dy].copy_from_slice(&buf);
    }
    let y = ObservationSeries::new(obs, dy).expect("dimensions are consistent by construction");
    (path, y)
}
