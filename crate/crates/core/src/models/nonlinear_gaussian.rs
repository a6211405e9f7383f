//! Nonlinear Gaussian state-space model:
//!
//! ```text
//! X_j = 2·sin(exp(X_{j-1})) + σ_x·ξ_j      X_0 = 0
//! Y_j = X_j + σ_y·ν_j
//! ```
//!
//! Both complete-data sufficient statistics are residual sums of squares,
//! so the M-step is a pair of variance updates in closed form. The
//! complete-likelihood derivatives are taken in (σ_x², σ_y²).

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{DerivativeScale, StateSpaceModel};
use crate::params::{ParamDef, ParameterVector};
use crate::rng::Rng;
use crate::series::{LatentPath, ObservationSeries};
use crate::stats::normal_logpdf;

const VARIANCE_FLOOR: f64 = 1e-12;

/// The state map 2·sin(exp(x)).
#[inline]
pub fn state_map(x: f64) -> f64 {
    2.0 * x.exp().sin()
}

#[derive(Clone, Debug)]
pub struct NonlinearGaussianModel {
    defaults: [f64; 2],
    grid: TimeGrid,
}

impl NonlinearGaussianModel {
    /// Parameters are (σ_x, σ_y) on the natural scale; X0 = 0 is fixed and
    /// the sampling grid is unit-spaced with no sub-stepping.
    pub fn new(sigma_x: f64, sigma_y: f64, n: usize) -> Result<Self> {
        if !(sigma_x > 0.0 && sigma_y > 0.0) {
            return Err(Error::invalid("sigma", "noise scales must be positive"));
        }
        Ok(NonlinearGaussianModel {
            defaults: [sigma_x, sigma_y],
            grid: TimeGrid::new(0.0, 1.0, n, 1)?,
        })
    }

    /// Residual sums (S_{σ_x²}, S_{σ_y²}) with X_0 = 0 prepended.
    pub fn residual_sums(&self, y: &ObservationSeries, x: &LatentPath) -> Result<(f64, f64)> {
        y.check_grid(&self.grid)?;
        x.check_grid(&self.grid)?;
        let n = self.grid.n();
        let mut s_x = 0.0;
        let mut s_y = 0.0;
        for j in 1..=n {
            let prev = x.at_fine(j - 1)[0];
            let cur = x.at_fine(j)[0];
            let rx = cur - state_map(prev);
            s_x += rx * rx;
            let ry = y.at(j)[0] - cur;
            s_y += ry * ry;
        }
        Ok((s_x, s_y))
    }
}

fn sigmas(theta: &ParameterVector) -> (f64, f64) {
    (theta.get(0), theta.get(1))
}

impl StateSpaceModel for NonlinearGaussianModel {
    fn state_dim(&self) -> usize {
        1
    }

    fn obs_dim(&self) -> usize {
        1
    }

    fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    fn param_template(&self) -> ParameterVector {
        ParameterVector::new(
            vec![ParamDef::positive("sigma_x"), ParamDef::positive("sigma_y")],
            self.defaults.to_vec(),
        )
        .expect("defaults validated at construction")
    }

    fn sample_initial(&self, into: &mut [f64], _rng: &mut Rng) {
        into[0] = 0.0;
    }

    fn simulate_transition(
        &self,
        from: &[f64],
        into: &mut [f64],
        _tau_prev: f64,
        _tau_next: f64,
        theta: &ParameterVector,
        rng: &mut Rng,
    ) {
        let (sx, _) = sigmas(theta);
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        into[0] = state_map(from[0]) + sx * z;
    }

    fn transition_logdensity(
        &self,
        to: &[f64],
        from: &[f64],
        _tau_prev: f64,
        theta: &ParameterVector,
    ) -> Option<f64> {
        let (sx, _) = sigmas(theta);
        Some(normal_logpdf(to[0], state_map(from[0]), sx * sx))
    }

    fn obs_logdensity(&self, y: &[f64], x: &[f64], theta: &ParameterVector) -> f64 {
        let (_, sy) = sigmas(theta);
        normal_logpdf(y[0], x[0], sy * sy)
    }

    fn simulate_obs(&self, x: &[f64], into: &mut [f64], theta: &ParameterVector, rng: &mut Rng) {
        let (_, sy) = sigmas(theta);
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        into[0] = x[0] + sy * z;
    }

    fn stat_dim(&self) -> usize {
        2
    }

    fn sufficient_stats(&self, y: &ObservationSeries, x: &LatentPath) -> Result<Vec<f64>> {
        let (s_x, s_y) = self.residual_sums(y, x)?;
        Ok(vec![s_x, s_y])
    }

    /// Variance updates S/n, clamped below at 1e-12 so a degenerate path
    /// early in warmup cannot zero a residual sum and kill the run.
    fn mstep(&self, s: &[f64]) -> Result<ParameterVector> {
        if s[0] < 0.0 {
            return Err(Error::NegativeStatistic { name: "S_sigma_x2", value: s[0] });
        }
        if s[1] < 0.0 {
            return Err(Error::NegativeStatistic { name: "S_sigma_y2", value: s[1] });
        }
        let n = self.grid.n() as f64;
        let var_x = s[0] / n;
        let var_y = s[1] / n;
        if var_x < VARIANCE_FLOOR || var_y < VARIANCE_FLOOR {
            log::warn!("variance statistic clamped at {VARIANCE_FLOOR} (S/n = {var_x}, {var_y})");
        }
        self.param_template()
            .with_value(0, var_x.max(VARIANCE_FLOOR).sqrt())?
            .with_value(1, var_y.max(VARIANCE_FLOOR).sqrt())
    }

    fn complete_derivatives(
        &self,
        y: &ObservationSeries,
        x: &LatentPath,
        theta: &ParameterVector,
    ) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (s_x, s_y) = self.residual_sums(y, x).ok()?;
        let n = self.grid.n() as f64;
        let (sx, sy) = sigmas(theta);
        let (vx, vy) = (sx * sx, sy * sy);

        let grad = DVector::from_vec(vec![
            -n / (2.0 * vx) + s_x / (2.0 * vx * vx),
            -n / (2.0 * vy) + s_y / (2.0 * vy * vy),
        ]);
        let mut hess = DMatrix::zeros(2, 2);
        hess[(0, 0)] = n / (2.0 * vx * vx) - s_x / (vx * vx * vx);
        hess[(1, 1)] = n / (2.0 * vy * vy) - s_y / (vy * vy * vy);
        Some((grad, hess))
    }

    fn derivative_scales(&self) -> Vec<DerivativeScale> {
        vec![DerivativeScale::SquareOfNatural, DerivativeScale::SquareOfNatural]
    }
}
