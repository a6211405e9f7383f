//! Pharmacokinetic SDE model for drug concentration after an oral dose:
//!
//! ```text
//! dX_t = (Dose·K_a·K_e/Cl · e^{-K_a t} − K_e·X_t) dt + σ·√X_t dW_t
//! Y_j  = X_j + ε_j,   ε_j ~ N(0, σ_ε²)
//! ```
//!
//! The transition has no closed form; simulation uses Euler–Maruyama on the
//! fine grid and the transition density is the Gaussian the scheme induces.
//! The diffusion √X is undefined below zero, so the diffusion argument is
//! clamped at max(x, 0) and the drift is left free to restore positivity.
//!
//! Complete-data estimation: the drift is linear in (K_e/Cl, K_e), so a
//! weighted linear regression on the fine-grid increments yields the
//! sufficient statistics; σ² and σ_ε² come from residual sums. Increments
//! whose left state is non-positive carry no usable information under the
//! Euler density and are excluded, with the valid-row count kept as part of
//! the statistic vector so the normalization stays consistent under
//! stochastic averaging.

use nalgebra::{DMatrix, DVector};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::model::{DerivativeScale, StateSpaceModel};
use crate::params::{ParamDef, ParameterVector};
use crate::rng::Rng;
use crate::series::{LatentPath, ObservationSeries};
use crate::stats::normal_logpdf;

pub const ABSORPTION_RATE: f64 = 1.492;
pub const DOSE: f64 = 4.0;
pub const INITIAL_CONCENTRATION: f64 = 8.0;

const VARIANCE_FLOOR: f64 = 1e-12;
const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug)]
pub struct TheophyllineModel {
    defaults: [f64; 4],
    grid: TimeGrid,
}

/// Index order of the parameter vector: (K_e, Cl, σ, σ_ε).
pub const IDX_KE: usize = 0;
pub const IDX_CL: usize = 1;
pub const IDX_SIGMA: usize = 2;
pub const IDX_SIGMA_EPS: usize = 3;

/// Statistic vector layout: (S_{σ_ε²}, S_{σ²}, β̂₁, β̂₂, valid rows).
pub const STAT_SEPS: usize = 0;
pub const STAT_S2: usize = 1;
pub const STAT_BETA1: usize = 2;
pub const STAT_BETA2: usize = 3;
pub const STAT_NVALID: usize = 4;

impl TheophyllineModel {
    /// Unit sampling interval from t0 = 0 with `substeps` Euler substeps
    /// per interval (h = 1/substeps).
    pub fn new(n: usize, substeps: usize) -> Result<Self> {
        Self::with_defaults(n, substeps, [0.05, 0.04, 0.1, 0.1])
    }

    pub fn with_defaults(n: usize, substeps: usize, defaults: [f64; 4]) -> Result<Self> {
        if defaults.iter().any(|&v| !(v > 0.0)) {
            return Err(Error::invalid("theophylline defaults", "all parameters must be positive"));
        }
        Ok(TheophyllineModel {
            defaults,
            grid: TimeGrid::new(0.0, 1.0, n, substeps)?,
        })
    }

    #[inline]
    fn drift(x: f64, t: f64, ke: f64, cl: f64) -> f64 {
        DOSE * ABSORPTION_RATE * ke / cl * (-ABSORPTION_RATE * t).exp() - ke * x
    }

    /// One Euler–Maruyama step from state `x` at time `tau` over step `h`.
    pub fn euler_step(x: f64, tau: f64, h: f64, ke: f64, cl: f64, sigma: f64, rng: &mut Rng) -> f64 {
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        x + Self::drift(x, tau, ke, cl) * h + sigma * (h * x.max(0.0)).sqrt() * z
    }

    fn theta_parts(theta: &ParameterVector) -> (f64, f64, f64, f64) {
        (
            theta.get(IDX_KE),
            theta.get(IDX_CL),
            theta.get(IDX_SIGMA),
            theta.get(IDX_SIGMA_EPS),
        )
    }
}

impl StateSpaceModel for TheophyllineModel {
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
            vec![
                ParamDef::positive("k_e"),
                ParamDef::positive("cl"),
                ParamDef::positive("sigma"),
                ParamDef::positive("sigma_eps"),
            ],
            self.defaults.to_vec(),
        )
        .expect("defaults validated at construction")
    }

    fn sample_initial(&self, into: &mut [f64], _rng: &mut Rng) {
        into[0] = INITIAL_CONCENTRATION;
    }

    fn simulate_transition(
        &self,
        from: &[f64],
        into: &mut [f64],
        tau_prev: f64,
        tau_next: f64,
        theta: &ParameterVector,
        rng: &mut Rng,
    ) {
        let (ke, cl, sigma, _) = Self::theta_parts(theta);
        into[0] = Self::euler_step(from[0], tau_prev, tau_next - tau_prev, ke, cl, sigma, rng);
    }

    /// Gaussian density induced by one Euler–Maruyama step: mean is the
    /// drift-advanced state, variance σ²·x_{i-1}·h. Undefined left states
    /// (x_{i-1} ≤ 0) return -inf.
    fn transition_logdensity(
        &self,
        to: &[f64],
        from: &[f64],
        tau_prev: f64,
        theta: &ParameterVector,
    ) -> Option<f64> {
        let (ke, cl, sigma, _) = Self::theta_parts(theta);
        let x = from[0];
        if x <= 0.0 {
            log::warn!("euler transition density undefined at x = {x} (t = {tau_prev})");
            return Some(f64::NEG_INFINITY);
        }
        let h = self.grid.h();
        let mean = x + Self::drift(x, tau_prev, ke, cl) * h;
        Some(normal_logpdf(to[0], mean, sigma * sigma * x * h))
    }

    fn obs_logdensity(&self, y: &[f64], x: &[f64], theta: &ParameterVector) -> f64 {
        let se = theta.get(IDX_SIGMA_EPS);
        normal_logpdf(y[0], x[0], se * se)
    }

    fn simulate_obs(&self, x: &[f64], into: &mut [f64], theta: &ParameterVector, rng: &mut Rng) {
        let se = theta.get(IDX_SIGMA_EPS);
        let z: f64 = rand::Rng::sample(rng, StandardNormal);
        into[0] = x[0] + se * z;
    }

    fn stat_dim(&self) -> usize {
        5
    }

    /// Weighted-regression statistics over the fine grid.
    ///
    /// Responses V_i = (x_i − x_{i-1})/√x_{i-1} regress on
    /// C_{i1} = Dose·K_a·e^{-K_a τ_{i-1}}·h/√x_{i-1} and C_{i2} = −√x_{i-1}·h,
    /// giving β̂ = (K_e/Cl, K_e). S_{σ²} is the weighted residual sum at β̂
    /// divided by h, and S_{σ_ε²} = Σ_j (y_j − x_j)² at sampling times.
    /// Solved by orthogonal (QR) decomposition, not the normal equations.
    fn sufficient_stats(&self, y: &ObservationSeries, x: &LatentPath) -> Result<Vec<f64>> {
        y.check_grid(&self.grid)?;
        x.check_grid(&self.grid)?;
        let h = self.grid.h();
        let n_fine = self.grid.n_fine();

        let mut v = Vec::with_capacity(n_fine);
        let mut c1 = Vec::with_capacity(n_fine);
        let mut c2 = Vec::with_capacity(n_fine);
        let mut skipped = 0usize;
        for i in 1..=n_fine {
            let prev = x.at_fine(i - 1)[0];
            if prev <= 0.0 {
                skipped += 1;
                continue;
            }
            let sqrt_prev = prev.sqrt();
            let tau = self.grid.fine_time(i - 1);
            v.push((x.at_fine(i)[0] - prev) / sqrt_prev);
            c1.push(DOSE * ABSORPTION_RATE * (-ABSORPTION_RATE * tau).exp() * h / sqrt_prev);
            c2.push(-sqrt_prev * h);
        }
        if skipped > 0 {
            log::warn!("{skipped} fine-grid increments with non-positive left state excluded from statistics");
        }
        let n_valid = v.len();
        if n_valid < 2 {
            return Err(Error::invalid(
                "latent path",
                "fewer than two positive-state increments; statistics undefined",
            ));
        }

        let (beta1, beta2) = qr_two_column(&c1, &c2, &v)?;

        let mut rss = 0.0;
        for i in 0..n_valid {
            let r = v[i] - beta1 * c1[i] - beta2 * c2[i];
            rss += r * r;
        }
        let s_sigma2 = rss / h;

        let mut s_eps = 0.0;
        for j in 1..=self.grid.n() {
            let e = y.at(j)[0] - x.at_sampling(&self.grid, j)[0];
            s_eps += e * e;
        }

        Ok(vec![s_eps, s_sigma2, beta1, beta2, n_valid as f64])
    }

    /// K_e = β̂₂, Cl = β̂₂/β̂₁, σ = √(S_{σ²}/N), σ_ε = √(S_{σ_ε²}/n).
    ///
    /// Non-positive β̂ components leave (K_e, Cl) out of domain: the error
    /// carries the variance updates so the caller can keep its previous
    /// (K_e, Cl) and still advance the noise parameters.
    fn mstep(&self, s: &[f64]) -> Result<ParameterVector> {
        let (s_eps, s2, beta1, beta2, n_valid) =
            (s[STAT_SEPS], s[STAT_S2], s[STAT_BETA1], s[STAT_BETA2], s[STAT_NVALID]);
        if s_eps < 0.0 {
            return Err(Error::NegativeStatistic { name: "S_sigma_eps2", value: s_eps });
        }
        if s2 < 0.0 {
            return Err(Error::NegativeStatistic { name: "S_sigma2", value: s2 });
        }
        let n = self.grid.n() as f64;
        let var_eps = (s_eps / n).max(VARIANCE_FLOOR);
        let var_sigma = (s2 / n_valid.max(1.0)).max(VARIANCE_FLOOR);
        if s_eps / n < VARIANCE_FLOOR || s2 / n_valid.max(1.0) < VARIANCE_FLOOR {
            log::warn!("variance statistic clamped at {VARIANCE_FLOOR}");
        }

        let sigma = var_sigma.sqrt();
        let sigma_eps = var_eps.sqrt();

        if !(beta1 > 0.0) || !(beta2 > 0.0) {
            let partial = self
                .param_template()
                .with_value(IDX_SIGMA, sigma)?
                .with_value(IDX_SIGMA_EPS, sigma_eps)?;
            return Err(Error::MStepOutOfDomain {
                partial,
                invalid: vec![IDX_KE, IDX_CL],
                why: format!("regression coefficients out of domain: beta = ({beta1}, {beta2})"),
            });
        }

        self.param_template()
            .with_value(IDX_KE, beta2)?
            .with_value(IDX_CL, beta2 / beta1)?
            .with_value(IDX_SIGMA, sigma)?
            .with_value(IDX_SIGMA_EPS, sigma_eps)
    }

    /// Complete-likelihood derivatives in (K_e, Cl, σ², σ_ε²).
    ///
    /// Cross terms between σ_ε² and the transition parameters are exactly
    /// zero; increments with non-positive left states are excluded, matching
    /// the statistic definition.
    fn complete_derivatives(
        &self,
        y: &ObservationSeries,
        x: &LatentPath,
        theta: &ParameterVector,
    ) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (ke, cl, sigma, sigma_eps) = Self::theta_parts(theta);
        let h = self.grid.h();
        let s2 = sigma * sigma;
        let se2 = sigma_eps * sigma_eps;
        let n_fine = self.grid.n_fine();

        // Transition-block sums over valid increments.
        let mut n_valid = 0.0f64;
        let mut g_ke = 0.0;
        let mut g_cl = 0.0;
        let mut sum_z2_over_x = 0.0;
        let mut h_keke = 0.0;
        let mut h_clcl = 0.0;
        let mut h_kecl = 0.0;
        let mut h_s2ke = 0.0;
        let mut h_s2cl = 0.0;
        for i in 1..=n_fine {
            let xp = x.at_fine(i - 1)[0];
            if xp <= 0.0 {
                continue;
            }
            n_valid += 1.0;
            let tau = self.grid.fine_time(i - 1);
            let a = DOSE * ABSORPTION_RATE / cl * (-ABSORPTION_RATE * tau).exp();
            let b = ke * a / cl;
            let z = x.at_fine(i)[0] - xp - h * (ke * a - ke * xp);
            let xm_a = xp - a;
            g_ke += z / xp * xm_a;
            g_cl += z / xp * b;
            sum_z2_over_x += z * z / xp;
            h_keke += xm_a * xm_a / xp;
            h_clcl += b / xp * (h * b - 2.0 * z / cl);
            h_kecl += (a / cl) / xp * (h * ke * xm_a + z);
            h_s2ke += z / xp * xm_a;
            h_s2cl += z / xp * b;
        }

        let mut s_eps = 0.0;
        for j in 1..=self.grid.n() {
            let e = y.at(j)[0] - x.at_sampling(&self.grid, j)[0];
            s_eps += e * e;
        }
        let n_obs = self.grid.n() as f64;

        let grad = DVector::from_vec(vec![
            -g_ke / s2,
            -g_cl / s2,
            -n_valid / (2.0 * s2) + sum_z2_over_x / (2.0 * h * s2 * s2),
            -n_obs / (2.0 * se2) + s_eps / (2.0 * se2 * se2),
        ]);

        let mut hess = DMatrix::zeros(4, 4);
        hess[(0, 0)] = -h / s2 * h_keke;
        hess[(1, 1)] = -h_clcl / s2;
        hess[(0, 1)] = -h_kecl / s2;
        hess[(1, 0)] = hess[(0, 1)];
        hess[(2, 2)] = n_valid / (2.0 * s2 * s2) - sum_z2_over_x / (h * s2 * s2 * s2);
        hess[(3, 3)] = n_obs / (2.0 * se2 * se2) - s_eps / (se2 * se2 * se2);
        hess[(0, 2)] = h_s2ke / (s2 * s2);
        hess[(2, 0)] = hess[(0, 2)];
        hess[(1, 2)] = h_s2cl / (s2 * s2);
        hess[(2, 1)] = hess[(1, 2)];
        Some((grad, hess))
    }

    fn derivative_scales(&self) -> Vec<DerivativeScale> {
        vec![
            DerivativeScale::Natural,
            DerivativeScale::Natural,
            DerivativeScale::SquareOfNatural,
            DerivativeScale::SquareOfNatural,
        ]
    }
}

/// Least squares for a two-column design via modified Gram-Schmidt QR.
/// Errors when CᵀC is effectively singular (condition estimate > 1e12).
fn qr_two_column(c1: &[f64], c2: &[f64], v: &[f64]) -> Result<(f64, f64)> {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let g11 = dot(c1, c1);
    let g12 = dot(c1, c2);
    let g22 = dot(c2, c2);
    // 2x2 Gram-matrix condition estimate from its eigenvalues.
    let tr = g11 + g22;
    let disc = ((g11 - g22) * (g11 - g22) + 4.0 * g12 * g12).sqrt();
    let lmax = 0.5 * (tr + disc);
    let lmin = 0.5 * (tr - disc);
    if !(lmin > 0.0) || lmax / lmin > MAX_CONDITION {
        return Err(Error::SingularRegression {
            cond: if lmin > 0.0 { lmax / lmin } else { f64::INFINITY },
        });
    }

    let r11 = g11.sqrt();
    let q1: Vec<f64> = c1.iter().map(|x| x / r11).collect();
    let r12 = dot(&q1, c2);
    let q2t: Vec<f64> = c2.iter().zip(&q1).map(|(x, q)| x - r12 * q).collect();
    let r22 = dot(&q2t, &q2t).sqrt();
    let beta2 = dot(&q2t, v) / (r22 * r22);
    let beta1 = (dot(&q1, v) - r12 * beta2) / r11;
    Ok((beta1, beta2))
}
