//! Metropolis-within-Gibbs for scalar additive-noise state-space models
//! with a non-centered latent parametrization.
//!
//! The target is π(X, σ_x, σ_y | Y) for X_j = g(X_{j-1}) + σ_x·ξ_j,
//! Y_j = X_j + σ_y·ν_j with X_0 known. A sweep updates:
//!
//! 1. the latent block X by a blind forward proposal accepted against the
//!    observation likelihood ratio (the prior/proposal factors cancel);
//! 2. σ_x given the rescaled latent path X* = X/σ_x (the non-centered
//!    parametrization: the (1/σ_x)ⁿ normalizer cancels against the
//!    transform Jacobian, breaking the scale coupling);
//! 3. σ_y given the current path;
//!
//! then maps back X := σ_x·X*. σ updates use log-scale random walks with
//! Robbins-Monro step adaptation, frozen halfway through the run.

use std::io::Write;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::bayes::prior::PriorSpec;
use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::series::ObservationSeries;
use crate::stats::normal_logpdf;

/// Scalar state-space target for the Gibbs sampler: a transition mean map
/// g(·) plus additive Gaussian noise on state and observation.
#[derive(Clone)]
pub struct GibbsTarget {
    mean_map: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    x0: f64,
    n: usize,
}

impl GibbsTarget {
    pub fn new(mean_map: Arc<dyn Fn(f64) -> f64 + Send + Sync>, x0: f64, n: usize) -> Self {
        GibbsTarget { mean_map, x0, n }
    }

    /// The nonlinear Gaussian case-study map 2·sin(exp(x)), X_0 = 0.
    pub fn nonlinear_gaussian(n: usize) -> Self {
        GibbsTarget::new(Arc::new(crate::models::state_map), 0.0, n)
    }

    /// Linear map a·x, X_0 = 0.
    pub fn linear(a: f64, n: usize) -> Self {
        GibbsTarget::new(Arc::new(move |x| a * x), 0.0, n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    fn g(&self, x: f64) -> f64 {
        (self.mean_map)(x)
    }
}

/// Which full conditional to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Conditional {
    SigmaX,
    SigmaY,
    XBlock,
}

/// Log of the named full conditional, up to the additive constants dropped
/// by proportionality. Priors enter the σ conditionals only.
pub fn conditional_logdensity(
    target: &GibbsTarget,
    which: Conditional,
    y: &ObservationSeries,
    x: &[f64],
    sigma_x: f64,
    sigma_y: f64,
    priors: &PriorSpec,
) -> Result<f64> {
    if x.len() != target.n || y.len() != target.n {
        return Err(Error::DimensionMismatch {
            what: "gibbs conditional inputs",
            expected: target.n,
            got: x.len(),
        });
    }
    let n = target.n;
    let mut trans = 0.0;
    let mut obs = 0.0;
    let mut prev = target.x0;
    for j in 0..n {
        let rx = x[j] - target.g(prev);
        trans += rx * rx;
        let ry = y.at(j + 1)[0] - x[j];
        obs += ry * ry;
        prev = x[j];
    }
    Ok(match which {
        Conditional::SigmaX => {
            -(n as f64) * sigma_x.ln() - trans / (2.0 * sigma_x * sigma_x)
                + priors.get(0).log_density(sigma_x)
        }
        Conditional::SigmaY => {
            -(n as f64) * sigma_y.ln() - obs / (2.0 * sigma_y * sigma_y)
                + priors.get(1).log_density(sigma_y)
        }
        Conditional::XBlock => {
            -(n as f64) * (sigma_x.ln() + sigma_y.ln())
                - obs / (2.0 * sigma_y * sigma_y)
                - trans / (2.0 * sigma_x * sigma_x)
        }
    })
}

/// Chain state between sweeps.
#[derive(Clone, Debug)]
pub struct ChainState {
    /// Latent path X_{1:n} on the natural (centered) scale.
    pub x: Vec<f64>,
    pub sigma_x: f64,
    pub sigma_y: f64,
    pub iteration: usize,
    /// Log-scale random-walk steps for the two σ sub-proposals.
    pub step_sigma_x: f64,
    pub step_sigma_y: f64,
    /// Acceptance flags of the last sweep: (X block, σ_x, σ_y).
    pub accepted: [bool; 3],
}

impl ChainState {
    pub fn init(target: &GibbsTarget, sigma_x: f64, sigma_y: f64, rng: &mut Rng) -> Self {
        let x = forward_path(target, sigma_x, rng);
        ChainState {
            x,
            sigma_x,
            sigma_y,
            iteration: 0,
            step_sigma_x: 0.2,
            step_sigma_y: 0.2,
            accepted: [false; 3],
        }
    }
}

fn forward_path(target: &GibbsTarget, sigma_x: f64, rng: &mut Rng) -> Vec<f64> {
    let mut x = Vec::with_capacity(target.n);
    let mut prev = target.x0;
    for _ in 0..target.n {
        let z: f64 = rng.sample(StandardNormal);
        let next = target.g(prev) + sigma_x * z;
        x.push(next);
        prev = next;
    }
    x
}

fn obs_loglik(y: &ObservationSeries, x: &[f64], sigma_y: f64) -> f64 {
    let var = sigma_y * sigma_y;
    x.iter()
        .enumerate()
        .map(|(j, &xj)| normal_logpdf(y.at(j + 1)[0], xj, var))
        .sum()
}

/// σ_x conditional under the non-centered parametrization, with the latent
/// coordinates X* held fixed: the normalizing (1/σ_x)ⁿ cancels against the
/// reparametrization Jacobian, leaving the two residual sums plus prior.
fn sigma_x_ncp_logdensity(
    target: &GibbsTarget,
    y: &ObservationSeries,
    x_star: &[f64],
    sigma_x: f64,
    sigma_y: f64,
    priors: &PriorSpec,
) -> f64 {
    let lp = priors.get(0).log_density(sigma_x);
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let mut trans = 0.0;
    let mut obs = 0.0;
    let mut prev = target.x0;
    for (j, &xs) in x_star.iter().enumerate() {
        let xj = sigma_x * xs;
        let rx = xj - target.g(prev);
        trans += rx * rx;
        let ry = y.at(j + 1)[0] - xj;
        obs += ry * ry;
        prev = xj;
    }
    lp - trans / (2.0 * sigma_x * sigma_x) - obs / (2.0 * sigma_y * sigma_y)
}

/// One full sweep of the three sub-steps; each is a detailed-balance-correct
/// Metropolis-Hastings update of its conditional.
pub fn metropolis_within_gibbs_step(
    target: &GibbsTarget,
    state: &ChainState,
    y: &ObservationSeries,
    priors: &PriorSpec,
    rng: &mut Rng,
) -> ChainState {
    let mut next = state.clone();
    next.iteration = state.iteration + 1;
    next.accepted = [false; 3];

    // (i) Latent block: blind forward proposal at the current parameters.
    // Proposal density equals the latent prior, so only the observation
    // likelihood ratio survives in the acceptance.
    let proposal = forward_path(target, next.sigma_x, rng);
    let log_alpha =
        obs_loglik(y, &proposal, next.sigma_y) - obs_loglik(y, &next.x, next.sigma_y);
    if rng.random::<f64>().ln() < log_alpha {
        next.x = proposal;
        next.accepted[0] = true;
    }

    // (ii) Rescale to the non-centered coordinates.
    let x_star: Vec<f64> = next.x.iter().map(|v| v / next.sigma_x).collect();

    // (iii) σ_x given X*, then σ_y given the path at the updated σ_x.
    {
        let cur = next.sigma_x;
        let prop = cur * (next.step_sigma_x * rng.sample::<f64, _>(StandardNormal)).exp();
        let la = sigma_x_ncp_logdensity(target, y, &x_star, prop, next.sigma_y, priors)
            - sigma_x_ncp_logdensity(target, y, &x_star, cur, next.sigma_y, priors)
            + (prop.ln() - cur.ln());
        if rng.random::<f64>().ln() < la {
            next.sigma_x = prop;
            next.accepted[1] = true;
        }
    }

    // (iv) Transform back with the updated σ_x.
    for (xj, xs) in next.x.iter_mut().zip(&x_star) {
        *xj = next.sigma_x * xs;
    }

    {
        let cur = next.sigma_y;
        let prop = cur * (next.step_sigma_y * rng.sample::<f64, _>(StandardNormal)).exp();
        let la = sigma_y_logdensity(y, &next.x, prop, priors)
            - sigma_y_logdensity(y, &next.x, cur, priors)
            + (prop.ln() - cur.ln());
        if rng.random::<f64>().ln() < la {
            next.sigma_y = prop;
            next.accepted[2] = true;
        }
    }

    next
}

fn sigma_y_logdensity(y: &ObservationSeries, x: &[f64], sigma_y: f64, priors: &PriorSpec) -> f64 {
    let lp = priors.get(1).log_density(sigma_y);
    if lp == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let n = x.len() as f64;
    let mut obs = 0.0;
    for (j, &xj) in x.iter().enumerate() {
        let r = y.at(j + 1)[0] - xj;
        obs += r * r;
    }
    lp - n * sigma_y.ln() - obs / (2.0 * sigma_y * sigma_y)
}

/// A recorded chain.
#[derive(Clone, Debug)]
pub struct GibbsChain {
    pub sigma_x: Vec<f64>,
    pub sigma_y: Vec<f64>,
    pub log_posterior: Vec<f64>,
    pub accepted: Vec<[bool; 3]>,
    pub final_state: ChainState,
}

/// Run `sweeps` full sweeps with Robbins-Monro adaptation of the σ proposal
/// steps toward `target_acceptance`, frozen after half the run.
pub fn run_gibbs(
    target: &GibbsTarget,
    y: &ObservationSeries,
    priors: &PriorSpec,
    sigma_x0: f64,
    sigma_y0: f64,
    sweeps: usize,
    target_acceptance: f64,
    rng: &mut Rng,
) -> Result<GibbsChain> {
    if y.len() != target.n {
        return Err(Error::DimensionMismatch {
            what: "gibbs observations",
            expected: target.n,
            got: y.len(),
        });
    }
    let mut state = ChainState::init(target, sigma_x0, sigma_y0, rng);
    let mut chain = GibbsChain {
        sigma_x: Vec::with_capacity(sweeps),
        sigma_y: Vec::with_capacity(sweeps),
        log_posterior: Vec::with_capacity(sweeps),
        accepted: Vec::with_capacity(sweeps),
        final_state: state.clone(),
    };
    let freeze_after = sweeps / 2;
    for k in 1..=sweeps {
        state = metropolis_within_gibbs_step(target, &state, y, priors, rng);
        if k <= freeze_after {
            let c = (k as f64).powf(-0.6);
            let up = |step: f64, accepted: bool| -> f64 {
                let a = if accepted { 1.0 } else { 0.0 };
                (step.ln() + c * (a - target_acceptance)).exp().clamp(1e-4, 10.0)
            };
            state.step_sigma_x = up(state.step_sigma_x, state.accepted[1]);
            state.step_sigma_y = up(state.step_sigma_y, state.accepted[2]);
        }
        chain.sigma_x.push(state.sigma_x);
        chain.sigma_y.push(state.sigma_y);
        chain.log_posterior.push(log_posterior(target, y, &state, priors));
        chain.accepted.push(state.accepted);
    }
    chain.final_state = state;
    Ok(chain)
}

/// Full joint log-posterior (with normalizers) at the current state.
fn log_posterior(
    target: &GibbsTarget,
    y: &ObservationSeries,
    state: &ChainState,
    priors: &PriorSpec,
) -> f64 {
    let vx = state.sigma_x * state.sigma_x;
    let vy = state.sigma_y * state.sigma_y;
    let mut lp = priors.get(0).log_density(state.sigma_x) + priors.get(1).log_density(state.sigma_y);
    let mut prev = target.x0;
    for (j, &xj) in state.x.iter().enumerate() {
        lp += normal_logpdf(xj, target.g(prev), vx);
        lp += normal_logpdf(y.at(j + 1)[0], xj, vy);
        prev = xj;
    }
    lp
}

/// Chain CSV: `iteration,sigma_x,sigma_y,log_posterior,accepted_x,accepted_sigma_x,accepted_sigma_y`.
pub fn write_gibbs_csv(chain: &GibbsChain, out: &mut dyn Write) -> std::io::Result<()> {
    writeln!(
        out,
        "iteration,sigma_x,sigma_y,log_posterior,accepted_x,accepted_sigma_x,accepted_sigma_y"
    )?;
    for i in 0..chain.sigma_x.len() {
        let a = chain.accepted[i];
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            i + 1,
            chain.sigma_x[i],
            chain.sigma_y[i],
            chain.log_posterior[i],
            u8::from(a[0]),
            u8::from(a[1]),
            u8::from(a[2]),
        )?;
    }
    Ok(())
}
