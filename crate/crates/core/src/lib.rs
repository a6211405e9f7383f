//! Approximate maximum-likelihood estimation for state-space models.
//!
//! The estimator is a stochastic approximation EM whose simulation step is
//! served by a sequential Monte Carlo filter: either an ABC filter that
//! weights simulated pseudo-observations with a kernel under a decreasing
//! threshold schedule, or the classic bootstrap filter weighting by the
//! observation density. Genealogy tracing turns the filter output into one
//! latent path per iteration; closed-form M-steps and an online information
//! recursion finish each iteration.
//!
//! Also included: Bayesian baselines (Metropolis-within-Gibbs with a
//! non-centered latent parametrization, and pseudo-marginal
//! Metropolis-Hastings on the bootstrap likelihood estimate), the two
//! case-study models plus a linear Gaussian fixture with an exact Kalman
//! likelihood, and an experiment layer for replicated, seed-reproducible
//! runs driven by a JSON config.
//!
//! Particle loops are data-parallel (rayon) when the default `parallel`
//! feature is on; per-(time, particle) rng substreams keep results
//! bit-identical regardless of thread count or scheduling.

pub mod bayes;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod filters;
pub mod grid;
pub mod kernel;
pub mod model;
pub mod models;
pub mod params;
pub mod rng;
pub mod saem;
pub mod schedule;
pub mod series;
pub mod stats;

pub use error::{Error, Result};
