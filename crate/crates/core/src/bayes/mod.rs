//! Bayesian comparison baselines: Metropolis-within-Gibbs with a
//! non-centered latent parametrization, and pseudo-marginal
//! Metropolis-Hastings on the bootstrap-filter likelihood estimate.

pub mod diagnostics;
pub mod gibbs;
pub mod pmm;
pub mod prior;

pub use diagnostics::gelman_rubin;
pub use gibbs::{
    conditional_logdensity, metropolis_within_gibbs_step, run_gibbs, write_gibbs_csv, ChainState,
    Conditional, GibbsChain, GibbsTarget,
};
pub use pmm::{pmm_run, pmm_run_with_estimator, write_pmm_csv, PmmChain, PmmOptions};
pub use prior::{Prior, PriorSpec};
