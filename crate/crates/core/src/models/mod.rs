//! The example models: a nonlinear Gaussian map, a pharmacokinetic SDE
//! integrated by Euler-Maruyama, and a linear Gaussian fixture whose exact
//! Kalman likelihood anchors the filter oracle tests.

mod linear_gaussian;
mod nonlinear_gaussian;
mod theophylline;

pub use linear_gaussian::LinearGaussianModel;
pub use nonlinear_gaussian::{state_map, NonlinearGaussianModel};
pub use theophylline::{
    TheophyllineModel, ABSORPTION_RATE, DOSE, IDX_CL, IDX_KE, IDX_SIGMA, IDX_SIGMA_EPS,
    INITIAL_CONCENTRATION, STAT_BETA1, STAT_BETA2, STAT_NVALID, STAT_S2, STAT_SEPS,
};
