//! Acceptance-rejection path sampling: simulate complete trajectories
//! blindly until the simulated observations land within δ of the data.
//!
//! Whole-trajectory acceptance becomes a rare event for small δ on long
//! series, which is exactly why the sequential ABC filter exists; this
//! sampler is kept as the simple baseline.

use crate::error::{Error, Result};
use crate::kernel::{Distance, Summary};
use crate::model::{simulate_dataset, StateSpaceModel};
use crate::params::ParameterVector;
use crate::rng::Rng;
use crate::series::{LatentPath, ObservationSeries};

/// Repeatedly simulate (X*, Y*) forward from the model until
/// ρ(η(Y*), η(Y)) ≤ δ; returns the accepted path.
#[allow(clippy::too_many_arguments)]
pub fn rejection_abc_path<Mo>(
    model: &Mo,
    y: &ObservationSeries,
    theta: &ParameterVector,
    delta: f64,
    distance: Distance,
    summary: Summary,
    max_attempts: usize,
    rng: &mut Rng,
) -> Result<LatentPath>
where
    Mo: StateSpaceModel + ?Sized,
{
    if max_attempts == 0 {
        return Err(Error::invalid("max_attempts", "must be at least 1"));
    }
    y.check_grid(model.grid())?;

    let mut best = f64::INFINITY;
    for _ in 0..max_attempts {
        let (path, y_star) = simulate_dataset(model, theta, rng);
        let d = distance.eval(summary.apply(y_star.values()), summary.apply(y.values()));
        if d <= delta {
            return Ok(path);
        }
        best = best.min(d);
    }
    Err(Error::AcceptanceFailure {
        attempts: max_attempts,
        best_distance: best,
    })
}
