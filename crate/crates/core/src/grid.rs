//! Observation-time grids with sub-stepping for numerical integration.

use crate::error::{Error, Result};

/// Equispaced sampling times `t_j = t0 + j·Δ` (j = 1..n) refined by `R`
/// substeps per interval, `h = Δ/R`.
///
/// The fine grid `τ_0..τ_N` (N = n·R) is built by index arithmetic: at
/// indices divisible by `R` the value is computed with the sampling-time
/// formula itself, so every sampling time is a fine-grid member bitwise,
/// never by floating accumulation or interpolation.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    delta: f64,
    n: usize,
    substeps: usize,
    fine_times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(t0: f64, delta: f64, n: usize, substeps: usize) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
        }
        if n == 0 {
            return Err(Error::invalid("n", "need at least one sampling time"));
        }
        if substeps == 0 {
            return Err(Error::invalid("substeps", "must be a positive integer"));
        }
        let r = substeps;
        let h = delta / r as f64;
        let total = n * r;
        let mut fine_times = Vec::with_capacity(total + 1);
        for i in 0..=total {
            let t = if i % r == 0 {
                t0 + (i / r) as f64 * delta
            } else {
                t0 + i as f64 * h
            };
            fine_times.push(t);
        }
        for w in fine_times.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::invalid(
                    "grid",
                    format!("fine times not strictly increasing near t = {}", w[0]),
                ));
            }
        }
        Ok(TimeGrid {
            t0,
            delta,
            n,
            substeps,
            fine_times,
        })
    }

    /// Number of sampling times (excluding t0).
    pub fn n(&self) -> usize {
        self.n
    }

    /// Substeps per sampling interval (R).
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// Number of fine intervals N = n·R; the fine grid has N+1 points.
    pub fn n_fine(&self) -> usize {
        self.n * self.substeps
    }

    /// Fine step h = Δ/R.
    pub fn h(&self) -> f64 {
        self.delta / self.substeps as f64
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Fine-grid times τ_0..τ_N, with τ_0 = t0.
    pub fn fine_times(&self) -> &[f64] {
        &self.fine_times
    }

    /// τ_i for i in 0..=N.
    pub fn fine_time(&self, i: usize) -> f64 {
        self.fine_times[i]
    }

    /// Sampling time t_j for j in 1..=n.
    pub fn sampling_time(&self, j: usize) -> f64 {
        debug_assert!((1..=self.n).contains(&j));
        self.fine_times[j * self.substeps]
    }

    /// Sampling times t_1..t_n.
    pub fn sampling_times(&self) -> Vec<f64> {
        (1..=self.n).map(|j| self.sampling_time(j)).collect()
    }

    /// Fine-grid index of sampling time t_j.
    pub fn fine_index_of_sampling(&self, j: usize) -> usize {
        j * self.substeps
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sampling_times_are_fine_grid_members_bitwise() {
        for r in [1usize, 2, 5, 20] {
            let g = TimeGrid::new(0.0, 0.1, 37, r).unwrap();
            for j in 1..=37 {
                let direct = 0.0 + j as f64 * 0.1;
                assert_eq!(g.sampling_time(j).to_bits(), direct.to_bits(), "R={r} j={j}");
            }
        }
    }

    #[test]
    fn r_equal_one_reduces_to_sampling_grid() {
        let g = TimeGrid::new(2.0, 0.5, 4, 1).unwrap();
        assert_eq!(g.n_fine(), 4);
        assert_eq!(g.fine_times(), &[2.0, 2.5, 3.0, 3.5, 4.0]);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(TimeGrid::new(0.0, 0.0, 5, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0, 1).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 5, 0).is_err());
    }
}
