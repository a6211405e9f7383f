//! Observation series and latent paths on a time grid.

use crate::error::{Error, Result};
use crate::grid::TimeGrid;

/// Observations `Y_1..Y_n` at sampling times, stored flat (n × d_y).
#[derive(Clone, Debug, PartialEq)]
pub struct ObservationSeries {
    values: Vec<f64>,
    dim: usize,
}

impl ObservationSeries {
    pub fn new(values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("observation dim", "must be positive"));
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                what: "observation series",
                expected: dim,
                got: values.len(),
            });
        }
        Ok(ObservationSeries { values, dim })
    }

    /// Scalar series convenience constructor.
    pub fn scalar(values: Vec<f64>) -> Self {
        ObservationSeries { values, dim: 1 }
    }

    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Observation at sampling index j (1-based, matching t_j).
    pub fn at(&self, j: usize) -> &[f64] {
        debug_assert!(j >= 1);
        &self.values[(j - 1) * self.dim..j * self.dim]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.len() != grid.n() {
            return Err(Error::DimensionMismatch {
                what: "observation series vs grid",
                expected: grid.n(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// A latent path on the fine grid: `x0` at τ_0 plus N states at τ_1..τ_N,
/// stored flat (N × d_x).
#[derive(Clone, Debug, PartialEq)]
pub struct LatentPath {
    x0: Vec<f64>,
    values: Vec<f64>,
    dim: usize,
}

impl LatentPath {
    pub fn new(x0: Vec<f64>, values: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || x0.len() != dim {
            return Err(Error::DimensionMismatch {
                what: "latent path initial state",
                expected: dim,
                got: x0.len(),
            });
        }
        if values.len() % dim != 0 {
            return Err(Error::DimensionMismatch {
                what: "latent path values",
                expected: dim,
                got: values.len(),
            });
        }
        Ok(LatentPath { x0, values, dim })
    }

    pub fn scalar(x0: f64, values: Vec<f64>) -> Self {
        LatentPath {
            x0: vec![x0],
            values,
            dim: 1,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of fine-grid states after τ_0.
    pub fn len(&self) -> usize {
        self.values.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// State at fine index i; i = 0 returns the initial state.
    pub fn at_fine(&self, i: usize) -> &[f64] {
        if i == 0 {
            &self.x0
        } else {
            &self.values[(i - 1) * self.dim..i * self.dim]
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// State at sampling time t_j (exact subsampling; the grid guarantees
    /// alignment, so no interpolation happens anywhere).
    pub fn at_sampling<'a>(&'a self, grid: &TimeGrid, j: usize) -> &'a [f64] {
        self.at_fine(grid.fine_index_of_sampling(j))
    }

    /// The n states at sampling times, flattened.
    pub fn subsampled(&self, grid: &TimeGrid) -> Vec<f64> {
        let mut out = Vec::with_capacity(grid.n() * self.dim);
        for j in 1..=grid.n() {
            out.extend_from_slice(self.at_sampling(grid, j));
        }
        out
    }

    pub fn check_grid(&self, grid: &TimeGrid) -> Result<()> {
        if self.len() != grid.n_fine() {
            return Err(Error::DimensionMismatch {
                what: "latent path vs fine grid",
                expected: grid.n_fine(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn subsampled_view_is_exact_fine_grid_entry() {
        for r in [1usize, 2, 5, 20] {
            let grid = TimeGrid::new(0.0, 1.0, 6, r).unwrap();
            let n_fine = grid.n_fine();
            let values: Vec<f64> = (1..=n_fine).map(|i| i as f64 * 0.25).collect();
            let path = LatentPath::scalar(-1.0, values.clone());
            for j in 1..=6 {
                let idx = grid.fine_index_of_sampling(j);
                assert_eq!(path.at_sampling(&grid, j)[0].to_bits(), values[idx - 1].to_bits());
            }
            assert_eq!(path.at_fine(0), &[-1.0]);
        }
    }

    #[test]
    fn dimension_checks() {
        let grid = TimeGrid::new(0.0, 1.0, 3, 2).unwrap();
        let path = LatentPath::scalar(0.0, vec![1.0; 5]);
        assert!(path.check_grid(&grid).is_err());
        let ok = LatentPath::scalar(0.0, vec![1.0; 6]);
        assert!(ok.check_grid(&grid).is_ok());
    }
}
