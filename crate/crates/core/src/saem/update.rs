//! Stochastic-approximation updates and the online information recursion.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// s' = s + γ·(S_c − s). During warmup (γ = 1) this is exact replacement,
/// implemented literally so the replacement property holds bit-for-bit.
pub fn sa_update(s_prev: &[f64], stat: &[f64], gamma: f64) -> Result<Vec<f64>> {
    if s_prev.len() != stat.len() {
        return Err(Error::DimensionMismatch {
            what: "sa_update statistic",
            expected: s_prev.len(),
            got: stat.len(),
        });
    }
    if !(gamma > 0.0 && gamma <= 1.0) {
        return Err(Error::invalid("gamma", format!("must be in (0, 1], got {gamma}")));
    }
    if gamma == 1.0 {
        return Ok(stat.to_vec());
    }
    Ok(s_prev
        .iter()
        .zip(stat)
        .map(|(s, c)| s + gamma * (c - s))
        .collect())
}

/// Accumulators for the missing-information recursion.
#[derive(Clone, Debug)]
pub struct FisherAccumulators {
    pub g: DVector<f64>,
    pub h: DMatrix<f64>,
    pub f: DMatrix<f64>,
}

impl FisherAccumulators {
    pub fn zeros(dim: usize) -> Self {
        FisherAccumulators {
            g: DVector::zeros(dim),
            h: DMatrix::zeros(dim, dim),
            f: DMatrix::zeros(dim, dim),
        }
    }
}

/// One recursion step:
///
/// ```text
/// G' = G + γ·(grad − G)
/// H' = H + γ·(hess + grad·gradᵀ − H)
/// F' = H' − G'·G'ᵀ
/// ```
///
/// `F'` is symmetrized after the update; inputs must be finite.
pub fn fisher_update(
    acc: &FisherAccumulators,
    grad: &DVector<f64>,
    hess: &DMatrix<f64>,
    gamma: f64,
) -> Result<FisherAccumulators> {
    let d = acc.g.len();
    if grad.len() != d || hess.nrows() != d || hess.ncols() != d {
        return Err(Error::DimensionMismatch {
            what: "fisher_update derivatives",
            expected: d,
            got: grad.len(),
        });
    }
    for (i, v) in grad.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::invalid("fisher gradient", format!("grad[{i}] = {v}")));
        }
    }
    for i in 0..d {
        for j in 0..d {
            let v = hess[(i, j)];
            if !v.is_finite() {
                return Err(Error::invalid("fisher hessian", format!("hess[{i}][{j}] = {v}")));
            }
        }
    }

    let g = &acc.g + gamma * (grad - &acc.g);
    let mut h = &acc.h + gamma * (hess + grad * grad.transpose() - &acc.h);
    h = 0.5 * (&h + h.transpose());
    let mut f = &h - &g * g.transpose();
    f = 0.5 * (&f + f.transpose());
    Ok(FisherAccumulators { g, h, f })
}

/// Standard errors from the information approximation `F ≈ ∂²ℓ`.
///
/// `F` approximates the second derivative of the log-likelihood, which is
/// negative definite at a maximum, so −F is inverted. When −F is not
/// positive definite the result is a NaN vector with the indefiniteness
/// flagged rather than a hard failure.
#[derive(Clone, Debug)]
pub struct StandardErrors {
    /// sqrt of the diagonal of (−F)⁻¹, on the derivative scale.
    pub values: Vec<f64>,
    /// Whether −F was positive definite.
    pub information_definite: bool,
}

pub fn standard_errors(f: &DMatrix<f64>) -> StandardErrors {
    let d = f.nrows();
    let neg = -f.clone();
    match Cholesky::new(neg) {
        Some(chol) => {
            let inv = chol.inverse();
            StandardErrors {
                values: (0..d).map(|i| inv[(i, i)].sqrt()).collect(),
                information_definite: true,
            }
        }
        None => {
            log::warn!("information matrix is not negative definite; standard errors unavailable");
            StandardErrors {
                values: vec![f64::NAN; d],
                information_definite: false,
            }
        }
    }
}
