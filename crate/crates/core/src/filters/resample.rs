//! Effective sample size and stratified resampling.

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

const NORMALIZATION_TOL: f64 = 1e-8;

/// Effective sample size 1/Σ w², in [1, M] for normalized weights.
pub fn ess(normalized_weights: &[f64]) -> Result<f64> {
    if normalized_weights.is_empty() {
        return Err(Error::invalid("weights", "empty weight vector"));
    }
    let sum: f64 = normalized_weights.iter().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::invalid(
            "weights",
            format!("not normalized: sum = {sum}"),
        ));
    }
    Ok(ess_unchecked(normalized_weights))
}

#[inline]
pub(crate) fn ess_unchecked(normalized_weights: &[f64]) -> f64 {
    1.0 / normalized_weights.iter().map(|w| w * w).sum::<f64>()
}

/// Stratified resampling: index m is selected with expected count M·w_m,
/// using one uniform draw per stratum ((m-1)/M, m/M].
pub fn stratified_resample(normalized_weights: &[f64], rng: &mut Rng) -> Vec<usize> {
    let m = normalized_weights.len();
    let mut out = Vec::with_capacity(m);
    let mut idx = 0usize;
    let mut cum = normalized_weights[0];
    for k in 0..m {
        let u = (k as f64 + rng.random::<f64>()) / m as f64;
        while u > cum && idx + 1 < m {
            idx += 1;
            cum += normalized_weights[idx];
        }
        out.push(idx);
    }
    out
}

/// Count distinct states among `M` flat state vectors of width `dim`,
/// optionally restricted to a selection of indices. Equality is exact
/// (bitwise), matching how resampling duplicates particles.
pub(crate) fn distinct_count(states: &[f64], dim: usize, select: Option<&[u32]>) -> usize {
    let m = states.len() / dim;
    if dim == 1 {
        let mut keys: Vec<u64> = match select {
            Some(sel) => sel.iter().map(|&i| states[i as usize].to_bits()).collect(),
            None => states.iter().map(|x| x.to_bits()).collect(),
        };
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    } else {
        let key = |i: usize| -> Vec<u64> {
            states[i * dim..(i + 1) * dim]
                .iter()
                .map(|x| x.to_bits())
                .collect()
        };
        let mut keys: Vec<Vec<u64>> = match select {
            Some(sel) => sel.iter().map(|&i| key(i as usize)).collect(),
            None => (0..m).map(key).collect(),
        };
        keys.sort_unstable();
        keys.dedup();
        keys.len()
    }
}
