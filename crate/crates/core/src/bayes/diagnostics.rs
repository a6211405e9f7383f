//! Chain convergence diagnostics.

/// Gelman-Rubin potential scale reduction factor over several chains of
/// equal length: R̂ = sqrt(V̂ / W) with the usual between/within variance
/// decomposition. Values near 1 indicate the chains mix over the same
/// distribution.
pub fn gelman_rubin(chains: &[Vec<f64>]) -> f64 {
    let m = chains.len();
    assert!(m >= 2, "need at least two chains");
    let n = chains[0].len();
    assert!(n >= 2, "chains too short");
    assert!(chains.iter().all(|c| c.len() == n), "chains must have equal length");

    let means: Vec<f64> = chains.iter().map(|c| crate::stats::mean(c)).collect();
    let grand = crate::stats::mean(&means);
    let b = n as f64 / (m as f64 - 1.0)
        * means.iter().map(|mu| (mu - grand) * (mu - grand)).sum::<f64>();
    let w = chains
        .iter()
        .map(|c| crate::stats::sample_variance(c))
        .sum::<f64>()
        / m as f64;
    let v_hat = (n as f64 - 1.0) / n as f64 * w + b / n as f64;
    (v_hat / w).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng as _;

    #[test]
    fn identical_distributions_give_rhat_near_one() {
        let mut rng = crate::rng::rng_from_seed(55);
        let chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..4000).map(|_| rng.random::<f64>()).collect())
            .collect();
        let r = gelman_rubin(&chains);
        assert!(r < 1.02, "rhat = {r}");
    }

    #[test]
    fn shifted_chains_give_large_rhat() {
        let mut rng = crate::rng::rng_from_seed(56);
        let mut chains: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..2000).map(|_| rng.random::<f64>()).collect())
            .collect();
        for v in chains[0].iter_mut() {
            *v += 10.0;
        }
        assert!(gelman_rubin(&chains) > 2.0);
    }
}
