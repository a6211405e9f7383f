//! Small numerical helpers shared across the crate.

/// ln(2π)
pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Log-density of N(mean, var) at `x`. `var` must be positive.
#[inline]
pub fn normal_logpdf(x: f64, mean: f64, var: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + var.ln() + d * d / var)
}

/// log(Σ exp(v)) with max-subtraction; returns -inf for an all-(-inf) input.
pub fn logsumexp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Normalize log-weights in place into linear weights summing to one.
///
/// Returns `None` when every entry is -inf (no mass anywhere).
pub fn normalize_log_weights(log_w: &[f64], out: &mut [f64]) -> Option<f64> {
    debug_assert_eq!(log_w.len(), out.len());
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let mut sum = 0.0;
    for (o, &lw) in out.iter_mut().zip(log_w) {
        let w = (lw - max).exp();
        *o = w;
        sum += w;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
    Some(max + sum.ln())
}

/// Sample mean.
pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Unbiased sample variance (n-1 denominator).
pub fn sample_variance(values: &[f64]) -> f64 {
    let m = mean(values);
    values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() as f64 - 1.0)
}

/// Linear-interpolation quantile (the "type 7" rule): h = (n-1)p.
///
/// `values` need not be sorted; `p` in [0, 1].
pub fn quantile_type7(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of empty slice");
    assert!((0.0..=1.0).contains(&p), "quantile level outside [0,1]");
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let h = (sorted.len() as f64 - 1.0) * p;
    let lo = h.floor() as usize;
    if lo + 1 >= sorted.len() {
        return sorted[sorted.len() - 1];
    }
    let frac = h - lo as f64;
    sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
}

/// Median via the same interpolation rule.
pub fn median(values: &[f64]) -> f64 {
    quantile_type7(values, 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_logpdf_standard() {
        // N(0,1) at 0 is 1/sqrt(2π)
        assert_relative_eq!(normal_logpdf(0.0, 0.0, 1.0), -0.5 * LN_2PI, epsilon = 1e-15);
    }

    #[test]
    fn logsumexp_handles_extremes() {
        assert_relative_eq!(
            logsumexp(&[1000.0, 1000.0]),
            1000.0 + 2f64.ln(),
            epsilon = 1e-12
        );
        assert_eq!(logsumexp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
    }

    #[test]
    fn quantiles_match_documented_rule() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(median(&v), 3.0);
        assert_eq!(quantile_type7(&v, 0.25), 2.0);
        assert_eq!(quantile_type7(&v, 0.75), 4.0);
        let single = [7.5];
        assert_eq!(median(&single), 7.5);
        assert_eq!(quantile_type7(&single, 0.25), 7.5);
    }
}
