//! Shared test oracles, deliberately independent of the library's
//! implementation paths: a derivative-free maximizer, central finite
//! differences, and composite quadrature.

#![allow(dead_code)]

/// Nelder-Mead maximization with restarts. Deterministic given the start.
pub fn nelder_mead_max<F>(f: F, start: &[f64], step: f64, rounds: usize) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut best = start.to_vec();
    let mut scale = step;
    for _ in 0..rounds {
        best = nm_once(&f, &best, scale);
        scale *= 0.1;
    }
    best
}

fn nm_once<F>(f: &F, start: &[f64], step: f64) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let dim = start.len();
    let neg = |x: &[f64]| -f(x);
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(dim + 1);
    simplex.push(start.to_vec());
    for i in 0..dim {
        let mut v = start.to_vec();
        v[i] += step;
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|v| neg(v)).collect();

    for _ in 0..2000 {
        let mut order: Vec<usize> = (0..=dim).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let best = order[0];
        let worst = order[dim];
        let second_worst = order[dim - 1];

        let spread = (values[worst] - values[best]).abs();
        let diameter: f64 = simplex
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[best])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if spread < 1e-14 && diameter < 1e-10 {
            break;
        }

        let mut centroid = vec![0.0; dim];
        for (i, v) in simplex.iter().enumerate() {
            if i != worst {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / dim as f64;
                }
            }
        }

        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&simplex[worst])
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = neg(&reflect);

        if fr < values[best] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = neg(&expand);
            if fe < fr {
                simplex[worst] = expand;
                values[worst] = fe;
            } else {
                simplex[worst] = reflect;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflect;
            values[worst] = fr;
        } else {
            let contract: Vec<f64> = centroid
                .iter()
                .zip(&simplex[worst])
                .map(|(c, w)| c + 0.5 * (w - c))
                .collect();
            let fc = neg(&contract);
            if fc < values[worst] {
                simplex[worst] = contract;
                values[worst] = fc;
            } else {
                let best_point = simplex[best].clone();
                for (i, v) in simplex.iter_mut().enumerate() {
                    if i != best {
                        for (x, b) in v.iter_mut().zip(&best_point) {
                            *x = b + 0.5 * (*x - b);
                        }
                    }
                }
                for (i, v) in simplex.iter().enumerate() {
                    values[i] = neg(v);
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..=dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    simplex[order[0]].clone()
}

/// Central-difference gradient.
pub fn central_gradient<F>(f: F, x: &[f64]) -> Vec<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let mut grad = vec![0.0; x.len()];
    for i in 0..x.len() {
        let h = 6e-6 * x[i].abs().max(1e-6);
        let mut hi = x.to_vec();
        hi[i] += h;
        let mut lo = x.to_vec();
        lo[i] -= h;
        grad[i] = (f(&hi) - f(&lo)) / (2.0 * h);
    }
    grad
}

/// Central differences of a vector-valued gradient function: one Hessian.
pub fn central_hessian<G>(grad: G, x: &[f64]) -> Vec<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    let d = x.len();
    let mut hess = vec![vec![0.0; d]; d];
    for j in 0..d {
        let h = 6e-6 * x[j].abs().max(1e-6);
        let mut hi = x.to_vec();
        hi[j] += h;
        let mut lo = x.to_vec();
        lo[j] -= h;
        let ghi = grad(&hi);
        let glo = grad(&lo);
        for i in 0..d {
            hess[i][j] = (ghi[i] - glo[i]) / (2.0 * h);
        }
    }
    hess
}

/// Composite Simpson quadrature over [a, b].
pub fn simpson<F>(f: F, a: f64, b: f64, intervals: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let n = if intervals % 2 == 0 { intervals } else { intervals + 1 };
    let h = (b - a) / n as f64;
    let mut sum = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        sum += w * f(a + i as f64 * h);
    }
    sum * h / 3.0
}

/// Relative error with an absolute floor for near-zero references.
pub fn rel_err(got: f64, expected: f64) -> f64 {
    (got - expected).abs() / expected.abs().max(1e-8)
}

/// Batch-means Monte Carlo standard error of a chain mean.
pub fn batch_means_se(chain: &[f64], batches: usize) -> f64 {
    let per = chain.len() / batches;
    let means: Vec<f64> = (0..batches)
        .map(|b| chain[b * per..(b + 1) * per].iter().sum::<f64>() / per as f64)
        .collect();
    let grand = means.iter().sum::<f64>() / batches as f64;
    let var = means.iter().map(|m| (m - grand) * (m - grand)).sum::<f64>() / (batches as f64 - 1.0);
    (var / batches as f64).sqrt()
}
