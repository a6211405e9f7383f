//! Genealogy tracing: select one particle at the final time and follow its
//! ancestor chain back to the initial state, yielding a complete latent
//! path including every fine-grid substate.

use rand::Rng as _;

use crate::filters::ParticleSystem;
use crate::rng::Rng;
use crate::series::LatentPath;

/// Draw the final index m' and trace its ancestry: b_n = m', then
/// b_{j-1} = a_{j-1}(b_j) through every level. Returns the chosen particle
/// index per level, index 0 holding the initial-state index.
///
/// When the final level resampled, its carried weights are uniform over the
/// resampled copies, so m' is a resample-draw entry picked uniformly;
/// otherwise m' comes from the final normalized weights.
pub fn sample_genealogy_indices(ps: &ParticleSystem, rng: &mut Rng) -> Vec<usize> {
    let n = ps.n_times();
    assert!(n > 0, "genealogy of an empty particle system");
    let last = &ps.steps[n - 1];

    let m_final = match &last.resample_draw {
        Some(draw) => draw[rng.random_range(0..ps.particles)] as usize,
        None => categorical(&last.norm_weights, rng),
    };

    let mut indices = vec![0usize; n + 1];
    indices[n] = m_final;
    for j in (1..=n).rev() {
        indices[j - 1] = ps.steps[j - 1].parents[indices[j]] as usize;
    }
    indices
}

/// Assemble the latent path along a traced index chain (length n+1, as
/// returned by [`sample_genealogy_indices`]).
pub fn path_from_indices(ps: &ParticleSystem, indices: &[usize]) -> LatentPath {
    let n = ps.n_times();
    assert_eq!(indices.len(), n + 1, "index chain must cover every level");
    let dx = ps.state_dim;
    let mut values = Vec::with_capacity(n * ps.substeps * dx);
    for j in 1..=n {
        values.extend_from_slice(ps.fine_block(j, indices[j]));
    }
    let x0 = ps.initial_state(indices[0]).to_vec();
    LatentPath::new(x0, values, dx).expect("particle storage is grid-shaped")
}

/// Sample one latent path from the filter output by tracing a genealogy.
pub fn sample_genealogy_path(ps: &ParticleSystem, rng: &mut Rng) -> LatentPath {
    let indices = sample_genealogy_indices(ps, rng);
    path_from_indices(ps, &indices)
}

fn categorical(weights: &[f64], rng: &mut Rng) -> usize {
    let u: f64 = rng.random();
    let mut cum = 0.0;
    for (i, w) in weights.iter().enumerate() {
        cum += w;
        if u <= cum {
            return i;
        }
    }
    weights.len() - 1
}
