//! Filter and engine invariants: weight bookkeeping, genealogy replay,
//! degenerate edges, kernel scale cancellation, and determinism.

mod common;

use ssm_saem::filters::{
    ess, rejection_abc_path, run_abc_smc, run_bootstrap, sample_genealogy_indices,
    sample_genealogy_path, path_from_indices,
};
use ssm_saem::kernel::{kernel_log_weight, Distance, KernelSpec, Summary};
use ssm_saem::model::{simulate_dataset, StateSpaceModel};
use ssm_saem::models::{LinearGaussianModel, NonlinearGaussianModel};
use ssm_saem::rng::{rng_from_seed, StreamKind};
use ssm_saem::series::ObservationSeries;
use ssm_saem::stats::normalize_log_weights;
use ssm_saem::Error;

fn nlg_fixture(n: usize, seed: u64) -> (NonlinearGaussianModel, ObservationSeries) {
    let model = NonlinearGaussianModel::new(5f64.sqrt(), 5f64.sqrt(), n).unwrap();
    let mut rng = rng_from_seed(seed);
    let (_, y) = simulate_dataset(&model, &model.param_template(), &mut rng);
    (model, y)
}

#[test]
fn weights_normalized_at_every_step_of_both_filters() {
    let (model, y) = nlg_fixture(40, 11);
    let theta = model.param_template();
    let mut rng = rng_from_seed(12);
    let (abc, _) = run_abc_smc(&model, &y, &theta, 300, 100, 1.0, &KernelSpec::Gaussian, &mut rng)
        .unwrap();
    let (boot, _) = run_bootstrap(&model, &y, &theta, 300, 100, &mut rng).unwrap();
    for ps in [&abc, &boot] {
        for step in &ps.steps {
            let sum: f64 = step.norm_weights.iter().sum();
            assert!((sum - 1.0).abs() < 1e-10, "sum {sum}");
            let e = ess(&step.norm_weights).unwrap();
            assert!((1.0..=300.0 + 1e-9).contains(&e));
        }
    }
}

#[test]
fn ancestry_bookkeeping_matches_resample_events() {
    let (model, y) = nlg_fixture(40, 13);
    let theta = model.param_template();
    let mut rng = rng_from_seed(14);
    let (ps, diag) =
        run_abc_smc(&model, &y, &theta, 200, 100, 1.0, &KernelSpec::Gaussian, &mut rng).unwrap();
    assert!(!diag.resample_events.is_empty(), "fixture should trigger resampling");

    let m = ps.particles;
    for (j, step) in ps.steps.iter().enumerate() {
        // Parents are the previous step's resample draw, identity otherwise.
        if j == 0 {
            assert!(step.parents.iter().enumerate().all(|(i, &p)| p as usize == i));
        } else {
            match &ps.steps[j - 1].resample_draw {
                Some(draw) => assert_eq!(&step.parents, draw),
                None => assert!(step.parents.iter().enumerate().all(|(i, &p)| p as usize == i)),
            }
        }
        // Carried weights reset to uniform 1/M after a resample.
        if step.resample_draw.is_some() {
            assert!(diag.resample_events.contains(&(j + 1)));
            let expect = -(m as f64).ln();
            assert!(step.carried_log.iter().all(|&c| c == expect));
        } else {
            for (c, w) in step.carried_log.iter().zip(&step.norm_weights) {
                assert_eq!(*c, w.ln());
            }
        }
    }
}

#[test]
fn genealogy_replay_is_bit_exact() {
    let (model, y) = nlg_fixture(30, 15);
    let theta = model.param_template();
    let mut rng = rng_from_seed(16);
    let (ps, diag) =
        run_abc_smc(&model, &y, &theta, 200, 120, 1.0, &KernelSpec::Gaussian, &mut rng).unwrap();
    assert!(!diag.resample_events.is_empty());

    let indices = sample_genealogy_indices(&ps, &mut rng);
    let path = path_from_indices(&ps, &indices);

    // Replay every lineage transition from the recorded substreams.
    let grid = model.grid();
    let r = grid.substeps();
    for j in 1..=ps.n_times() {
        let m = indices[j];
        let parent = indices[j - 1];
        let from = if j == 1 {
            ps.initial_state(parent)
        } else {
            ps.state(j - 1, parent)
        };
        let mut replay_rng = ps.root.stream(StreamKind::Propagate, j, m);
        let mut cur = from.to_vec();
        let mut next = vec![0.0; 1];
        for s in 0..r {
            let base = (j - 1) * r + s;
            let mut buf = vec![0.0; 1];
            model.simulate_transition(
                &cur,
                &mut buf,
                grid.fine_time(base),
                grid.fine_time(base + 1),
                &theta,
                &mut replay_rng,
            );
            next.copy_from_slice(&buf);
            cur = buf;
        }
        assert_eq!(
            next[0].to_bits(),
            ps.state(j, m)[0].to_bits(),
            "replayed state differs at level {j}"
        );
        assert_eq!(path.at_fine(j * r)[0].to_bits(), ps.state(j, m)[0].to_bits());
    }
}

#[test]
fn no_resampling_yields_identity_ancestry_and_blind_trajectories() {
    let (model, y) = nlg_fixture(25, 17);
    let theta = model.param_template();
    let mut rng = rng_from_seed(18);
    // Threshold zero: ESS < 0 never holds, so no resampling anywhere.
    let (ps, diag) =
        run_abc_smc(&model, &y, &theta, 64, 0, 1.0, &KernelSpec::Gaussian, &mut rng).unwrap();
    assert!(diag.resample_events.is_empty());

    let indices = sample_genealogy_indices(&ps, &mut rng);
    let m = indices[ps.n_times()];
    assert!(indices.iter().all(|&i| i == m), "identity ancestry expected");
    let path = path_from_indices(&ps, &indices);
    for j in 1..=ps.n_times() {
        assert_eq!(path.at_fine(j)[0].to_bits(), ps.state(j, m)[0].to_bits());
    }
}

#[test]
fn single_particle_filter_degenerates_gracefully() {
    let (model, y) = nlg_fixture(20, 19);
    let theta = model.param_template();
    let mut rng = rng_from_seed(20);
    let (ps, diag) =
        run_abc_smc(&model, &y, &theta, 1, 1, 0.5, &KernelSpec::Gaussian, &mut rng).unwrap();
    for step in &ps.steps {
        assert_eq!(step.norm_weights, vec![1.0]);
    }
    assert!(diag.ess_per_time.iter().all(|&e| (e - 1.0).abs() < 1e-12));
    // Ties at ESS = M̄ deliberately do not resample (strict inequality).
    assert!(diag.resample_events.is_empty());
    let path = sample_genealogy_path(&ps, &mut rng);
    assert_eq!(path.len(), 20);

    // Bootstrap with one particle: the estimate collapses to the
    // log-likelihood of the single simulated path.
    let mut rng = rng_from_seed(21);
    let (ps, diag) = run_bootstrap(&model, &y, &theta, 1, 1, &mut rng).unwrap();
    let direct: f64 = (1..=20)
        .map(|j| model.obs_logdensity(y.at(j), ps.state(j, 0), &theta))
        .sum();
    assert!((diag.log_likelihood.unwrap() - direct).abs() < 1e-12);
}

#[test]
fn flat_kernel_limit_gives_uniform_weights() {
    let (model, y) = nlg_fixture(30, 22);
    let theta = model.param_template();
    let mut rng = rng_from_seed(23);
    let m = 500;
    let (ps, diag) =
        run_abc_smc(&model, &y, &theta, m, 100, 1e6, &KernelSpec::Gaussian, &mut rng).unwrap();
    let uniform = 1.0 / m as f64;
    for step in &ps.steps {
        for w in &step.norm_weights {
            assert!((w - uniform).abs() / uniform < 1e-6, "weight {w}");
        }
    }
    assert!(diag.ess_per_time.iter().all(|&e| e > 0.999 * m as f64));
}

#[test]
fn gaussian_kernel_cannot_degenerate_but_uniform_can() {
    let (model, y) = nlg_fixture(25, 24);
    // Absurd parameters: particles land far from the data.
    let theta = model
        .param_template()
        .with_value(0, 1e-6)
        .unwrap()
        .with_value(1, 1e-6)
        .unwrap();
    let mut rng = rng_from_seed(25);
    let out = run_abc_smc(&model, &y, &theta, 100, 50, 0.01, &KernelSpec::Gaussian, &mut rng);
    assert!(out.is_ok(), "gaussian-kernel weights are strictly positive");

    let mut rng = rng_from_seed(26);
    let err = run_abc_smc(&model, &y, &theta, 100, 50, 1e-6, &KernelSpec::uniform(), &mut rng)
        .unwrap_err();
    match err {
        Error::DegenerateFilter { time_index } => assert!(time_index >= 1),
        other => panic!("expected degeneracy, got {other}"),
    }
}

#[test]
fn kernel_scale_term_cancels_in_normalized_weights() {
    // The −log δ term is constant across particles at a fixed time, so
    // normalized weights are identical with and without it.
    let mut rng = rng_from_seed(27);
    let delta = 0.37;
    let y = [1.25];
    let m = 400;
    let mut with_term = Vec::with_capacity(m);
    for _ in 0..m {
        let y_star = [1.25 + rand::Rng::random_range(&mut rng, -3.0..3.0)];
        with_term
            .push(kernel_log_weight(&KernelSpec::Gaussian, &y, &y_star, delta).unwrap());
    }
    let without_term: Vec<f64> = with_term.iter().map(|w| w + delta.ln()).collect();

    let mut norm_a = vec![0.0; m];
    let mut norm_b = vec![0.0; m];
    normalize_log_weights(&with_term, &mut norm_a).unwrap();
    normalize_log_weights(&without_term, &mut norm_b).unwrap();
    for (a, b) in norm_a.iter().zip(&norm_b) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn filtering_mean_converges_with_particle_count() {
    // The weighted particle mean at the final time approaches a
    // large-M reference monotonically in M on a fixed-seed instance.
    let (model, y) = nlg_fixture(10, 28);
    let theta = model.param_template();

    let weighted_mean = |m: usize, seed: u64| -> f64 {
        let mut rng = rng_from_seed(seed);
        let (ps, _) =
            run_abc_smc(&model, &y, &theta, m, m / 2, 1.0, &KernelSpec::Gaussian, &mut rng)
                .unwrap();
        let last = ps.steps.last().unwrap();
        last.norm_weights
            .iter()
            .zip(&last.states)
            .map(|(w, x)| w * x)
            .sum()
    };

    let reference = weighted_mean(100_000, 290);
    let errors: Vec<f64> = [100usize, 1000, 10_000]
        .iter()
        .map(|&m| (weighted_mean(m, 291) - reference).abs())
        .collect();
    assert!(
        errors[0] > errors[1] && errors[1] > errors[2],
        "errors not monotone: {errors:?}"
    );
}

#[test]
fn rejection_sampler_examples() {
    let (model, y) = nlg_fixture(5, 30);
    let theta = model.param_template();
    let mut rng = rng_from_seed(31);
    // Wide tolerance accepts immediately.
    let path = rejection_abc_path(
        &model, &y, &theta, 1e9, Distance::Euclidean, Summary::Identity, 3, &mut rng,
    )
    .unwrap();
    assert_eq!(path.len(), 5);
    // Zero-measure acceptance event exhausts the budget.
    let err = rejection_abc_path(
        &model, &y, &theta, 0.0, Distance::Euclidean, Summary::Identity, 10, &mut rng,
    )
    .unwrap_err();
    assert!(matches!(err, Error::AcceptanceFailure { attempts: 10, .. }));
}

#[test]
fn end_to_end_estimate_is_deterministic() {
    use ssm_saem::experiment::{run_estimate, ExperimentConfig};
    let text = r#"{
        "model": {"id": "nonlinear-gaussian", "theta": {"sigma_x": 2.2360679774997896, "sigma_y": 2.2360679774997896}},
        "grid": {"n": 15},
        "algorithm": {"kind": "saem-abc", "M": 60, "Mbar": 20, "K": 20, "K1": 15,
                      "schedule": [{"delta": 2.0, "iterations": 10}, {"delta": 1.0, "iterations": 10}]},
        "replicates": 3,
        "start": {"law": "gaussian-around", "center": "truth", "sd": 1.0},
        "seed": 4242
    }"#;
    let cfg = ExperimentConfig::from_json(text).unwrap();
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let rep_a = run_estimate(&cfg.build().unwrap(), None, dir_a.path()).unwrap();
    let rep_b = run_estimate(&cfg.build().unwrap(), None, dir_b.path()).unwrap();

    // Identical aggregates and byte-identical CSV outputs.
    assert_eq!(rep_a.aggregate, rep_b.aggregate);
    for name in [
        "dataset.csv",
        "dataset_truth.csv",
        "aggregate.csv",
        "replicate_000_trace.csv",
        "replicate_001_trace.csv",
        "replicate_002_trace.csv",
        "replicate_000_diagnostics.csv",
    ] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }

    // The aggregate table is recomputable from the per-replicate entries.
    assert_eq!(rep_a.recompute_aggregate(), rep_a.aggregate);
    assert_eq!(rep_a.succeeded + rep_a.failed, 3);
}

#[test]
fn fisher_accumulators_stay_symmetric_along_a_run() {
    use nalgebra::DMatrix;
    use ssm_saem::saem::{fisher_update, FisherAccumulators};

    let (model, y) = nlg_fixture(12, 33);
    let theta = model.param_template();
    let mut rng = rng_from_seed(34);
    let sched = ssm_saem::schedule::StepSizeSchedule::new(60, 40).unwrap();
    let mut acc = FisherAccumulators::zeros(2);
    for k in 1..=60 {
        let (path, _) = simulate_dataset(&model, &theta, &mut rng);
        let (grad, hess) = model.complete_derivatives(&y, &path, &theta).unwrap();
        // Raw (un-symmetrized) update for the asymmetry bound.
        let gamma = sched.gamma(k).unwrap();
        let h_raw: DMatrix<f64> =
            &acc.h + gamma * (&hess + &grad * grad.transpose() - &acc.h);
        let f_raw: DMatrix<f64> = &h_raw - &acc.g * acc.g.transpose();
        let asym = (&f_raw - f_raw.transpose()).abs().max();
        let scale = f_raw.abs().max().max(1e-12);
        assert!(asym / scale < 1e-8, "pre-symmetrization asymmetry {asym}");

        acc = fisher_update(&acc, &grad, &hess, gamma).unwrap();
        assert_eq!(acc.f, acc.f.transpose(), "F must be exactly symmetric");
    }
}
