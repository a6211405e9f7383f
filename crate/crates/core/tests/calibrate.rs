//! Scratch calibration harness (ignored by default).
mod common;

use ssm_saem::experiment::{run_estimate, run_diagnose, ExperimentConfig};

fn table1_cfg(seed: u64, kind: &str, mbar: usize, sched: &str) -> ExperimentConfig {
    let algo = match kind {
        "abc" => format!(r#"{{"kind": "saem-abc", "M": 1000, "Mbar": {mbar}, "K": 400, "K1": 300, "schedule": {sched}}}"#),
        _ => format!(r#"{{"kind": "saem-smc", "M": 1000, "Mbar": {mbar}, "K": 400, "K1": 300}}"#),
    };
    let text = format!(r#"{{
        "model": {{"id": "nonlinear-gaussian", "theta": {{"sigma_x": 2.2360679774997896, "sigma_y": 2.2360679774997896}}}},
        "grid": {{"n": 50}},
        "algorithm": {algo},
        "replicates": 30,
        "start": {{"law": "gaussian-around", "center": "truth", "sd": 1.4142135623730951}},
        "seed": {seed}
    }}"#);
    ExperimentConfig::from_json(&text).unwrap()
}

const SCHED_PAPER: &str = r#"[{"delta": 2.0, "iterations": 80}, {"delta": 1.7, "iterations": 70}, {"delta": 1.3, "iterations": 50}, {"delta": 1.0, "iterations": 200}]"#;
const SCHED_ALT: &str = r#"[{"delta": 4.0, "iterations": 80}, {"delta": 3.0, "iterations": 70}, {"delta": 2.0, "iterations": 50}, {"delta": 1.0, "iterations": 200}]"#;

#[test]
#[ignore]
fn timing_single_replicate() {
    let mut cfg = table1_cfg(1, "abc", 200, SCHED_PAPER);
    cfg.replicates = 1;
    let t = std::time::Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let rep = run_estimate(&cfg.build().unwrap(), None, dir.path()).unwrap();
    println!("one ABC replicate: {:.2}s ok={}", t.elapsed().as_secs_f64(), rep.succeeded);
}

#[test]
#[ignore]
fn calibrate_seeds() {
    for seed in [1u64, 2, 3] {
        let t = std::time::Instant::now();
        let run = |cfg: ExperimentConfig| {
            let dir = tempfile::tempdir().unwrap();
            run_estimate(&cfg.build().unwrap(), None, dir.path()).unwrap()
        };
        let abc = run(table1_cfg(seed, "abc", 200, SCHED_PAPER));
        let smc200 = run(table1_cfg(seed, "smc", 200, SCHED_PAPER));
        let smc20 = run(table1_cfg(seed, "smc", 20, SCHED_PAPER));
        let abc_alt = run(table1_cfg(seed, "abc", 200, SCHED_ALT));
        let dir = tempfile::tempdir().unwrap();
        let diag_abc = run_diagnose(&table1_cfg(seed, "abc", 200, SCHED_PAPER).build().unwrap(), None, 30, dir.path()).unwrap();
        let diag_smc = run_diagnose(&table1_cfg(seed, "smc", 200, SCHED_PAPER).build().unwrap(), None, 30, dir.path()).unwrap();
        println!("== seed {seed} ({:.0}s)", t.elapsed().as_secs_f64());
        println!("  ABC:   sx {:.3} [{:.3},{:.3}]  sy {:.3} [{:.3},{:.3}]  fail {}",
            abc.aggregate["sigma_x"].median, abc.aggregate["sigma_x"].q1, abc.aggregate["sigma_x"].q3,
            abc.aggregate["sigma_y"].median, abc.aggregate["sigma_y"].q1, abc.aggregate["sigma_y"].q3, abc.failed);
        println!("  SMC200: sx {:.3} sy {:.3} fail {}", smc200.aggregate["sigma_x"].median, smc200.aggregate["sigma_y"].median, smc200.failed);
        println!("  SMC20:  sx {:.3} sy {:.3} fail {}", smc20.aggregate["sigma_x"].median, smc20.aggregate["sigma_y"].median, smc20.failed);
        println!("  ABCalt: sx {:.3} sy {:.3} (delta vs paper-sched: {:.4}, {:.4})",
            abc_alt.aggregate["sigma_x"].median, abc_alt.aggregate["sigma_y"].median,
            (abc_alt.aggregate["sigma_x"].median - abc.aggregate["sigma_x"].median).abs(),
            (abc_alt.aggregate["sigma_y"].median - abc.aggregate["sigma_y"].median).abs());
        println!("  diag ABC: ess {:.1} distinct {:.1} | SMC: ess {:.1} distinct {:.1}",
            diag_abc.mean_ess, diag_abc.mean_distinct, diag_smc.mean_ess, diag_smc.mean_distinct);
    }
}

#[test]
#[ignore]
fn timing_rng_components() {
    use rand::{Rng as _, SeedableRng};
    use std::time::Instant;
    let t = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..1_000_000u64 {
        let mut r = rand::rngs::SmallRng::seed_from_u64(i);
        let z: f64 = r.sample(rand_distr::StandardNormal);
        let z2: f64 = r.sample(rand_distr::StandardNormal);
        acc += z + z2;
    }
    println!("smallrng init+2draws: {:.1} ns (acc {acc:.3})", t.elapsed().as_nanos() as f64 / 1e6);

    let t = Instant::now();
    let mut acc = 0.0f64;
    for i in 0..1_000_000u64 {
        let x = (i as f64) * 1e-6;
        acc += 2.0 * (x.exp()).sin();
    }
    println!("sin(exp): {:.1} ns (acc {acc:.3})", t.elapsed().as_nanos() as f64 / 1e6);
}
