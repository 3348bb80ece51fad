use std::process::Command;

use pdebet::olo::Algorithm;
use pdebet_harness::dataset::synthetic_regression;
use pdebet_harness::experiments::{run_abs1d, run_regression, run_stochastic1d, summarize};
use pdebet_harness::output::read_records_csv;
use pdebet_harness::{ExperimentConfig, Task};

fn stochastic(coin_mean: f64, horizon: u64, runs: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(Task::Stochastic1d);
    cfg.coin_mean = coin_mean;
    cfg.horizon = horizon;
    cfg.runs = runs;
    cfg.algorithms = vec![Algorithm::Erfi, Algorithm::Exp];
    cfg
}

#[test]
fn erfi_and_exp_grow_alike_under_one_sided_gradients() {
    let records = run_stochastic1d(&stochastic(1.0, 50, 1)).unwrap();
    let (erfi, exp) = (&records[0].predictions, &records[1].predictions);
    let ratio: Vec<f64> = (10..50).map(|t| erfi[t] / exp[t]).collect();
    assert!(ratio.windows(2).all(|w| w[1] < w[0]), "{ratio:?}");
    for (i, r) in ratio.iter().enumerate() {
        if i + 10 >= 20 {
            assert!((r - 1.0).abs() <= 0.2, "t={} ratio {r}", i + 10);
        }
    }
}

#[test]
fn abs1d_regret_within_each_bound() {
    for u in [-30.0, -1.0, 0.5, 10.0, 100.0] {
        let mut cfg = ExperimentConfig::new(Task::Abs1d);
        cfg.u_star = u;
        cfg.algorithms = Algorithm::ALL.to_vec();
        for rec in run_abs1d(&cfg).unwrap() {
            let Some(bound) = cfg.learner(rec.algorithm, 1).regret_bound(cfg.horizon, f64::abs(u)) else {
                continue;
            };
            assert!(rec.final_metric() <= bound + 1e-9, "{} u={u}: {} > {bound}", rec.algorithm, rec.final_metric());
        }
    }
}

#[test]
fn fair_coins_give_no_systematic_wealth() {
    let mut cfg = stochastic(0.0, 500, 40);
    cfg.algorithms = vec![Algorithm::Erfi, Algorithm::Kt];
    let records = run_stochastic1d(&cfg).unwrap();
    for s in summarize(&records) {
        assert!(s.mean <= 3.0 * s.std_error + 1.0, "{}: {} ± {}", s.algorithm, s.mean, s.std_error);
    }
    // erfi wealth is at least V(T, 0) = −C√T; KT wealth never drops below −ε
    let floor = -(cfg.horizon as f64).sqrt() * cfg.c;
    assert!(records.iter().all(|r| r.metric.iter().all(|w| *w >= floor)));
}

#[test]
fn regression_runs_replicate() {
    let data = synthetic_regression(3, 400, 12).unwrap();
    let mut cfg = ExperimentConfig::new(Task::Regression);
    cfg.horizon = 400;
    cfg.runs = 2;
    cfg.shuffle = true;
    cfg.seed = 9;
    cfg.algorithms = Algorithm::ALL.to_vec();
    let a = run_regression(&cfg, &data).unwrap();
    let b = run_regression(&cfg, &data).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.len(), 2 * Algorithm::ALL.len());
    cfg.horizon = 401;
    assert!(run_regression(&cfg, &data).is_err());
}

fn pdebet(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_pdebet")).args(args).output().unwrap()
}

#[test]
fn binary_output_is_byte_identical_for_same_seed() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let out = pdebet(&[
            "run", "--task", "stochastic1d", "--T", "300", "--runs", "4", "--seed", "17",
            "--algs", "erfi,exp,kt", "--format", "both", "--out", d.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["stochastic1d.csv", "stochastic1d_metric.svg", "stochastic1d_predictions.svg"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert!(!a.is_empty() && a == b, "{f}");
    }
    let records = read_records_csv(&dirs[0].path().join("stochastic1d.csv")).unwrap();
    assert_eq!(records.len(), 12);
    assert!(records.iter().all(|r| r.rounds() == 300));
}

#[test]
fn binary_exit_codes() {
    assert_eq!(pdebet(&["verify", "--suite", "tail,bounds"]).status.code(), Some(0));
    assert_eq!(pdebet(&["run", "--task", "abs1d", "--T", "0"]).status.code(), Some(2));
    assert_eq!(pdebet(&["run", "--task", "regression", "--data", "/nonexistent.csv"]).status.code(), Some(2));
    assert_eq!(pdebet(&["--help"]).status.code(), Some(0));
    let out = pdebet(&["bounds", "--C", "1", "--T", "500", "--u", "10"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("erfi closed form"));
}
