use pdebet::olo::{conjugate_regret_bound, Algorithm, RegretLedger};
use pdebet::Potential;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Task};
use crate::dataset::DatasetMatrix;
use crate::error::{HarnessError, Result};

/// One learner's run. `metric` is cumulative: regret at `u*` for `abs1d`,
/// wealth `−Σ g_t x_t` for `stochastic1d`, total loss for `regression`.
/// For regression the prediction is the model output `⟨z_t, x_t⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub run: usize,
    pub predictions: Vec<f64>,
    pub losses: Vec<f64>,
    pub metric: Vec<f64>,
    /// The erfi conjugate regret bound per round, alongside `abs1d` erfi runs.
    pub bound: Option<Vec<f64>>,
    pub overflow: bool,
}

impl RunRecord {
    fn with_capacity(algorithm: Algorithm, run: usize, horizon: usize) -> Self {
        RunRecord {
            algorithm,
            run,
            predictions: Vec::with_capacity(horizon),
            losses: Vec::with_capacity(horizon),
            metric: Vec::with_capacity(horizon),
            bound: None,
            overflow: false,
        }
    }

    pub fn rounds(&self) -> usize {
        self.predictions.len()
    }

    pub fn final_metric(&self) -> f64 {
        self.metric.last().copied().unwrap_or(0.0)
    }
}

fn check_task(config: &ExperimentConfig, task: Task) -> Result<()> {
    config.validate()?;
    if config.task != task {
        return Err(HarnessError::Config(format!(
            "expected a {task} configuration, got {}",
            config.task
        )));
    }
    Ok(())
}

fn abs1d_run(config: &ExperimentConfig, algorithm: Algorithm, u_star: f64) -> Result<RunRecord> {
    let horizon = config.horizon as usize;
    let mut learner = config.learner(algorithm, 1).build()?;
    let mut ledger = RegretLedger::new(1);
    let mut rec = RunRecord::with_capacity(algorithm, 0, horizon);
    for _ in 0..horizon {
        let x = learner.predict()?;
        let g = [if x[0] >= u_star { 1.0 } else { -1.0 }];
        learner.update(&g)?;
        ledger.record(&x, &g)?;
        rec.predictions.push(x[0]);
        rec.losses.push((x[0] - u_star).abs());
        rec.metric.push(ledger.regret(&[u_star])?);
    }
    rec.overflow = learner.overflowed();
    Ok(rec)
}

/// The fixed loss `|x − u*|`: the adversary plays `g_t = +1` when
/// `x_t ≥ u*` and `−1` otherwise. The game is deterministic, so one record
/// per algorithm is produced regardless of `runs`.
pub fn run_abs1d(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    check_task(config, Task::Abs1d)?;
    let mut records = config
        .algorithms
        .par_iter()
        .map(|&a| abs1d_run(config, a, config.u_star))
        .collect::<Result<Vec<_>>>()?;
    let erfi = Potential::erfi(config.c)?;
    let curve = (1..=config.horizon)
        .into_par_iter()
        .map(|t| conjugate_regret_bound(&erfi, t, config.u_star.abs()))
        .collect::<pdebet::Result<Vec<_>>>()?;
    for rec in records.iter_mut().filter(|r| r.algorithm == Algorithm::Erfi) {
        rec.bound = Some(curve.clone());
    }
    Ok(records)
}

/// Final `abs1d` regret of every configured algorithm at each `u*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub u_star: f64,
    pub regrets: Vec<(Algorithm, f64)>,
}

impl SweepPoint {
    pub fn regret(&self, algorithm: Algorithm) -> Option<f64> {
        self.regrets.iter().find(|(a, _)| *a == algorithm).map(|(_, r)| *r)
    }
}

pub fn abs1d_sweep(config: &ExperimentConfig, grid: &[f64]) -> Result<Vec<SweepPoint>> {
    check_task(config, Task::Abs1d)?;
    grid.par_iter()
        .map(|&u_star| {
            let regrets = config
                .algorithms
                .iter()
                .map(|&a| Ok((a, abs1d_run(config, a, u_star)?.final_metric())))
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepPoint { u_star, regrets })
        })
        .collect()
}

/// `n` log-spaced points from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Smallest prediction after the first round whose prediction reaches `u*`.
pub fn post_crossing_minimum(predictions: &[f64], u_star: f64) -> Option<f64> {
    let first = predictions.iter().position(|&x| x >= u_star)?;
    predictions[first + 1..].iter().copied().reduce(f64::min)
}

/// Gradients `g_t ∈ {−1, +1}` with `P[g_t = −1] = (1 + mean)/2`, so the coins
/// `c_t = −g_t` have the configured mean. Each replicate draws one stream,
/// shared by all algorithms, from `seed + run`.
pub fn run_stochastic1d(config: &ExperimentConfig) -> Result<Vec<RunRecord>> {
    check_task(config, Task::Stochastic1d)?;
    let p_minus = (1.0 + config.coin_mean) / 2.0;
    let per_run = (0..config.runs)
        .into_par_iter()
        .map(|run| {
            let grads = stochastic_gradients(config.seed.wrapping_add(run as u64), config.horizon, p_minus);
            config
                .algorithms
                .iter()
                .map(|&a| {
                    let mut learner = config.learner(a, 1).build()?;
                    let mut rec = RunRecord::with_capacity(a, run, grads.len());
                    let mut wealth = 0.0;
                    for &g in &grads {
                        let x = learner.predict()?[0];
                        learner.update(&[g])?;
                        wealth -= g * x;
                        rec.predictions.push(x);
                        rec.losses.push(g * x);
                        rec.metric.push(wealth);
                    }
                    rec.overflow = learner.overflowed();
                    Ok(rec)
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_run.into_iter().flatten().collect())
}

pub fn stochastic_gradients(seed: u64, horizon: u64, p_minus: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon)
        .map(|_| if rng.gen_bool(p_minus) { -1.0 } else { 1.0 })
        .collect()
}

/// Absolute-loss regression `|⟨z_t, x⟩ − γ y_t|` with gradient `±z_t`.
/// Rows stream in file order unless `shuffle` is set, in which case replicate
/// `r` uses the permutation drawn from `seed + r`.
pub fn run_regression(config: &ExperimentConfig, data: &DatasetMatrix) -> Result<Vec<RunRecord>> {
    check_task(config, Task::Regression)?;
    let horizon = config.horizon as usize;
    if horizon > data.rows() {
        return Err(HarnessError::Config(format!(
            "T = {horizon} exceeds the {} available rows",
            data.rows()
        )));
    }
    let d = data.dimension();
    let jobs: Vec<(usize, Algorithm)> = (0..config.runs)
        .flat_map(|r| config.algorithms.iter().map(move |&a| (r, a)))
        .collect();
    jobs.into_par_iter()
        .map(|(run, algorithm)| {
            let mut order: Vec<usize> = (0..data.rows()).collect();
            if config.shuffle {
                order.shuffle(&mut ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(run as u64)));
            }
            let mut learner = config.learner(algorithm, d).build()?;
            let mut rec = RunRecord::with_capacity(algorithm, run, horizon);
            let mut total = 0.0;
            let mut g = vec![0.0; d];
            for &i in &order[..horizon] {
                let z = &data.features[i];
                let y = config.gamma * data.targets[i];
                let x = learner.predict()?;
                let pred: f64 = z.iter().zip(&x).map(|(a, b)| a * b).sum();
                let sign = if pred >= y { 1.0 } else { -1.0 };
                g.iter_mut().zip(z).for_each(|(gi, zi)| *gi = sign * zi);
                learner.update(&g)?;
                let loss = (pred - y).abs();
                total += loss;
                rec.predictions.push(pred);
                rec.losses.push(loss);
                rec.metric.push(total);
            }
            rec.overflow = learner.overflowed();
            Ok(rec)
        })
        .collect()
}

/// Mean and standard error of the final metric over runs, per algorithm in
/// order of first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub algorithm: Algorithm,
    pub runs: usize,
    pub mean: f64,
    pub std_error: f64,
}

pub fn summarize(records: &[RunRecord]) -> Vec<Summary> {
    let mut order: Vec<Algorithm> = Vec::new();
    for r in records {
        if !order.contains(&r.algorithm) {
            order.push(r.algorithm);
        }
    }
    order
        .into_iter()
        .map(|algorithm| {
            let finals: Vec<f64> = records
                .iter()
                .filter(|r| r.algorithm == algorithm)
                .map(RunRecord::final_metric)
                .collect();
            let n = finals.len() as f64;
            let mean = finals.iter().sum::<f64>() / n;
            let std_error = if finals.len() > 1 {
                (finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() / n.sqrt()
            } else {
                0.0
            };
            Summary {
                algorithm,
                runs: finals.len(),
                mean,
                std_error,
            }
        })
        .collect()
}

/// Per-round metric averaged over all runs of `algorithm`.
pub fn mean_curve(records: &[RunRecord], algorithm: Algorithm) -> Vec<f64> {
    let runs: Vec<&RunRecord> = records.iter().filter(|r| r.algorithm == algorithm).collect();
    let Some(len) = runs.iter().map(|r| r.metric.len()).min() else {
        return Vec::new();
    };
    (0..len)
        .map(|t| runs.iter().map(|r| r.metric[t]).sum::<f64>() / runs.len() as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::synthetic_regression;

    fn abs1d(u_star: f64, horizon: u64) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(Task::Abs1d);
        cfg.u_star = u_star;
        cfg.horizon = horizon;
        cfg
    }

    #[test]
    fn abs1d_first_round_at_optimum() {
        let recs = run_abs1d(&abs1d(0.0, 5)).unwrap();
        let erfi = recs.iter().find(|r| r.algorithm == Algorithm::Erfi).unwrap();
        assert_eq!(erfi.predictions[0], 0.0);
        assert_eq!(erfi.metric[0], 0.0);
        assert_eq!(erfi.bound.as_ref().unwrap().len(), 5);
    }

    #[test]
    fn abs1d_regret_is_distance_sum() {
        for rec in run_abs1d(&abs1d(3.0, 200)).unwrap() {
            let direct: f64 = rec.losses.iter().sum();
            assert!((rec.final_metric() - direct).abs() < 1e-9 * (1.0 + direct));
        }
    }

    #[test]
    fn sweep_matches_single_runs() {
        let cfg = abs1d(1.0, 100);
        let sweep = abs1d_sweep(&cfg, &[1.0, 5.0]).unwrap();
        let single = run_abs1d(&cfg).unwrap();
        for rec in single {
            assert_eq!(sweep[0].regret(rec.algorithm), Some(rec.final_metric()));
        }
        let g = log_grid(0.1, 1000.0, 5);
        assert!((g[2] - 10.0).abs() < 1e-12 && (g[4] - 1000.0).abs() < 1e-9);
    }

    #[test]
    fn crossing_minimum() {
        assert_eq!(post_crossing_minimum(&[0.0, 2.0, 5.0, 3.0, 4.0], 4.0), Some(3.0));
        assert_eq!(post_crossing_minimum(&[0.0, 1.0], 4.0), None);
    }

    #[test]
    fn stochastic_records_are_seeded() {
        let mut cfg = ExperimentConfig::new(Task::Stochastic1d);
        cfg.runs = 4;
        cfg.horizon = 50;
        let a = run_stochastic1d(&cfg).unwrap();
        assert_eq!(a, run_stochastic1d(&cfg).unwrap());
        assert_eq!(a.len(), 12);
        let s = summarize(&a);
        assert_eq!(s.len(), 3);
        assert!(s.iter().all(|x| x.runs == 4));
        assert_eq!(mean_curve(&a, Algorithm::Kt).len(), 50);
    }

    #[test]
    fn regression_zero_targets_start_at_zero_loss() {
        let data = synthetic_regression(1, 40, 6).unwrap();
        let mut cfg = ExperimentConfig::new(Task::Regression);
        cfg.horizon = 40;
        cfg.gamma = 0.0;
        cfg.runs = 1;
        for rec in run_regression(&cfg, &data).unwrap() {
            assert_eq!(rec.losses[0], 0.0);
        }
        cfg.horizon = 41;
        assert!(run_regression(&cfg, &data).is_err());
    }

    #[test]
    fn regression_shuffle_changes_order_only_when_enabled() {
        let data = synthetic_regression(2, 60, 4).unwrap();
        let mut cfg = ExperimentConfig::new(Task::Regression);
        cfg.horizon = 60;
        cfg.runs = 2;
        cfg.algorithms = vec![Algorithm::Kt];
        let recs = run_regression(&cfg, &data).unwrap();
        assert_eq!(recs[0].metric, recs[1].metric);
        cfg.shuffle = true;
        let recs = run_regression(&cfg, &data).unwrap();
        assert_ne!(recs[0].metric, recs[1].metric);
    }

    #[test]
    fn wrong_task_is_rejected() {
        assert!(run_stochastic1d(&abs1d(1.0, 10)).is_err());
    }
}
