//! Invariant suites run by `pdebet verify`.

use std::fmt;
use std::str::FromStr;

use pdebet::betting::{
    play_game, rademacher_adversary, tail_bound_check, verify_value_function_ogd,
    wealth_lower_bound, AdversaryPolicy, PlayerPolicy,
};
use pdebet::olo::{conjugate_regret_bound, erfi_regret_bound, Algorithm};
use pdebet::potentials::{analytic_derivatives, hermite_residual, pde_residual, perturbation};
use pdebet::specfun::{erfi_profile, exp_integral};
use pdebet::Potential;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{ExperimentConfig, Task};
use crate::error::HarnessError;
use crate::experiments::run_abs1d;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Pde,
    Ito,
    Bounds,
    Tail,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Pde, Suite::Ito, Suite::Bounds, Suite::Tail];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Pde => "pde",
            Suite::Ito => "ito",
            Suite::Bounds => "bounds",
            Suite::Tail => "tail",
        }
    }
}

impl FromStr for Suite {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, HarnessError> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

fn check(name: &str, outcome: Result<String, String>) -> Check {
    match outcome {
        Ok(detail) => Check { name: name.into(), passed: true, detail },
        Err(detail) => Check { name: name.into(), passed: false, detail },
    }
}

fn run<F: FnOnce() -> Result<String, String>>(name: &str, f: F) -> Check {
    check(name, f())
}

fn e2s<E: fmt::Display>(e: E) -> String {
    e.to_string()
}

pub fn stock_potentials(c: f64) -> [Potential; 3] {
    [
        Potential::ogd(c).expect("c > 0"),
        Potential::exp(c).expect("c > 0"),
        Potential::erfi(c).expect("c > 0"),
    ]
}

/// Integer points `(t, S)` with `1 ≤ t ≤ t_max` and `|S| ≤ t − 1`.
pub fn interior_grid(t_max: u64) -> impl Iterator<Item = (u64, f64)> {
    (1..=t_max).flat_map(|t| (-(t as i64 - 1)..=(t as i64 - 1)).map(move |s| (t, s as f64)))
}

/// The erfi potential's per-round perturbation window `[lower, 0]`:
/// `lower = −C` at `t = 1` and
/// `−(C/8)(t−1)^{−3/2} e^{S²/2(t−1)}(S²/(t−1) + 1)` afterwards.
pub fn erfi_perturbation_window(c: f64, t: u64, s: f64) -> (f64, f64) {
    if t == 1 {
        return (-c, 0.0);
    }
    let u = (t - 1) as f64;
    let x = s * s / u;
    (-c / 8.0 * u.powf(-1.5) * (x / 2.0).exp() * (x + 1.0), 0.0)
}

/// The exp potential's window: exactly `C√e` at `t = 1`, otherwise
/// `[−(C/8)(t−1)^{−5/2} e^{S²/2(t−1)}(S⁴/(t−1)² + 6S²/(t−1) + 3), 0]`.
pub fn exp_perturbation_window(c: f64, t: u64, s: f64) -> (f64, f64) {
    if t == 1 {
        let v = c * 0.5f64.exp();
        return (v, v);
    }
    let u = (t - 1) as f64;
    let x = s * s / u;
    (-c / 8.0 * u.powf(-2.5) * (x / 2.0).exp() * (x * x + 6.0 * x + 3.0), 0.0)
}

/// Checks `lower ≤ ◊(t,S) ≤ upper` at every interior point up to `t_max`,
/// allowing rounding slack relative to the values entering `◊`.
pub fn perturbation_window_holds(
    p: &Potential,
    t_max: u64,
    window: fn(f64, u64, f64) -> (f64, f64),
) -> Result<usize, String> {
    let c = p.params().c;
    let points: Vec<(u64, f64)> = interior_grid(t_max).collect();
    points
        .par_iter()
        .map(|&(t, s)| {
            let d = perturbation(p, t as f64, s).map_err(e2s)?;
            let tf = t as f64;
            let before = if t == 1 { 0.0 } else { p.value(tf - 1.0, s).map_err(e2s)?.abs() };
            let scale = p.value(tf, s + 1.0).map_err(e2s)?.abs()
                + p.value(tf, s - 1.0).map_err(e2s)?.abs()
                + before;
            let slack = 1e-12 * scale.max(c);
            let (lo, hi) = window(c, t, s);
            if d < lo - slack || d > hi + slack {
                return Err(format!("t={t} S={s}: {d} outside [{lo}, {hi}]"));
            }
            Ok(())
        })
        .collect::<Result<Vec<()>, String>>()
        .map(|v| v.len())
}

fn pde_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(run("pde residual of stock potentials", || {
        let mut n = 0;
        for p in stock_potentials(1.0) {
            for t in (1..=100).step_by(3) {
                let tf = t as f64;
                let reach = (10.0 * tf).sqrt();
                for i in -10..=10 {
                    let s = reach * i as f64 / 10.0;
                    let r = pde_residual(&p, tf, s).map_err(e2s)?;
                    let v = p.value(tf, s).map_err(e2s)?;
                    if r.abs() > 1e-6 * (1.0 + v.abs()) {
                        return Err(format!("{:?} at ({t},{s}): {r}", p.kind()));
                    }
                    n += 1;
                }
            }
        }
        Ok(format!("{n} points"))
    }));
    out.push(run("hermite residual of the self-similar profiles", || {
        let ogd = |z: f64| 2.0 * z * z - 1.0;
        let exp = |z: f64| (z * z).exp();
        let erfi = |z: f64| erfi_profile(z).unwrap_or(f64::NAN);
        let mut worst: f64 = 0.0;
        for i in -30..=30 {
            let z = i as f64 / 10.0;
            for (alpha, g) in [(1.0, &ogd as &dyn Fn(f64) -> f64), (-0.5, &exp), (0.5, &erfi)] {
                let r = hermite_residual(alpha, g, z) / (1.0 + g(z).abs());
                if !(r.abs() <= 1e-5) {
                    return Err(format!("alpha={alpha} z={z}: {r}"));
                }
                worst = worst.max(r.abs());
            }
        }
        Ok(format!("worst relative residual {worst:.2e}"))
    }));
    out.push(run("second S-derivative of erfi equals exp", || {
        let erfi = Potential::erfi(1.0).map_err(e2s)?;
        let exp = Potential::exp(1.0).map_err(e2s)?;
        for t in 1..=100 {
            let tf = t as f64;
            for i in -10..=10 {
                let s = (10.0 * tf).sqrt() * i as f64 / 10.0;
                let d = analytic_derivatives(&erfi, tf, s).map_err(e2s)?.d_ss;
                let v = exp.value(tf, s).map_err(e2s)?;
                if (d - v).abs() > 1e-9 * v {
                    return Err(format!("({t},{s}): {d} vs {v}"));
                }
            }
        }
        Ok("2100 points".into())
    }));
    out.push(run("exp integral derivative", || {
        let h = 1e-5;
        for i in 1..=40 {
            let z = i as f64 / 8.0;
            let fd = (exp_integral(z + h).map_err(e2s)? - exp_integral(z - h).map_err(e2s)?) / (2.0 * h);
            if (fd / (z * z).exp() - 1.0).abs() > 1e-7 {
                return Err(format!("z={z}"));
            }
        }
        Ok("40 points".into())
    }));
    out
}

fn ito_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(run("discrete Itô identity on ±1 coins", || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut n = 0;
        for p in stock_potentials(1.0) {
            for _ in 0..10 {
                let coins: Vec<f64> = (0..300).map(|_| if rng.gen::<bool>() { 1.0 } else { -1.0 }).collect();
                let traj = play_game(&PlayerPolicy::new(p.clone()), &AdversaryPolicy::Scripted(coins), 300)
                    .map_err(e2s)?;
                let mut s_prev = 0.0;
                for r in &traj.rounds {
                    let t = r.t as f64;
                    let before = if r.t == 1 { 0.0 } else { p.value(t - 1.0, s_prev).map_err(e2s)? };
                    let after = p.value(t, r.coin_sum).map_err(e2s)?;
                    let gap = after - before - r.coin * r.bet - perturbation(&p, t, s_prev).map_err(e2s)?;
                    if gap.abs() > 1e-9 * (1.0 + after.abs()) {
                        return Err(format!("{:?} round {}: {gap}", p.kind(), r.t));
                    }
                    s_prev = r.coin_sum;
                    n += 1;
                }
            }
        }
        Ok(format!("{n} rounds"))
    }));
    out.push(run("wealth lower bounds on random coins", || {
        let horizon = 500;
        for p in [Potential::erfi(1.0).map_err(e2s)?, Potential::exp(1.0).map_err(e2s)?] {
            let player = PlayerPolicy::new(p.clone());
            let worst = (0..50u64)
                .into_par_iter()
                .map(|seed| {
                    let traj = play_game(&player, &rademacher_adversary(seed), horizon).map_err(e2s)?;
                    let lb = wealth_lower_bound(&p, horizon, traj.coin_sum()).map_err(e2s)?;
                    Ok(traj.final_wealth() - lb)
                })
                .collect::<Result<Vec<f64>, String>>()?
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            if worst < -1e-7 {
                return Err(format!("{:?}: wealth below bound by {}", p.kind(), -worst));
            }
        }
        Ok("100 games".into())
    }));
    out.push(run("quadratic value function is exact", || {
        for t in 0..=100u64 {
            for s in -(t as i64)..=(t as i64) {
                let r = verify_value_function_ogd(t, s as f64);
                if r.abs() > 1e-9 {
                    return Err(format!("({t},{s}): {r}"));
                }
            }
        }
        Ok("t ≤ 100".into())
    }));
    out
}

fn bounds_suite() -> Vec<Check> {
    let mut out = Vec::new();
    out.push(run("conjugate bound below closed form", || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..300 {
            let c = rng.gen_range(0.1..10.0);
            let t = rng.gen_range(1..5000u64);
            let u = rng.gen_range(0.0..1000.0);
            let conj = conjugate_regret_bound(&Potential::erfi(c).map_err(e2s)?, t, u).map_err(e2s)?;
            if conj > erfi_regret_bound(c, t, u) + 1e-9 {
                return Err(format!("C={c} T={t} u={u}"));
            }
        }
        Ok("300 samples".into())
    }));
    out.push(run("abs1d regret within learner bounds", || {
        for u_star in [0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0] {
            let mut cfg = ExperimentConfig::new(Task::Abs1d);
            cfg.u_star = u_star;
            for rec in run_abs1d(&cfg).map_err(e2s)? {
                let bound = cfg.learner(rec.algorithm, 1).regret_bound(cfg.horizon, u_star);
                if let Some(b) = bound {
                    if rec.final_metric() > b + 1e-6 {
                        return Err(format!("{} at u*={u_star}: {} > {b}", rec.algorithm, rec.final_metric()));
                    }
                }
                if rec.algorithm == Algorithm::Erfi {
                    let conj = *rec.bound.as_ref().and_then(|b| b.last()).ok_or("missing bound")?;
                    if rec.final_metric() > conj + 1e-6 {
                        return Err(format!("erfi above conjugate at u*={u_star}"));
                    }
                }
            }
        }
        Ok("7 comparators".into())
    }));
    out.push(run("erfi perturbation window", || {
        let n = perturbation_window_holds(&Potential::erfi(1.0).map_err(e2s)?, 200, erfi_perturbation_window)?;
        Ok(format!("{n} points"))
    }));
    out.push(run("exp perturbation window", || {
        let n = perturbation_window_holds(&Potential::exp(1.0).map_err(e2s)?, 200, exp_perturbation_window)?;
        Ok(format!("{n} points"))
    }));
    out
}

fn tail_suite() -> Vec<Check> {
    [100u64, 400, 900]
        .into_iter()
        .flat_map(|t| [0.5, 1.0, 1.5, 2.0].into_iter().map(move |m| (t, m)))
        .map(|(t, m)| {
            let k = m * (t as f64).sqrt();
            run(&format!("rademacher tail T={t} k={k}"), || {
                let c = tail_bound_check(t, k).map_err(e2s)?;
                let detail = format!("exact {:.6e} vs bound {:.6e}", c.exact_prob, c.bound);
                if c.holds() {
                    Ok(detail)
                } else {
                    Err(detail)
                }
            })
        })
        .collect()
}

pub fn run_suite(suite: Suite) -> Vec<Check> {
    match suite {
        Suite::Pde => pde_suite(),
        Suite::Ito => ito_suite(),
        Suite::Bounds => bounds_suite(),
        Suite::Tail => tail_suite(),
    }
}
