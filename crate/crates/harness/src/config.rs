use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use pdebet::olo::{Algorithm, LearnerConfig};

use crate::error::{HarnessError, Result};

/// Environment variable naming the regression dataset when `--data` is absent.
pub const DATASET_ENV: &str = "PDEBET_DATASET";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Task {
    /// Fixed loss `|x − u*|` with the sign gradient.
    Abs1d,
    /// I.i.d. `±1` gradients with a fixed coin mean.
    Stochastic1d,
    /// Absolute-loss linear regression streamed row by row.
    Regression,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Abs1d => "abs1d",
            Task::Stochastic1d => "stochastic1d",
            Task::Regression => "regression",
        }
    }

    pub fn default_horizon(self) -> u64 {
        match self {
            Task::Regression => 50_000,
            _ => 500,
        }
    }

    pub fn default_runs(self) -> usize {
        match self {
            Task::Abs1d => 1,
            Task::Stochastic1d => 50,
            Task::Regression => 5,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Task {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        [Task::Abs1d, Task::Stochastic1d, Task::Regression]
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| HarnessError::Config(format!("unknown task '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub horizon: u64,
    /// Comparator for `abs1d`.
    pub u_star: f64,
    /// Target scaling for `regression`.
    pub gamma: f64,
    /// Expected coin `E[−g]` for `stochastic1d`.
    pub coin_mean: f64,
    pub algorithms: Vec<Algorithm>,
    pub c: f64,
    pub eps: Option<f64>,
    pub runs: usize,
    pub seed: u64,
    /// Regression replicates stream rows in a seeded random order instead of
    /// file order.
    pub shuffle: bool,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn new(task: Task) -> Self {
        ExperimentConfig {
            task,
            horizon: task.default_horizon(),
            u_star: 10.0,
            gamma: 1.0,
            coin_mean: 0.2,
            algorithms: vec![Algorithm::Erfi, Algorithm::Exp, Algorithm::Kt],
            c: 1.0,
            eps: None,
            runs: task.default_runs(),
            seed: 0,
            shuffle: false,
            output_dir: PathBuf::from("results"),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(HarnessError::Config(m));
        if self.horizon == 0 {
            return fail("T must be at least 1".into());
        }
        if self.runs == 0 {
            return fail("runs must be at least 1".into());
        }
        if self.algorithms.is_empty() {
            return fail("no algorithms selected".into());
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return fail(format!("C must be positive, got {}", self.c));
        }
        if let Some(eps) = self.eps {
            if !(eps > 0.0 && eps.is_finite()) {
                return fail(format!("eps must be positive, got {eps}"));
            }
        }
        match self.task {
            Task::Abs1d if !self.u_star.is_finite() => fail("u* must be finite".into()),
            Task::Stochastic1d if !(self.coin_mean.abs() <= 1.0) => {
                fail(format!("coin mean {} outside [-1, 1]", self.coin_mean))
            }
            Task::Regression if !(self.gamma >= 0.0 && self.gamma.is_finite()) => {
                fail(format!("gamma must be nonnegative, got {}", self.gamma))
            }
            _ => Ok(()),
        }
    }

    pub fn learner(&self, algorithm: Algorithm, dimension: usize) -> LearnerConfig {
        LearnerConfig {
            algorithm,
            c: self.c,
            eps: self.eps,
            dimension,
        }
    }
}
