use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use pdebet::olo::{
    conjugate_regret_bound, erfi_regret_bound, exp_regret_bound, kt_regret_bound, Algorithm,
};
use pdebet::Potential;

use crate::config::{ExperimentConfig, Task, DATASET_ENV};
use crate::dataset::{load_dataset_rows, synthetic_regression};
use crate::error::{HarnessError, Result};
use crate::experiments::{
    abs1d_sweep, log_grid, run_abs1d, run_regression, run_stochastic1d, summarize,
};
use crate::output::{emit_results, emit_sweep, OutputFormat};
use crate::verify::{run_suite, Suite};

#[derive(Debug, Parser)]
#[command(name = "pdebet", version, about = "Potential-based coin betting and unconstrained OLO experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment and write CSV/SVG results.
    Run(RunArgs),
    /// Run invariant suites; exits nonzero if any check fails.
    Verify(VerifyArgs),
    /// Tabulate the regret bounds for one parameter setting.
    Bounds(BoundsArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub task: Task,
    /// Horizon; defaults to 500, or 50000 capped to the data for regression.
    #[arg(long = "T")]
    pub horizon: Option<u64>,
    #[arg(long = "u-star", default_value_t = 10.0, allow_hyphen_values = true)]
    pub u_star: f64,
    #[arg(long, default_value_t = 1.0)]
    pub gamma: f64,
    /// Mean of the coins −g_t in the stochastic task.
    #[arg(long = "coin-mean", default_value_t = 0.2, allow_hyphen_values = true)]
    pub coin_mean: f64,
    #[arg(long, value_delimiter = ',', default_value = "erfi,exp,kt")]
    pub algs: Vec<Algorithm>,
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    /// KT initial wealth; defaults to √e·C.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long)]
    pub runs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Regression CSV (target first). Falls back to $PDEBET_DATASET, then synthetic data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Feature count of the synthetic fallback dataset.
    #[arg(long = "synthetic-dim", default_value_t = 90)]
    pub synthetic_dim: usize,
    /// Stream regression rows in a per-replicate seeded order.
    #[arg(long)]
    pub shuffle: bool,
    /// Also sweep u* over a log grid at fixed T (abs1d only).
    #[arg(long)]
    pub sweep: bool,
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
    /// csv, svg (alias svg-plot) or both.
    #[arg(long, default_value = "csv")]
    pub format: OutputFormat,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Comma-separated subset of pde, ito, bounds, tail; all by default.
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<Suite>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long = "C", default_value_t = 1.0)]
    pub c: f64,
    #[arg(long = "T")]
    pub horizon: u64,
    #[arg(long)]
    pub u: f64,
    #[arg(long)]
    pub eps: Option<f64>,
}

impl RunArgs {
    fn config(&self) -> ExperimentConfig {
        let mut cfg = ExperimentConfig::new(self.task);
        if let Some(t) = self.horizon {
            cfg.horizon = t;
        }
        if let Some(r) = self.runs {
            cfg.runs = r;
        }
        cfg.u_star = self.u_star;
        cfg.gamma = self.gamma;
        cfg.coin_mean = self.coin_mean;
        cfg.algorithms = self.algs.clone();
        cfg.c = self.c;
        cfg.eps = self.eps;
        cfg.seed = self.seed;
        cfg.shuffle = self.shuffle;
        cfg.output_dir = self.out.clone();
        cfg
    }
}

fn run_command(args: &RunArgs, out: &mut dyn Write) -> Result<bool> {
    let mut cfg = args.config();
    cfg.validate()?;
    let io = |e| HarnessError::io("<stdout>", e);
    let records = match cfg.task {
        Task::Abs1d => run_abs1d(&cfg)?,
        Task::Stochastic1d => run_stochastic1d(&cfg)?,
        Task::Regression => {
            let path = args
                .data
                .clone()
                .or_else(|| std::env::var_os(DATASET_ENV).map(PathBuf::from));
            let data = match path {
                Some(p) => load_dataset_rows(&p, Some(cfg.horizon as usize))?,
                None => {
                    writeln!(out, "no dataset given; using synthetic data (d = {})", args.synthetic_dim)
                        .map_err(io)?;
                    synthetic_regression(cfg.seed, cfg.horizon as usize, args.synthetic_dim)?
                }
            };
            if args.horizon.is_none() {
                cfg.horizon = cfg.horizon.min(data.rows() as u64);
            }
            run_regression(&cfg, &data)?
        }
    };
    let stem = cfg.task.name();
    for s in summarize(&records) {
        writeln!(
            out,
            "{stem} T={} {:<14} runs={:<3} final={:.6} se={:.6}",
            cfg.horizon, s.algorithm, s.runs, s.mean, s.std_error
        )
        .map_err(io)?;
    }
    if records.iter().any(|r| r.overflow) {
        writeln!(out, "warning: some predictions saturated at the f64 range").map_err(io)?;
    }
    let mut files = emit_results(&records, args.format, &cfg.output_dir, stem)?;
    if args.sweep && cfg.task == Task::Abs1d {
        let points = abs1d_sweep(&cfg, &log_grid(0.1, 1000.0, 41))?;
        files.extend(emit_sweep(&points, args.format, &cfg.output_dir, "abs1d_sweep")?);
    }
    for f in files {
        writeln!(out, "wrote {}", f.display()).map_err(io)?;
    }
    Ok(true)
}

fn verify_command(args: &VerifyArgs, out: &mut dyn Write) -> Result<bool> {
    let suites = if args.suite.is_empty() { Suite::ALL.to_vec() } else { args.suite.clone() };
    let mut ok = true;
    for suite in suites {
        for check in run_suite(suite) {
            ok &= check.passed;
            writeln!(out, "[{}] {check}", suite.name()).map_err(|e| HarnessError::io("<stdout>", e))?;
        }
    }
    Ok(ok)
}

fn bounds_command(args: &BoundsArgs, out: &mut dyn Write) -> Result<bool> {
    if !(args.c > 0.0) || args.horizon == 0 || !(args.u >= 0.0) {
        return Err(HarnessError::Config("bounds need C > 0, T ≥ 1, u ≥ 0".into()));
    }
    let eps = args.eps.unwrap_or(0.5f64.exp() * args.c);
    let conj = conjugate_regret_bound(&Potential::erfi(args.c)?, args.horizon, args.u)?;
    let rows = [
        ("erfi closed form", erfi_regret_bound(args.c, args.horizon, args.u)),
        ("erfi conjugate", conj),
        ("exp", exp_regret_bound(args.c, args.horizon, args.u)),
        ("kt", kt_regret_bound(eps, args.horizon, args.u)),
    ];
    let io = |e| HarnessError::io("<stdout>", e);
    writeln!(out, "C={} T={} u={} eps={eps}", args.c, args.horizon, args.u).map_err(io)?;
    for (name, v) in rows {
        writeln!(out, "{name:<17} {v:.10}").map_err(io)?;
    }
    Ok(true)
}

/// Parses `args` (including the program name) and runs the command, writing
/// human-readable output to `out`. Returns whether every check passed.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write) -> std::result::Result<bool, String>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).map_err(|e| e.to_string())?;
    let result = match &cli.command {
        Command::Run(a) => run_command(a, out),
        Command::Verify(a) => verify_command(a, out),
        Command::Bounds(a) => bounds_command(a, out),
    };
    result.map_err(|e| format!("error: {e}"))
}
