//! Unconstrained online linear optimization.
//!
//! A one-dimensional learner is a coin-betting player fed coins `c_t = −g_t`.
//! In `ℝᵈ` the prediction is factored as `x_t = y_t z_t`: a scalar magnitude
//! learner sees the projected gradient `⟨g_t, z_t⟩` while the direction `z_t`
//! runs projected gradient descent on the unit ball.

use std::fmt;
use std::str::FromStr;

use crate::betting::player_bet;
use crate::error::{Error, Result};
use crate::potentials::{fenchel_conjugate, Potential, PotentialKind};

/// Slack on the unit gradient-norm check, absorbing rounding in gradients
/// produced by normalization.
pub const GRADIENT_NORM_TOLERANCE: f64 = 1e-9;

fn check_gradient(round: u64, norm: f64) -> Result<()> {
    if !(norm <= 1.0 + GRADIENT_NORM_TOLERANCE) {
        return Err(Error::GradientNorm { round, norm });
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// A learner on the real line. `predict` is a pure function of the state;
/// `update` consumes the gradient for the prediction it would make now.
pub trait ScalarLearner {
    fn predict(&self) -> Result<f64>;
    fn update(&mut self, g: f64) -> Result<()>;
    /// Rounds completed so far.
    fn rounds(&self) -> u64;
    fn overflowed(&self) -> bool {
        false
    }
}

/// The potential-based learner: `x_t = ½[V(t, S+1) − V(t, S−1)]` with
/// `S = −Σ_{i<t} g_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct OloState1d {
    pub t: u64,
    pub s: f64,
    pub potential: Potential,
    pub overflow: bool,
}

impl OloState1d {
    pub fn new(potential: Potential) -> Self {
        OloState1d {
            t: 0,
            s: 0.0,
            potential,
            overflow: false,
        }
    }
}

impl ScalarLearner for OloState1d {
    fn predict(&self) -> Result<f64> {
        Ok(player_bet(&self.potential, self.t + 1, self.s)?.amount)
    }

    fn update(&mut self, g: f64) -> Result<()> {
        let round = self.t + 1;
        check_gradient(round, g.abs())?;
        self.overflow |= player_bet(&self.potential, round, self.s)?.saturated;
        self.s -= g;
        self.t = round;
        Ok(())
    }

    fn rounds(&self) -> u64 {
        self.t
    }

    fn overflowed(&self) -> bool {
        self.overflow
    }
}

pub fn olo1d_predict(state: &OloState1d) -> Result<f64> {
    state.predict()
}

/// Krichevsky–Trofimov betting: `x_t = (−Σ_{i<t} g_i / t)(ε − Σ_{i<t} g_i x_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KtState {
    pub eps: f64,
    pub grad_sum: f64,
    /// `ε − Σ g_i x_i`.
    pub wealth_term: f64,
    pub t: u64,
}

impl KtState {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::Domain(format!("initial wealth must be positive, got {eps}")));
        }
        Ok(KtState {
            eps,
            grad_sum: 0.0,
            wealth_term: eps,
            t: 0,
        })
    }
}

impl ScalarLearner for KtState {
    fn predict(&self) -> Result<f64> {
        Ok(-self.grad_sum / (self.t + 1) as f64 * self.wealth_term)
    }

    fn update(&mut self, g: f64) -> Result<()> {
        let round = self.t + 1;
        check_gradient(round, g.abs())?;
        let x = self.predict()?;
        self.wealth_term -= g * x;
        self.grad_sum += g;
        self.t = round;
        Ok(())
    }

    fn rounds(&self) -> u64 {
        self.t
    }
}

pub fn kt_predict(state: &KtState) -> Result<f64> {
    state.predict()
}

/// Projection of `z − g/√t` onto the closed unit ball.
pub fn ogd_ball_step(z: &[f64], g: &[f64], t: u64) -> Vec<f64> {
    let eta = 1.0 / (t as f64).sqrt();
    let mut next: Vec<f64> = z.iter().zip(g).map(|(zi, gi)| zi - eta * gi).collect();
    let n = norm(&next);
    if n > 1.0 {
        next.iter_mut().for_each(|v| *v /= n);
    }
    next
}

/// Magnitude learner times unit-ball direction.
#[derive(Clone, Debug, PartialEq)]
pub struct OloReducedState<M = OloState1d> {
    pub inner: M,
    pub z: Vec<f64>,
    pub t: u64,
    /// When set the direction never moves.
    pub frozen: bool,
}

impl<M: ScalarLearner> OloReducedState<M> {
    pub fn new(inner: M, dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        Ok(OloReducedState {
            inner,
            z: vec![0.0; dimension],
            t: 0,
            frozen: false,
        })
    }

    /// A reduction whose direction stays at `z`.
    pub fn with_frozen_direction(inner: M, z: Vec<f64>) -> Result<Self> {
        if z.is_empty() || norm(&z) > 1.0 {
            return Err(Error::Domain("direction must be a nonempty unit-ball vector".into()));
        }
        Ok(OloReducedState {
            inner,
            z,
            t: 0,
            frozen: true,
        })
    }
}

pub fn reduced_predict<M: ScalarLearner>(state: &OloReducedState<M>) -> Result<Vec<f64>> {
    let y = state.inner.predict()?;
    Ok(state.z.iter().map(|zi| y * zi).collect())
}

/// A learner on `ℝᵈ`.
pub trait Learner {
    fn dimension(&self) -> usize;
    fn predict(&self) -> Result<Vec<f64>>;
    fn update(&mut self, g: &[f64]) -> Result<()>;
    fn overflowed(&self) -> bool {
        false
    }
}

impl<M: ScalarLearner> Learner for OloReducedState<M> {
    fn dimension(&self) -> usize {
        self.z.len()
    }

    fn predict(&self) -> Result<Vec<f64>> {
        reduced_predict(self)
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.z.len() {
            return Err(Error::Dimension {
                expected: self.z.len(),
                got: g.len(),
            });
        }
        let round = self.t + 1;
        check_gradient(round, norm(g))?;
        let projected = dot(g, &self.z).clamp(-1.0, 1.0);
        self.inner.update(projected)?;
        if !self.frozen {
            self.z = ogd_ball_step(&self.z, g, round);
        }
        self.t = round;
        Ok(())
    }

    fn overflowed(&self) -> bool {
        self.inner.overflowed()
    }
}

/// Dimension-one adapter used when no reduction is wanted.
#[derive(Clone, Debug, PartialEq)]
pub struct Direct<M>(pub M);

impl<M: ScalarLearner> Learner for Direct<M> {
    fn dimension(&self) -> usize {
        1
    }

    fn predict(&self) -> Result<Vec<f64>> {
        Ok(vec![self.0.predict()?])
    }

    fn update(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                got: g.len(),
            });
        }
        self.0.update(g[0])
    }

    fn overflowed(&self) -> bool {
        self.0.overflowed()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Erfi,
    Exp,
    OgdPotential,
    Linear,
    Kt,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Erfi,
        Algorithm::Exp,
        Algorithm::OgdPotential,
        Algorithm::Linear,
        Algorithm::Kt,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Erfi => "erfi",
            Algorithm::Exp => "exp",
            Algorithm::OgdPotential => "ogd-potential",
            Algorithm::Linear => "linear",
            Algorithm::Kt => "kt",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Domain(format!("unknown algorithm '{s}'")))
    }
}

/// Which learner to build, its scale and its dimension. KT's initial wealth
/// defaults to `√e·C`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LearnerConfig {
    pub algorithm: Algorithm,
    pub c: f64,
    pub eps: Option<f64>,
    pub dimension: usize,
}

impl LearnerConfig {
    pub fn new(algorithm: Algorithm, c: f64, dimension: usize) -> Self {
        LearnerConfig {
            algorithm,
            c,
            eps: None,
            dimension,
        }
    }

    pub fn kt_eps(&self) -> f64 {
        self.eps.unwrap_or(0.5f64.exp() * self.c)
    }

    pub fn potential(&self) -> Result<Option<Potential>> {
        Ok(Some(match self.algorithm {
            Algorithm::Erfi => Potential::erfi(self.c)?,
            Algorithm::Exp => Potential::exp(self.c)?,
            Algorithm::OgdPotential => Potential::ogd(self.c)?,
            Algorithm::Linear => Potential::linear(self.c)?,
            Algorithm::Kt => return Ok(None),
        }))
    }

    /// The worst-case regret bound this learner is known to satisfy against
    /// comparators of norm `u_norm`, if one is available. Includes the
    /// direction learner's `‖u‖√(2T)` in dimension above one.
    pub fn regret_bound(&self, horizon: u64, u_norm: f64) -> Option<f64> {
        let base = match self.algorithm {
            Algorithm::Erfi => erfi_regret_bound(self.c, horizon, u_norm),
            Algorithm::Exp => exp_regret_bound(self.c, horizon, u_norm),
            Algorithm::Kt => kt_regret_bound(self.kt_eps(), horizon, u_norm),
            Algorithm::OgdPotential | Algorithm::Linear => return None,
        };
        let direction = if self.dimension > 1 {
            u_norm * (2.0 * horizon as f64).sqrt()
        } else {
            0.0
        };
        Some(base + direction)
    }

    pub fn build(&self) -> Result<Box<dyn Learner + Send>> {
        if self.dimension == 0 {
            return Err(Error::Domain("dimension must be at least 1".into()));
        }
        match (self.potential()?, self.dimension) {
            (Some(p), 1) => Ok(Box::new(Direct(OloState1d::new(p)))),
            (Some(p), d) => Ok(Box::new(OloReducedState::new(OloState1d::new(p), d)?)),
            (None, 1) => Ok(Box::new(Direct(KtState::new(self.kt_eps())?))),
            (None, d) => Ok(Box::new(OloReducedState::new(KtState::new(self.kt_eps())?, d)?)),
        }
    }
}

/// Losses and gradient sum of a run; prices regret at any comparator.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretLedger {
    pub cumulative_loss: f64,
    pub gradient_sum: Vec<f64>,
    pub predictions: Vec<Vec<f64>>,
}

impl RegretLedger {
    pub fn new(dimension: usize) -> Self {
        RegretLedger {
            cumulative_loss: 0.0,
            gradient_sum: vec![0.0; dimension],
            predictions: Vec::new(),
        }
    }

    pub fn rounds(&self) -> usize {
        self.predictions.len()
    }

    pub fn record(&mut self, x: &[f64], g: &[f64]) -> Result<()> {
        let d = self.gradient_sum.len();
        for len in [x.len(), g.len()] {
            if len != d {
                return Err(Error::Dimension { expected: d, got: len });
            }
        }
        self.cumulative_loss += dot(g, x);
        self.gradient_sum.iter_mut().zip(g).for_each(|(s, gi)| *s += gi);
        self.predictions.push(x.to_vec());
        Ok(())
    }

    /// `Σ⟨g_t, x_t⟩ − ⟨Σ g_t, u⟩`.
    pub fn regret(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.gradient_sum.len() {
            return Err(Error::Dimension {
                expected: self.gradient_sum.len(),
                got: u.len(),
            });
        }
        Ok(self.cumulative_loss - dot(&self.gradient_sum, u))
    }
}

pub fn regret(ledger: &RegretLedger, u: &[f64]) -> Result<f64> {
    ledger.regret(u)
}

/// Runs `learner` for `horizon` rounds; `adversary(t, x_t)` returns `g_t`.
pub fn run_online<L, F>(learner: &mut L, horizon: u64, mut adversary: F) -> Result<RegretLedger>
where
    L: Learner + ?Sized,
    F: FnMut(u64, &[f64]) -> Vec<f64>,
{
    let mut ledger = RegretLedger::new(learner.dimension());
    for t in 1..=horizon {
        let x = learner.predict()?;
        let g = adversary(t, &x);
        learner.update(&g)?;
        ledger.record(&x, &g)?;
    }
    Ok(ledger)
}

/// `C√T + ‖u‖√(2T)[√log(1 + ‖u‖/(√2C)) + 2]`, the erfi learner's regret bound.
pub fn erfi_regret_bound(c: f64, horizon: u64, u_norm: f64) -> f64 {
    let tf = horizon as f64;
    c * tf.sqrt()
        + u_norm * (2.0 * tf).sqrt() * ((u_norm / (2f64.sqrt() * c)).ln_1p().sqrt() + 2.0)
}

/// `C√e + ‖u‖√(2T)[√log(1 + ‖u‖T/C) + 1]`, the exp learner's regret bound.
pub fn exp_regret_bound(c: f64, horizon: u64, u_norm: f64) -> f64 {
    let tf = horizon as f64;
    c * 0.5f64.exp() + u_norm * (2.0 * tf).sqrt() * ((u_norm * tf / c).ln_1p().sqrt() + 1.0)
}

/// `ε + |u|√(T log(1 + 24u²T²/ε²))`, the KT regret bound.
pub fn kt_regret_bound(eps: f64, horizon: u64, u_norm: f64) -> f64 {
    let tf = horizon as f64;
    eps + u_norm.abs() * (tf * (24.0 * u_norm * u_norm * tf * tf / (eps * eps)).ln_1p()).sqrt()
}

/// The conjugate `f*_T(‖u‖)` of the erfi potential at the horizon, which
/// bounds the erfi learner's regret and sits below [`erfi_regret_bound`].
pub fn conjugate_regret_bound(potential: &Potential, horizon: u64, u_norm: f64) -> Result<f64> {
    if !matches!(potential.kind(), PotentialKind::Erfi) {
        return Err(Error::Domain("conjugate regret bound needs an Erfi potential".into()));
    }
    fenchel_conjugate(potential, horizon as f64, u_norm)
}

/// `(3C/8) e^{S̃²/2T}(S̃²/T + 1) + 2C` at `S̃ = √(2T)[√log(1 + u/(√2C)) + 1]`:
/// how far below [`conjugate_regret_bound`] an adversary can hold the erfi
/// learner's regret. The gap depends on `u/C` but not on `T`.
pub fn lower_bound_gap(c: f64, horizon: u64, u_norm: f64) -> Result<f64> {
    let tf = horizon as f64;
    let limit = 3.0 / 8.0 * c * (tf + 3.0) * (tf / 2.0).exp();
    if !(u_norm >= 0.0 && u_norm <= limit) {
        return Err(Error::Domain(format!("u = {u_norm} outside [0, {limit}]")));
    }
    let root = (u_norm / (2f64.sqrt() * c)).ln_1p().sqrt() + 1.0;
    // S̃²/2T = root², S̃²/T = 2 root²
    let r2 = root * root;
    Ok(3.0 * c / 8.0 * r2.exp() * (2.0 * r2 + 1.0) + 2.0 * c)
}

/// `erfi_regret_bound(C, T, U) / (U√(T log U))`; independent of `T`.
pub fn leading_ratio(c: f64, u: f64, horizon: u64) -> Result<f64> {
    if !(u > 1.0) || horizon == 0 {
        return Err(Error::Domain(format!("leading ratio needs U > 1, T ≥ 1 (U={u})")));
    }
    Ok(erfi_regret_bound(c, horizon, u) / (u * (horizon as f64 * u.ln()).sqrt()))
}
