//! The unconstrained one-dimensional coin-betting game.
//!
//! Each round the player bets `x_t ∈ ℝ`, the adversary reveals a coin
//! `c_t ∈ [−1, 1]` and the player's wealth grows by `c_t x_t`. The player
//! induced by a potential `V` bets the half central difference
//! `½[V(t, S+1) − V(t, S−1)]` of the coin sum `S` seen so far; the matching
//! adversary picks the boundary coin maximizing `V(t, S + c) − c x_t`.

use std::io::{self, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::potentials::{Potential, PotentialKind};

/// A bet, with a flag set when the exact amount exceeded the `f64` range
/// and was clamped to `±f64::MAX`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bet {
    pub amount: f64,
    pub saturated: bool,
}

/// `½[V(t, S+1) − V(t, S−1)]`.
pub fn player_bet(potential: &Potential, t: u64, s_prev: f64) -> Result<Bet> {
    if t == 0 {
        return Err(Error::Domain("rounds are numbered from 1".into()));
    }
    let tf = t as f64;
    match (potential.value(tf, s_prev + 1.0), potential.value(tf, s_prev - 1.0)) {
        (Ok(up), Ok(down)) => {
            let amount = 0.5 * (up - down);
            if amount.is_finite() {
                return Ok(Bet {
                    amount,
                    saturated: false,
                });
            }
        }
        (Err(e @ Error::Domain(_)), _) | (_, Err(e @ Error::Domain(_))) => return Err(e),
        _ => {}
    }
    let up = potential.value_scaled(tf, s_prev + 1.0)?;
    let down = potential.value_scaled(tf, s_prev - 1.0)?;
    let (amount, saturated) = up.sub(down).scale(0.5).to_f64_saturating();
    Ok(Bet { amount, saturated })
}

/// The boundary coin maximizing `V(t, S + c) − c x`; ties go to `+1`.
pub fn adversary_coin(potential: &Potential, t: u64, s_prev: f64, bet: f64) -> Result<f64> {
    // objective(+1) − objective(−1) = 2(½[V(t,S+1) − V(t,S−1)] − x)
    let half_diff = player_bet(potential, t, s_prev)?.amount;
    Ok(if half_diff >= bet { 1.0 } else { -1.0 })
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlayerPolicy {
    pub potential: Potential,
}

impl PlayerPolicy {
    pub fn new(potential: Potential) -> Self {
        PlayerPolicy { potential }
    }

    pub fn bet(&self, t: u64, s_prev: f64) -> Result<Bet> {
        player_bet(&self.potential, t, s_prev)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AdversaryPolicy {
    /// Argmax of the potential's one-step objective over `{−1, +1}`.
    PdeArgmax(Potential),
    /// A fixed coin list, one entry per round.
    Scripted(Vec<f64>),
    /// Fair `±1` coins from a seeded generator, ignoring the bets.
    Rademacher { seed: u64 },
}

pub fn rademacher_adversary(seed: u64) -> AdversaryPolicy {
    AdversaryPolicy::Rademacher { seed }
}

/// Per-game mutable state of an adversary.
pub struct AdversaryRun<'a> {
    policy: &'a AdversaryPolicy,
    rng: Option<ChaCha8Rng>,
}

impl<'a> AdversaryRun<'a> {
    pub fn new(policy: &'a AdversaryPolicy) -> Self {
        let rng = match policy {
            AdversaryPolicy::Rademacher { seed } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            _ => None,
        };
        AdversaryRun { policy, rng }
    }

    pub fn next_coin(&mut self, t: u64, s_prev: f64, bet: f64) -> Result<f64> {
        match self.policy {
            AdversaryPolicy::PdeArgmax(p) => adversary_coin(p, t, s_prev, bet),
            AdversaryPolicy::Scripted(coins) => coins
                .get((t - 1) as usize)
                .copied()
                .ok_or_else(|| Error::Domain(format!("script has no coin for round {t}"))),
            AdversaryPolicy::Rademacher { .. } => {
                let rng = self.rng.as_mut().expect("seeded at construction");
                Ok(if rng.gen::<bool>() { 1.0 } else { -1.0 })
            }
        }
    }
}

/// Round index, coin sum, wealth and the full history of one game.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CoinGameState {
    pub t: u64,
    pub coin_sum: f64,
    pub wealth: f64,
    pub coins: Vec<f64>,
    pub bets: Vec<f64>,
    /// Sticky: set once any bet was clamped.
    pub overflow: bool,
}

impl CoinGameState {
    pub fn new() -> Self {
        Self::default()
    }

    /// Applies one round. Rejects coins outside `[−1, 1]`.
    pub fn record(&mut self, bet: Bet, coin: f64) -> Result<()> {
        let round = self.t + 1;
        if !(-1.0..=1.0).contains(&coin) {
            return Err(Error::CoinRange { round, coin });
        }
        self.t = round;
        self.coin_sum += coin;
        self.wealth += coin * bet.amount;
        self.coins.push(coin);
        self.bets.push(bet.amount);
        self.overflow |= bet.saturated;
        Ok(())
    }

    /// `Σ c_i x_i` recomputed from the stored history.
    pub fn recomputed_wealth(&self) -> f64 {
        self.coins.iter().zip(&self.bets).map(|(c, x)| c * x).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    pub bet: f64,
    pub coin: f64,
    pub coin_sum: f64,
    pub wealth: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub rounds: Vec<RoundRecord>,
    pub state: CoinGameState,
}

impl Trajectory {
    pub fn final_wealth(&self) -> f64 {
        self.state.wealth
    }

    pub fn coin_sum(&self) -> f64 {
        self.state.coin_sum
    }

    /// One CSV row per round: `t,bet,coin,coin_sum,wealth`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,bet,coin,coin_sum,wealth")?;
        for r in &self.rounds {
            writeln!(out, "{},{},{},{},{}", r.t, r.bet, r.coin, r.coin_sum, r.wealth)?;
        }
        Ok(())
    }
}

/// Plays `horizon` rounds.
pub fn play_game(
    player: &PlayerPolicy,
    adversary: &AdversaryPolicy,
    horizon: u64,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let mut state = CoinGameState::new();
    let mut run = AdversaryRun::new(adversary);
    let mut rounds = Vec::with_capacity(horizon as usize);
    for t in 1..=horizon {
        let bet = player.bet(t, state.coin_sum)?;
        let coin = run.next_coin(t, state.coin_sum, bet.amount)?;
        state.record(bet, coin)?;
        rounds.push(RoundRecord {
            t,
            bet: bet.amount,
            coin,
            coin_sum: state.coin_sum,
            wealth: state.wealth,
        });
    }
    Ok(Trajectory { rounds, state })
}

/// Coins `c₁ ∈ [−1,1]`, `c₂..c_T ∈ {±1}` summing to `S`, built in three
/// phases: a fractional first coin `S − S̃`, an alternating block that keeps
/// the partial sums within `[−1, 1]`, then `|S̃|` copies of `sign(S̃)`.
///
/// `S̃` is the integer with `|S̃| ≤ T`, `|S̃| ≡ T − 1 (mod 2)` and
/// `|S − S̃| ≤ 1`; when two qualify the one on the side of `sign(S)` wins,
/// and `+1` wins at `S = 0`.
pub fn extremal_coin_sequence(horizon: u64, s: f64) -> Result<Vec<f64>> {
    if horizon == 0 {
        return Err(Error::Domain("horizon must be at least 1".into()));
    }
    let tf = horizon as f64;
    if !(s.abs() <= tf) {
        return Err(Error::Domain(format!("|S| = {} exceeds T = {horizon}", s.abs())));
    }
    let parity = (horizon as i64 - 1).rem_euclid(2);
    let preferred = if s >= 0.0 { 1.0 } else { -1.0 };
    let candidates = [s.floor() - 1.0, s.floor(), s.floor() + 1.0, s.floor() + 2.0];
    let s_tilde = candidates
        .into_iter()
        .filter(|&n| {
            (n.abs() as i64).rem_euclid(2) == parity && n.abs() <= tf && (s - n).abs() <= 1.0
        })
        .max_by(|a, b| (a * preferred).total_cmp(&(b * preferred)))
        .ok_or_else(|| Error::Domain(format!("no admissible integer near S = {s}")))?;
    let magnitude = s_tilde.abs() as u64;
    let first = s - s_tilde;
    let lead = if first < 0.0 { -1.0 } else { 1.0 };
    let mut coins = Vec::with_capacity(horizon as usize);
    coins.push(first);
    for t in 2..=(horizon - magnitude) {
        coins.push(if t % 2 == 0 { -lead } else { lead });
    }
    coins.extend(std::iter::repeat(s_tilde.signum()).take(magnitude as usize));
    Ok(coins)
}

/// Guaranteed wealth after `T` rounds with coin sum `S`: `V(T,S)` for the
/// erfi potential, `V(T,S) − C√e` for the exp potential.
pub fn wealth_lower_bound(potential: &Potential, horizon: u64, s: f64) -> Result<f64> {
    let value = potential.value(horizon as f64, s)?;
    match potential.kind() {
        PotentialKind::Erfi => Ok(value),
        PotentialKind::Exp => Ok(value - potential.params().c * 0.5f64.exp()),
        _ => Err(Error::Domain(
            "wealth lower bounds are available for Erfi and Exp potentials".into(),
        )),
    }
}

/// `V(T,S) + (3C/8) e^{S²/2T} (S²/T + 1) + 2C` for the erfi potential.
pub fn erfi_wealth_upper_bound(c: f64, horizon: u64, s: f64) -> Result<f64> {
    let tf = horizon as f64;
    if !(s.abs() <= tf) {
        return Err(Error::Domain(format!("|S| = {} exceeds T = {horizon}", s.abs())));
    }
    let x = s * s / tf;
    let v = Potential::erfi(c)?.value(tf, s)?;
    Ok(v + 3.0 * c / 8.0 * (x / 2.0).exp() * (x + 1.0) + 2.0 * c)
}

/// `min_x max_{c=±1} [V₁(t+1, S+c) − c x] − V₁(t, S)` for `V₁ = S² − t`,
/// with the minimizing `x` taken at the discrete derivative. Exactly zero.
pub fn verify_value_function_ogd(t: u64, s: f64) -> f64 {
    let v = |t: f64, s: f64| s * s - t;
    let next = (t + 1) as f64;
    let x = 0.5 * (v(next, s + 1.0) - v(next, s - 1.0));
    let worst = [1.0, -1.0]
        .into_iter()
        .map(|c| v(next, s + c) - c * x)
        .fold(f64::NEG_INFINITY, f64::max);
    worst - v(t as f64, s)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailCheck {
    /// `P[|Σ z_t| ≥ k]` for `T` fair `±1` variables.
    pub exact_prob: f64,
    /// `√(2/π) k√T/(k² + T) e^{−k²/2T} − 1/√T`.
    pub bound: f64,
}

impl TailCheck {
    pub fn holds(&self) -> bool {
        self.exact_prob >= self.bound
    }
}

/// Neumaier-compensated sum.
fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Exact Rademacher tail probability against its Gaussian-based lower bound.
///
/// Binomial weights are built by multiplying successive ratios outward from
/// the mode and normalized by their own compensated total, so no `2^{−T}`
/// factor or log-gamma is needed.
pub fn tail_bound_check(horizon: u64, k: f64) -> Result<TailCheck> {
    if horizon == 0 || !(k > 0.0) {
        return Err(Error::Domain(format!("tail check needs T ≥ 1, k > 0 (T={horizon}, k={k})")));
    }
    let n = horizon as usize;
    let mode = n / 2;
    let mut weights = vec![0.0f64; n + 1];
    weights[mode] = 1.0;
    for h in (mode + 1)..=n {
        weights[h] = weights[h - 1] * (n - h + 1) as f64 / h as f64;
    }
    for h in (0..mode).rev() {
        weights[h] = weights[h + 1] * (h + 1) as f64 / (n - h) as f64;
    }
    let total = compensated_sum(weights.iter().copied());
    let tail = compensated_sum(
        weights
            .iter()
            .enumerate()
            .filter(|(h, _)| (2.0 * *h as f64 - horizon as f64).abs() >= k)
            .map(|(_, w)| *w),
    );
    let tf = horizon as f64;
    let bound = (2.0 / std::f64::consts::PI).sqrt() * k * tf.sqrt() / (k * k + tf)
        * (-k * k / (2.0 * tf)).exp()
        - 1.0 / tf.sqrt();
    Ok(TailCheck {
        exact_prob: tail / total,
        bound,
    })
}

fn check_optimality_domain(lambda: f64, horizon: u64) -> Result<()> {
    let lambda_min = ((2f64.sqrt() + 1.0) / 2.0).exp();
    if !(lambda >= lambda_min) {
        return Err(Error::Domain(format!("λ = {lambda} below {lambda_min}")));
    }
    let t_min = 8.0 * std::f64::consts::PI * lambda * lambda * lambda.ln();
    if (horizon as f64) < t_min {
        return Err(Error::Domain(format!("T = {horizon} below 8πλ² log λ = {t_min}")));
    }
    Ok(())
}

/// `2√(2π) λ √(log λ) C √T`: no player guaranteeing `−C√T` wealth can beat
/// this against every adversary that pushes `|S| ≥ √(2T log λ)`.
pub fn wealth_optimality_bound(c: f64, lambda: f64, horizon: u64) -> Result<f64> {
    check_optimality_domain(lambda, horizon)?;
    Ok(2.0 * (2.0 * std::f64::consts::PI).sqrt() * lambda * lambda.ln().sqrt() * c
        * (horizon as f64).sqrt())
}

/// `C√T [λ/(2 log λ) − 3/2]`, the erfi player's guaranteed wealth at
/// `|S| = √(2T log λ)` in simplified form.
pub fn optimality_gap_lower(c: f64, lambda: f64, horizon: u64) -> Result<f64> {
    check_optimality_domain(lambda, horizon)?;
    Ok(c * (horizon as f64).sqrt() * (lambda / (2.0 * lambda.ln()) - 1.5))
}
