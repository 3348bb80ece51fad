use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A result left the finite `f64` range; the overflow-safe variant of the
    /// operation can be used instead.
    #[error("overflow: {0}")]
    Overflow(String),
    /// Arguments outside an operation's domain.
    #[error("domain error: {0}")]
    Domain(String),
    /// A combination that would not stay convex in the coin sum.
    #[error("potential is not convex: {0}")]
    NotConvex(String),
    #[error("bisection did not converge after {0} steps")]
    NoConvergence(usize),
    #[error("gradient norm {norm} exceeds 1 at round {round}")]
    GradientNorm { round: u64, norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coin {coin} outside [-1, 1] at round {round}")]
    CoinRange { round: u64, coin: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
