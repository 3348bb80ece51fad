//! Potential functions generated by the backward heat equation, and the
//! coin-betting and unconstrained online linear optimization algorithms they
//! induce.
//!
//! * [`specfun`]: overflow-safe `∫e^{x²}`, Dawson and double integrals.
//! * [`potentials`]: value functions, derivatives, residuals, conjugates.
//! * [`betting`]: the coin-betting game, player and adversary policies.
//! * [`olo`]: one- and d-dimensional learners, KT baseline, regret bounds.

pub mod betting;
pub mod error;
pub mod olo;
pub mod potentials;
pub mod specfun;

pub use error::{Error, Result};
pub use potentials::{Potential, PotentialKind, PotentialParams};
pub use specfun::ScaledValue;
