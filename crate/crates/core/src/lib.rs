//! Discrete-time simulation laboratory for the FlipIt stealthy security game.
//!
//! Two players contend for a single resource. Player 0 plays a renewal
//! strategy (periodic, exponential, uniform or normal inter-move times);
//! player 1 is adaptive and only learns the opponent's last move time when it
//! moves itself. The crate provides:
//!
//! - [`game`]: the tick engine and ground-truth ledger of control, moves and benefit.
//! - [`renewal`]: opponent move schedules and distribution evaluators.
//! - [`env`]: a reset/step environment exposing last-move observations and rewards.
//! - [`qflip`]: the tabular Q-learning agent.
//! - [`greedy`]: the local-benefit maximizing baseline.
//! - [`numerics`]: adaptive quadrature and bracketed scalar maximization.
//! - [`experiment`]: seeded multi-run experiments, sweeps, oracles and CSV/JSON output.

pub mod env;
pub mod error;
pub mod experiment;
pub mod game;
pub mod greedy;
pub mod numerics;
pub mod qflip;
pub mod renewal;

pub use error::{Error, Result};
pub use game::{Player, Tick};
