//! Greedy baseline: maximizes the local benefit
//!
//! `L(z) = (1/z) [ ∫_0^z x f̂(x) dx + z ∫_z^∞ f̂(x) dx − k1 ]`,
//!
//! with `f̂(x) = f(τ + x) / (1 − F(τ))` the opponent's residual inter-arrival
//! density given age `τ`. The agent moves at the maximizer `ẑ` if `L(ẑ) > 0`
//! and otherwise drops out for good.
//!
//! Ticks are mapped onto the continuous model as follows: an agent move in
//! tick `t` precedes any opponent move in the same tick, so when the agent acts
//! in tick `n` an opponent move revealed at tick `L` is `n − L − 1` time units
//! old. Planning uses that age; at game start the opponent is taken to have
//! moved at `t = 0` with age 0.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::Tick;
use crate::numerics::{
    integrate_pieces, integrate_tail_pieces, maximize_scalar, MaximizerSettings, QuadratureSettings,
};
use crate::renewal::RenewalSpec;

/// Residual survival below which the opponent's move is considered certain to have happened.
pub const CERTAIN_MOVE_EPS: f64 = 1e-12;

/// Maximum local benefit at or below this value means dropping out.
const DROP_OUT_TOLERANCE: f64 = 1e-12;

fn residual_survival(spec: &RenewalSpec, age: f64) -> Result<f64> {
    let cdf = spec.cdf(age);
    if cdf >= 1.0 - CERTAIN_MOVE_EPS {
        return Err(Error::CertainMovePassed { age, cdf });
    }
    Ok(1.0 - cdf)
}

/// Density of the opponent's remaining time to its next move, given age `tau`.
///
/// For the periodic law the residual is a point mass and this returns 0.
pub fn conditional_pdf(spec: &RenewalSpec, tau: f64, x: f64) -> Result<f64> {
    let survival = residual_survival(spec, tau)?;
    Ok(spec.pdf(tau + x) / survival)
}

/// Local benefit `L(z)` for an opponent of age `tau` and move cost `move_cost`.
pub fn local_benefit(
    spec: &RenewalSpec,
    tau: f64,
    z: f64,
    move_cost: f64,
    quad: &QuadratureSettings,
) -> Result<f64> {
    if z.is_nan() || z <= 0.0 {
        return Err(Error::config(
            "z",
            format!("move delay must be positive, got {z}"),
        ));
    }
    let survival = residual_survival(spec, tau)?;

    // Point mass at X: the integrals reduce to X·1{X ≤ z} and 1{X > z}.
    if let Some(atom) = spec.atom() {
        let remaining = atom - tau;
        let expected_gain = if remaining <= z { remaining } else { z };
        return Ok((expected_gain - move_cost) / z);
    }

    let residual = |x: f64| spec.pdf(tau + x) / survival;
    let shifted: Vec<f64> = spec.breakpoints().iter().map(|b| b - tau).collect();

    let mut points = vec![0.0];
    points.extend(shifted.iter().copied().filter(|&b| b > 0.0 && b < z));
    points.push(z);
    let head = integrate_pieces(&|x: f64| x * residual(x), &points, quad)?;
    let tail = integrate_tail_pieces(residual, z, &shifted, quad)?;
    Ok((head + z * tail - move_cost) / z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Plan {
    /// Move this many ticks after the current one.
    MoveAfter(u64),
    DropOut,
}

#[derive(Debug, Clone)]
pub struct GreedyAgent {
    spec: RenewalSpec,
    move_cost: f64,
    quad: QuadratureSettings,
    resolution: usize,
    tau: u64,
    next_move: Option<Tick>,
    dropped_out: bool,
    plans: HashMap<u64, Plan>,
}

impl GreedyAgent {
    /// Creates the agent and plans its first move from `t = 0`.
    pub fn new(spec: RenewalSpec, move_cost: f64) -> Result<Self> {
        spec.validate()?;
        if !(move_cost.is_finite() && move_cost > 0.0) {
            return Err(Error::config("game.cost_1", "must be positive"));
        }
        let mut agent = Self {
            spec,
            move_cost,
            quad: QuadratureSettings::default(),
            resolution: 400,
            tau: 0,
            next_move: None,
            dropped_out: false,
            plans: HashMap::new(),
        };
        agent.schedule(0, 0.0)?;
        Ok(agent)
    }

    pub fn tau(&self) -> u64 {
        self.tau
    }

    pub fn next_move(&self) -> Option<Tick> {
        self.next_move
    }

    pub fn dropped_out(&self) -> bool {
        self.dropped_out
    }

    pub fn wants_move(&self, tick: Tick) -> bool {
        self.next_move == Some(tick)
    }

    /// Computes the plan for an opponent move of continuous age `age`.
    pub fn plan_next_move(&self, age: f64) -> Result<Plan> {
        if self.spec.cdf(age) >= 1.0 - CERTAIN_MOVE_EPS {
            return Ok(Plan::MoveAfter(1));
        }
        let hi = (20.0 * self.spec.mean()).max(10.0 * self.tau as f64 + 10.0);
        let settings = MaximizerSettings {
            resolution: self.resolution,
            ..MaximizerSettings::new(1.0, hi)
        };
        let (z, best) = maximize_scalar(
            |z| {
                local_benefit(&self.spec, age, z, self.move_cost, &self.quad)
                    .unwrap_or(f64::NEG_INFINITY)
            },
            &settings,
        )?;
        if best <= DROP_OUT_TOLERANCE {
            Ok(Plan::DropOut)
        } else {
            Ok(Plan::MoveAfter((z.round() as u64).max(1)))
        }
    }

    fn schedule(&mut self, now: Tick, age: f64) -> Result<()> {
        let plan = match self.plans.get(&self.tau) {
            Some(plan) => *plan,
            None => {
                let plan = self.plan_next_move(age)?;
                self.plans.insert(self.tau, plan);
                plan
            }
        };
        match plan {
            Plan::MoveAfter(dz) => self.next_move = Some(now + dz),
            Plan::DropOut => {
                self.dropped_out = true;
                self.next_move = None;
            }
        }
        Ok(())
    }

    /// Handles last-move feedback from a move made at tick `now`.
    pub fn on_feedback(&mut self, revealed: Option<Tick>, now: Tick) -> Result<()> {
        if self.dropped_out {
            return Ok(());
        }
        self.tau = now - revealed.unwrap_or(0).min(now);
        // The initial plan is keyed by τ = 0 with age 0; feedback always has τ >= 1.
        let age = self.tau.saturating_sub(1) as f64;
        self.schedule(now, age)
    }
}
