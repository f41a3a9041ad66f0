//! Renewal strategies for player 0.
//!
//! Inter-arrival times are i.i.d. draws from a continuous law, rounded to the
//! nearest tick and clamped to at least one tick so schedules stay strictly
//! increasing. The periodic strategy starts at a phase drawn uniformly from
//! `{0, ..., δ}`; the others place their first move one inter-arrival after
//! `t = 0`.

use std::f64::consts::SQRT_2;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::game::Tick;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RenewalSpec {
    Periodic {
        delta: u64,
    },
    Exponential {
        rate: f64,
    },
    /// Uniform on `[delta - width/2, delta + width/2]`.
    Uniform {
        delta: f64,
        width: f64,
    },
    Normal {
        mean: f64,
        std_dev: f64,
    },
}

impl RenewalSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RenewalSpec::Periodic { .. } => "periodic",
            RenewalSpec::Exponential { .. } => "exponential",
            RenewalSpec::Uniform { .. } => "uniform",
            RenewalSpec::Normal { .. } => "normal",
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &str, msg: String| Err(Error::config(format!("opponent.{field}"), msg));
        match *self {
            RenewalSpec::Periodic { delta } if delta < 1 => {
                bad("delta", "period must be >= 1".into())
            }
            RenewalSpec::Exponential { rate } if !(rate.is_finite() && rate > 0.0) => {
                bad("rate", format!("rate must be positive, got {rate}"))
            }
            RenewalSpec::Uniform { delta, width } => {
                if !(width.is_finite() && width > 0.0) {
                    bad("width", format!("width must be positive, got {width}"))
                } else if !(delta.is_finite() && delta - width / 2.0 >= 0.0) {
                    bad(
                        "delta",
                        format!(
                            "support [{}, {}] must be nonnegative",
                            delta - width / 2.0,
                            delta + width / 2.0
                        ),
                    )
                } else {
                    Ok(())
                }
            }
            RenewalSpec::Normal { mean, std_dev } => {
                if !(std_dev.is_finite() && std_dev > 0.0) {
                    bad(
                        "std_dev",
                        format!("standard deviation must be positive, got {std_dev}"),
                    )
                } else if !(mean.is_finite() && mean > 0.0) {
                    bad("mean", format!("mean must be positive, got {mean}"))
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }

    /// Mean inter-move time ρ.
    pub fn mean(&self) -> f64 {
        match *self {
            RenewalSpec::Periodic { delta } => delta as f64,
            RenewalSpec::Exponential { rate } => 1.0 / rate,
            RenewalSpec::Uniform { delta, .. } => delta,
            RenewalSpec::Normal { mean, .. } => mean,
        }
    }

    /// Density of the continuous inter-arrival law.
    ///
    /// The periodic law is a point mass at δ and has no density; it returns 0
    /// everywhere. Use [`RenewalSpec::atom`] for it.
    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            RenewalSpec::Periodic { .. } => 0.0,
            RenewalSpec::Exponential { rate } => {
                if x > 0.0 {
                    rate * (-rate * x).exp()
                } else {
                    0.0
                }
            }
            RenewalSpec::Uniform { delta, width } => {
                let (lo, hi) = (delta - width / 2.0, delta + width / 2.0);
                if (lo..=hi).contains(&x) {
                    1.0 / width
                } else {
                    0.0
                }
            }
            RenewalSpec::Normal { mean, std_dev } => {
                let z = (x - mean) / std_dev;
                (-0.5 * z * z).exp() / (std_dev * (2.0 * std::f64::consts::PI).sqrt())
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        match *self {
            RenewalSpec::Periodic { delta } => {
                if x >= delta as f64 {
                    1.0
                } else {
                    0.0
                }
            }
            RenewalSpec::Exponential { rate } => {
                if x > 0.0 {
                    -(-rate * x).exp_m1()
                } else {
                    0.0
                }
            }
            RenewalSpec::Uniform { delta, width } => {
                ((x - (delta - width / 2.0)) / width).clamp(0.0, 1.0)
            }
            RenewalSpec::Normal { mean, std_dev } => 0.5 * erfc(-(x - mean) / (std_dev * SQRT_2)),
        }
    }

    /// Location of the point mass for degenerate (periodic) laws.
    pub fn atom(&self) -> Option<f64> {
        match *self {
            RenewalSpec::Periodic { delta } => Some(delta as f64),
            _ => None,
        }
    }

    /// Points where the density is not smooth (support edges).
    pub fn breakpoints(&self) -> Vec<f64> {
        match *self {
            RenewalSpec::Uniform { delta, width } => vec![delta - width / 2.0, delta + width / 2.0],
            RenewalSpec::Exponential { .. } => vec![0.0],
            _ => Vec::new(),
        }
    }

    /// Draws one inter-arrival time in ticks (at least 1).
    pub fn sample_interarrival<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let x = match *self {
            RenewalSpec::Periodic { delta } => return delta,
            RenewalSpec::Exponential { rate } => {
                // 1 - U lies in (0, 1], keeping the logarithm finite.
                let u: f64 = 1.0 - rng.gen::<f64>();
                -u.ln() / rate
            }
            RenewalSpec::Uniform { delta, width } => delta - width / 2.0 + width * rng.gen::<f64>(),
            RenewalSpec::Normal { mean, std_dev } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + std_dev * z
            }
        };
        discretize(x)
    }

    /// Tick of the first move.
    pub fn first_move<R: Rng + ?Sized>(&self, rng: &mut R) -> Tick {
        match *self {
            RenewalSpec::Periodic { delta } => rng.gen_range(0..=delta),
            _ => self.sample_interarrival(rng),
        }
    }
}

impl fmt::Display for RenewalSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RenewalSpec::Periodic { delta } => write!(f, "Per({delta})"),
            RenewalSpec::Exponential { rate } => write!(f, "Exp({rate})"),
            RenewalSpec::Uniform { delta, width } => write!(f, "Uni({delta}, {width})"),
            RenewalSpec::Normal { mean, std_dev } => write!(f, "Norm({mean}, {std_dev})"),
        }
    }
}

fn discretize(x: f64) -> u64 {
    if !x.is_finite() {
        return if x > 0.0 { u64::MAX / 4 } else { 1 };
    }
    (x.round().max(1.0)) as u64
}

/// A source of move ticks for player 0.
///
/// Implementations must yield strictly increasing ticks. Only the renewal
/// schedule is used by experiments; scripted sources exist for tests.
pub trait MoveSource: Send {
    /// The next pending move, or `None` if the source is exhausted.
    fn peek(&self) -> Option<Tick>;
    fn advance(&mut self);
}

/// Seeded renewal schedule.
#[derive(Debug, Clone)]
pub struct MoveSchedule {
    spec: RenewalSpec,
    rng: ChaCha8Rng,
    next_move: Tick,
}

impl MoveSchedule {
    pub fn new(spec: RenewalSpec, rng: ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let mut rng = rng;
        let next_move = spec.first_move(&mut rng);
        Ok(Self {
            spec,
            rng,
            next_move,
        })
    }

    pub fn spec(&self) -> &RenewalSpec {
        &self.spec
    }
}

impl MoveSource for MoveSchedule {
    fn peek(&self) -> Option<Tick> {
        Some(self.next_move)
    }

    fn advance(&mut self) {
        self.next_move += self.spec.sample_interarrival(&mut self.rng);
    }
}

impl Iterator for MoveSchedule {
    type Item = Tick;

    fn next(&mut self) -> Option<Tick> {
        let t = self.next_move;
        self.advance();
        Some(t)
    }
}

/// A fixed, finite list of move ticks.
#[derive(Debug, Clone)]
pub struct ScriptedMoves {
    ticks: Vec<Tick>,
    pos: usize,
}

impl ScriptedMoves {
    pub fn new(mut ticks: Vec<Tick>) -> Self {
        ticks.sort_unstable();
        ticks.dedup();
        Self { ticks, pos: 0 }
    }
}

impl MoveSource for ScriptedMoves {
    fn peek(&self) -> Option<Tick> {
        self.ticks.get(self.pos).copied()
    }

    fn advance(&mut self) {
        self.pos += 1;
    }
}
