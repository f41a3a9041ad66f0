//! Reset/step environment around the game engine.
//!
//! Player 1 is the learning agent; player 0 follows a renewal schedule. The
//! agent sees an [`Observation`] and a reward after each step, plus the
//! last-move feedback of its own moves. Ground truth travels separately in
//! [`GroundTruth`] for logging and is never handed to agents.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{ControlLedger, GameConfig, MoveKind, MoveOutcome, Player, Tick};
use crate::renewal::{MoveSchedule, MoveSource, RenewalSpec};

/// RNG stream reserved for each player's generator (same seed, distinct streams).
pub const OPPONENT_STREAM: u64 = 0;
pub const AGENT_STREAM: u64 = 1;

/// Independent generator for one player of one run.
pub fn player_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    Wait,
    Move,
}

impl Action {
    pub const ALL: [Action; 2] = [Action::Wait, Action::Move];

    pub fn index(self) -> usize {
        match self {
            Action::Wait => 0,
            Action::Move => 1,
        }
    }

    pub fn from_index(i: usize) -> Action {
        if i == 0 {
            Action::Wait
        } else {
            Action::Move
        }
    }

    pub fn is_move(self) -> bool {
        self == Action::Move
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObservationScheme {
    /// Ticks since the opponent's last known move (`-1` while none is known).
    #[serde(rename = "opp_lm", alias = "oppLM")]
    OppLm,
    /// Ticks since the agent's own last move.
    #[serde(rename = "own_lm", alias = "ownLM")]
    OwnLm,
    /// Both of the above.
    #[serde(rename = "composite")]
    Composite,
}

impl fmt::Display for ObservationScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObservationScheme::OppLm => "opp_lm",
            ObservationScheme::OwnLm => "own_lm",
            ObservationScheme::Composite => "composite",
        })
    }
}

/// Sentinel for "no opponent move known".
pub const UNKNOWN: i64 = -1;

/// What the agent sees at the start of a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Observation {
    OppLm(i64),
    OwnLm(u64),
    Composite { own: u64, opp: i64 },
}

impl Observation {
    pub fn new(scheme: ObservationScheme, own: u64, opp: i64) -> Self {
        match scheme {
            ObservationScheme::OppLm => Observation::OppLm(opp),
            ObservationScheme::OwnLm => Observation::OwnLm(own),
            ObservationScheme::Composite => Observation::Composite { own, opp },
        }
    }

    pub fn scheme(&self) -> ObservationScheme {
        match self {
            Observation::OppLm(_) => ObservationScheme::OppLm,
            Observation::OwnLm(_) => ObservationScheme::OwnLm,
            Observation::Composite { .. } => ObservationScheme::Composite,
        }
    }

    pub fn opp_component(&self) -> Option<i64> {
        match *self {
            Observation::OppLm(o) | Observation::Composite { opp: o, .. } => Some(o),
            Observation::OwnLm(_) => None,
        }
    }

    pub fn own_component(&self) -> Option<u64> {
        match *self {
            Observation::OwnLm(w) | Observation::Composite { own: w, .. } => Some(w),
            Observation::OppLm(_) => None,
        }
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Observation::OppLm(o) => write!(f, "o:{o}"),
            Observation::OwnLm(w) => write!(f, "w:{w}"),
            Observation::Composite { own, opp } => write!(f, "c:{own},{opp}"),
        }
    }
}

impl FromStr for Observation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (tag, body) = s
            .split_once(':')
            .ok_or_else(|| format!("missing scheme tag in `{s}`"))?;
        let int = |v: &str| {
            v.trim()
                .parse::<i64>()
                .map_err(|e| format!("bad integer `{v}`: {e}"))
        };
        let nonneg = |v: &str| {
            v.trim()
                .parse::<u64>()
                .map_err(|e| format!("bad count `{v}`: {e}"))
        };
        let opp = |v: i64| {
            if v == UNKNOWN || v >= 1 {
                Ok(v)
            } else {
                Err(format!("opponent component must be -1 or >= 1, got {v}"))
            }
        };
        match tag {
            "o" => Ok(Observation::OppLm(opp(int(body)?)?)),
            "w" => Ok(Observation::OwnLm(nonneg(body)?)),
            "c" => {
                let (own, o) = body
                    .split_once(',')
                    .ok_or_else(|| format!("composite state needs two fields: `{s}`"))?;
                Ok(Observation::Composite {
                    own: nonneg(own)?,
                    opp: opp(int(o)?)?,
                })
            }
            other => Err(format!("unknown scheme tag `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardParams {
    /// The agent's move cost `k1`.
    pub move_cost: f64,
    /// Normalization constant applied to flip rewards.
    pub scale: f64,
}

impl RewardParams {
    pub const DEFAULT_SCALE: f64 = 5.0;

    pub fn new(move_cost: f64) -> Self {
        Self {
            move_cost,
            scale: Self::DEFAULT_SCALE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.move_cost.is_finite() && self.move_cost > 0.0) {
            return Err(Error::config("reward.move_cost", "must be positive"));
        }
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::config("agent.c", "reward scale must be positive"));
        }
        Ok(())
    }
}

/// Reward for one agent step.
///
/// - waiting earns 0;
/// - a consecutive move, or one that reveals no opponent move, costs `-k1`;
/// - a flip revealing opponent move `lm0` earns `(lm0 - last_flip + 1 - k1) / c`,
///   where `last_flip` is the tick the agent last took control (0 before its
///   first flip): the span it held the resource, counted inclusively.
pub fn compute_reward(
    action: Action,
    outcome: Option<&MoveOutcome>,
    last_flip: Tick,
    params: &RewardParams,
) -> f64 {
    if !action.is_move() {
        return 0.0;
    }
    match outcome {
        Some(MoveOutcome {
            kind: MoveKind::Flip,
            revealed_opponent_last_move: Some(lm0),
            ..
        }) => {
            let credited = (*lm0 as f64) - (last_flip as f64) + 1.0;
            (credited - params.move_cost) / params.scale
        }
        _ => -params.move_cost,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvConfig {
    pub game: GameConfig,
    pub opponent: RenewalSpec,
    pub scheme: ObservationScheme,
    pub reward: RewardParams,
    pub seed: u64,
}

impl EnvConfig {
    pub fn new(
        game: GameConfig,
        opponent: RenewalSpec,
        scheme: ObservationScheme,
        seed: u64,
    ) -> Self {
        let reward = RewardParams::new(game.cost_1);
        Self {
            game,
            opponent,
            scheme,
            reward,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.opponent.validate()?;
        self.reward.validate()
    }

    /// Warning text when moving costs at least the opponent's mean move time.
    pub fn cost_warning(&self) -> Option<String> {
        let rho = self.opponent.mean();
        (self.game.cost_1 >= rho).then(|| {
            format!(
                "agent move cost {} >= opponent mean move time {rho} for {}: dropping out is optimal",
                self.game.cost_1, self.opponent
            )
        })
    }
}

/// Last-move feedback from the agent's own move.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Feedback {
    pub tick: Tick,
    pub revealed_opponent_last_move: Option<Tick>,
}

/// Ground truth after a step, for logging only.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub tick: Tick,
    pub controller: Player,
    pub opponent_last_move: Option<Tick>,
    pub gain: [u64; 2],
    pub moves: [u64; 2],
}

/// Everything an agent may learn from a step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub observation: Observation,
    pub reward: f64,
    pub terminated: bool,
    pub feedback: Option<Feedback>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepResult {
    pub transition: Transition,
    pub info: GroundTruth,
}

pub struct FlipItEnv {
    config: EnvConfig,
    ledger: ControlLedger,
    opponent: Box<dyn MoveSource>,
    known_opponent_move: Option<Tick>,
    last_flip: Tick,
    warnings: Vec<String>,
}

impl fmt::Debug for FlipItEnv {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FlipItEnv")
            .field("config", &self.config)
            .field("ledger", &self.ledger)
            .field("known_opponent_move", &self.known_opponent_move)
            .field("last_flip", &self.last_flip)
            .finish_non_exhaustive()
    }
}

impl FlipItEnv {
    /// Builds an environment whose opponent follows `config.opponent`, seeded from `config.seed`.
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let schedule =
            MoveSchedule::new(config.opponent, player_rng(config.seed, OPPONENT_STREAM))?;
        Self::with_source(config, Box::new(schedule))
    }

    /// Builds an environment with an arbitrary opponent move source.
    pub fn with_source(config: EnvConfig, opponent: Box<dyn MoveSource>) -> Result<Self> {
        config.validate()?;
        let mut warnings = Vec::new();
        if let Some(w) = config.cost_warning() {
            log::debug!("{w}");
            warnings.push(w);
        }
        let mut env = Self {
            ledger: ControlLedger::new(config.game.clone())?,
            config,
            opponent,
            known_opponent_move: None,
            last_flip: 0,
            warnings,
        };
        if env.opponent.peek() == Some(0) {
            env.ledger.opening_move(Player::Zero)?;
            env.opponent.advance();
        }
        Ok(env)
    }

    /// Restarts the episode with the same configuration and seed.
    pub fn reset(&mut self) -> Result<Observation> {
        let warnings = std::mem::take(&mut self.warnings);
        *self = Self::new(self.config.clone())?;
        self.warnings = warnings;
        Ok(self.observation())
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn ledger(&self) -> &ControlLedger {
        &self.ledger
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn now(&self) -> Tick {
        self.ledger.now()
    }

    pub fn is_done(&self) -> bool {
        self.ledger.is_finished()
    }

    /// Observation for the upcoming tick `t = now + 1`.
    ///
    /// The opponent component is `t - LM0` for the last known opponent move.
    /// The own component is `t - LM1`, or the elapsed time `now` before the
    /// agent's first move.
    pub fn observation(&self) -> Observation {
        let now = self.ledger.now();
        let next = now + 1;
        let own = match self.ledger.last_move(Player::One) {
            Some(lm) => next - lm,
            None => now,
        };
        let opp = match self.known_opponent_move {
            Some(lm) => (next - lm) as i64,
            None => UNKNOWN,
        };
        Observation::new(self.config.scheme, own, opp)
    }

    pub fn step(&mut self, action: Action) -> Result<StepResult> {
        if self.is_done() {
            return Err(Error::Sequencing(format!(
                "step called at t = {} with horizon {}",
                self.ledger.now(),
                self.config.game.horizon
            )));
        }
        let t = self.ledger.now() + 1;
        let opponent_moves = self.opponent.peek() == Some(t);
        if opponent_moves {
            self.opponent.advance();
        }
        let outcomes = self.ledger.apply_tick([opponent_moves, action.is_move()])?;
        let own = outcomes[Player::One.index()];
        let reward = compute_reward(action, own.as_ref(), self.last_flip, &self.config.reward);

        let feedback = own.map(|o| {
            // A move that reveals nothing tells the agent the opponent has not
            // moved since the start, when it held the resource.
            self.known_opponent_move = Some(o.revealed_opponent_last_move.unwrap_or(0));
            if o.kind == MoveKind::Flip {
                self.last_flip = o.tick;
            }
            Feedback {
                tick: o.tick,
                revealed_opponent_last_move: o.revealed_opponent_last_move,
            }
        });

        Ok(StepResult {
            transition: Transition {
                observation: self.observation(),
                reward,
                terminated: self.is_done(),
                feedback,
            },
            info: GroundTruth {
                tick: t,
                controller: self.ledger.controller(),
                opponent_last_move: self.ledger.last_move(Player::Zero),
                gain: [
                    self.ledger.gain(Player::Zero),
                    self.ledger.gain(Player::One),
                ],
                moves: [
                    self.ledger.moves(Player::Zero),
                    self.ledger.moves(Player::One),
                ],
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::ScriptedMoves;

    fn config(scheme: ObservationScheme, horizon: Tick, delta: u64, cost: f64) -> EnvConfig {
        EnvConfig::new(
            GameConfig::new(horizon, 1.0, cost),
            RenewalSpec::Periodic { delta },
            scheme,
            0,
        )
    }

    fn scripted(scheme: ObservationScheme, moves: Vec<Tick>, cost: f64) -> FlipItEnv {
        FlipItEnv::with_source(
            config(scheme, 10_000, 50, cost),
            Box::new(ScriptedMoves::new(moves)),
        )
        .unwrap()
    }

    #[test]
    fn initial_observations() {
        assert_eq!(
            scripted(ObservationScheme::OppLm, vec![5], 1.0).observation(),
            Observation::OppLm(-1)
        );
        assert_eq!(
            scripted(ObservationScheme::OwnLm, vec![5], 1.0).observation(),
            Observation::OwnLm(0)
        );
        assert_eq!(
            scripted(ObservationScheme::Composite, vec![5], 1.0).observation(),
            Observation::Composite { own: 0, opp: -1 }
        );
    }

    #[test]
    fn reset_returns_initial_observation_and_replays() {
        let mut env = FlipItEnv::new(config(ObservationScheme::OppLm, 100, 50, 25.0)).unwrap();
        let first: Vec<_> = (0..60)
            .map(|i| env.step(Action::from_index(i % 7 / 6)).unwrap())
            .collect();
        assert_eq!(env.reset().unwrap(), Observation::OppLm(-1));
        let second: Vec<_> = (0..60)
            .map(|i| env.step(Action::from_index(i % 7 / 6)).unwrap())
            .collect();
        assert_eq!(first, second);
    }

    #[test]
    fn flip_sets_next_observation_from_revealed_move() {
        let mut env = scripted(ObservationScheme::OppLm, vec![7], 1.0);
        for _ in 1..10 {
            env.step(Action::Wait).unwrap();
        }
        let r = env.step(Action::Move).unwrap();
        assert_eq!(
            r.transition.feedback.unwrap().revealed_opponent_last_move,
            Some(7)
        );
        assert_eq!(r.transition.observation, Observation::OppLm(4));
    }

    #[test]
    fn waiting_increments_observations() {
        let mut env = scripted(ObservationScheme::Composite, vec![3], 1.0);
        let mut obs = Vec::new();
        for _ in 0..3 {
            obs.push(env.step(Action::Wait).unwrap().transition.observation);
        }
        assert_eq!(
            obs,
            vec![
                Observation::Composite { own: 1, opp: -1 },
                Observation::Composite { own: 2, opp: -1 },
                Observation::Composite { own: 3, opp: -1 },
            ]
        );
        env.step(Action::Move).unwrap();
        assert_eq!(env.observation(), Observation::Composite { own: 1, opp: 2 });
    }

    #[test]
    fn waiting_earns_nothing() {
        let mut env = scripted(ObservationScheme::OppLm, vec![2, 4, 6], 25.0);
        for _ in 0..10 {
            assert_eq!(env.step(Action::Wait).unwrap().transition.reward, 0.0);
        }
    }

    #[test]
    fn move_before_any_opponent_move() {
        let mut env = scripted(ObservationScheme::OppLm, vec![20], 25.0);
        env.step(Action::Wait).unwrap();
        let r = env.step(Action::Move).unwrap();
        assert_eq!(r.transition.reward, -25.0);
        assert_eq!(
            r.transition.feedback.unwrap().revealed_opponent_last_move,
            None
        );
        // The agent now knows the opponent has not moved since t = 0.
        assert_eq!(r.transition.observation, Observation::OppLm(3));
    }

    #[test]
    fn steady_optimal_play_reward_table() {
        // Per(50) with phase 10: opponent moves at 10, 60, 110, ...
        let moves: Vec<Tick> = (0..100).map(|k| 10 + 50 * k).collect();
        let mut env = scripted(ObservationScheme::OppLm, moves, 25.0);
        // Discover the phase, then play one tick after each opponent move.
        for t in 1..=61 {
            let a = if t == 11 || t == 61 {
                Action::Move
            } else {
                Action::Wait
            };
            let r = env.step(a).unwrap();
            if t == 61 {
                // Flip at state 51 after the previous flip at 11.
                assert_eq!(r.transition.reward, 5.0);
            }
        }
        // A premature move in state 30 is consecutive.
        for _ in 62..90 {
            env.step(Action::Wait).unwrap();
        }
        assert_eq!(env.observation(), Observation::OppLm(30));
        assert_eq!(env.step(Action::Move).unwrap().transition.reward, -25.0);
        // So is a move on the opponent's own move tick (state 50).
        for _ in 91..110 {
            env.step(Action::Wait).unwrap();
        }
        assert_eq!(env.observation(), Observation::OppLm(50));
        let r = env.step(Action::Move).unwrap();
        assert_eq!(r.transition.reward, -25.0);
        assert_eq!(r.transition.observation, Observation::OppLm(51));
        // The flip at 51 is still credited from the last capture at 61.
        assert_eq!(env.step(Action::Move).unwrap().transition.reward, 5.0);
    }

    #[test]
    fn first_capture_reward() {
        let outcome = MoveOutcome {
            mover: Player::One,
            tick: 50,
            kind: MoveKind::Flip,
            revealed_opponent_last_move: Some(49),
        };
        let params = RewardParams::new(25.0);
        assert_eq!(
            compute_reward(Action::Move, Some(&outcome), 0, &params),
            5.0
        );
        assert_eq!(compute_reward(Action::Wait, None, 0, &params), 0.0);
        let consecutive = MoveOutcome {
            kind: MoveKind::Consecutive,
            ..outcome
        };
        assert_eq!(
            compute_reward(Action::Move, Some(&consecutive), 0, &params),
            -25.0
        );
    }

    #[test]
    fn warns_when_cost_exceeds_mean() {
        let env = FlipItEnv::new(config(ObservationScheme::OppLm, 100, 20, 25.0)).unwrap();
        assert_eq!(env.warnings().len(), 1);
        let env = FlipItEnv::new(config(ObservationScheme::OppLm, 100, 50, 25.0)).unwrap();
        assert!(env.warnings().is_empty());
    }

    #[test]
    fn step_past_horizon_fails() {
        let mut env = FlipItEnv::new(config(ObservationScheme::OppLm, 2, 50, 1.0)).unwrap();
        env.step(Action::Wait).unwrap();
        assert!(env.step(Action::Wait).unwrap().transition.terminated);
        assert!(matches!(env.step(Action::Wait), Err(Error::Sequencing(_))));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut c = config(ObservationScheme::OppLm, 100, 50, 1.0);
        c.reward.scale = 0.0;
        assert!(FlipItEnv::new(c).is_err());
    }

    #[test]
    fn observation_text_round_trip() {
        for o in [
            Observation::OppLm(-1),
            Observation::OppLm(51),
            Observation::OwnLm(0),
            Observation::Composite { own: 3, opp: -1 },
        ] {
            assert_eq!(o.to_string().parse::<Observation>().unwrap(), o);
        }
        assert!("o:0".parse::<Observation>().is_err());
        assert!("x:1".parse::<Observation>().is_err());
        assert!("c:1".parse::<Observation>().is_err());
    }
}
