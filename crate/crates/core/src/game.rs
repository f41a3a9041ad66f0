//! Tick engine and ground-truth accounting.
//!
//! Time advances in unit ticks `t = 1, 2, ...`. During a tick each player may
//! move; a move hands the resource to the mover. The player controlling the
//! resource once all moves of tick `t` are resolved owns tick `t`.
//!
//! Same-tick moves resolve adaptive player first, renewal player second
//! (see [`RESOLUTION_ORDER`]). A mover is told the opponent's last move time as
//! it stands at the instant its own move is applied.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A tick index. Tick 0 is the instant before the first playable tick.
pub type Tick = u64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Player {
    /// Player 0: the renewal (non-adaptive) player, in control at game start.
    #[serde(rename = "0")]
    Zero,
    /// Player 1: the adaptive player.
    #[serde(rename = "1")]
    One,
}

impl Player {
    pub const BOTH: [Player; 2] = [Player::Zero, Player::One];

    pub fn index(self) -> usize {
        match self {
            Player::Zero => 0,
            Player::One => 1,
        }
    }

    pub fn opponent(self) -> Player {
        match self {
            Player::Zero => Player::One,
            Player::One => Player::Zero,
        }
    }
}

/// Order in which same-tick moves take effect.
///
/// With the adaptive player first, moving on the very tick the renewal player
/// moves is wasted: the renewal move lands afterwards and owns the tick. The
/// best response to `Per(δ)` is then to move one tick after each periodic move,
/// worth `(δ - 1 - k1) / δ` per tick.
pub const RESOLUTION_ORDER: [Player; 2] = [Player::One, Player::Zero];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    pub horizon: Tick,
    pub cost_0: f64,
    pub cost_1: f64,
    #[serde(default = "default_initial_controller")]
    pub initial_controller: Player,
}

fn default_initial_controller() -> Player {
    Player::Zero
}

impl GameConfig {
    pub fn new(horizon: Tick, cost_0: f64, cost_1: f64) -> Self {
        Self {
            horizon,
            cost_0,
            cost_1,
            initial_controller: Player::Zero,
        }
    }

    pub fn cost(&self, player: Player) -> f64 {
        match player {
            Player::Zero => self.cost_0,
            Player::One => self.cost_1,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::config("game.horizon", "must be at least 1"));
        }
        for (field, cost) in [("game.cost_0", self.cost_0), ("game.cost_1", self.cost_1)] {
            if !(cost.is_finite() && cost > 0.0) {
                return Err(Error::config(
                    field,
                    format!("move cost must be positive, got {cost}"),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MoveKind {
    /// The opponent controlled the resource just before the move.
    Flip,
    /// The mover already controlled the resource; the move was wasted.
    Consecutive,
}

/// Feedback delivered to a player that moved during a tick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MoveOutcome {
    pub mover: Player,
    pub tick: Tick,
    pub kind: MoveKind,
    /// The opponent's actual last move time when the move was applied.
    pub revealed_opponent_last_move: Option<Tick>,
}

/// Ground-truth game state.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlLedger {
    config: GameConfig,
    now: Tick,
    controller: Player,
    gain: [u64; 2],
    moves: [u64; 2],
    last_move: [Option<Tick>; 2],
}

impl ControlLedger {
    /// Starts a fresh game at `t = 0`.
    pub fn new(config: GameConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            controller: config.initial_controller,
            config,
            now: 0,
            gain: [0; 2],
            moves: [0; 2],
            last_move: [None; 2],
        })
    }

    pub fn config(&self) -> &GameConfig {
        &self.config
    }

    pub fn now(&self) -> Tick {
        self.now
    }

    pub fn controller(&self) -> Player {
        self.controller
    }

    pub fn gain(&self, player: Player) -> u64 {
        self.gain[player.index()]
    }

    pub fn moves(&self, player: Player) -> u64 {
        self.moves[player.index()]
    }

    pub fn last_move(&self, player: Player) -> Option<Tick> {
        self.last_move[player.index()]
    }

    pub fn is_finished(&self) -> bool {
        self.now >= self.config.horizon
    }

    /// Records a move made at the `t = 0` handover, before any tick is played.
    ///
    /// Used for a periodic phase of zero. No tick is owned by it.
    pub fn opening_move(&mut self, player: Player) -> Result<MoveOutcome> {
        if self.now != 0 {
            return Err(Error::Sequencing(format!(
                "opening move requested at t = {}, only allowed at t = 0",
                self.now
            )));
        }
        Ok(self.apply_move(player))
    }

    /// Plays the next tick. `moves[i]` says whether player `i` moves.
    ///
    /// Returns per-player feedback, `Some` exactly for the players that moved.
    pub fn apply_tick(&mut self, moves: [bool; 2]) -> Result<[Option<MoveOutcome>; 2]> {
        if self.is_finished() {
            return Err(Error::Sequencing(format!(
                "cannot play tick {} past horizon {}",
                self.now + 1,
                self.config.horizon
            )));
        }
        self.now += 1;
        let mut outcomes = [None; 2];
        for player in RESOLUTION_ORDER {
            if moves[player.index()] {
                outcomes[player.index()] = Some(self.apply_move(player));
            }
        }
        self.gain[self.controller.index()] += 1;
        Ok(outcomes)
    }

    fn apply_move(&mut self, player: Player) -> MoveOutcome {
        let kind = if self.controller == player {
            MoveKind::Consecutive
        } else {
            MoveKind::Flip
        };
        let outcome = MoveOutcome {
            mover: player,
            tick: self.now,
            kind,
            revealed_opponent_last_move: self.last_move[player.opponent().index()],
        };
        self.controller = player;
        self.moves[player.index()] += 1;
        self.last_move[player.index()] = Some(self.now);
        outcome
    }

    /// Benefit accounting `β_i = Γ_i − k_i · n_i` for both players.
    pub fn benefit(&self) -> Result<BenefitReport> {
        if self.now == 0 {
            return Err(Error::UndefinedAverage);
        }
        let players = Player::BOTH.map(|p| {
            let gain = self.gain[p.index()];
            let moves = self.moves[p.index()];
            let benefit = gain as f64 - self.config.cost(p) * moves as f64;
            PlayerBenefit {
                gain,
                moves,
                benefit,
                average_benefit: benefit / self.now as f64,
                gain_rate: gain as f64 / self.now as f64,
            }
        });
        Ok(BenefitReport {
            now: self.now,
            players,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlayerBenefit {
    pub gain: u64,
    pub moves: u64,
    pub benefit: f64,
    pub average_benefit: f64,
    pub gain_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenefitReport {
    pub now: Tick,
    pub players: [PlayerBenefit; 2],
}

impl BenefitReport {
    pub fn player(&self, player: Player) -> &PlayerBenefit {
        &self.players[player.index()]
    }
}
