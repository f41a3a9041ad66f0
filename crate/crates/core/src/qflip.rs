//! QFlip: tabular Q-learning for the adaptive player.
//!
//! Action choice:
//! - a state whose value estimates are both exactly zero is treated as new:
//!   move with probability `1 - p`, otherwise wait;
//! - otherwise explore with probability `ε' = ε·e^{-d·v}` (uniform over both
//!   actions), where `v` counts earlier visits, and act greedily with ties
//!   going to waiting.
//!
//! Value update uses the sample-average step size `1/α`, so with `γ = 0` each
//! estimate is the mean of the rewards observed for that state and action.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::env::{Action, Observation, Transition};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentParams {
    /// Future discount γ.
    pub discount: f64,
    /// Exploration base ε.
    pub exploration: f64,
    /// Exploration decay d.
    pub exploration_decay: f64,
    /// Probability of waiting in a new state, p.
    pub new_state_wait: f64,
}

impl Default for AgentParams {
    fn default() -> Self {
        Self {
            discount: 0.8,
            exploration: 0.5,
            exploration_decay: 0.05,
            new_state_wait: 0.7,
        }
    }
}

impl AgentParams {
    pub fn validate(&self) -> Result<()> {
        let unit = |field: &str, v: f64, hi_open: bool| {
            let ok = v >= 0.0 && if hi_open { v < 1.0 } else { v <= 1.0 };
            if ok {
                Ok(())
            } else {
                Err(Error::config(
                    format!("agent.params.{field}"),
                    format!("out of range: {v}"),
                ))
            }
        };
        unit("discount", self.discount, true)?;
        unit("exploration", self.exploration, false)?;
        unit("new_state_wait", self.new_state_wait, false)?;
        if !(self.exploration_decay.is_finite() && self.exploration_decay >= 0.0) {
            return Err(Error::config(
                "agent.params.exploration_decay",
                "must be >= 0",
            ));
        }
        Ok(())
    }

    /// Effective exploration rate after `visits` earlier visits.
    pub fn effective_exploration(&self, visits: u64) -> f64 {
        self.exploration * (-self.exploration_decay * visits as f64).exp()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QEntry {
    pub q: [f64; 2],
    /// Number of updates applied to each action.
    pub updates: [u64; 2],
    /// Number of action selections made in the state.
    pub visits: u64,
}

impl QEntry {
    /// Both estimates are exactly zero, so the state carries no information yet.
    pub fn is_uninformed(&self) -> bool {
        self.q == [0.0, 0.0]
    }

    /// Greedy action, ties going to waiting.
    pub fn greedy_action(&self) -> Action {
        if self.q[1] > self.q[0] {
            Action::Move
        } else {
            Action::Wait
        }
    }

    pub fn max_value(&self) -> f64 {
        self.q[0].max(self.q[1])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyAction {
    Wait,
    Move,
    /// Never updated.
    Unvisited,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct QTable {
    entries: HashMap<Observation, QEntry>,
}

impl QTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry for `state`; absent states read as the default entry.
    pub fn get(&self, state: &Observation) -> QEntry {
        self.entries.get(state).copied().unwrap_or_default()
    }

    pub fn insert(&mut self, state: Observation, entry: QEntry) {
        self.entries.insert(state, entry);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Observation, &QEntry)> {
        self.entries.iter()
    }

    pub fn select_action<R: Rng + ?Sized>(
        &mut self,
        state: Observation,
        params: &AgentParams,
        rng: &mut R,
    ) -> Action {
        let entry = self.entries.entry(state).or_default();
        let visits = entry.visits;
        entry.visits += 1;
        if entry.is_uninformed() {
            return if rng.gen::<f64>() < params.new_state_wait {
                Action::Wait
            } else {
                Action::Move
            };
        }
        let epsilon = params.effective_exploration(visits);
        if epsilon > 0.0 && rng.gen::<f64>() < epsilon {
            return Action::from_index(rng.gen_range(0..2));
        }
        entry.greedy_action()
    }

    pub fn update(
        &mut self,
        state: Observation,
        action: Action,
        reward: f64,
        next: Observation,
        params: &AgentParams,
    ) {
        let future = if params.discount > 0.0 {
            params.discount * self.get(&next).max_value()
        } else {
            0.0
        };
        let target = reward + future;
        let entry = self.entries.entry(state).or_default();
        let a = action.index();
        entry.updates[a] += 1;
        entry.q[a] += (target - entry.q[a]) / entry.updates[a] as f64;
    }

    /// Greedy action per state, ordered by state.
    pub fn greedy_policy(&self) -> BTreeMap<Observation, PolicyAction> {
        self.entries
            .iter()
            .map(|(s, e)| {
                let action = if e.updates == [0, 0] {
                    PolicyAction::Unvisited
                } else if e.greedy_action().is_move() {
                    PolicyAction::Move
                } else {
                    PolicyAction::Wait
                };
                (*s, action)
            })
            .collect()
    }

    /// Line-oriented snapshot: `state q0 q1 alpha0 alpha1 visits`, sorted by state.
    pub fn serialize(&self) -> String {
        let mut sorted: Vec<_> = self.entries.iter().collect();
        sorted.sort_by_key(|(s, _)| **s);
        let mut out = String::new();
        for (s, e) in sorted {
            let _ = writeln!(
                out,
                "{s} {} {} {} {} {}",
                e.q[0], e.q[1], e.updates[0], e.updates[1], e.visits
            );
        }
        out
    }

    pub fn deserialize(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 6 {
                return Err(err(format!("expected 6 fields, found {}", fields.len())));
            }
            let state: Observation = fields[0].parse().map_err(err)?;
            let float = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| err(format!("bad value `{s}`: {e}")))
            };
            let count = |s: &str| {
                s.parse::<u64>()
                    .map_err(|e| err(format!("bad count `{s}`: {e}")))
            };
            let entry = QEntry {
                q: [float(fields[1])?, float(fields[2])?],
                updates: [count(fields[3])?, count(fields[4])?],
                visits: count(fields[5])?,
            };
            if entries.insert(state, entry).is_some() {
                return Err(err(format!("duplicate state {state}")));
            }
        }
        Ok(Self { entries })
    }
}

/// A QFlip player: table, parameters and its own random stream.
#[derive(Debug, Clone)]
pub struct QFlipAgent {
    table: QTable,
    params: AgentParams,
    rng: ChaCha8Rng,
}

impl QFlipAgent {
    pub fn new(params: AgentParams, rng: ChaCha8Rng) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            table: QTable::new(),
            params,
            rng,
        })
    }

    pub fn table(&self) -> &QTable {
        &self.table
    }

    pub fn params(&self) -> &AgentParams {
        &self.params
    }

    pub fn act(&mut self, state: Observation) -> Action {
        self.table.select_action(state, &self.params, &mut self.rng)
    }

    pub fn learn(&mut self, state: Observation, action: Action, transition: &Transition) {
        self.table.update(
            state,
            action,
            transition.reward,
            transition.observation,
            &self.params,
        );
    }
}
