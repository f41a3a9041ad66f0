use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::ObservationScheme;
use crate::error::{Error, Result};
use crate::game::GameConfig;
use crate::qflip::AgentParams;
use crate::renewal::RenewalSpec;

/// Which strategy player 1 uses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AgentSpec {
    Qflip {
        scheme: ObservationScheme,
        #[serde(default)]
        params: AgentParams,
        /// Flip reward normalization constant.
        #[serde(default = "default_reward_scale")]
        c: f64,
    },
    Greedy,
    /// Knows the opponent's law and plays its best response: one tick after
    /// each periodic move, or the optimal own period against an exponential.
    ScriptedOptimal,
    /// Never moves.
    #[serde(rename = "none")]
    Passive,
}

fn default_reward_scale() -> f64 {
    crate::env::RewardParams::DEFAULT_SCALE
}

impl AgentSpec {
    pub fn label(&self) -> String {
        match self {
            AgentSpec::Qflip { scheme, .. } => format!("qflip-{scheme}"),
            AgentSpec::Greedy => "greedy".into(),
            AgentSpec::ScriptedOptimal => "scripted-optimal".into(),
            AgentSpec::Passive => "none".into(),
        }
    }
}

fn default_runs() -> usize {
    1
}

fn default_sample_every() -> u64 {
    1000
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub game: GameConfig,
    pub opponent: RenewalSpec,
    pub agent: AgentSpec,
    #[serde(default = "default_runs")]
    pub runs: usize,
    /// Run `i` is seeded with `base_seed + i`. When absent, the caller's default applies.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub base_seed: Option<u64>,
    #[serde(default = "default_sample_every")]
    pub sample_every: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Optimal benefit used to count non-optimal runs. Derived from the
    /// opponent when it has a known optimum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_benefit: Option<f64>,
    /// Also write each run's final Q-table.
    #[serde(default)]
    pub save_q_tables: bool,
}

impl ExperimentConfig {
    pub fn new(game: GameConfig, opponent: RenewalSpec, agent: AgentSpec) -> Self {
        Self {
            game,
            opponent,
            agent,
            runs: default_runs(),
            base_seed: None,
            sample_every: default_sample_every(),
            output_dir: default_output_dir(),
            reference_benefit: None,
            save_q_tables: false,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn seed(&self) -> u64 {
        self.base_seed.unwrap_or(0)
    }

    pub fn run_seed(&self, run: usize) -> u64 {
        self.seed().wrapping_add(run as u64)
    }

    pub fn validate(&self) -> Result<()> {
        self.game.validate()?;
        self.opponent.validate()?;
        if self.runs == 0 {
            return Err(Error::config("runs", "must be at least 1"));
        }
        if self.sample_every == 0 {
            return Err(Error::config("sample_every", "must be at least 1"));
        }
        if let Some(r) = self.reference_benefit {
            if !r.is_finite() {
                return Err(Error::config("reference_benefit", "must be finite"));
            }
        }
        match &self.agent {
            AgentSpec::Qflip { params, c, .. } => {
                params.validate()?;
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::config(
                        "agent.c",
                        format!("must be positive, got {c}"),
                    ));
                }
            }
            AgentSpec::ScriptedOptimal => {
                if !matches!(
                    self.opponent,
                    RenewalSpec::Periodic { .. } | RenewalSpec::Exponential { .. }
                ) {
                    return Err(Error::config(
                        "agent.kind",
                        format!(
                            "scripted_optimal needs a periodic or exponential opponent, not {}",
                            self.opponent.name()
                        ),
                    ));
                }
            }
            AgentSpec::Greedy | AgentSpec::Passive => {}
        }
        Ok(())
    }

    /// Reference benefit given explicitly or derived from the opponent.
    pub fn effective_reference(&self) -> Option<f64> {
        self.reference_benefit
            .or_else(|| super::oracle::reference_benefit(&self.opponent, self.game.cost_1))
    }
}
