use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{AgentSpec, ExperimentConfig};
use super::oracle::oracle_exp;
use crate::env::{
    player_rng, Action, EnvConfig, FlipItEnv, Observation, RewardParams, Transition, AGENT_STREAM,
};
use crate::error::{Error, Result};
use crate::game::{BenefitReport, Player, Tick};
use crate::greedy::GreedyAgent;
use crate::qflip::{QFlipAgent, QTable};
use crate::renewal::RenewalSpec;

/// A run is non-optimal when its final average benefit falls more than this
/// far below the reference optimum.
pub const NON_OPTIMAL_THRESHOLD: f64 = 0.02;

/// One sampled point of one run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub run_id: usize,
    pub seed: u64,
    pub tick: Tick,
    pub avg_benefit_1: f64,
    pub avg_benefit_0: f64,
    pub n_1: u64,
    pub n_0: u64,
    pub gain_1: u64,
    pub gain_0: u64,
}

impl Row {
    fn from_report(run_id: usize, seed: u64, report: &BenefitReport) -> Self {
        let p0 = report.player(Player::Zero);
        let p1 = report.player(Player::One);
        Self {
            run_id,
            seed,
            tick: report.now,
            avg_benefit_1: p1.average_benefit,
            avg_benefit_0: p0.average_benefit,
            n_1: p1.moves,
            n_0: p0.moves,
            gain_1: p1.gain,
            gain_0: p0.gain,
        }
    }
}

/// Agent state kept after a run for inspection.
#[derive(Debug, Clone)]
pub enum AgentReport {
    Passive,
    ScriptedOptimal,
    Greedy { dropped_out: bool },
    Qflip { table: QTable },
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub run_id: usize,
    pub seed: u64,
    /// Samples at every multiple of `sample_every`, plus the horizon.
    pub rows: Vec<Row>,
    pub agent: AgentReport,
    pub warnings: Vec<String>,
}

impl RunOutcome {
    pub fn final_row(&self) -> &Row {
        self.rows.last().expect("a run always has at least one row")
    }
}

trait Driver {
    fn act(&mut self, observation: Observation, tick: Tick) -> Action;
    fn observe(
        &mut self,
        observation: Observation,
        action: Action,
        transition: &Transition,
    ) -> Result<()>;
    fn report(self: Box<Self>) -> AgentReport;
}

struct Passive;

impl Driver for Passive {
    fn act(&mut self, _: Observation, _: Tick) -> Action {
        Action::Wait
    }

    fn observe(&mut self, _: Observation, _: Action, _: &Transition) -> Result<()> {
        Ok(())
    }

    fn report(self: Box<Self>) -> AgentReport {
        AgentReport::Passive
    }
}

/// Best response that uses only last-move feedback.
enum ScriptedOptimal {
    /// Move one tick after each periodic move. The first move at `delta + 1`
    /// reveals the phase.
    AfterPeriodic { delta: u64, next: Tick },
    /// Play periodically with the optimal own period.
    OwnPeriod { delta: u64, next: Tick },
}

impl ScriptedOptimal {
    fn new(opponent: &RenewalSpec, cost: f64) -> Result<Self> {
        match *opponent {
            RenewalSpec::Periodic { delta } => Ok(Self::AfterPeriodic {
                delta,
                next: delta + 1,
            }),
            RenewalSpec::Exponential { rate } => {
                let delta = oracle_exp(rate, cost)?.delta;
                Ok(Self::OwnPeriod { delta, next: delta })
            }
            _ => Err(Error::config(
                "agent.kind",
                "scripted_optimal needs a periodic or exponential opponent",
            )),
        }
    }
}

impl Driver for ScriptedOptimal {
    fn act(&mut self, _: Observation, tick: Tick) -> Action {
        let next = match self {
            Self::AfterPeriodic { next, .. } | Self::OwnPeriod { next, .. } => *next,
        };
        if tick == next {
            Action::Move
        } else {
            Action::Wait
        }
    }

    fn observe(&mut self, _: Observation, _: Action, transition: &Transition) -> Result<()> {
        let Some(feedback) = transition.feedback else {
            return Ok(());
        };
        match self {
            Self::AfterPeriodic { delta, next } => {
                let anchor = feedback
                    .revealed_opponent_last_move
                    .unwrap_or(feedback.tick);
                *next = (anchor + *delta + 1).max(feedback.tick + 1);
            }
            Self::OwnPeriod { delta, next } => *next = feedback.tick + *delta,
        }
        Ok(())
    }

    fn report(self: Box<Self>) -> AgentReport {
        AgentReport::ScriptedOptimal
    }
}

impl Driver for GreedyAgent {
    fn act(&mut self, _: Observation, tick: Tick) -> Action {
        if self.wants_move(tick) {
            Action::Move
        } else {
            Action::Wait
        }
    }

    fn observe(&mut self, _: Observation, _: Action, transition: &Transition) -> Result<()> {
        match transition.feedback {
            Some(fb) => self.on_feedback(fb.revealed_opponent_last_move, fb.tick),
            None => Ok(()),
        }
    }

    fn report(self: Box<Self>) -> AgentReport {
        AgentReport::Greedy {
            dropped_out: self.dropped_out(),
        }
    }
}

impl Driver for QFlipAgent {
    fn act(&mut self, observation: Observation, _: Tick) -> Action {
        QFlipAgent::act(self, observation)
    }

    fn observe(
        &mut self,
        observation: Observation,
        action: Action,
        transition: &Transition,
    ) -> Result<()> {
        self.learn(observation, action, transition);
        Ok(())
    }

    fn report(self: Box<Self>) -> AgentReport {
        AgentReport::Qflip {
            table: self.table().clone(),
        }
    }
}

fn build_env(config: &ExperimentConfig, seed: u64) -> Result<FlipItEnv> {
    let (scheme, scale) = match &config.agent {
        AgentSpec::Qflip { scheme, c, .. } => (*scheme, *c),
        // Non-learning agents ignore observations and rewards.
        _ => (
            crate::env::ObservationScheme::OppLm,
            RewardParams::DEFAULT_SCALE,
        ),
    };
    let mut env_config = EnvConfig::new(config.game.clone(), config.opponent, scheme, seed);
    env_config.reward.scale = scale;
    FlipItEnv::new(env_config)
}

fn build_driver(config: &ExperimentConfig, seed: u64) -> Result<Box<dyn Driver>> {
    Ok(match &config.agent {
        AgentSpec::Passive => Box::new(Passive),
        AgentSpec::ScriptedOptimal => {
            Box::new(ScriptedOptimal::new(&config.opponent, config.game.cost_1)?)
        }
        AgentSpec::Greedy => Box::new(GreedyAgent::new(config.opponent, config.game.cost_1)?),
        AgentSpec::Qflip { params, .. } => {
            Box::new(QFlipAgent::new(*params, player_rng(seed, AGENT_STREAM))?)
        }
    })
}

/// Plays one seeded run to the horizon.
pub fn run_single(config: &ExperimentConfig, run_index: usize) -> Result<RunOutcome> {
    config.validate()?;
    let seed = config.run_seed(run_index);
    let mut env = build_env(config, seed)?;
    let mut driver = build_driver(config, seed)?;
    let horizon = config.game.horizon;

    let mut rows = Vec::with_capacity((horizon / config.sample_every) as usize + 1);
    let mut observation = env.observation();
    while !env.is_done() {
        let tick = env.now() + 1;
        let action = driver.act(observation, tick);
        let step = env.step(action)?;
        driver.observe(observation, action, &step.transition)?;
        observation = step.transition.observation;
        if tick % config.sample_every == 0 || tick == horizon {
            rows.push(Row::from_report(run_index, seed, &env.ledger().benefit()?));
        }
    }
    Ok(RunOutcome {
        run_id: run_index,
        seed,
        rows,
        agent: driver.report(),
        warnings: env.warnings().to_vec(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

impl Spread {
    fn of(values: impl IntoIterator<Item = f64>) -> Self {
        let (mut sum, mut n) = (0.0, 0usize);
        let (mut min, mut max) = (f64::INFINITY, f64::NEG_INFINITY);
        for v in values {
            sum += v;
            n += 1;
            min = min.min(v);
            max = max.max(v);
        }
        Self {
            mean: sum / n as f64,
            min,
            max,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub tick: Tick,
    pub benefit_1: Spread,
    pub benefit_0: Spread,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub run_id: usize,
    pub seed: u64,
    pub avg_benefit_1: f64,
    pub avg_benefit_0: f64,
    pub n_1: u64,
    pub n_0: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dropped_out: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub non_optimal: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub agent: String,
    pub opponent: String,
    pub runs: usize,
    pub base_seed: u64,
    pub horizon: Tick,
    pub sample_every: Tick,
    pub reference_benefit: Option<f64>,
    pub non_optimal_threshold: f64,
    pub non_optimal_count: Option<usize>,
    pub final_benefit_1: Spread,
    pub final_benefit_0: Spread,
    pub dropout_count: Option<usize>,
    pub per_run: Vec<RunSummary>,
    pub series: Vec<SeriesPoint>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub runs: Vec<RunOutcome>,
    pub summary: Summary,
}

impl ExperimentResult {
    /// All rows, ordered by run then tick.
    pub fn rows(&self) -> impl Iterator<Item = &Row> {
        self.runs.iter().flat_map(|r| r.rows.iter())
    }
}

/// Plays all runs in parallel and aggregates them.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentResult> {
    config.validate()?;
    let mut runs: Vec<RunOutcome> = (0..config.runs)
        .into_par_iter()
        .map(|i| {
            run_single(config, i).map_err(|e| Error::Run {
                run: i,
                seed: config.run_seed(i),
                source: Box::new(e),
            })
        })
        .collect::<Result<_>>()?;
    runs.sort_by_key(|r| r.run_id);
    let summary = summarize(config, &runs);
    Ok(ExperimentResult {
        config: config.clone(),
        runs,
        summary,
    })
}

fn summarize(config: &ExperimentConfig, runs: &[RunOutcome]) -> Summary {
    let reference = config.effective_reference();
    let per_run: Vec<RunSummary> = runs
        .iter()
        .map(|run| {
            let last = run.final_row();
            RunSummary {
                run_id: run.run_id,
                seed: run.seed,
                avg_benefit_1: last.avg_benefit_1,
                avg_benefit_0: last.avg_benefit_0,
                n_1: last.n_1,
                n_0: last.n_0,
                dropped_out: match run.agent {
                    AgentReport::Greedy { dropped_out } => Some(dropped_out),
                    _ => None,
                },
                non_optimal: reference.map(|r| last.avg_benefit_1 < r - NON_OPTIMAL_THRESHOLD),
            }
        })
        .collect();

    let samples = runs[0].rows.len();
    let series = (0..samples)
        .map(|k| SeriesPoint {
            tick: runs[0].rows[k].tick,
            benefit_1: Spread::of(runs.iter().map(|r| r.rows[k].avg_benefit_1)),
            benefit_0: Spread::of(runs.iter().map(|r| r.rows[k].avg_benefit_0)),
        })
        .collect();

    let mut warnings: Vec<String> = runs
        .iter()
        .flat_map(|r| r.warnings.iter().cloned())
        .collect();
    warnings.sort();
    warnings.dedup();

    Summary {
        agent: config.agent.label(),
        opponent: config.opponent.to_string(),
        runs: runs.len(),
        base_seed: config.seed(),
        horizon: config.game.horizon,
        sample_every: config.sample_every,
        reference_benefit: reference,
        non_optimal_threshold: NON_OPTIMAL_THRESHOLD,
        non_optimal_count: reference.map(|_| {
            per_run
                .iter()
                .filter(|r| r.non_optimal == Some(true))
                .count()
        }),
        final_benefit_1: Spread::of(per_run.iter().map(|r| r.avg_benefit_1)),
        final_benefit_0: Spread::of(per_run.iter().map(|r| r.avg_benefit_0)),
        dropout_count: matches!(config.agent, AgentSpec::Greedy).then(|| {
            per_run
                .iter()
                .filter(|r| r.dropped_out == Some(true))
                .count()
        }),
        per_run,
        series,
        warnings,
    }
}
