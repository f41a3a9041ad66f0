//! Invariant properties shared by the property-test suite and the acceptance run.

use flipit_core::env::{Action, EnvConfig, Feedback, FlipItEnv, Observation, ObservationScheme};
use flipit_core::experiment::{
    rows_from_csv, rows_to_csv, run_single, AgentSpec, ExperimentConfig, Row,
};
use flipit_core::game::{ControlLedger, GameConfig, MoveKind, Player, Tick};
use flipit_core::qflip::{AgentParams, QEntry, QTable};
use flipit_core::renewal::{RenewalSpec, ScriptedMoves};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestError, TestRunner};

pub type CaseResult = Result<(), TestCaseError>;

fn cost() -> impl Strategy<Value = f64> {
    prop_oneof![0.5f64..100.0, (1u32..100).prop_map(f64::from)]
}

fn move_pattern(max_len: usize) -> impl Strategy<Value = Vec<[bool; 2]>> {
    prop::collection::vec(
        (prop::bool::weighted(0.1), prop::bool::weighted(0.1)).prop_map(|(a, b)| [a, b]),
        1..max_len,
    )
}

fn scheme() -> impl Strategy<Value = ObservationScheme> {
    prop_oneof![
        Just(ObservationScheme::OppLm),
        Just(ObservationScheme::OwnLm),
        Just(ObservationScheme::Composite)
    ]
}

fn observation() -> impl Strategy<Value = Observation> {
    let opp = prop_oneof![Just(-1i64), 1i64..1_000_000];
    prop_oneof![
        opp.clone().prop_map(Observation::OppLm),
        (0u64..1_000_000).prop_map(Observation::OwnLm),
        (0u64..1_000_000, opp).prop_map(|(own, opp)| Observation::Composite { own, opp }),
    ]
}

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e6f64..1e6,
        Just(0.0),
        Just(-25.0),
        Just(5.0),
        any::<f64>().prop_filter("finite", |v| v.is_finite())
    ]
}

/// Control time is conserved and agrees with a naive replay of the move pattern.
pub fn control_conservation(c0: f64, c1: f64, pattern: Vec<[bool; 2]>) -> CaseResult {
    let mut ledger = ControlLedger::new(GameConfig::new(pattern.len() as Tick, c0, c1)).unwrap();
    let mut controller = Player::Zero;
    let mut naive = [0u64; 2];
    for moves in pattern {
        let out = ledger.apply_tick(moves).unwrap();
        for player in [Player::One, Player::Zero] {
            if moves[player.index()] {
                let kind = out[player.index()].unwrap().kind;
                prop_assert_eq!(kind == MoveKind::Flip, controller != player);
                controller = player;
            }
        }
        naive[controller.index()] += 1;
        prop_assert_eq!(ledger.controller(), controller);
        prop_assert_eq!(
            ledger.gain(Player::Zero) + ledger.gain(Player::One),
            ledger.now()
        );
    }
    prop_assert_eq!([ledger.gain(Player::Zero), ledger.gain(Player::One)], naive);
    Ok(())
}

/// Benefit is gain minus cost times moves, and the average divides by elapsed time.
pub fn benefit_exactness(c0: f64, c1: f64, pattern: Vec<[bool; 2]>) -> CaseResult {
    let mut ledger = ControlLedger::new(GameConfig::new(pattern.len() as Tick, c0, c1)).unwrap();
    let mut moves = [0u64; 2];
    for m in pattern {
        ledger.apply_tick(m).unwrap();
        for p in Player::BOTH {
            moves[p.index()] += m[p.index()] as u64;
        }
        let report = ledger.benefit().unwrap();
        for (p, cost) in [(Player::Zero, c0), (Player::One, c1)] {
            let b = report.player(p);
            let expected = ledger.gain(p) as f64 - cost * moves[p.index()] as f64;
            prop_assert_eq!(b.moves, moves[p.index()]);
            prop_assert_eq!(b.benefit, expected);
            prop_assert_eq!(b.average_benefit, expected / ledger.now() as f64);
        }
    }
    Ok(())
}

/// Sample-average updates leave Q equal to the mean of the targets.
pub fn sample_average(discount: f64, next_values: [f64; 2], rewards: Vec<f64>) -> CaseResult {
    let params = AgentParams {
        discount,
        ..AgentParams::default()
    };
    let state = Observation::OppLm(7);
    let next = Observation::OppLm(8);
    let mut table = QTable::new();
    table.insert(
        next,
        QEntry {
            q: next_values,
            updates: [1, 1],
            visits: 2,
        },
    );
    let future = discount * next_values[0].max(next_values[1]);
    let mut sum = 0.0;
    for (i, &r) in rewards.iter().enumerate() {
        table.update(state, Action::Move, r, next, &params);
        sum += r + future;
        let entry = table.get(&state);
        let mean = sum / (i + 1) as f64;
        let scale = rewards[..=i].iter().fold(1.0f64, |m, r| m.max(r.abs())) + future.abs();
        prop_assert!(
            (entry.q[1] - mean).abs() <= 1e-9 * scale,
            "q {} vs mean {}",
            entry.q[1],
            mean
        );
        prop_assert_eq!(entry.updates, [0, i as u64 + 1]);
        prop_assert_eq!(entry.q[0], 0.0);
    }
    Ok(())
}

/// Visit-decayed exploration never increases with visits and starts at the base rate.
pub fn exploration_decay(exploration: f64, decay: f64, v1: u64, extra: u64) -> CaseResult {
    let params = AgentParams {
        exploration,
        exploration_decay: decay,
        ..AgentParams::default()
    };
    prop_assert_eq!(params.effective_exploration(0), exploration);
    let a = params.effective_exploration(v1);
    let b = params.effective_exploration(v1 + extra);
    prop_assert!(b <= a && a <= exploration && b >= 0.0);
    Ok(())
}

type VisibleTrace = Vec<(Observation, f64, Option<Feedback>)>;

fn visible_trace(
    scheme: ObservationScheme,
    opponent: &[Tick],
    actions: &[bool],
) -> (VisibleTrace, Vec<Tick>) {
    let config = EnvConfig::new(
        GameConfig::new(actions.len() as Tick, 1.0, 10.0),
        RenewalSpec::Periodic { delta: 50 },
        scheme,
        0,
    );
    let mut env =
        FlipItEnv::with_source(config, Box::new(ScriptedMoves::new(opponent.to_vec()))).unwrap();
    let mut trace = vec![(env.observation(), 0.0, None)];
    let mut revealed = Vec::new();
    for &m in actions {
        let step = env
            .step(if m { Action::Move } else { Action::Wait })
            .unwrap();
        let t = step.transition;
        if let Some(lm) = t.feedback.and_then(|f| f.revealed_opponent_last_move) {
            revealed.push(lm);
        }
        trace.push((t.observation, t.reward, t.feedback));
    }
    (trace, revealed)
}

/// Deleting opponent moves that no agent move ever revealed leaves everything
/// the agent sees unchanged.
pub fn stealthiness(
    scheme: ObservationScheme,
    opponent: Vec<Tick>,
    actions: Vec<bool>,
    drop_mask: Vec<bool>,
) -> CaseResult {
    let (trace, revealed) = visible_trace(scheme, &opponent, &actions);
    let mut opponent = opponent;
    opponent.sort_unstable();
    opponent.dedup();
    let kept: Vec<Tick> = opponent
        .iter()
        .zip(drop_mask.iter().cycle())
        .filter(|(m, drop)| revealed.contains(m) || !**drop)
        .map(|(m, _)| *m)
        .collect();
    let (trace_after, revealed_after) = visible_trace(scheme, &kept, &actions);
    prop_assert_eq!(revealed_after, revealed);
    prop_assert_eq!(trace_after, trace);
    Ok(())
}

/// Q-tables, observations, CSV rows and configurations survive a round trip.
pub fn serialization_round_trip(
    entries: Vec<(Observation, [f64; 2], [u64; 2], u64)>,
    rows: Vec<Row>,
) -> CaseResult {
    let mut table = QTable::new();
    for (s, q, updates, visits) in entries {
        prop_assert_eq!(s.to_string().parse::<Observation>(), Ok(s));
        table.insert(s, QEntry { q, updates, visits });
    }
    let text = table.serialize();
    prop_assert_eq!(QTable::deserialize(&text).unwrap(), table);

    let bytes = rows_to_csv(&rows).unwrap();
    prop_assert_eq!(
        rows_from_csv(std::str::from_utf8(&bytes).unwrap()).unwrap(),
        rows
    );
    Ok(())
}

/// A configuration and seed fully determine a run.
pub fn determinism(opponent: RenewalSpec, agent: AgentSpec, c1: f64, seed: u64) -> CaseResult {
    let mut config = ExperimentConfig::new(GameConfig::new(400, 1.0, c1), opponent, agent);
    config.base_seed = Some(seed);
    config.sample_every = 50;
    let text = serde_json::to_string(&config).unwrap();
    let parsed = ExperimentConfig::from_json(&text).unwrap();
    prop_assert_eq!(&parsed, &config);
    let a = run_single(&config, 1).unwrap();
    let b = run_single(&parsed, 1).unwrap();
    prop_assert_eq!(a.rows, b.rows);
    Ok(())
}

fn row() -> impl Strategy<Value = Row> {
    (
        any::<usize>(),
        any::<u64>(),
        any::<u64>(),
        finite(),
        finite(),
        any::<u64>(),
        any::<u64>(),
        any::<u64>(),
        any::<u64>(),
    )
        .prop_map(
            |(run_id, seed, tick, avg_benefit_1, avg_benefit_0, n_1, n_0, gain_1, gain_0)| Row {
                run_id,
                seed,
                tick,
                avg_benefit_1,
                avg_benefit_0,
                n_1,
                n_0,
                gain_1,
                gain_0,
            },
        )
}

fn renewal() -> impl Strategy<Value = RenewalSpec> {
    prop_oneof![
        (1u64..80).prop_map(|delta| RenewalSpec::Periodic { delta }),
        (0.005f64..0.5).prop_map(|rate| RenewalSpec::Exponential { rate }),
        (10.0f64..100.0, 0.0f64..1.0).prop_map(|(delta, f)| RenewalSpec::Uniform {
            delta,
            width: f * delta
        }),
        (10.0f64..100.0, 0.0f64..20.0)
            .prop_map(|(mean, std_dev)| RenewalSpec::Normal { mean, std_dev }),
    ]
}

fn agent() -> impl Strategy<Value = AgentSpec> {
    prop_oneof![
        Just(AgentSpec::Passive),
        Just(AgentSpec::Greedy),
        (scheme(), 0.0f64..0.99, 0.0f64..=1.0, 0.0f64..=1.0).prop_map(
            |(scheme, discount, exploration, p)| AgentSpec::Qflip {
                scheme,
                params: AgentParams {
                    discount,
                    exploration,
                    exploration_decay: 0.05,
                    new_state_wait: p,
                },
                c: 5.0,
            }
        ),
    ]
}

/// A named property with the number of generated cases it runs.
pub struct Property {
    pub name: &'static str,
    pub cases: u32,
    run: fn(&mut TestRunner) -> Result<(), TestError<String>>,
}

fn erase<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), TestError<String>> {
    r.map_err(|e| match e {
        TestError::Abort(reason) => TestError::Abort(reason),
        TestError::Fail(reason, value) => TestError::Fail(reason, format!("{value:?}")),
    })
}

pub const PROPERTIES: &[Property] = &[
    Property {
        name: "control_conservation",
        cases: 2000,
        run: |r| {
            erase(r.run(&(cost(), cost(), move_pattern(400)), |(a, b, p)| {
                control_conservation(a, b, p)
            }))
        },
    },
    Property {
        name: "benefit_exactness",
        cases: 2000,
        run: |r| {
            erase(r.run(&(cost(), cost(), move_pattern(300)), |(a, b, p)| {
                benefit_exactness(a, b, p)
            }))
        },
    },
    Property {
        name: "sample_average",
        cases: 2000,
        run: |r| {
            erase(r.run(
                &(
                    0.0f64..0.99,
                    [-100.0f64..100.0, -100.0f64..100.0],
                    prop::collection::vec(-100.0f64..100.0, 1..60),
                ),
                |(g, n, rw)| sample_average(g, n, rw),
            ))
        },
    },
    Property {
        name: "exploration_decay",
        cases: 2000,
        run: |r| {
            erase(r.run(
                &(0.0f64..=1.0, 0.0f64..2.0, 0u64..100_000, 0u64..100_000),
                |(e, d, v, x)| exploration_decay(e, d, v, x),
            ))
        },
    },
    Property {
        name: "stealthiness",
        cases: 1500,
        run: |r| {
            let case = (1usize..300).prop_flat_map(|len| {
                (
                    scheme(),
                    prop::collection::vec(1..=len as Tick, 0..40),
                    prop::collection::vec(prop::bool::weighted(0.05), len),
                    prop::collection::vec(any::<bool>(), 1..8),
                )
            });
            erase(r.run(&case, |(s, o, a, d)| stealthiness(s, o, a, d)))
        },
    },
    Property {
        name: "serialization_round_trip",
        cases: 1500,
        run: |r| {
            let entry = (
                observation(),
                [finite(), finite()],
                [any::<u64>(), any::<u64>()],
                any::<u64>(),
            );
            erase(r.run(
                &(
                    prop::collection::vec(entry, 0..30),
                    prop::collection::vec(row(), 0..10),
                ),
                |(e, rows)| serialization_round_trip(e, rows),
            ))
        },
    },
    Property {
        name: "determinism",
        cases: 200,
        run: |r| {
            erase(r.run(
                &(renewal(), agent(), 1.0f64..60.0, any::<u64>()),
                |(o, a, c, s)| determinism(o, a, c, s),
            ))
        },
    },
];

/// Runs one property with its own case budget and a fixed RNG seed.
pub fn check(property: &Property) -> Result<(), String> {
    let mut runner = TestRunner::new_with_rng(
        Config {
            cases: property.cases,
            failure_persistence: None,
            ..Config::default()
        },
        proptest::test_runner::TestRng::deterministic_rng(
            proptest::test_runner::RngAlgorithm::ChaCha,
        ),
    );
    (property.run)(&mut runner).map_err(|e| format!("{}: {e}", property.name))
}

#[allow(dead_code)]
pub fn property(name: &str) -> &'static Property {
    PROPERTIES
        .iter()
        .find(|p| p.name == name)
        .expect("known property")
}
