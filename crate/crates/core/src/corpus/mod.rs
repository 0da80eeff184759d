//! Built-in benchmark models and their on-disk fixture form.

mod transcription;

use std::fmt;
use std::str::FromStr;

use serde_json::json;
use thiserror::Error;

use crate::exec::Mode;
use crate::io::fmt::fmt_condition;
use crate::io::{emit_config, emit_flowstar, emit_spaceex, write_json, ModelBundle, SourceFormat};
use crate::ir::{
    AffineDynamics, Coef, Condition, HybridAutomaton, InitialCondition, LinearConstraint, Location, ReachSettings,
    Relation, ResetMap, Transition, VariableTable,
};
use crate::reach::{reach, ReachError, ReachOptions, ReachResult, Verdict};
use crate::setrep::Interval;

pub use transcription::{linswitch_matrices, platoon_matrices, ModeMatrices};

#[derive(Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("restitution coefficient {0} is outside [0, 1]")]
    Restitution(f64),
    #[error("initial height range [{0}, {1}] is empty or below ground")]
    Heights(f64, f64),
    #[error("tank coefficient `{0}` must be positive")]
    TankCoefficient(&'static str),
    #[error("unknown benchmark `{0}` (expected one of bouncing-ball, platoon, tank3, linswitch)")]
    UnknownBenchmark(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BenchmarkId {
    BouncingBall2,
    Platoon6,
    Tank3,
    LinSwitch4,
}

impl BenchmarkId {
    pub const ALL: [BenchmarkId; 4] = [Self::BouncingBall2, Self::Platoon6, Self::Tank3, Self::LinSwitch4];

    /// Command-line name, also the fixture directory name.
    pub fn name(self) -> &'static str {
        match self {
            Self::BouncingBall2 => "bouncing-ball",
            Self::Platoon6 => "platoon",
            Self::Tank3 => "tank3",
            Self::LinSwitch4 => "linswitch",
        }
    }

    /// The benchmark with its default parameters.
    pub fn build(self) -> ModelBundle {
        match self {
            Self::BouncingBall2 => build_bouncing_ball(0.75, Interval::new(10.0, 10.2)).expect("defaults are valid"),
            Self::Platoon6 => build_platoon(PlatoonSwitching::Spontaneous),
            Self::Tank3 => build_tank(&TankParams::default()).expect("defaults are valid"),
            Self::LinSwitch4 => build_linswitch(&LinSwitchParams::default()),
        }
    }
}

impl fmt::Display for BenchmarkId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkId {
    type Err = CorpusError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| CorpusError::UnknownBenchmark(s.to_string()))
    }
}

fn axis(n: usize, var: usize, rel: Relation, bound: f64) -> LinearConstraint {
    LinearConstraint::axis(n, var, rel, bound)
}

fn bundle(
    automaton: HybridAutomaton,
    settings: ReachSettings,
    location: &str,
    intervals: Vec<Interval>,
) -> ModelBundle {
    ModelBundle {
        automaton,
        settings,
        initial: InitialCondition {
            location: location.into(),
            intervals,
        },
        source_format: SourceFormat::Builder,
    }
}

/// Two independent balls `(x, v)` and `(x1, v1)` in one location; each
/// bounces with `v := -c·v` on `x = 0 ∧ v <= 0`.
pub fn build_bouncing_ball(c: f64, heights: Interval) -> Result<ModelBundle, CorpusError> {
    if !(0.0..=1.0).contains(&c) {
        return Err(CorpusError::Restitution(c));
    }
    if heights.is_empty() || heights.lo < 0.0 {
        return Err(CorpusError::Heights(heights.lo, heights.hi));
    }
    let n = 4;
    let mut vars = VariableTable::new(&["x", "v", "x1", "v1"]);
    vars.constants.insert("c".into(), c);
    let mut d = AffineDynamics::zero(n, 0);
    for (pos, vel) in [(0, 1), (2, 3)] {
        d.a[pos][vel] = Coef::num(1.0);
        d.c[vel] = Coef::num(-9.81);
    }
    let bounce = |pos: usize, vel: usize, label: &str| {
        let mut row = vec![Coef::zero(); n];
        row[vel] = Coef::symbol("c").neg();
        Transition {
            source: "always".into(),
            target: "always".into(),
            guard: Condition::truth()
                .and(axis(n, pos, Relation::Eq, 0.0))
                .and(axis(n, vel, Relation::Le, 0.0)),
            reset: ResetMap::identity(n).assign(vel, row, Coef::zero()),
            label: Some(label.into()),
        }
    };
    let automaton = HybridAutomaton {
        name: "bouncing_ball".into(),
        vars,
        locations: vec![Location {
            name: "always".into(),
            invariant: Condition::truth()
                .and(axis(n, 0, Relation::Ge, 0.0))
                .and(axis(n, 2, Relation::Ge, 0.0)),
            dynamics: d,
        }],
        transitions: vec![bounce(0, 1, "bounce"), bounce(2, 3, "bounce1")],
        input_range: vec![],
    };
    let settings = ReachSettings {
        horizon: 40.0,
        step: 0.01,
        max_jumps: 8,
        forbidden: Some(Condition::truth().and(axis(n, 1, Relation::Ge, 10.7))),
        output_vars: ("x".into(), "v".into()),
        fixpoint_check: false,
    };
    let zero = Interval::point(0.0);
    Ok(bundle(
        automaton,
        settings,
        "always",
        vec![heights, zero, heights, zero],
    ))
}

/// How the platoon moves between its two modes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlatoonSwitching {
    /// Guard `true` both ways: a switch may happen at any time.
    Spontaneous,
    /// Adds a clock `t`; each mode is left exactly when `t` reaches its
    /// dwell time, and the clock restarts.
    Clock { c1: f64, c2: f64 },
}

const PLATOON_VARS: [&str; 18] = [
    "e1", "e1_dot", "a1", "e2", "e2_dot", "a2", "e3", "e3_dot", "a3", "e4", "e4_dot", "a4", "e5", "e5_dot", "a5", "e6",
    "e6_dot", "a6",
];

/// Six-vehicle platoon with modes `q_c` (communication) and `q_n` (none),
/// leader acceleration input `a_L ∈ [0, 0]`.
pub fn build_platoon(switching: PlatoonSwitching) -> ModelBundle {
    let mats = platoon_matrices();
    let clock = matches!(switching, PlatoonSwitching::Clock { .. });
    let mut names: Vec<&str> = PLATOON_VARS.to_vec();
    if clock {
        names.push("t");
    }
    let n = names.len();
    let mut vars = VariableTable::new(&names);
    vars.input_vars.push("a_L".into());
    let location = |name: &str, m: &ModeMatrices, dwell: Option<f64>| {
        let mut a = vec![vec![0.0; n]; n];
        let mut b = vec![vec![0.0]; n];
        for i in 0..18 {
            a[i][..18].copy_from_slice(&m.a[i]);
            b[i][0] = m.b[i];
        }
        let mut c = vec![0.0; n];
        let mut invariant = Condition::truth();
        if let Some(d) = dwell {
            c[18] = 1.0;
            invariant = invariant.and(axis(n, 18, Relation::Le, d));
        }
        Location {
            name: name.into(),
            invariant,
            dynamics: AffineDynamics::from_numeric(&a, &b, &c),
        }
    };
    let (d1, d2) = match switching {
        PlatoonSwitching::Spontaneous => (None, None),
        PlatoonSwitching::Clock { c1, c2 } => (Some(c1), Some(c2)),
    };
    let switch = |from: &str, to: &str, dwell: Option<f64>| {
        let (guard, reset) = match dwell {
            None => (Condition::truth(), ResetMap::identity(n)),
            Some(d) => (
                Condition::truth().and(axis(n, 18, Relation::Ge, d)),
                ResetMap::identity(n).assign(18, vec![Coef::zero(); n], Coef::zero()),
            ),
        };
        Transition {
            source: from.into(),
            target: to.into(),
            guard,
            reset,
            label: None,
        }
    };
    let automaton = HybridAutomaton {
        name: "platoon".into(),
        vars,
        locations: vec![location("q_c", &mats[0], d1), location("q_n", &mats[1], d2)],
        transitions: vec![switch("q_c", "q_n", d1), switch("q_n", "q_c", d2)],
        input_range: vec![Interval::point(0.0)],
    };
    let settings = ReachSettings {
        horizon: 12.0,
        step: 0.02,
        max_jumps: 2,
        forbidden: Some(Condition::truth().and(axis(n, 0, Relation::Ge, 1.7))),
        output_vars: ("e1".into(), "e1_dot".into()),
        fixpoint_check: false,
    };
    let mut init = vec![Interval::new(0.9, 1.1); 18];
    if clock {
        init.push(Interval::point(0.0));
    }
    bundle(automaton, settings, "q_c", init)
}

/// Flow coefficients and valve thresholds of the three-tank system.
///
/// Flows: `Q0` constant into tank 1; `Q1` into tank 1 through valve 1;
/// `k_a·x1` from tank 1 to tank 2; `Q_B` pumped out of tank 2; `k_2·x2`
/// out of tank 2 through valve 2; `k_c·x2` from tank 2 to tank 3 through
/// valve 3.
#[derive(Clone, Debug, PartialEq)]
pub struct TankParams {
    pub q0: f64,
    pub q1: f64,
    pub k_a: f64,
    pub q_b: f64,
    pub k_2: f64,
    pub k_c: f64,
    /// Valve 1 opens when `x1` falls to `.0` and closes when it rises to `.1`.
    pub valve1: (f64, f64),
    /// Valve 2 opens when `x2` rises to `.1` and closes when it falls to `.0`.
    pub valve2: (f64, f64),
    /// Valve 3 opens when `x2` rises to `.1` and closes when it falls to `.0`.
    pub valve3: (f64, f64),
}

impl Default for TankParams {
    fn default() -> Self {
        Self {
            q0: 0.1,
            q1: 0.3,
            k_a: 0.5,
            q_b: 0.1,
            k_2: 0.4,
            k_c: 0.3,
            valve1: (0.35, 0.6),
            valve2: (0.3, 0.45),
            valve3: (0.25, 0.4),
        }
    }
}

/// Eight locations `v1_v2_v3` over `{on, off}`; one toggle transition per
/// valve and location.
pub fn build_tank(p: &TankParams) -> Result<ModelBundle, CorpusError> {
    for (name, v) in [
        ("q0", p.q0),
        ("q1", p.q1),
        ("k_a", p.k_a),
        ("q_b", p.q_b),
        ("k_2", p.k_2),
        ("k_c", p.k_c),
    ] {
        if !(v > 0.0) {
            return Err(CorpusError::TankCoefficient(name));
        }
    }
    let n = 3;
    let state = |k: usize| [k & 4 != 0, k & 2 != 0, k & 1 != 0];
    let name = |s: [bool; 3]| {
        s.iter()
            .map(|on| if *on { "on" } else { "off" })
            .collect::<Vec<_>>()
            .join("_")
    };
    let mut locations = Vec::new();
    let mut transitions = Vec::new();
    for k in 0..8 {
        let [v1, v2, v3] = state(k);
        let on = |b: bool| if b { 1.0 } else { 0.0 };
        let a = vec![
            vec![-p.k_a, 0.0, 0.0],
            vec![p.k_a, -on(v2) * p.k_2 - on(v3) * p.k_c, 0.0],
            vec![0.0, on(v3) * p.k_c, 0.0],
        ];
        let c = vec![p.q0 + on(v1) * p.q1, -p.q_b, 0.0];
        let invariant = Condition::truth()
            .and(if v1 {
                axis(n, 0, Relation::Le, p.valve1.1)
            } else {
                axis(n, 0, Relation::Ge, p.valve1.0)
            })
            .and(if v2 {
                axis(n, 1, Relation::Ge, p.valve2.0)
            } else {
                axis(n, 1, Relation::Le, p.valve2.1)
            })
            .and(if v3 {
                axis(n, 1, Relation::Ge, p.valve3.0)
            } else {
                axis(n, 1, Relation::Le, p.valve3.1)
            });
        locations.push(Location {
            name: name(state(k)),
            invariant,
            dynamics: AffineDynamics::from_numeric(&a, &vec![vec![]; 3], &c),
        });
        let guards = [
            if v1 {
                axis(n, 0, Relation::Ge, p.valve1.1)
            } else {
                axis(n, 0, Relation::Le, p.valve1.0)
            },
            if v2 {
                axis(n, 1, Relation::Le, p.valve2.0)
            } else {
                axis(n, 1, Relation::Ge, p.valve2.1)
            },
            if v3 {
                axis(n, 1, Relation::Le, p.valve3.0)
            } else {
                axis(n, 1, Relation::Ge, p.valve3.1)
            },
        ];
        for (valve, guard) in guards.into_iter().enumerate() {
            let mut to = state(k);
            to[valve] = !to[valve];
            transitions.push(Transition {
                source: name(state(k)),
                target: name(to),
                guard: Condition::truth().and(guard),
                reset: ResetMap::identity(n),
                label: Some(format!(
                    "valve{}_{}",
                    valve + 1,
                    if to[valve] { "open" } else { "close" }
                )),
            });
        }
    }
    let automaton = HybridAutomaton {
        name: "tank3".into(),
        vars: VariableTable::new(&["x1", "x2", "x3"]),
        locations,
        transitions,
        input_range: vec![],
    };
    let settings = ReachSettings {
        horizon: 5.0,
        step: 0.1,
        max_jumps: 8,
        forbidden: Some(Condition::truth().and(axis(n, 2, Relation::Eq, -0.7))),
        output_vars: ("x1".into(), "x3".into()),
        fixpoint_check: false,
    };
    Ok(bundle(
        automaton,
        settings,
        "off_off_off",
        vec![Interval::point(0.5), Interval::point(0.25), Interval::point(0.2)],
    ))
}

/// Thresholds and input range of the switching system.
#[derive(Clone, Debug, PartialEq)]
pub struct LinSwitchParams {
    /// `q1→q2`, `q2→q3` and `q3→q4` fire when `x1` falls to these levels;
    /// `q4→q1` fires when it rises back to the last one.
    pub thresholds: [f64; 4],
    pub input: Interval,
    pub initial: Interval,
}

impl Default for LinSwitchParams {
    fn default() -> Self {
        Self {
            thresholds: [0.5, 0.2, -0.2, 0.5],
            input: Interval::new(-0.1, 0.1),
            initial: Interval::new(0.95, 1.05),
        }
    }
}

/// Four modes `q1..q4` with `ẋ = A_i x + B u`, cycling on thresholds of `x1`.
pub fn build_linswitch(p: &LinSwitchParams) -> ModelBundle {
    let n = 4;
    let mats = linswitch_matrices();
    let [t12, t23, t34, t41] = p.thresholds;
    // invariant of each mode mirrors its exit guard
    let exits = [
        (Relation::Ge, Relation::Le, t12),
        (Relation::Ge, Relation::Le, t23),
        (Relation::Ge, Relation::Le, t34),
        (Relation::Le, Relation::Ge, t41),
    ];
    let mut vars = VariableTable::new(&["x1", "x2", "x3", "x4"]);
    vars.input_vars.push("u".into());
    let mut locations = Vec::new();
    let mut transitions = Vec::new();
    for (i, (m, (inv, guard, level))) in mats.iter().zip(exits).enumerate() {
        let b: Vec<Vec<f64>> = m.b.iter().map(|v| vec![*v]).collect();
        locations.push(Location {
            name: format!("q{}", i + 1),
            invariant: Condition::truth().and(axis(n, 0, inv, level)),
            dynamics: AffineDynamics::from_numeric(&m.a, &b, &[0.0; 4]),
        });
        transitions.push(Transition {
            source: format!("q{}", i + 1),
            target: format!("q{}", (i + 1) % 4 + 1),
            guard: Condition::truth().and(axis(n, 0, guard, level)),
            reset: ResetMap::identity(n),
            label: None,
        });
    }
    let automaton = HybridAutomaton {
        name: "linswitch".into(),
        vars,
        locations,
        transitions,
        input_range: vec![p.input],
    };
    let settings = ReachSettings {
        horizon: 1.0,
        step: 0.01,
        max_jumps: 8,
        forbidden: None,
        output_vars: ("x1".into(), "x2".into()),
        fixpoint_check: false,
    };
    bundle(automaton, settings, "q1", vec![p.initial; 4])
}

/// Seed and count of the simulations that the fixture's containment
/// check replays.
pub const CONTAINMENT_SEED: u64 = 42;
pub const CONTAINMENT_RUNS: usize = 100;

/// Fixture files for a bundle, in a fixed order: SpaceEx model, config,
/// Flow*-style model and canonical JSON.
pub fn fixture_files(bundle: &ModelBundle) -> Vec<(&'static str, String)> {
    vec![
        ("model.xml", emit_spaceex(&bundle.automaton)),
        ("config.cfg", emit_config(bundle)),
        ("model.model", emit_flowstar(bundle)),
        ("model.json", write_json(bundle)),
    ]
}

fn parameters(id: BenchmarkId) -> serde_json::Value {
    match id {
        BenchmarkId::BouncingBall2 => json!({ "restitution": 0.75, "heights": [10.0, 10.2] }),
        BenchmarkId::Platoon6 => json!({ "switching": "spontaneous", "leader_acceleration": [0.0, 0.0] }),
        BenchmarkId::Tank3 => {
            let p = TankParams::default();
            json!({
                "q0": p.q0, "q1": p.q1, "k_a": p.k_a, "q_b": p.q_b, "k_2": p.k_2, "k_c": p.k_c,
                "valve1": [p.valve1.0, p.valve1.1],
                "valve2": [p.valve2.0, p.valve2.1],
                "valve3": [p.valve3.0, p.valve3.1],
            })
        }
        BenchmarkId::LinSwitch4 => {
            let p = LinSwitchParams::default();
            json!({
                "thresholds": p.thresholds,
                "input": [p.input.lo, p.input.hi],
                "initial": [p.initial.lo, p.initial.hi],
            })
        }
    }
}

/// `expected.json`: structure, parameters and the reachability outcome
/// under default settings. Wall time is left out so the file is stable.
pub fn expected_json(id: BenchmarkId, bundle: &ModelBundle, result: &ReachResult) -> String {
    let aut = &bundle.automaton;
    let names = &aut.vars.state_vars;
    let s = &bundle.settings;
    let (verdict_segment, verdict_time) = match result.verdict {
        Verdict::PossiblyUnsafe { segment } => (json!(segment), json!(result.segments[segment].time.lo)),
        Verdict::SafeProved => (json!(null), json!(null)),
    };
    let doc = json!({
        "benchmark": id.name(),
        "structure": {
            "state_vars": names,
            "input_vars": aut.vars.input_vars,
            "locations": aut.locations.iter().map(|l| l.name.as_str()).collect::<Vec<_>>(),
            "transitions": aut.transitions.len(),
            "initial_location": bundle.initial.location,
        },
        "settings": {
            "horizon": s.horizon,
            "step": s.step,
            "max_jumps": s.max_jumps,
            "forbidden": s.forbidden.as_ref().map(|f| fmt_condition(f, names, " & ")),
            "fixpoint": s.fixpoint_check,
        },
        "parameters": parameters(id),
        "reach": {
            "verdict_line": result.verdict_line(),
            "verdict": result.verdict.name(),
            "first_offending_segment": verdict_segment,
            "first_offending_time": verdict_time,
            "termination": result.termination.name(),
            "max_depth": result.stats.max_depth,
            "flowpipes": result.stats.flowpipes,
            "segments": result.stats.segments,
            "covered_until": result.stats.covered_until,
        },
        "containment": {
            "runs": CONTAINMENT_RUNS,
            "seed": CONTAINMENT_SEED,
            "sim_step": s.step / 10.0,
            "integrator": "heun",
            "slack": 1e-6,
        },
    });
    let mut out = serde_json::to_string_pretty(&doc).expect("json values serialize");
    out.push('\n');
    out
}

/// Every fixture file of a benchmark, `expected.json` last.
pub fn fixture_set(id: BenchmarkId, mode: Mode) -> Result<Vec<(&'static str, String)>, ReachError> {
    let bundle = id.build();
    let result = reach(
        &bundle,
        &ReachOptions {
            mode,
            ..ReachOptions::default()
        },
    )?;
    let mut files = fixture_files(&bundle);
    files.push(("expected.json", expected_json(id, &bundle, &result)));
    Ok(files)
}
