//! Fixed-step hybrid simulation with guard-crossing detection.
//!
//! A transition fires on the rising edge of its guard: the guard must be
//! false at the start of a step and true somewhere inside it. The crossing
//! is then located by bisection. Equalities count as satisfied once the
//! constraint has changed sign relative to the start of the step.
//! Guards that cross at the same instant as the one taken (two balls
//! landing together) fire immediately after it, in declaration order.

use std::fmt::Write as _;
use std::str::FromStr;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::exec::{self, Mode};
use crate::io::ModelBundle;
use crate::ir::numeric::{resolve, NumConstraint, NumLocation, NumTransition, System};
use crate::ir::Relation;
use crate::setrep::IntervalBox;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum IntegratorKind {
    Euler,
    /// Heun's method.
    #[default]
    SecondOrder,
}

impl FromStr for IntegratorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euler" => Ok(Self::Euler),
            "heun" | "second-order" | "rk2" => Ok(Self::SecondOrder),
            _ => Err(format!("unknown integrator `{s}` (expected euler or heun)")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum SimError {
    #[error("{0}")]
    Model(String),
    #[error("invalid simulation options: {0}")]
    Options(String),
    #[error("initial state is not inside the invariant of `{location}`")]
    InitOutsideInvariant { location: String },
    #[error("more than {limit} discrete events by t = {time}")]
    MaxEventsExceeded { limit: usize, time: f64 },
}

#[derive(Clone, Debug)]
pub struct SimOptions {
    pub step: f64,
    pub kind: IntegratorKind,
    /// Gap below which consecutive events count towards Zeno detection.
    pub zeno_dwell: f64,
    /// Number of consecutive short gaps that triggers the Zeno halt.
    pub zeno_count: usize,
    pub max_events: usize,
    /// Constant input; the midpoint of the input range when absent.
    pub input: Option<DVector<f64>>,
}

impl SimOptions {
    pub fn new(step: f64, kind: IntegratorKind) -> Self {
        Self {
            step,
            kind,
            zeno_dwell: 1e-4,
            zeno_count: 10,
            max_events: 10_000,
            input: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub time: f64,
    pub location: usize,
    /// Number of jumps taken so far.
    pub jumps: usize,
    pub state: DVector<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Event {
    pub time: f64,
    pub transition: usize,
    /// Location entered.
    pub target: usize,
    pub label: String,
    pub pre: DVector<f64>,
    pub post: DVector<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Ending {
    Horizon,
    Zeno,
    /// Time could not continue: the invariant failed with no enabled jump.
    InvariantExit,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub state_vars: Vec<String>,
    pub locations: Vec<String>,
    pub samples: Vec<Sample>,
    pub events: Vec<Event>,
    pub zeno: bool,
    /// Extrapolated accumulation time when `zeno` is set.
    pub zeno_time: Option<f64>,
    pub ending: Ending,
}

/// One integrator step of size `h` under constant input `u`.
pub fn step(loc: &NumLocation, x: &DVector<f64>, u: &DVector<f64>, h: f64, kind: IntegratorKind) -> DVector<f64> {
    let k1 = loc.derivative(x, u);
    match kind {
        IntegratorKind::Euler => x + k1 * h,
        IntegratorKind::SecondOrder => {
            let pred = x + &k1 * h;
            let k2 = loc.derivative(&pred, u);
            x + (k1 + k2) * (0.5 * h)
        }
    }
}

const INEQ_TOL: f64 = 1e-9;
/// A step starting this close to an equality surface (typically right after
/// a jump onto it) is treated as starting on it.
const ON_SURFACE: f64 = 1e-6;

/// Guard evaluation relative to the state at the start of a step.
struct GuardProbe<'a> {
    guard: &'a [NumConstraint],
    /// For each equality, the side of the surface the step starts on.
    side: Vec<f64>,
}

impl<'a> GuardProbe<'a> {
    fn new(guard: &'a [NumConstraint], loc: &NumLocation, x: &DVector<f64>, u: &DVector<f64>, tol: f64) -> Self {
        let f = loc.derivative(x, u);
        let side = guard
            .iter()
            .map(|c| {
                let g = c.value(x) - c.bound;
                let d = c.normal.dot(&f);
                // heading for a surface that is further away than event
                // localization can overshoot is not being on it
                let approaching = g * d < 0.0 && g.abs() > 10.0 * tol * d.abs();
                if g.abs() > ON_SURFACE || approaching {
                    g.signum()
                } else {
                    // on the surface: the side we are moving into
                    if d == 0.0 {
                        0.0
                    } else {
                        d.signum()
                    }
                }
            })
            .collect();
        Self { guard, side }
    }

    fn holds(&self, x: &DVector<f64>) -> bool {
        self.guard.iter().zip(&self.side).all(|(c, s)| {
            let g = c.value(x) - c.bound;
            match c.relation {
                Relation::Eq if *s == 0.0 => g.abs() <= INEQ_TOL,
                Relation::Eq => s * g <= 0.0,
                _ => c.holds(x, INEQ_TOL),
            }
        })
    }

    fn holds_at_start(&self, x: &DVector<f64>) -> bool {
        self.guard.iter().zip(&self.side).all(|(c, s)| match c.relation {
            Relation::Eq => *s == 0.0 && (c.value(x) - c.bound).abs() <= INEQ_TOL,
            _ => c.holds(x, INEQ_TOL),
        })
    }
}

/// Earliest time in `(t, t+h]` at which `tr`'s guard becomes true along the
/// integrator path from `x`, with the state there. Bisection stops at
/// `1e-9·max(1, t)`.
#[allow(clippy::too_many_arguments)]
pub fn detect_event(
    loc: &NumLocation,
    tr: &NumTransition,
    x: &DVector<f64>,
    u: &DVector<f64>,
    t: f64,
    h: f64,
    kind: IntegratorKind,
) -> Option<(f64, DVector<f64>)> {
    let tol = 1e-9 * t.abs().max(1.0);
    let probe = GuardProbe::new(&tr.guard.constraints, loc, x, u, tol);
    if probe.holds_at_start(x) {
        return None;
    }
    let end = step(loc, x, u, h, kind);
    if !probe.holds(&end) {
        return None;
    }
    let (mut lo, mut hi, mut at_hi) = (0.0, h, end);
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let xm = step(loc, x, u, mid, kind);
        if probe.holds(&xm) {
            hi = mid;
            at_hi = xm;
        } else {
            lo = mid;
        }
    }
    Some((t + hi, at_hi))
}

/// Guard check for a transition that crossed together with the one just
/// taken; equalities get the on-surface tolerance.
fn enabled_after_jump(tr: &NumTransition, x: &DVector<f64>) -> bool {
    tr.guard.constraints.iter().all(|c| match c.relation {
        Relation::Eq => c.holds(x, ON_SURFACE),
        _ => c.holds(x, INEQ_TOL),
    })
}

fn zeno_estimate(events: &[Event], n: usize) -> f64 {
    let k = events.len();
    let last = events[k - 1].time;
    if k < 3 || n < 2 {
        return last;
    }
    let g1 = events[k - 1].time - events[k - 2].time;
    let g0 = events[k - 2].time - events[k - 3].time;
    if g0 <= 0.0 || g1 <= 0.0 {
        return last;
    }
    let r = g1 / g0;
    if r >= 1.0 {
        last
    } else {
        last + g1 * r / (1.0 - r)
    }
}

/// Simulates from point `x0` in the bundle's initial location.
pub fn simulate(bundle: &ModelBundle, x0: &DVector<f64>, opts: &SimOptions) -> Result<Trajectory, SimError> {
    let sys = resolve(&bundle.automaton).map_err(|e| SimError::Model(e.to_string()))?;
    let start = sys
        .location_index(&bundle.initial.location)
        .ok_or_else(|| SimError::Model(format!("unknown location `{}`", bundle.initial.location)))?;
    simulate_system(&sys, start, x0, bundle.settings.horizon, opts)
}

pub fn simulate_system(
    sys: &System,
    start: usize,
    x0: &DVector<f64>,
    horizon: f64,
    opts: &SimOptions,
) -> Result<Trajectory, SimError> {
    let h = opts.step;
    if !(h > 0.0) || !h.is_finite() {
        return Err(SimError::Options(format!("step must be positive, got {h}")));
    }
    if x0.len() != sys.n() {
        return Err(SimError::Options(format!(
            "initial state has {} entries, expected {}",
            x0.len(),
            sys.n()
        )));
    }
    let u = opts.input.clone().unwrap_or_else(|| sys.input_box.center());
    if u.len() != sys.input_vars.len() {
        return Err(SimError::Options("input has the wrong dimension".into()));
    }
    if !sys.locations[start].invariant.holds(x0, INEQ_TOL) {
        return Err(SimError::InitOutsideInvariant {
            location: sys.locations[start].name.clone(),
        });
    }

    let mut traj = Trajectory {
        state_vars: sys.state_vars.clone(),
        locations: sys.locations.iter().map(|l| l.name.clone()).collect(),
        samples: vec![Sample {
            time: 0.0,
            location: start,
            jumps: 0,
            state: x0.clone(),
        }],
        events: Vec::new(),
        zeno: false,
        zeno_time: None,
        ending: Ending::Horizon,
    };
    let (mut t, mut loc, mut x) = (0.0, start, x0.clone());
    let mut short_gaps = 0usize;
    let end = horizon * (1.0 - 1e-12);
    while t < end {
        let dt = h.min(horizon - t);
        let l = &sys.locations[loc];
        // earliest crossing; ties go to the first declared transition
        let mut best: Option<(f64, &NumTransition, DVector<f64>)> = None;
        for tr in sys.outgoing(loc) {
            if let Some((te, xe)) = detect_event(l, tr, &x, &u, t, dt, opts.kind) {
                if best.as_ref().is_none_or(|(tb, _, _)| te < *tb) {
                    best = Some((te, tr, xe));
                }
            }
        }
        match best {
            Some((te, tr, pre)) => {
                if te > traj.samples.last().map_or(0.0, |s| s.time) {
                    traj.samples.push(Sample {
                        time: te,
                        location: loc,
                        jumps: traj.events.len(),
                        state: pre.clone(),
                    });
                }
                // guards of the new location that were false at the start of
                // the step and hold after the jump crossed at the same instant
                let mut fired = vec![(tr, pre)];
                while fired.len() <= sys.transitions.len() {
                    let (last, x_last) = fired.last().expect("nonempty");
                    let post = last.apply_reset(x_last);
                    let next = sys
                        .outgoing(last.target)
                        .find(|t2| !t2.guard.holds(&x, INEQ_TOL) && enabled_after_jump(t2, &post));
                    match next {
                        Some(t2) => fired.push((t2, post)),
                        None => break,
                    }
                }
                for (tr, pre) in fired {
                    let post = tr.apply_reset(&pre);
                    if let Some(prev) = traj.events.last() {
                        if te - prev.time < opts.zeno_dwell {
                            short_gaps += 1;
                        } else {
                            short_gaps = 0;
                        }
                    }
                    traj.events.push(Event {
                        time: te,
                        transition: tr.index,
                        target: tr.target,
                        label: tr.label.clone(),
                        pre,
                        post: post.clone(),
                    });
                    if traj.events.len() > opts.max_events {
                        return Err(SimError::MaxEventsExceeded {
                            limit: opts.max_events,
                            time: te,
                        });
                    }
                    loc = tr.target;
                    x = post;
                }
                t = te;
                if short_gaps >= opts.zeno_count {
                    traj.zeno = true;
                    traj.zeno_time = Some(zeno_estimate(&traj.events, opts.zeno_count));
                    traj.ending = Ending::Zeno;
                    return Ok(traj);
                }
            }
            None => {
                let next = step(l, &x, &u, dt, opts.kind);
                if !l.invariant.holds(&next, 1e-6) {
                    traj.ending = Ending::InvariantExit;
                    return Ok(traj);
                }
                t += dt;
                x = next;
                traj.samples.push(Sample {
                    time: t,
                    location: loc,
                    jumps: traj.events.len(),
                    state: x.clone(),
                });
            }
        }
    }
    Ok(traj)
}

/// Runs one simulation per start point, in order.
pub fn simulate_batch(
    bundle: &ModelBundle,
    starts: &[DVector<f64>],
    opts: &SimOptions,
    mode: Mode,
) -> Vec<Result<Trajectory, SimError>> {
    let sys = match resolve(&bundle.automaton) {
        Ok(s) => s,
        Err(e) => return starts.iter().map(|_| Err(SimError::Model(e.to_string()))).collect(),
    };
    let Some(start) = sys.location_index(&bundle.initial.location) else {
        return starts
            .iter()
            .map(|_| Err(SimError::Model("unknown initial location".into())))
            .collect();
    };
    exec::map(mode, starts, |x0| {
        simulate_system(&sys, start, x0, bundle.settings.horizon, opts)
    })
}

/// `k` points from `b`: all corners first when `k >= 2^n`, then uniform
/// draws from a ChaCha8 stream seeded with `seed`.
pub fn sample_initial(b: &IntervalBox, k: usize, seed: u64) -> Vec<DVector<f64>> {
    let n = b.dim();
    let mut out = Vec::with_capacity(k);
    if n < usize::BITS as usize && k >= 1usize << n {
        out.extend(b.corners());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    while out.len() < k {
        out.push(DVector::from_iterator(
            n,
            b.dims.iter().map(|iv| {
                if iv.lo < iv.hi {
                    rng.random_range(iv.lo..=iv.hi)
                } else {
                    iv.lo
                }
            }),
        ));
    }
    out
}

/// Samples as CSV: `time,location,<state vars…>`.
pub fn trajectory_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,location");
    for v in &traj.state_vars {
        let _ = write!(out, ",{v}");
    }
    out.push('\n');
    for s in &traj.samples {
        let _ = write!(out, "{},{}", s.time, traj.locations[s.location]);
        for v in s.state.iter() {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Several runs in one CSV: `run,time,location,<state vars…>`.
pub fn runs_csv(runs: &[Trajectory]) -> String {
    let mut out = String::from("run,time,location");
    if let Some(first) = runs.first() {
        for v in &first.state_vars {
            let _ = write!(out, ",{v}");
        }
    }
    out.push('\n');
    for (k, traj) in runs.iter().enumerate() {
        for s in &traj.samples {
            let _ = write!(out, "{k},{},{}", s.time, traj.locations[s.location]);
            for v in s.state.iter() {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
    }
    out
}

/// Events as CSV: `time,label,pre_<v>…,post_<v>…`.
pub fn events_csv(traj: &Trajectory) -> String {
    let mut out = String::from("time,label");
    for p in ["pre", "post"] {
        for v in &traj.state_vars {
            let _ = write!(out, ",{p}_{v}");
        }
    }
    out.push('\n');
    for e in &traj.events {
        let _ = write!(out, "{},{}", e.time, e.label);
        for v in e.pre.iter().chain(e.post.iter()) {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::numeric::NumCondition;
    use nalgebra::DMatrix;

    fn decay() -> NumLocation {
        NumLocation {
            name: "l".into(),
            invariant: NumCondition::default(),
            a: DMatrix::from_element(1, 1, -1.0),
            b: DMatrix::zeros(1, 0),
            c: DVector::zeros(1),
        }
    }

    fn fall() -> NumLocation {
        NumLocation {
            name: "fall".into(),
            invariant: NumCondition::default(),
            a: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            b: DMatrix::zeros(2, 0),
            c: DVector::from_column_slice(&[0.0, -9.81]),
        }
    }

    fn bounce() -> NumTransition {
        NumTransition {
            index: 0,
            source: 0,
            target: 0,
            guard: NumCondition {
                constraints: vec![
                    NumConstraint {
                        normal: DVector::from_column_slice(&[1.0, 0.0]),
                        relation: Relation::Eq,
                        bound: 0.0,
                    },
                    NumConstraint {
                        normal: DVector::from_column_slice(&[0.0, 1.0]),
                        relation: Relation::Le,
                        bound: 0.0,
                    },
                ],
            },
            reset_matrix: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.75]),
            reset_offset: DVector::zeros(2),
            label: "bounce".into(),
        }
    }

    #[test]
    fn frozen_step_is_identity() {
        let mut l = decay();
        l.a[(0, 0)] = 0.0;
        let x = DVector::from_element(1, 3.0);
        for k in [IntegratorKind::Euler, IntegratorKind::SecondOrder] {
            assert_eq!(step(&l, &x, &DVector::zeros(0), 0.1, k), x);
        }
    }

    #[test]
    fn decay_one_step() {
        let x = DVector::from_element(1, 1.0);
        let u = DVector::zeros(0);
        assert!((step(&decay(), &x, &u, 0.1, IntegratorKind::Euler)[0] - 0.9).abs() < 1e-15);
        assert!((step(&decay(), &x, &u, 0.1, IntegratorKind::SecondOrder)[0] - 0.905).abs() < 1e-15);
    }

    #[test]
    fn free_fall_errors() {
        let x = DVector::from_column_slice(&[10.0, 0.0]);
        let u = DVector::zeros(0);
        let h = 0.01;
        let exact = 10.0 - 0.5 * 9.81 * h * h;
        let heun = step(&fall(), &x, &u, h, IntegratorKind::SecondOrder);
        let euler = step(&fall(), &x, &u, h, IntegratorKind::Euler);
        assert!((heun[0] - exact).abs() < 1e-14);
        assert!(((euler[0] - exact) - 0.5 * 9.81 * h * h).abs() < 1e-14);
    }

    #[test]
    fn no_event_without_crossing() {
        let x = DVector::from_column_slice(&[10.0, 0.0]);
        let r = detect_event(
            &fall(),
            &bounce(),
            &x,
            &DVector::zeros(0),
            0.0,
            0.01,
            IntegratorKind::SecondOrder,
        );
        assert!(r.is_none());
    }

    #[test]
    fn crossing_at_step_end() {
        // starts at height g h²/2 at rest: hits the ground exactly after one step
        let h = 0.1;
        let x = DVector::from_column_slice(&[0.5 * 9.81 * h * h, 0.0]);
        let (t, xe) = detect_event(
            &fall(),
            &bounce(),
            &x,
            &DVector::zeros(0),
            2.0,
            h,
            IntegratorKind::SecondOrder,
        )
        .unwrap();
        assert!((t - 2.1).abs() < 1e-8, "{t}");
        assert!(xe[0].abs() < 1e-6);
    }

    #[test]
    fn sample_rules() {
        let b = IntervalBox::from_bounds(&[0.0, 1.0], &[1.0, 2.0]);
        assert_eq!(sample_initial(&b, 4, 7), b.corners());
        assert_eq!(sample_initial(&b, 9, 7), sample_initial(&b, 9, 7));
        assert_ne!(sample_initial(&b, 9, 7), sample_initial(&b, 9, 8));
        let p = IntervalBox::from_bounds(&[0.5, 0.5], &[0.5, 0.5]);
        let s = sample_initial(&p, 3, 1);
        assert!(s.iter().all(|x| x == &DVector::from_column_slice(&[0.5, 0.5])));
        assert_eq!(s.len(), 3);
        for x in sample_initial(&b, 50, 3) {
            assert!(b.contains_point(&x, 0.0));
        }
    }

    #[test]
    fn parses_integrators() {
        assert_eq!("heun".parse(), Ok(IntegratorKind::SecondOrder));
        assert_eq!("euler".parse(), Ok(IntegratorKind::Euler));
        assert!("rk4".parse::<IntegratorKind>().is_err());
    }

    #[test]
    fn simultaneous_crossings_fire_together() {
        use crate::corpus::BenchmarkId;
        let ball = BenchmarkId::BouncingBall2.build();
        let x0 = DVector::from_vec(vec![10.1, 0.0, 10.1, 0.0]);
        let tr = simulate(&ball, &x0, &SimOptions::new(1e-3, IntegratorKind::SecondOrder)).unwrap();
        assert_eq!(tr.ending, Ending::Zeno);
        assert_eq!(tr.events[0].time, tr.events[1].time);
        assert_eq!(
            (tr.events[0].label.as_str(), tr.events[1].label.as_str()),
            ("bounce", "bounce1")
        );
        assert!(tr.events[1].post[1] > 0.0 && tr.events[1].post[3] > 0.0);

        // x1 + x2 is constant with all valves shut, so two guards cross at once
        let tank = BenchmarkId::Tank3.build();
        let x0 = DVector::from_vec(vec![0.5, 0.25, 0.2]);
        let tr = simulate(&tank, &x0, &SimOptions::new(1e-3, IntegratorKind::SecondOrder)).unwrap();
        assert_eq!(tr.ending, Ending::Horizon);
        assert_eq!(tr.events[0].label, "valve1_open");
        assert_eq!(tr.events[1].label, "valve3_open");
        assert_eq!(tr.events[0].time, tr.events[1].time);
    }
}
