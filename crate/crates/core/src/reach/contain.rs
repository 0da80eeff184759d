//! Checking simulated trajectories against a computed flowpipe.

use nalgebra::DVector;

use super::ReachResult;
use crate::simulate::Trajectory;

/// A sampled state outside every segment that covers its time.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub time: f64,
    pub location: String,
    pub jumps: usize,
    pub state: DVector<f64>,
}

/// Segments bucketed by time for fast lookup.
pub struct CoverIndex<'a> {
    result: &'a ReachResult,
    width: f64,
    buckets: Vec<Vec<usize>>,
}

const TIME_TOL: f64 = 1e-9;

impl<'a> CoverIndex<'a> {
    pub fn new(result: &'a ReachResult) -> Self {
        let end = result.segments.iter().map(|s| s.time.hi).fold(0.0, f64::max);
        let min_width = result
            .segments
            .iter()
            .map(|s| s.time.width())
            .filter(|w| *w > 0.0)
            .fold(f64::INFINITY, f64::min);
        let count = if end > 0.0 && min_width.is_finite() {
            ((end / min_width).ceil() as usize).clamp(1, 1 << 16)
        } else {
            1
        };
        let width = if end > 0.0 { end / count as f64 } else { 1.0 };
        let mut buckets = vec![Vec::new(); count];
        for (i, s) in result.segments.iter().enumerate() {
            let a = ((s.time.lo - TIME_TOL) / width).floor().max(0.0) as usize;
            let b = ((s.time.hi + TIME_TOL) / width).floor() as usize;
            for bucket in &mut buckets[a.min(count - 1)..=b.min(count - 1)] {
                bucket.push(i);
            }
        }
        Self { result, width, buckets }
    }

    /// Whether `x` at time `t` in `location` lies in the box hull, widened
    /// by `slack`, of some segment whose time interval contains `t`.
    pub fn covers(&self, t: f64, location: &str, x: &DVector<f64>, slack: f64) -> bool {
        let k = ((t / self.width).floor().max(0.0) as usize).min(self.buckets.len() - 1);
        self.buckets[k].iter().any(|&i| {
            let s = &self.result.segments[i];
            s.location == location && s.time.contains(t, TIME_TOL) && s.hull.contains_point(x, slack)
        })
    }

    /// Samples and event post-states with at most `max_jumps` jumps that no
    /// segment covers.
    pub fn violations(&self, traj: &Trajectory, max_jumps: usize, slack: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut check = |t: f64, loc: usize, jumps: usize, x: &DVector<f64>| {
            let name = &traj.locations[loc];
            if jumps <= max_jumps && !self.covers(t, name, x, slack) {
                out.push(Violation {
                    time: t,
                    location: name.clone(),
                    jumps,
                    state: x.clone(),
                });
            }
        };
        for s in &traj.samples {
            check(s.time, s.location, s.jumps, &s.state);
        }
        // the state right after a jump is not a sample of its own
        for (k, e) in traj.events.iter().enumerate() {
            check(e.time, e.target, k + 1, &e.post);
        }
        out
    }
}
