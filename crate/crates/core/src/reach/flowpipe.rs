//! Continuous propagation inside one location.

use super::discretize::Kernel;
use super::tighten::enclose_cut;
use super::{FlowpipeSegment, ReachError};
use crate::exec::{self, Mode};
use crate::ir::numeric::NumLocation;
use crate::setrep::{Interval, IntervalBox, Zonotope};

/// Steps propagated before each batch of invariant clamping.
const CHUNK: usize = 64;

/// Per-call knobs for [`flowpipe`].
#[derive(Clone, Copy, Debug)]
pub struct FlowOptions {
    pub horizon: f64,
    pub max_generators: usize,
    pub mode: Mode,
    /// Reject an initial set whose hull leaves the invariant.
    pub check_init: bool,
}

#[derive(Clone, Debug)]
pub struct Flowpipe {
    pub segments: Vec<FlowpipeSegment>,
    pub bloat: f64,
}

fn step_check(loc: &NumLocation, alpha: f64, x0: &IntervalBox) -> Result<(), ReachError> {
    let limit = 10.0 * x0.radius().max(0.1 * x0.sup_norm());
    if alpha > 0.0 && alpha > limit {
        return Err(ReachError::StepTooLarge {
            location: loc.name.clone(),
            detail: format!(
                "curvature bloating {alpha:.3e} exceeds 10x the initial set size {:.3e}; reduce the step",
                limit / 10.0
            ),
        });
    }
    Ok(())
}

/// Flowpipe from `init`, entered at some time in `start`.
///
/// Segment `k` covers `[start.lo + k·h, start.hi + (k+1)·h]` (capped at the
/// horizon). Each segment keeps the unclamped zonotope and a box enclosing
/// its intersection with the invariant; the pipe ends at the horizon or at
/// the first segment that lies wholly outside the invariant.
pub fn flowpipe(
    loc: &NumLocation,
    kernel: &Kernel,
    init: &Zonotope,
    start: Interval,
    depth: usize,
    opts: &FlowOptions,
) -> Result<Flowpipe, ReachError> {
    let h = kernel.step;
    let hull0 = init.box_hull();
    if opts.check_init && !init_inside(&hull0, loc) {
        return Err(ReachError::InitOutsideInvariant {
            location: loc.name.clone(),
        });
    }
    let first = kernel.first_step(init);
    step_check(loc, first.alpha, &hull0)?;

    let end = opts.horizon * (1.0 - 1e-12);
    let mut segments = Vec::new();
    let mut omega = first.omega.reduce_order(opts.max_generators);
    let mut k = 0usize;
    'outer: loop {
        let mut batch = Vec::with_capacity(CHUNK);
        while batch.len() < CHUNK {
            let t0 = start.lo + k as f64 * h;
            if t0 >= end {
                break;
            }
            let t1 = (start.hi + (k + 1) as f64 * h).min(opts.horizon);
            let next = kernel.advance(&omega);
            let next = Zonotope {
                center: next.center + &kernel.v.center,
                generators: hcat(&next.generators, &kernel.v.generators),
            }
            .reduce_order(opts.max_generators);
            batch.push((Interval::new(t0, t1), std::mem::replace(&mut omega, next)));
            k += 1;
        }
        if batch.is_empty() {
            break;
        }
        let full = batch.len() == CHUNK;
        let clamped = exec::map(opts.mode, &batch, |(_, z)| enclose_cut(z, &loc.invariant));
        for ((time, set), hull) in batch.into_iter().zip(clamped) {
            let Some(hull) = hull else { break 'outer };
            segments.push(FlowpipeSegment {
                time,
                set,
                hull,
                location: loc.name.clone(),
                jump_depth: depth,
            });
        }
        if !full {
            break;
        }
    }
    Ok(Flowpipe {
        segments,
        bloat: first.bloat,
    })
}

fn init_inside(hull: &IntervalBox, loc: &NumLocation) -> bool {
    loc.invariant.constraints.iter().all(|c| {
        let r = hull.range_of(&c.normal);
        let tol = 1e-9 * (1.0 + c.bound.abs());
        use crate::ir::Relation::*;
        match c.relation {
            Le | Lt => r.hi <= c.bound + tol,
            Ge | Gt => r.lo >= c.bound - tol,
            Eq => r.hi <= c.bound + tol && r.lo >= c.bound - tol,
        }
    })
}

fn hcat(a: &nalgebra::DMatrix<f64>, b: &nalgebra::DMatrix<f64>) -> nalgebra::DMatrix<f64> {
    if b.ncols() == 0 {
        return a.clone();
    }
    let mut out = nalgebra::DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}
