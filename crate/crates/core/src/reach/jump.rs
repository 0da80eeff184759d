//! Discrete successors of a flowpipe.

use super::tighten::enclose_cut;
use super::FlowpipeSegment;
use crate::exec::{self, Mode};
use crate::ir::numeric::{NumCondition, NumLocation, NumTransition};
use crate::ir::Relation;
use crate::setrep::{intersect_condition, Interval, IntervalBox, Zonotope};

/// Initial set for a location entered by a jump.
#[derive(Clone, Debug, PartialEq)]
pub struct Successor {
    pub target: usize,
    /// Box enclosure, clamped to the target invariant.
    pub init: IntervalBox,
    /// Zonotope enclosure; not clamped, but keeps correlations that the box
    /// loses.
    pub set: Zonotope,
    /// Times at which the jump may have fired.
    pub time: Interval,
    pub depth: usize,
}

fn reset(z: &Zonotope, t: &NumTransition) -> Zonotope {
    Zonotope {
        center: &t.reset_matrix * &z.center + &t.reset_offset,
        generators: &t.reset_matrix * &z.generators,
    }
}

/// Zonotope enclosure of `z` cut by the guard's equalities, if it has any.
fn plane_cut(z: &Zonotope, guard: &NumCondition) -> Option<Option<Zonotope>> {
    let mut eqs = guard
        .constraints
        .iter()
        .filter(|c| c.relation == Relation::Eq)
        .peekable();
    eqs.peek()?;
    let mut out = z.clone();
    for c in eqs {
        match out.meet_hyperplane(&c.normal, c.bound) {
            Some(next) => out = next,
            None => return Some(None),
        }
    }
    Some(Some(out))
}

/// Rounding slack for meeting two enclosures computed along different paths.
fn inflate(b: &IntervalBox) -> IntervalBox {
    IntervalBox::new(
        b.dims
            .iter()
            .map(|d| {
                let e = 1e-9 * (1.0 + d.lo.abs().max(d.hi.abs()));
                Interval::new(d.lo - e, d.hi + e)
            })
            .collect(),
    )
}

/// One successor per maximal run of consecutive segments that meet the guard.
///
/// Each segment is cut with guard and source invariant, mapped through the
/// reset, and the run is aggregated by hull (an oriented box for zonotopes),
/// then the box is clamped to the
/// target invariant. Guards with equalities also get a zonotope cut, which
/// becomes the successor's set; otherwise the set is the clamped box. An
/// empty list means the transition is never enabled.
pub fn jump_successors(
    segments: &[FlowpipeSegment],
    source: &NumLocation,
    target: &NumLocation,
    t: &NumTransition,
    max_generators: usize,
    mode: Mode,
) -> Vec<Successor> {
    let mut cond = NumCondition {
        constraints: t.guard.constraints.clone(),
    };
    cond.constraints.extend(source.invariant.constraints.iter().cloned());
    let hits: Vec<Option<(IntervalBox, Option<Zonotope>)>> = exec::map(mode, segments, |s| {
        intersect_condition(&s.hull, &t.guard)?;
        let b = enclose_cut(&s.set, &cond)?.meet(&s.hull)?;
        let z = match plane_cut(&s.set, &t.guard) {
            None => None,
            Some(None) => return None,
            Some(Some(z)) => Some(reset(&z, t).reduce_order(max_generators)),
        };
        Some((reset(&Zonotope::from_box(&b), t).box_hull(), z))
    });
    let mut out = Vec::new();
    let mut run: Option<(IntervalBox, Option<Vec<Zonotope>>, Interval)> = None;
    let mut flush = |run: &mut Option<(IntervalBox, Option<Vec<Zonotope>>, Interval)>| {
        if let Some((b, zs, time)) = run.take() {
            let z = zs.map(|zs| match zs.len() {
                1 => zs.into_iter().next().expect("one element"),
                _ => Zonotope::oriented_hull(&zs).expect("run is nonempty and of one dimension"),
            });
            let b = match &z {
                Some(z) => b.meet(&inflate(&z.box_hull())),
                None => Some(b),
            };
            if let Some(init) = b.and_then(|b| intersect_condition(&b, &target.invariant)) {
                out.push(Successor {
                    target: t.target,
                    set: z.unwrap_or_else(|| Zonotope::from_box(&init)),
                    init,
                    time,
                    depth: segments[0].jump_depth + 1,
                });
            }
        }
    };
    for (s, hit) in segments.iter().zip(hits) {
        match (hit, &mut run) {
            (Some((b, z)), Some((acc, zs, time))) => {
                *acc = acc.hull(&b);
                match (zs.as_mut(), z) {
                    (Some(v), Some(z)) => v.push(z),
                    _ => *zs = None,
                }
                *time = time.hull(&s.time);
            }
            (Some((b, z)), None) => run = Some((b, z.map(|z| vec![z]), s.time)),
            (None, _) => flush(&mut run),
        }
    }
    flush(&mut run);
    out
}
