//! Box enclosures of `Z ∩ C` for a zonotope `Z` and a linear condition `C`.

use nalgebra::DVector;

use crate::ir::numeric::{NumCondition, NumConstraint};
use crate::ir::Relation;
use crate::setrep::{intersect_condition, IntervalBox, Zonotope};

/// Half-space form `a·x <= b` (or `a·x = b`) of one constraint.
fn oriented(c: &NumConstraint) -> (DVector<f64>, f64, bool) {
    match c.relation {
        Relation::Le | Relation::Lt => (c.normal.clone(), c.bound, false),
        Relation::Ge | Relation::Gt => (-&c.normal, -c.bound, false),
        Relation::Eq => (c.normal.clone(), c.bound, true),
    }
}

fn cuts(c: &NumConstraint, hull: &IntervalBox) -> bool {
    let r = hull.range_of(&c.normal);
    match c.relation {
        Relation::Le | Relation::Lt => r.hi > c.bound,
        Relation::Ge | Relation::Gt => r.lo < c.bound,
        Relation::Eq => r.lo < c.bound || r.hi > c.bound,
    }
}

/// Box enclosing `z ∩ cond`, or `None` when that intersection is provably empty.
///
/// Starts from interval clamping of the box hull, then bounds every axis by
/// the dual of the zonotope cut with each constraint that actually cuts the
/// hull. Each cut gives a valid bound on its own, so the tightest one is kept.
pub fn enclose_cut(z: &Zonotope, cond: &NumCondition) -> Option<IntervalBox> {
    let hull = z.box_hull();
    let clamped = intersect_condition(&hull, cond)?;
    let active: Vec<(DVector<f64>, f64, bool)> = cond
        .constraints
        .iter()
        .filter(|c| cuts(c, &hull))
        .map(oriented)
        .collect();
    if active.is_empty() || z.order() == 0 {
        return Some(clamped);
    }
    let n = z.dim();
    let mut dims = clamped.dims.clone();
    let mut e = DVector::zeros(n);
    for i in 0..n {
        e[i] = 1.0;
        for (a, b, eq) in &active {
            let hi = z.cut_support(&e, a, *b, *eq)?;
            let lo = -z.cut_support(&-&e, a, *b, *eq)?;
            dims[i].hi = dims[i].hi.min(hi);
            dims[i].lo = dims[i].lo.max(lo);
        }
        e[i] = 0.0;
    }
    let tightened = IntervalBox::new(dims);
    if tightened.is_empty() {
        return None;
    }
    intersect_condition(&tightened, cond)
}
