use nalgebra::DVector;

use crate::ir::numeric::NumCondition;

/// Closed interval `[lo, hi]`. `lo > hi` encodes the empty interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub const fn point(v: f64) -> Self {
        Self { lo: v, hi: v }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, v: f64, tol: f64) -> bool {
        v >= self.lo - tol && v <= self.hi + tol
    }

    pub fn hull(&self, o: &Self) -> Self {
        Self::new(self.lo.min(o.lo), self.hi.max(o.hi))
    }

    pub fn meet(&self, o: &Self) -> Self {
        Self::new(self.lo.max(o.lo), self.hi.min(o.hi))
    }

    pub fn mag(&self) -> f64 {
        self.lo.abs().max(self.hi.abs())
    }
}

/// Axis-aligned box: one closed interval per dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalBox {
    pub dims: Vec<Interval>,
}

impl IntervalBox {
    pub fn new(dims: Vec<Interval>) -> Self {
        Self { dims }
    }

    pub fn from_bounds(lo: &[f64], hi: &[f64]) -> Self {
        Self::new(lo.iter().zip(hi).map(|(l, h)| Interval::new(*l, *h)).collect())
    }

    pub fn point(x: &DVector<f64>) -> Self {
        Self::new(x.iter().map(|v| Interval::point(*v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.iter().any(Interval::is_empty)
    }

    pub fn center(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.dims.iter().map(Interval::mid))
    }

    pub fn radii(&self) -> DVector<f64> {
        DVector::from_iterator(self.dim(), self.dims.iter().map(Interval::radius))
    }

    /// Largest half-width over all dimensions.
    pub fn radius(&self) -> f64 {
        self.dims.iter().map(Interval::radius).fold(0.0, f64::max)
    }

    /// `max |x_i|` over the box.
    pub fn sup_norm(&self) -> f64 {
        self.dims.iter().map(Interval::mag).fold(0.0, f64::max)
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        x.len() == self.dim() && self.dims.iter().zip(x.iter()).all(|(iv, v)| iv.contains(*v, tol))
    }

    pub fn contains_box(&self, o: &Self) -> bool {
        self.dims.iter().zip(&o.dims).all(|(a, b)| a.lo <= b.lo && b.hi <= a.hi)
    }

    pub fn hull(&self, o: &Self) -> Self {
        Self::new(self.dims.iter().zip(&o.dims).map(|(a, b)| a.hull(b)).collect())
    }

    pub fn meet(&self, o: &Self) -> Option<Self> {
        let b = Self::new(self.dims.iter().zip(&o.dims).map(|(a, b)| a.meet(b)).collect());
        (!b.is_empty()).then_some(b)
    }

    pub fn intersects(&self, o: &Self) -> bool {
        self.dims.iter().zip(&o.dims).all(|(a, b)| a.lo <= b.hi && b.lo <= a.hi)
    }

    /// All 2^n corners, first dimension varying fastest.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let n = self.dim();
        (0..(1usize << n))
            .map(|mask| {
                DVector::from_iterator(
                    n,
                    self.dims
                        .iter()
                        .enumerate()
                        .map(|(i, iv)| if mask >> i & 1 == 1 { iv.hi } else { iv.lo }),
                )
            })
            .collect()
    }

    /// Range of `a · x` over the box.
    pub fn range_of(&self, a: &DVector<f64>) -> Interval {
        let (mut lo, mut hi) = (0.0, 0.0);
        for (ai, iv) in a.iter().zip(&self.dims) {
            if *ai == 0.0 {
                continue;
            }
            let (p, q) = (ai * iv.lo, ai * iv.hi);
            lo += p.min(q);
            hi += p.max(q);
        }
        Interval::new(lo, hi)
    }
}

/// Closed half-space `normal · x <= bound`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpace {
    pub normal: DVector<f64>,
    pub bound: f64,
}

impl HalfSpace {
    pub fn new(normal: DVector<f64>, bound: f64) -> Self {
        Self { normal, bound }
    }
}

fn clamp_halfspace(b: &mut IntervalBox, h: &HalfSpace) -> bool {
    let range = b.range_of(&h.normal);
    if range.lo > h.bound {
        return false;
    }
    if range.hi <= h.bound {
        return true;
    }
    let nz: Vec<usize> = (0..b.dim()).filter(|i| h.normal[*i] != 0.0).collect();
    if let [i] = nz[..] {
        let ai = h.normal[i];
        let lim = h.bound / ai;
        let iv = &mut b.dims[i];
        if ai > 0.0 {
            iv.hi = iv.hi.min(lim);
        } else {
            iv.lo = iv.lo.max(lim);
        }
        return !iv.is_empty();
    }
    for &i in &nz {
        let ai = h.normal[i];
        let iv = b.dims[i];
        let own_lo = (ai * iv.lo).min(ai * iv.hi);
        let rest_lo = range.lo - own_lo;
        let lim = (h.bound - rest_lo) / ai;
        let iv = &mut b.dims[i];
        if ai > 0.0 {
            iv.hi = iv.hi.min(lim);
        } else {
            iv.lo = iv.lo.max(lim);
        }
        if iv.is_empty() {
            return false;
        }
    }
    true
}

/// Clamps a box against half-spaces; `None` when the result is empty.
///
/// Axis-aligned constraints clamp one coordinate exactly. Other constraints
/// tighten every coordinate they mention by interval propagation.
pub fn intersect_halfspaces(b: &IntervalBox, hs: &[HalfSpace]) -> Option<IntervalBox> {
    let mut out = b.clone();
    if out.is_empty() {
        return None;
    }
    for h in hs {
        if !clamp_halfspace(&mut out, h) {
            return None;
        }
    }
    Some(out)
}

/// [`intersect_halfspaces`] for a numeric condition (equalities become two half-spaces).
pub fn intersect_condition(b: &IntervalBox, cond: &NumCondition) -> Option<IntervalBox> {
    intersect_halfspaces(b, &cond.halfspaces())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::numeric::NumConstraint;
    use crate::ir::Relation;

    fn le(normal: &[f64], bound: f64) -> NumConstraint {
        NumConstraint {
            normal: DVector::from_column_slice(normal),
            relation: Relation::Le,
            bound,
        }
    }

    #[test]
    fn clamp_axis_aligned() {
        let b = IntervalBox::from_bounds(&[0.0, 0.0], &[2.0, 2.0]);
        let cond = NumCondition {
            constraints: vec![le(&[1.0, 0.0], 1.0)],
        };
        let got = intersect_condition(&b, &cond).unwrap();
        assert_eq!(got, IntervalBox::from_bounds(&[0.0, 0.0], &[1.0, 2.0]));
    }

    #[test]
    fn clamp_diagonal_tightens_both() {
        let b = IntervalBox::from_bounds(&[0.0, 0.0], &[2.0, 2.0]);
        let cond = NumCondition {
            constraints: vec![le(&[1.0, 1.0], 1.0)],
        };
        let got = intersect_condition(&b, &cond).unwrap();
        assert_eq!(got, IntervalBox::from_bounds(&[0.0, 0.0], &[1.0, 1.0]));
    }

    #[test]
    fn disjoint_gives_empty_marker() {
        let b = IntervalBox::from_bounds(&[0.0], &[1.0]);
        let cond = NumCondition {
            constraints: vec![NumConstraint {
                normal: DVector::from_column_slice(&[1.0]),
                relation: Relation::Ge,
                bound: 1.5,
            }],
        };
        assert!(intersect_condition(&b, &cond).is_none());
    }

    #[test]
    fn equality_collapses_coordinate() {
        let b = IntervalBox::from_bounds(&[-1.0, -3.0], &[1.0, 3.0]);
        let cond = NumCondition {
            constraints: vec![NumConstraint {
                normal: DVector::from_column_slice(&[1.0, 0.0]),
                relation: Relation::Eq,
                bound: 0.0,
            }],
        };
        let got = intersect_condition(&b, &cond).unwrap();
        assert_eq!(got.dims[0], Interval::point(0.0));
        assert_eq!(got.dims[1], Interval::new(-3.0, 3.0));
    }

    #[test]
    fn corners_of_unit_square() {
        let b = IntervalBox::from_bounds(&[0.0, 0.0], &[1.0, 1.0]);
        let c = b.corners();
        assert_eq!(c.len(), 4);
        assert_eq!(c[1], DVector::from_column_slice(&[1.0, 0.0]));
    }
}
