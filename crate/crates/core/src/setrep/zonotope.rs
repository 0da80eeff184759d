use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{Interval, IntervalBox, SetError};

/// `{ c + G ξ : ξ ∈ [-1, 1]^p }`.
#[derive(Clone, Debug, PartialEq)]
pub struct Zonotope {
    pub center: DVector<f64>,
    pub generators: DMatrix<f64>,
}

fn check(expected: usize, found: usize) -> Result<(), SetError> {
    if expected == found {
        Ok(())
    } else {
        Err(SetError::DimensionMismatch { expected, found })
    }
}

/// Unit columns taken greedily from `dirs`, skipping any that is nearly
/// dependent on those already chosen.
fn independent_frame(dirs: &[DVector<f64>], n: usize) -> Option<DMatrix<f64>> {
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut ortho: Vec<DVector<f64>> = Vec::with_capacity(n);
    for d in dirs {
        if basis.len() == n {
            break;
        }
        let norm = d.norm();
        if !(norm > 0.0) {
            continue;
        }
        let mut r = d / norm;
        for q in &ortho {
            r -= q * q.dot(&r);
        }
        let left = r.norm();
        if left > 1e-3 {
            basis.push(d / norm);
            ortho.push(r / left);
        }
    }
    (basis.len() == n).then(|| DMatrix::from_columns(&basis))
}

impl Zonotope {
    pub fn new(center: DVector<f64>, generators: DMatrix<f64>) -> Result<Self, SetError> {
        check(center.len(), generators.nrows())?;
        Ok(Self { center, generators })
    }

    pub fn point(center: DVector<f64>) -> Self {
        let n = center.len();
        Self {
            center,
            generators: DMatrix::zeros(n, 0),
        }
    }

    /// One axis-aligned generator per dimension of nonzero width.
    pub fn from_box(b: &IntervalBox) -> Self {
        let n = b.dim();
        let wide: Vec<usize> = (0..n).filter(|i| b.dims[*i].radius() > 0.0).collect();
        let mut g = DMatrix::zeros(n, wide.len());
        for (k, &i) in wide.iter().enumerate() {
            g[(i, k)] = b.dims[i].radius();
        }
        Self {
            center: b.center(),
            generators: g,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Number of generators.
    pub fn order(&self) -> usize {
        self.generators.ncols()
    }

    pub fn linear_map(&self, m: &DMatrix<f64>) -> Result<Self, SetError> {
        check(self.dim(), m.ncols())?;
        Ok(Self {
            center: m * &self.center,
            generators: m * &self.generators,
        })
    }

    pub fn translate(&self, v: &DVector<f64>) -> Result<Self, SetError> {
        check(self.dim(), v.len())?;
        Ok(Self {
            center: &self.center + v,
            generators: self.generators.clone(),
        })
    }

    pub fn minkowski_sum(&self, o: &Self) -> Result<Self, SetError> {
        check(self.dim(), o.dim())?;
        let n = self.dim();
        let mut g = DMatrix::zeros(n, self.order() + o.order());
        g.columns_mut(0, self.order()).copy_from(&self.generators);
        g.columns_mut(self.order(), o.order()).copy_from(&o.generators);
        Ok(Self {
            center: &self.center + &o.center,
            generators: g,
        })
    }

    /// `max { d · x : x ∈ Z } = d·c + Σ_j |d·g_j|`.
    pub fn support(&self, d: &DVector<f64>) -> Result<f64, SetError> {
        check(self.dim(), d.len())?;
        let mut s = d.dot(&self.center);
        for g in self.generators.column_iter() {
            s += d.dot(&g).abs();
        }
        Ok(s)
    }

    /// Per-dimension radius `Σ_j |G_ij|`.
    pub fn radii(&self) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| self.generators.row(i).iter().map(|v| v.abs()).sum())
    }

    pub fn box_hull(&self) -> IntervalBox {
        let r = self.radii();
        IntervalBox::new(
            self.center
                .iter()
                .zip(r.iter())
                .map(|(c, r)| Interval::new(c - r, c + r))
                .collect(),
        )
    }

    /// Girard-style reduction: when there are more than `p_max` generators,
    /// the smallest ones (by `‖g‖₁ − ‖g‖∞`) are replaced by their box hull.
    /// The result always contains the input.
    pub fn reduce_order(&self, p_max: usize) -> Self {
        let p = self.order();
        if p <= p_max {
            return self.clone();
        }
        let n = self.dim();
        let keep = p_max.saturating_sub(n);
        let mut idx: Vec<usize> = (0..p).collect();
        let score = |j: usize| {
            let g = self.generators.column(j);
            g.iter().map(|v| v.abs()).sum::<f64>() - g.amax()
        };
        let scores: Vec<f64> = (0..p).map(score).collect();
        // largest first; ties broken by index so the result is deterministic
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let (kept, merged) = idx.split_at(keep.min(p));
        let mut kept = kept.to_vec();
        kept.sort_unstable();
        let mut rad = DVector::zeros(n);
        for &j in merged {
            for i in 0..n {
                rad[i] += self.generators[(i, j)].abs();
            }
        }
        let boxed: Vec<usize> = (0..n).filter(|i| rad[*i] > 0.0).collect();
        let mut g = DMatrix::zeros(n, kept.len() + boxed.len());
        for (k, &j) in kept.iter().enumerate() {
            g.set_column(k, &self.generators.column(j));
        }
        for (k, &i) in boxed.iter().enumerate() {
            g[(i, kept.len() + k)] = rad[i];
        }
        Self {
            center: self.center.clone(),
            generators: g,
        }
    }

    /// Enclosure of the convex hull of `self` and `o`; both must have the
    /// same generator count (typically `o = M·self + v`).
    pub fn convex_hull_paired(&self, o: &Self) -> Result<Self, SetError> {
        check(self.dim(), o.dim())?;
        check(self.order(), o.order())?;
        let n = self.dim();
        let p = self.order();
        let mut g = DMatrix::zeros(n, 2 * p + 1);
        for j in 0..p {
            let a = self.generators.column(j);
            let b = o.generators.column(j);
            g.set_column(j, &((a + b) * 0.5));
            g.set_column(p + j, &((a - b) * 0.5));
        }
        g.set_column(2 * p, &((&self.center - &o.center) * 0.5));
        Ok(Self {
            center: (&self.center + &o.center) * 0.5,
            generators: g,
        }
        .prune())
    }

    /// Enclosure of the convex hull for any generator counts: the shorter
    /// generator list is padded with zeros before pairing.
    pub fn hull_enclosure(&self, o: &Self) -> Result<Self, SetError> {
        check(self.dim(), o.dim())?;
        let p = self.order().max(o.order());
        let pad = |z: &Self| {
            let mut g = DMatrix::zeros(z.dim(), p);
            g.columns_mut(0, z.order()).copy_from(&z.generators);
            Self {
                center: z.center.clone(),
                generators: g,
            }
        };
        pad(self).convex_hull_paired(&pad(o))
    }

    /// Parallelotope enclosing all of `zs`.
    ///
    /// Candidate frames are the orthonormal frame of the family's combined
    /// spread, a frame built from the drift across the family and the
    /// largest generators of its middle member, and the coordinate axes.
    /// The enclosure of least volume is returned.
    pub fn oriented_hull(zs: &[Self]) -> Result<Self, SetError> {
        let Some(first) = zs.first() else {
            return Err(SetError::EmptyFamily);
        };
        let n = first.dim();
        for z in zs {
            check(n, z.dim())?;
        }
        if zs.len() == 1 {
            return Ok(first.clone());
        }
        let mean = zs.iter().fold(DVector::zeros(n), |acc, z| acc + &z.center) / zs.len() as f64;
        let mut m = DMatrix::zeros(n, n);
        for z in zs {
            let d = &z.center - &mean;
            m += &d * d.transpose() + &z.generators * z.generators.transpose();
        }
        let scale = m.diagonal().max().sqrt().max(f64::MIN_POSITIVE);
        let pca = nalgebra::SymmetricEigen::new(m).eigenvectors;

        let mid = &zs[zs.len() / 2];
        let mut dirs = vec![&zs[zs.len() - 1].center - &first.center];
        let mut cols: Vec<DVector<f64>> = mid.generators.column_iter().map(|c| c.into_owned()).collect();
        cols.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        dirs.extend(cols);
        dirs.extend((0..n).map(|i| DVector::from_fn(n, |r, _| if r == i { 1.0 } else { 0.0 })));
        let mut frames = vec![pca, DMatrix::identity(n, n)];
        if let Some(f) = independent_frame(&dirs, n) {
            frames.push(f);
        }

        let floor = 1e-12 * scale;
        let mut best: Option<(f64, Self)> = None;
        for frame in frames {
            let Some(inv) = frame.clone().try_inverse() else {
                continue;
            };
            let mut lo = DVector::from_element(n, f64::INFINITY);
            let mut hi = DVector::from_element(n, f64::NEG_INFINITY);
            for z in zs {
                let c = &inv * &z.center;
                let r = (&inv * &z.generators).abs().column_sum();
                for i in 0..n {
                    lo[i] = lo[i].min(c[i] - r[i]);
                    hi[i] = hi[i].max(c[i] + r[i]);
                }
            }
            let rad = (&hi - &lo) * 0.5;
            let log_volume = frame.determinant().abs().ln() + rad.iter().map(|r| r.max(floor).ln()).sum::<f64>();
            if best.as_ref().is_none_or(|(v, _)| log_volume < *v) {
                let z = Self {
                    center: &frame * ((&lo + &hi) * 0.5),
                    generators: &frame * DMatrix::from_diagonal(&rad),
                }
                .prune();
                best = Some((log_volume, z));
            }
        }
        best.map(|(_, z)| z).ok_or(SetError::EmptyFamily)
    }

    /// Zonotope enclosing `Z ∩ {a·x = b}`, or `None` if that is empty.
    ///
    /// With `x = c + Σ gᵢξᵢ` the cut is `Σ wᵢξᵢ = s` for `w = Gᵀa`,
    /// `s = b − a·c`. The weights are first narrowed by interval propagation
    /// through that constraint; then one pivot weight is solved for and
    /// eliminated, which drops the pivot's bound and so only enlarges the
    /// set. Every pivot is tried and the one with the smallest box hull wins.
    pub fn meet_hyperplane(&self, a: &DVector<f64>, b: f64) -> Option<Self> {
        let w = self.generators.tr_mul(a);
        let s = b - a.dot(&self.center);
        let p = self.order();
        let scale = w.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let tol = 1e-12 * (scale + s.abs() + 1.0);
        if scale <= tol {
            return (s.abs() <= tol).then(|| self.clone());
        }
        let mut range = vec![Interval::new(-1.0, 1.0); p];
        for _ in 0..2 {
            for i in 0..p {
                if w[i].abs() <= tol {
                    continue;
                }
                // s − Σ_{j≠i} wⱼξⱼ, then divided by wᵢ
                let (mut lo, mut hi) = (s, s);
                for j in (0..p).filter(|&j| j != i) {
                    let (x, y) = (w[j] * range[j].lo, w[j] * range[j].hi);
                    lo -= x.max(y);
                    hi -= x.min(y);
                }
                let (x, y) = (lo / w[i], hi / w[i]);
                let slack = tol / w[i].abs();
                range[i] = range[i].meet(&Interval::new(x.min(y) - slack, x.max(y) + slack));
                if range[i].is_empty() {
                    return None;
                }
            }
        }
        let n = self.dim();
        let mut best: Option<(f64, Self)> = None;
        for piv in (0..p).filter(|&k| w[k].abs() > 1e-3 * scale) {
            let lam = self.generators.column(piv) / w[piv];
            let mut center = &self.center + &lam * s;
            let mut g = DMatrix::zeros(n, p - 1);
            for (k, i) in (0..p).filter(|&i| i != piv).enumerate() {
                let col = self.generators.column(i) - &lam * w[i];
                center += &col * range[i].mid();
                g.set_column(k, &(col * range[i].radius()));
            }
            let z = Self { center, generators: g }.prune();
            let size = z.radii().sum();
            if best.as_ref().is_none_or(|(b, _)| size < *b) {
                best = Some((size, z));
            }
        }
        best.map(|(_, z)| z)
    }

    /// Drops all-zero generators.
    pub fn prune(&self) -> Self {
        let cols: Vec<usize> = (0..self.order())
            .filter(|&j| self.generators.column(j).iter().any(|v| *v != 0.0))
            .collect();
        if cols.len() == self.order() {
            return self.clone();
        }
        let mut g = DMatrix::zeros(self.dim(), cols.len());
        for (k, &j) in cols.iter().enumerate() {
            g.set_column(k, &self.generators.column(j));
        }
        Self {
            center: self.center.clone(),
            generators: g,
        }
    }

    /// Point with generator weights drawn uniformly from `[-1, 1]^p`.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> DVector<f64> {
        let xi = DVector::from_fn(self.order(), |_, _| rng.random_range(-1.0..=1.0));
        &self.center + &self.generators * xi
    }

    /// Upper bound on `d · x` over `Z ∩ {a·x <= b}` (`equality`: `Z ∩ {a·x = b}`).
    ///
    /// Minimises the Lagrangian dual `ρ_Z(d − λa) + λb` over `λ ≥ 0` (or all
    /// real λ for an equality). The dual is convex and piecewise linear, so
    /// its minimum sits at a breakpoint or at the boundary of the λ domain.
    /// Returns `None` when the intersection is empty.
    pub fn cut_support(&self, d: &DVector<f64>, a: &DVector<f64>, b: f64, equality: bool) -> Option<f64> {
        let dc = d.dot(&self.center);
        let slack = b - a.dot(&self.center);
        let pairs: Vec<(f64, f64)> = self.generators.column_iter().map(|g| (d.dot(&g), a.dot(&g))).collect();
        let spread: f64 = pairs.iter().map(|(_, ag)| ag.abs()).sum();
        // slope of the dual as λ → +∞ and λ → −∞
        if slack + spread < 0.0 || (equality && spread - slack < 0.0) {
            return None;
        }
        let f =
            |lam: f64| -> f64 { dc + lam * slack + pairs.iter().map(|(dg, ag)| (dg - lam * ag).abs()).sum::<f64>() };
        let mut best = if equality { f64::INFINITY } else { f(0.0) };
        for (dg, ag) in &pairs {
            if *ag == 0.0 {
                continue;
            }
            let lam = dg / ag;
            if equality || lam >= 0.0 {
                best = best.min(f(lam));
            }
        }
        if best == f64::INFINITY {
            // equality with a·g = 0 for every generator: the dual is affine in λ
            if slack.abs() > 0.0 {
                return None;
            }
            best = f(0.0);
        }
        Some(best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_square() -> Zonotope {
        Zonotope::from_box(&IntervalBox::from_bounds(&[-1.0, -1.0], &[1.0, 1.0]))
    }

    #[test]
    fn support_of_unit_square() {
        let z = unit_square();
        assert_eq!(z.support(&DVector::from_column_slice(&[1.0, 0.0])).unwrap(), 1.0);
    }

    #[test]
    fn identity_map_is_noop() {
        let z = unit_square();
        assert_eq!(z.linear_map(&DMatrix::identity(2, 2)).unwrap(), z);
    }

    #[test]
    fn scaling_doubles_generators() {
        let z = unit_square();
        let m = DMatrix::identity(2, 2) * 2.0;
        let w = z.linear_map(&m).unwrap();
        assert_eq!(w.generators, &z.generators * 2.0);
    }

    #[test]
    fn zero_is_neutral_for_sum() {
        let z = unit_square();
        let s = z.minkowski_sum(&Zonotope::point(DVector::zeros(2))).unwrap();
        assert_eq!(s, z);
    }

    #[test]
    fn two_segments_make_a_square() {
        let sx = Zonotope::new(DVector::zeros(2), DMatrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        let sy = Zonotope::new(DVector::zeros(2), DMatrix::from_column_slice(2, 1, &[0.0, 1.0])).unwrap();
        let s = sx.minkowski_sum(&sy).unwrap();
        assert_eq!(s.box_hull(), IntervalBox::from_bounds(&[-1.0, -1.0], &[1.0, 1.0]));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let z = unit_square();
        assert_eq!(
            z.linear_map(&DMatrix::identity(3, 3)),
            Err(SetError::DimensionMismatch { expected: 2, found: 3 })
        );
        assert!(z.minkowski_sum(&Zonotope::point(DVector::zeros(3))).is_err());
    }

    #[test]
    fn reduction_noop_when_small() {
        let z = unit_square();
        assert_eq!(z.reduce_order(2), z);
        assert_eq!(z.reduce_order(10), z);
    }

    #[test]
    fn cut_support_on_square() {
        let z = unit_square();
        let d = DVector::from_column_slice(&[0.0, 1.0]);
        let a = DVector::from_column_slice(&[1.0, 1.0]);
        // x + y <= 0 on the square: max y is 1 (at x = -1)
        assert!((z.cut_support(&d, &a, 0.0, false).unwrap() - 1.0).abs() < 1e-12);
        // x + y = 1.5: max y is 1, min y is 0.5
        assert!((z.cut_support(&d, &a, 1.5, true).unwrap() - 1.0).abs() < 1e-12);
        let lo = -z.cut_support(&(-&d), &a, 1.5, true).unwrap();
        assert!((lo - 0.5).abs() < 1e-12);
        assert!(z.cut_support(&d, &a, 3.0, true).is_none());
        assert!(z.cut_support(&d, &a, -3.0, false).is_none());
    }

    #[test]
    fn box_hull_contains_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let z = Zonotope::new(
            DVector::from_column_slice(&[1.0, -2.0, 0.5]),
            DMatrix::from_fn(3, 5, |i, j| ((i * 5 + j) as f64).sin()),
        )
        .unwrap();
        let b = z.box_hull();
        for _ in 0..1000 {
            assert!(b.contains_point(&z.sample(&mut rng), 0.0));
        }
    }

    proptest! {
        #[test]
        fn reduced_support_dominates(
            c in proptest::collection::vec(-5.0f64..5.0, 2),
            g in proptest::collection::vec(-2.0f64..2.0, 2 * 9),
        ) {
            let z = Zonotope::new(
                DVector::from_vec(c),
                DMatrix::from_vec(2, 9, g),
            ).unwrap();
            let r = z.reduce_order(4);
            prop_assert!(r.order() <= 4);
            for k in 0..16 {
                let th = k as f64 * std::f64::consts::PI / 8.0;
                let d = DVector::from_column_slice(&[th.cos(), th.sin()]);
                prop_assert!(r.support(&d).unwrap() >= z.support(&d).unwrap() - 1e-9);
            }
        }

        #[test]
        fn cut_support_bounds_feasible_points(
            g in proptest::collection::vec(-2.0f64..2.0, 2 * 4),
            a in proptest::collection::vec(-1.0f64..1.0, 2),
            b in -1.0f64..1.0,
            seed in 0u64..1000,
        ) {
            let z = Zonotope::new(DVector::zeros(2), DMatrix::from_vec(2, 4, g)).unwrap();
            let a = DVector::from_vec(a);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let d = DVector::from_column_slice(&[1.0, 0.0]);
            let bound = z.cut_support(&d, &a, b, false);
            for _ in 0..200 {
                let x = z.sample(&mut rng);
                if a.dot(&x) <= b {
                    prop_assert!(bound.is_some());
                    prop_assert!(d.dot(&x) <= bound.unwrap() + 1e-9);
                }
            }
        }

        #[test]
        fn hyperplane_cut_contains_points_on_plane(
            g in proptest::collection::vec(-2.0f64..2.0, 3 * 5),
            a in proptest::collection::vec(-1.0f64..1.0, 3),
            xi in proptest::collection::vec(-1.0f64..1.0, 5),
        ) {
            let z = Zonotope::new(DVector::zeros(3), DMatrix::from_vec(3, 5, g)).unwrap();
            let a = DVector::from_vec(a);
            let x = &z.generators * DVector::from_vec(xi);
            let cut = z.meet_hyperplane(&a, a.dot(&x));
            prop_assert!(cut.is_some());
            prop_assert!(cut.unwrap().box_hull().contains_point(&x, 1e-9));
        }
    }

    #[test]
    fn hyperplane_cut_keeps_correlation() {
        // segment from (0, 0) to (2, 2) cut with x = 1 gives the point (1, 1)
        let z = Zonotope::new(
            DVector::from_column_slice(&[1.0, 1.0]),
            DMatrix::from_column_slice(2, 1, &[1.0, 1.0]),
        )
        .unwrap();
        let a = DVector::from_column_slice(&[1.0, 0.0]);
        let cut = z.meet_hyperplane(&a, 1.0).unwrap();
        let h = cut.box_hull();
        assert!(h.dims[0].width() < 1e-12 && h.dims[1].width() < 1e-12);
        assert!((h.dims[1].lo - 1.0).abs() < 1e-12);
        assert!(z.meet_hyperplane(&a, 3.5).is_none());
    }

    #[test]
    fn oriented_hull_follows_a_diagonal() {
        let seg = |t: f64| {
            Zonotope::new(
                DVector::from_column_slice(&[t, t]),
                DMatrix::from_column_slice(2, 1, &[0.01, -0.01]),
            )
            .unwrap()
        };
        let zs: Vec<Zonotope> = (0..10).map(|k| seg(k as f64)).collect();
        let h = Zonotope::oriented_hull(&zs).unwrap();
        // thin along the anti-diagonal, unlike the box hull
        let anti = DVector::from_column_slice(&[1.0, -1.0]);
        assert!(h.support(&anti).unwrap() < 0.05);
        for z in &zs {
            for k in 0..8 {
                let th = k as f64 * std::f64::consts::PI / 4.0;
                let d = DVector::from_column_slice(&[th.cos(), th.sin()]);
                assert!(h.support(&d).unwrap() >= z.support(&d).unwrap() - 1e-9);
            }
        }
    }

    #[test]
    fn hull_enclosure_pads() {
        let a = Zonotope::from_box(&IntervalBox::from_bounds(&[0.0, 0.0], &[1.0, 1.0]));
        let b = Zonotope::point(DVector::from_column_slice(&[3.0, 3.0]));
        let h = a.hull_enclosure(&b).unwrap().box_hull();
        assert!(h.contains_box(&IntervalBox::from_bounds(&[0.0, 0.0], &[3.0, 3.0])));
    }
}
