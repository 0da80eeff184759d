//! First-step enclosure and per-step input set for `ẋ = Ax + Bu + c`.
//!
//! The drift `c + B·u_mid` is folded into the augmented matrix
//! `Ã = [[A, c + B·u_mid], [0, 0]]`, so affine motion is exact. Curvature
//! over `[0, h]` is covered by the interval correction matrix
//! `F = Σ_{i≥2} [(i^{-i/(i-1)} − i^{-1/(i-1)})·h^i, 0]·Ã^i/i!` and the
//! input radius by `Σ_i |A|^i h^{i+1}/(i+1)! · |B|·rad(U)`.

use nalgebra::{DMatrix, DVector};

use super::ReachError;
use crate::ir::numeric::NumLocation;
use crate::setrep::{matrix_exponential, Interval, IntervalBox, Zonotope};

const MAX_TERMS: usize = 400;

fn inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn ln_factorial(k: usize) -> f64 {
    (2..=k).map(|i| (i as f64).ln()).sum()
}

/// Bound on `Σ_{i>k} x^i / i!`, finite only once `k + 2 > x`.
fn tail_bound(x: f64, k: usize) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let q = x / (k + 2) as f64;
    if q >= 1.0 {
        return f64::INFINITY;
    }
    let lead = ((k + 1) as f64 * x.ln() - ln_factorial(k + 1)).exp();
    lead / (1.0 - q)
}

/// Step-size–dependent data for one location, shared by every flowpipe there.
#[derive(Clone, Debug)]
pub struct Kernel {
    pub step: f64,
    /// `e^{Ah}`.
    pub phi: DMatrix<f64>,
    /// Affine part of one step: `∫_0^h e^{As} ds · (c + B u_mid)`.
    pub drift: DVector<f64>,
    /// Correction matrix on the augmented state, as entrywise intervals.
    f_lo: DMatrix<f64>,
    f_hi: DMatrix<f64>,
    /// `‖|F_xx|‖∞`, the curvature growth factor used by the step check.
    pub curvature: f64,
    /// Per-step input contribution (a centred box).
    pub v: Zonotope,
}

impl Kernel {
    pub fn new(loc: &NumLocation, inputs: &IntervalBox, step: f64) -> Result<Self, ReachError> {
        let n = loc.a.nrows();
        let u_mid = inputs.center();
        let u_rad = inputs.radii();
        let mut b_drift = loc.c.clone();
        if !u_mid.is_empty() {
            b_drift += &loc.b * &u_mid;
        }
        let mut aug = DMatrix::zeros(n + 1, n + 1);
        aug.view_mut((0, 0), (n, n)).copy_from(&loc.a);
        aug.view_mut((0, n), (n, 1)).copy_from(&b_drift);
        let e = matrix_exponential(&aug, step)?;
        let phi = e.view((0, 0), (n, n)).into_owned();
        let drift = e.view((0, n), (n, 1)).column(0).into_owned();

        // correction matrix
        let ah = &aug * step;
        let x = inf_norm(&ah);
        let mut f_lo = DMatrix::zeros(n + 1, n + 1);
        let mut f_hi = DMatrix::zeros(n + 1, n + 1);
        let mut term = ah.clone();
        let mut done = false;
        for i in 2..MAX_TERMS {
            term = &term * &ah / i as f64;
            let fi = i as f64;
            let kappa = fi.powf(-fi / (fi - 1.0)) - fi.powf(-1.0 / (fi - 1.0));
            for (k, t) in term.iter().enumerate() {
                let s = kappa * t;
                if s < 0.0 {
                    f_lo[k] += s;
                } else {
                    f_hi[k] += s;
                }
            }
            let tail = tail_bound(x, i);
            if tail <= 1e-17 * (1.0 + inf_norm(&f_lo).max(inf_norm(&f_hi))) {
                f_lo.add_scalar_mut(-tail);
                f_hi.add_scalar_mut(tail);
                done = true;
                break;
            }
        }
        if !done || f_lo.iter().chain(f_hi.iter()).any(|v| !v.is_finite()) {
            return Err(ReachError::StepTooLarge {
                location: loc.name.clone(),
                detail: format!("curvature series does not converge (|A|h = {x:.3e})"),
            });
        }
        let curvature = (0..n)
            .map(|i| (0..n).map(|j| f_lo[(i, j)].abs().max(f_hi[(i, j)].abs())).sum::<f64>())
            .fold(0.0, f64::max);

        // input radius
        let mut v_rad = DVector::zeros(n);
        if u_rad.iter().any(|r| *r > 0.0) {
            let drive = loc.b.abs() * &u_rad;
            let abs_a = loc.a.abs();
            let xa = inf_norm(&abs_a) * step;
            let mut s = DMatrix::identity(n, n) * step;
            v_rad += &s * &drive;
            let mut converged = false;
            for i in 1..MAX_TERMS {
                s = &s * &abs_a * (step / (i + 1) as f64);
                v_rad += &s * &drive;
                let tail = step * tail_bound(xa, i) * drive.amax();
                if tail <= 1e-17 * (1.0 + v_rad.amax()) {
                    v_rad.add_scalar_mut(tail);
                    converged = true;
                    break;
                }
            }
            if !converged || v_rad.iter().any(|v| !v.is_finite()) {
                return Err(ReachError::StepTooLarge {
                    location: loc.name.clone(),
                    detail: "input enclosure does not converge".into(),
                });
            }
        }
        let v_box = IntervalBox::new(v_rad.iter().map(|r| Interval::new(-r, *r)).collect());
        Ok(Self {
            step,
            phi,
            drift,
            f_lo,
            f_hi,
            curvature,
            v: Zonotope::from_box(&v_box),
        })
    }

    /// One-step map `x ↦ e^{Ah} x + drift` (without inputs).
    pub fn advance(&self, z: &Zonotope) -> Zonotope {
        Zonotope {
            center: &self.phi * &z.center + &self.drift,
            generators: &self.phi * &z.generators,
        }
    }

    /// `F ⊗ [hull; 1]` restricted to the state rows.
    fn correction(&self, hull: &IntervalBox) -> IntervalBox {
        let n = hull.dim();
        let mut dims = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = Interval::new(self.f_lo[(i, n)], self.f_hi[(i, n)]);
            for (j, iv) in hull.dims.iter().enumerate() {
                let (a, b) = (self.f_lo[(i, j)], self.f_hi[(i, j)]);
                if a == 0.0 && b == 0.0 {
                    continue;
                }
                let p = [a * iv.lo, a * iv.hi, b * iv.lo, b * iv.hi];
                acc.lo += p.iter().copied().fold(f64::INFINITY, f64::min);
                acc.hi += p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            }
            dims.push(acc);
        }
        IntervalBox::new(dims)
    }

    /// `Ω0 ⊇` every state reachable from `x0` within one step.
    pub fn first_step(&self, x0: &Zonotope) -> FirstStep {
        let end = self.advance(x0);
        let hull = x0.box_hull();
        let ch = x0.convex_hull_paired(&end).expect("same generator count");
        let corr = Zonotope::from_box(&self.correction(&hull));
        let omega = Zonotope {
            center: &ch.center + &corr.center + &self.v.center,
            generators: concat(&[&ch.generators, &corr.generators, &self.v.generators]),
        };
        let corr_box = corr.box_hull();
        FirstStep {
            omega: omega.prune(),
            alpha: self.curvature * hull.sup_norm(),
            bloat: corr_box.sup_norm() + self.v.radii().iter().copied().fold(0.0, f64::max),
        }
    }
}

/// Output of [`Kernel::first_step`].
#[derive(Clone, Debug)]
pub struct FirstStep {
    pub omega: Zonotope,
    /// Curvature term `‖|F_xx|‖∞ · ‖X0‖∞`, checked against the initial radius.
    pub alpha: f64,
    /// Sup-norm of everything added beyond the convex hull of `X0` and `e^{Ah}X0`.
    pub bloat: f64,
}

fn concat(parts: &[&DMatrix<f64>]) -> DMatrix<f64> {
    let rows = parts[0].nrows();
    let cols = parts.iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for m in parts {
        out.columns_mut(at, m.ncols()).copy_from(m);
        at += m.ncols();
    }
    out
}

/// Result of [`discretize`].
#[derive(Clone, Debug)]
pub struct Discretization {
    pub omega0: Zonotope,
    pub v: Zonotope,
    pub alpha: f64,
}

/// First-step set `Ω0` over `[0, step]` and per-step input set `V`.
pub fn discretize(
    loc: &NumLocation,
    x0: &Zonotope,
    inputs: &IntervalBox,
    step: f64,
) -> Result<Discretization, ReachError> {
    if !(step > 0.0) {
        return Err(ReachError::Settings(format!("step must be positive, got {step}")));
    }
    let k = Kernel::new(loc, inputs, step)?;
    let f = k.first_step(x0);
    Ok(Discretization {
        omega0: f.omega,
        v: k.v,
        alpha: f.alpha,
    })
}
