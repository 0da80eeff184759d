use nalgebra::{DMatrix, DVector};

use super::{SetError, Zonotope};

/// `{ x : D x <= o }` for a fixed direction matrix `D`.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplatePolytope {
    pub directions: DMatrix<f64>,
    pub offsets: DVector<f64>,
}

/// `±e_i` for every axis.
pub fn box_directions(n: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(2 * n, n);
    for i in 0..n {
        d[(2 * i, i)] = 1.0;
        d[(2 * i + 1, i)] = -1.0;
    }
    d
}

/// Box directions followed by `±e_i ± e_j` for all `i < j`.
pub fn octagon_directions(n: usize) -> DMatrix<f64> {
    let pairs = n * n.saturating_sub(1) / 2;
    let mut d = DMatrix::zeros(2 * n + 4 * pairs, n);
    d.rows_mut(0, 2 * n).copy_from(&box_directions(n));
    let mut r = 2 * n;
    for i in 0..n {
        for j in i + 1..n {
            for (si, sj) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                d[(r, i)] = si;
                d[(r, j)] = sj;
                r += 1;
            }
        }
    }
    d
}

impl TemplatePolytope {
    /// Tightest template polytope around `z`: each offset is the support value.
    pub fn enclose(z: &Zonotope, directions: DMatrix<f64>) -> Result<Self, SetError> {
        if directions.ncols() != z.dim() {
            return Err(SetError::DimensionMismatch {
                expected: z.dim(),
                found: directions.ncols(),
            });
        }
        let offsets = DVector::from_iterator(
            directions.nrows(),
            directions
                .row_iter()
                .map(|d| z.support(&d.transpose()))
                .collect::<Result<Vec<_>, _>>()?,
        );
        Ok(Self { directions, offsets })
    }

    pub fn contains_point(&self, x: &DVector<f64>, tol: f64) -> bool {
        (&self.directions * x - &self.offsets).iter().all(|v| *v <= tol)
    }
}
