use nalgebra::DMatrix;

use super::SetError;

fn norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{A t}` by scaling and squaring.
///
/// `A t` is halved until its 1-norm is at most 0.5; the Taylor series is
/// summed until a term drops below `1e-16` of the running sum, then the
/// result is squared back up.
pub fn matrix_exponential(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>, SetError> {
    if !a.is_square() {
        return Err(SetError::DimensionMismatch {
            expected: a.nrows(),
            found: a.ncols(),
        });
    }
    if !t.is_finite() || a.iter().any(|v| !v.is_finite()) {
        return Err(SetError::NonFinite);
    }
    let n = a.nrows();
    let at = a * t;
    let norm = norm1(&at);
    let mut s = 0i32;
    while norm / 2f64.powi(s) > 0.5 {
        s += 1;
        if s > 1100 {
            return Err(SetError::Overflow { norm });
        }
    }
    let scaled = at / 2f64.powi(s);
    let mut result = DMatrix::identity(n, n);
    let mut term = DMatrix::identity(n, n);
    for k in 1..64 {
        term = &term * &scaled / k as f64;
        result += &term;
        if norm1(&term) < 1e-16 * norm1(&result) {
            break;
        }
    }
    for _ in 0..s {
        result = &result * &result;
    }
    if result.iter().any(|v| !v.is_finite()) {
        return Err(SetError::Overflow { norm });
    }
    Ok(result)
}
