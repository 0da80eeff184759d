//! Continuous-set representations and the matrix exponential.

mod expm;
mod interval;
mod template;
mod zonotope;

use thiserror::Error;

pub use expm::matrix_exponential;
pub use interval::{intersect_condition, intersect_halfspaces, HalfSpace, Interval, IntervalBox};
pub use template::{box_directions, octagon_directions, TemplatePolytope};
pub use zonotope::Zonotope;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum SetError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("matrix exponential overflowed (norm of A*t is {norm:e})")]
    Overflow { norm: f64 },
    #[error("non-finite entry in input")]
    NonFinite,
    #[error("hull of an empty family of sets")]
    EmptyFamily,
}
