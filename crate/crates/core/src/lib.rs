//! Affine hybrid automata: model translation, zonotope reachability and
//! event-driven simulation.

// `!(x > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod corpus;
pub mod exec;
pub mod io;
pub mod ir;
pub mod reach;
pub mod setrep;
pub mod simulate;
