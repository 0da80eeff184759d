//! In-memory representation of affine hybrid automata.
//!
//! Everything here is plain immutable data. Coefficients are [`Coef`]s so
//! that named constants survive until they are bound; [`numeric`] resolves
//! an automaton into `f64` matrices for the set and simulation engines.

mod bind;
mod coef;
pub mod numeric;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

pub use bind::{bind_constant, BindError};
pub use coef::{Coef, Monomial};
pub use validate::{validate, Defect, ValidationReport};

use crate::setrep::Interval;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct VariableTable {
    pub state_vars: Vec<String>,
    pub input_vars: Vec<String>,
    pub constants: BTreeMap<String, f64>,
}

impl VariableTable {
    pub fn new(state_vars: &[&str]) -> Self {
        Self {
            state_vars: state_vars.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn n(&self) -> usize {
        self.state_vars.len()
    }

    pub fn m(&self) -> usize {
        self.input_vars.len()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_vars.iter().position(|v| v == name)
    }

    pub fn input_index(&self, name: &str) -> Option<usize> {
        self.input_vars.iter().position(|v| v == name)
    }

    pub fn is_constant(&self, name: &str) -> bool {
        self.constants.contains_key(name)
    }
}

/// `ẋ = A x + B u + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineDynamics {
    pub a: Vec<Vec<Coef>>,
    pub b: Vec<Vec<Coef>>,
    pub c: Vec<Coef>,
}

impl AffineDynamics {
    pub fn zero(n: usize, m: usize) -> Self {
        Self {
            a: vec![vec![Coef::zero(); n]; n],
            b: vec![vec![Coef::zero(); m]; n],
            c: vec![Coef::zero(); n],
        }
    }

    pub fn from_numeric(a: &[Vec<f64>], b: &[Vec<f64>], c: &[f64]) -> Self {
        let conv = |rows: &[Vec<f64>]| -> Vec<Vec<Coef>> {
            rows.iter()
                .map(|r| r.iter().copied().map(Coef::num).collect())
                .collect()
        };
        Self {
            a: conv(a),
            b: conv(b),
            c: c.iter().copied().map(Coef::num).collect(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = "==")]
    Eq,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = ">")]
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Lt => "<",
            Relation::Eq => "==",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    /// The relation obtained by swapping both sides.
    pub fn flipped(self) -> Self {
        match self {
            Relation::Le => Relation::Ge,
            Relation::Lt => Relation::Gt,
            Relation::Eq => Relation::Eq,
            Relation::Ge => Relation::Le,
            Relation::Gt => Relation::Lt,
        }
    }

    /// Decides `lhs rel rhs` with strict relations read as non-strict.
    pub fn holds(self, lhs: f64, rhs: f64, tol: f64) -> bool {
        match self {
            Relation::Le | Relation::Lt => lhs <= rhs + tol,
            Relation::Ge | Relation::Gt => lhs >= rhs - tol,
            Relation::Eq => (lhs - rhs).abs() <= tol,
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// `coeffs · x  rel  bound` over the state variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearConstraint {
    pub coeffs: Vec<Coef>,
    pub relation: Relation,
    pub bound: Coef,
}

impl LinearConstraint {
    /// `x_var rel bound` for an axis-aligned bound.
    pub fn axis(n: usize, var: usize, relation: Relation, bound: f64) -> Self {
        let mut coeffs = vec![Coef::zero(); n];
        coeffs[var] = Coef::num(1.0);
        Self {
            coeffs,
            relation,
            bound: Coef::num(bound),
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Coef::is_zero)
    }
}

/// Conjunction of linear constraints; the empty list is `true`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Condition {
    pub constraints: Vec<LinearConstraint>,
}

impl Condition {
    pub fn truth() -> Self {
        Self::default()
    }

    pub fn is_true(&self) -> bool {
        self.constraints.is_empty()
    }

    pub fn and(mut self, c: LinearConstraint) -> Self {
        self.constraints.push(c);
        self
    }
}

/// `x' = R x + r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ResetMap {
    pub matrix: Vec<Vec<Coef>>,
    pub offset: Vec<Coef>,
}

impl ResetMap {
    pub fn identity(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { Coef::num(1.0) } else { Coef::zero() })
                    .collect()
            })
            .collect();
        Self {
            matrix,
            offset: vec![Coef::zero(); n],
        }
    }

    pub fn is_identity(&self) -> bool {
        let n = self.offset.len();
        *self == Self::identity(n)
    }

    /// Identity except for variable `var`, which becomes `row · x + offset`.
    pub fn assign(mut self, var: usize, row: Vec<Coef>, offset: Coef) -> Self {
        self.matrix[var] = row;
        self.offset[var] = offset;
        self
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Location {
    pub name: String,
    pub invariant: Condition,
    pub dynamics: AffineDynamics,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub source: String,
    pub target: String,
    pub guard: Condition,
    pub reset: ResetMap,
    pub label: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridAutomaton {
    /// Component / system name.
    pub name: String,
    pub vars: VariableTable,
    pub locations: Vec<Location>,
    pub transitions: Vec<Transition>,
    /// One interval per input variable, in `vars.input_vars` order.
    pub input_range: Vec<Interval>,
}

impl HybridAutomaton {
    pub fn location(&self, name: &str) -> Option<&Location> {
        self.locations.iter().find(|l| l.name == name)
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InitialCondition {
    pub location: String,
    /// One interval per state variable.
    pub intervals: Vec<Interval>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReachSettings {
    pub horizon: f64,
    pub step: f64,
    pub max_jumps: usize,
    /// `None` when nothing is forbidden.
    pub forbidden: Option<Condition>,
    pub output_vars: (String, String),
    pub fixpoint_check: bool,
}

impl ReachSettings {
    pub fn check(&self) -> Result<(), String> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(format!("sampling step must be positive, got {}", self.step));
        }
        if !(self.horizon >= self.step && self.horizon.is_finite()) {
            return Err(format!(
                "time horizon {} must be finite and at least the step {}",
                self.horizon, self.step
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_reset_is_identity() {
        let r = ResetMap::identity(3);
        assert!(r.is_identity());
        let moved = r.assign(1, vec![Coef::zero(), Coef::num(-0.75), Coef::zero()], Coef::zero());
        assert!(!moved.is_identity());
    }

    #[test]
    fn strict_relations_are_closed() {
        assert!(Relation::Lt.holds(1.0, 1.0, 0.0));
        assert!(Relation::Gt.holds(1.0, 1.0, 0.0));
        assert!(!Relation::Eq.holds(1.0, 1.1, 0.01));
    }

    #[test]
    fn settings_reject_bad_step() {
        let mut s = ReachSettings {
            horizon: 1.0,
            step: 0.1,
            max_jumps: 0,
            forbidden: None,
            output_vars: ("x".into(), "x".into()),
            fixpoint_check: false,
        };
        assert!(s.check().is_ok());
        s.step = 2.0;
        assert!(s.check().is_err());
        s.step = 0.0;
        assert!(s.check().is_err());
    }
}
