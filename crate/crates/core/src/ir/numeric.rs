//! `f64` view of an automaton, with all constants evaluated.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use super::{validate, Coef, Condition, HybridAutomaton, Relation};
use crate::setrep::{HalfSpace, IntervalBox};

#[derive(Debug, Error, PartialEq)]
pub enum ResolveError {
    #[error("automaton is not well-formed:\n{0}")]
    Invalid(String),
}

/// A constraint `normal · x  rel  bound` with numeric entries.
#[derive(Clone, Debug, PartialEq)]
pub struct NumConstraint {
    pub normal: DVector<f64>,
    pub relation: Relation,
    pub bound: f64,
}

impl NumConstraint {
    pub fn value(&self, x: &DVector<f64>) -> f64 {
        self.normal.dot(x)
    }

    pub fn holds(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.relation.holds(self.value(x), self.bound, tol)
    }

    pub fn is_axis_aligned(&self) -> Option<usize> {
        let mut idx = None;
        for (i, v) in self.normal.iter().enumerate() {
            if *v != 0.0 {
                if idx.is_some() {
                    return None;
                }
                idx = Some(i);
            }
        }
        idx
    }

    /// Closed half-spaces `a·x <= b` whose intersection is this constraint.
    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        let up = HalfSpace::new(self.normal.clone(), self.bound);
        let down = HalfSpace::new(-self.normal.clone(), -self.bound);
        match self.relation {
            Relation::Le | Relation::Lt => vec![up],
            Relation::Ge | Relation::Gt => vec![down],
            Relation::Eq => vec![up, down],
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct NumCondition {
    pub constraints: Vec<NumConstraint>,
}

impl NumCondition {
    pub fn holds(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.constraints.iter().all(|c| c.holds(x, tol))
    }

    pub fn halfspaces(&self) -> Vec<HalfSpace> {
        self.constraints.iter().flat_map(|c| c.halfspaces()).collect()
    }

    pub fn is_true(&self) -> bool {
        self.constraints.is_empty()
    }
}

#[derive(Clone, Debug)]
pub struct NumLocation {
    pub name: String,
    pub invariant: NumCondition,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DVector<f64>,
}

impl NumLocation {
    /// `A x + B u + c`.
    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let mut d = &self.a * x + &self.c;
        if !u.is_empty() {
            d += &self.b * u;
        }
        d
    }
}

#[derive(Clone, Debug)]
pub struct NumTransition {
    pub index: usize,
    pub source: usize,
    pub target: usize,
    pub guard: NumCondition,
    pub reset_matrix: DMatrix<f64>,
    pub reset_offset: DVector<f64>,
    pub label: String,
}

impl NumTransition {
    pub fn apply_reset(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.reset_matrix * x + &self.reset_offset
    }
}

/// Numeric automaton ready for the reachability and simulation engines.
#[derive(Clone, Debug)]
pub struct System {
    pub state_vars: Vec<String>,
    pub input_vars: Vec<String>,
    pub locations: Vec<NumLocation>,
    pub transitions: Vec<NumTransition>,
    pub input_box: IntervalBox,
}

impl System {
    pub fn n(&self) -> usize {
        self.state_vars.len()
    }

    pub fn location_index(&self, name: &str) -> Option<usize> {
        self.locations.iter().position(|l| l.name == name)
    }

    pub fn outgoing(&self, loc: usize) -> impl Iterator<Item = &NumTransition> {
        self.transitions.iter().filter(move |t| t.source == loc)
    }
}

fn eval(c: &Coef, aut: &HybridAutomaton) -> f64 {
    // validate() has already checked every symbol
    c.eval(&aut.vars.constants).unwrap_or(f64::NAN)
}

fn matrix(rows: &[Vec<Coef>], r: usize, c: usize, aut: &HybridAutomaton) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |i, j| eval(&rows[i][j], aut))
}

fn vector(v: &[Coef], aut: &HybridAutomaton) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(|c| eval(c, aut)))
}

pub fn resolve_condition(cond: &Condition, aut: &HybridAutomaton) -> NumCondition {
    NumCondition {
        constraints: cond
            .constraints
            .iter()
            .map(|c| NumConstraint {
                normal: vector(&c.coeffs, aut),
                relation: c.relation,
                bound: eval(&c.bound, aut),
            })
            .collect(),
    }
}

/// Evaluates all constants; fails when the automaton has defects.
pub fn resolve(aut: &HybridAutomaton) -> Result<System, ResolveError> {
    let report = validate(aut);
    if !report.is_empty() {
        return Err(ResolveError::Invalid(report.to_string()));
    }
    let (n, m) = (aut.vars.n(), aut.vars.m());
    let locations = aut
        .locations
        .iter()
        .map(|l| NumLocation {
            name: l.name.clone(),
            invariant: resolve_condition(&l.invariant, aut),
            a: matrix(&l.dynamics.a, n, n, aut),
            b: matrix(&l.dynamics.b, n, m, aut),
            c: vector(&l.dynamics.c, aut),
        })
        .collect();
    let transitions = aut
        .transitions
        .iter()
        .enumerate()
        .map(|(index, t)| NumTransition {
            index,
            source: aut.location_index(&t.source).unwrap_or(0),
            target: aut.location_index(&t.target).unwrap_or(0),
            guard: resolve_condition(&t.guard, aut),
            reset_matrix: matrix(&t.reset.matrix, n, n, aut),
            reset_offset: vector(&t.reset.offset, aut),
            label: t.label.clone().unwrap_or_else(|| format!("{}->{}", t.source, t.target)),
        })
        .collect();
    Ok(System {
        state_vars: aut.vars.state_vars.clone(),
        input_vars: aut.vars.input_vars.clone(),
        locations,
        transitions,
        input_box: IntervalBox::new(aut.input_range.clone()),
    })
}
