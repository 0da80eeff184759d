use std::collections::BTreeSet;
use std::fmt;

use super::{Coef, Condition, HybridAutomaton};

#[derive(Clone, Debug, PartialEq)]
pub enum Defect {
    NoStateVariables,
    NoLocations,
    DuplicateName(String),
    DuplicateLocation(String),
    DimensionMismatch {
        context: String,
        expected: (usize, usize),
        found: (usize, usize),
    },
    DanglingLocation {
        transition: usize,
        name: String,
    },
    UnknownSymbol {
        context: String,
        name: String,
    },
    NonFinite {
        context: String,
    },
    BadInputRange {
        name: String,
    },
}

impl fmt::Display for Defect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Defect::NoStateVariables => write!(f, "automaton declares no state variables"),
            Defect::NoLocations => write!(f, "automaton has no locations"),
            Defect::DuplicateName(n) => write!(f, "name `{n}` is declared more than once"),
            Defect::DuplicateLocation(n) => write!(f, "location `{n}` is declared more than once"),
            Defect::DimensionMismatch {
                context,
                expected,
                found,
            } => write!(
                f,
                "{context}: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            Defect::DanglingLocation { transition, name } => {
                write!(f, "transition #{transition} refers to unknown location `{name}`")
            }
            Defect::UnknownSymbol { context, name } => {
                write!(f, "{context}: unknown constant `{name}`")
            }
            Defect::NonFinite { context } => write!(f, "{context}: non-finite coefficient"),
            Defect::BadInputRange { name } => {
                write!(f, "input `{name}` has a missing or empty range")
            }
        }
    }
}

/// Defects found by [`validate`]; empty means well-formed.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub defects: Vec<Defect>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.defects.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.defects {
            writeln!(f, "{d}")?;
        }
        Ok(())
    }
}

struct Checker<'a> {
    aut: &'a HybridAutomaton,
    defects: Vec<Defect>,
}

impl Checker<'_> {
    fn coef(&mut self, context: &str, c: &Coef) {
        if !c.all_finite() {
            self.defects.push(Defect::NonFinite {
                context: context.to_string(),
            });
        }
        for s in c.symbols() {
            if !self.aut.vars.is_constant(s) {
                self.defects.push(Defect::UnknownSymbol {
                    context: context.to_string(),
                    name: s.to_string(),
                });
            }
        }
    }

    fn matrix(&mut self, context: &str, m: &[Vec<Coef>], rows: usize, cols: usize) {
        if m.len() != rows || m.iter().any(|r| r.len() != cols) {
            let widest = m.iter().map(Vec::len).max().unwrap_or(0);
            self.defects.push(Defect::DimensionMismatch {
                context: context.to_string(),
                expected: (rows, cols),
                found: (m.len(), widest),
            });
            return;
        }
        for row in m {
            for c in row {
                self.coef(context, c);
            }
        }
    }

    fn vector(&mut self, context: &str, v: &[Coef], len: usize) {
        if v.len() != len {
            self.defects.push(Defect::DimensionMismatch {
                context: context.to_string(),
                expected: (len, 1),
                found: (v.len(), 1),
            });
            return;
        }
        for c in v {
            self.coef(context, c);
        }
    }

    fn condition(&mut self, context: &str, cond: &Condition) {
        let n = self.aut.vars.n();
        for (k, c) in cond.constraints.iter().enumerate() {
            let ctx = format!("{context}, constraint {k}");
            self.vector(&ctx, &c.coeffs, n);
            self.coef(&ctx, &c.bound);
        }
    }
}

/// Reports structural defects of an automaton. Pure; never fails.
pub fn validate(aut: &HybridAutomaton) -> ValidationReport {
    let mut ck = Checker {
        aut,
        defects: Vec::new(),
    };
    let vars = &aut.vars;
    if vars.state_vars.is_empty() {
        ck.defects.push(Defect::NoStateVariables);
    }
    let mut seen = BTreeSet::new();
    for name in vars
        .state_vars
        .iter()
        .chain(&vars.input_vars)
        .chain(vars.constants.keys())
    {
        if !seen.insert(name.as_str()) {
            ck.defects.push(Defect::DuplicateName(name.clone()));
        }
    }
    for (name, value) in &vars.constants {
        if !value.is_finite() {
            ck.defects.push(Defect::NonFinite {
                context: format!("constant `{name}`"),
            });
        }
    }
    if aut.input_range.len() != vars.m() {
        ck.defects.push(Defect::DimensionMismatch {
            context: "input range".into(),
            expected: (vars.m(), 1),
            found: (aut.input_range.len(), 1),
        });
    } else {
        for (name, iv) in vars.input_vars.iter().zip(&aut.input_range) {
            if !(iv.lo <= iv.hi && iv.lo.is_finite() && iv.hi.is_finite()) {
                ck.defects.push(Defect::BadInputRange { name: name.clone() });
            }
        }
    }

    if aut.locations.is_empty() {
        ck.defects.push(Defect::NoLocations);
    }
    let (n, m) = (vars.n(), vars.m());
    let mut loc_names = BTreeSet::new();
    for loc in &aut.locations {
        if !loc_names.insert(loc.name.as_str()) {
            ck.defects.push(Defect::DuplicateLocation(loc.name.clone()));
        }
        let ctx = format!("location `{}`", loc.name);
        ck.matrix(&format!("{ctx}, flow matrix A"), &loc.dynamics.a, n, n);
        ck.matrix(&format!("{ctx}, input matrix B"), &loc.dynamics.b, n, m);
        ck.vector(&format!("{ctx}, drift c"), &loc.dynamics.c, n);
        ck.condition(&format!("{ctx}, invariant"), &loc.invariant);
    }
    for (i, tr) in aut.transitions.iter().enumerate() {
        for name in [&tr.source, &tr.target] {
            if !loc_names.contains(name.as_str()) {
                ck.defects.push(Defect::DanglingLocation {
                    transition: i,
                    name: name.clone(),
                });
            }
        }
        let ctx = format!("transition #{i}");
        ck.condition(&format!("{ctx}, guard"), &tr.guard);
        ck.matrix(&format!("{ctx}, reset matrix"), &tr.reset.matrix, n, n);
        ck.vector(&format!("{ctx}, reset offset"), &tr.reset.offset, n);
    }
    ValidationReport { defects: ck.defects }
}
