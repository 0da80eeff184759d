use thiserror::Error;

use super::{Coef, Condition, HybridAutomaton};

#[derive(Debug, Error, PartialEq)]
pub enum BindError {
    #[error("unknown symbol `{0}`: not a constant or input of the automaton")]
    UnknownSymbol(String),
}

fn subst_condition(cond: &Condition, name: &str, value: f64) -> Condition {
    let mut out = cond.clone();
    for c in &mut out.constraints {
        for k in &mut c.coeffs {
            *k = k.substitute(name, value);
        }
        c.bound = c.bound.substitute(name, value);
    }
    out
}

fn subst_rows(rows: &mut [Vec<Coef>], name: &str, value: f64) {
    for row in rows {
        for k in row {
            *k = k.substitute(name, value);
        }
    }
}

/// Fixes a constant or an input to `value`.
///
/// Constants are substituted everywhere and removed from the table. Inputs
/// have their `B` column folded into the drift, so the input dimension
/// shrinks by one.
pub fn bind_constant(aut: &HybridAutomaton, name: &str, value: f64) -> Result<HybridAutomaton, BindError> {
    let mut out = aut.clone();
    if out.vars.constants.remove(name).is_some() {
        for loc in &mut out.locations {
            subst_rows(&mut loc.dynamics.a, name, value);
            subst_rows(&mut loc.dynamics.b, name, value);
            for k in &mut loc.dynamics.c {
                *k = k.substitute(name, value);
            }
            loc.invariant = subst_condition(&loc.invariant, name, value);
        }
        for tr in &mut out.transitions {
            tr.guard = subst_condition(&tr.guard, name, value);
            subst_rows(&mut tr.reset.matrix, name, value);
            for k in &mut tr.reset.offset {
                *k = k.substitute(name, value);
            }
        }
        return Ok(out);
    }
    let Some(j) = out.vars.input_index(name) else {
        return Err(BindError::UnknownSymbol(name.to_string()));
    };
    out.vars.input_vars.remove(j);
    if j < out.input_range.len() {
        out.input_range.remove(j);
    }
    for loc in &mut out.locations {
        let dynamics = &mut loc.dynamics;
        for (row, drift) in dynamics.b.iter_mut().zip(dynamics.c.iter_mut()) {
            if j < row.len() {
                let col = row.remove(j);
                *drift = drift.add(&col.scale(value));
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::{validate, AffineDynamics, Location, ResetMap, Transition, VariableTable};
    use crate::setrep::Interval;

    fn toy() -> HybridAutomaton {
        let mut vars = VariableTable::new(&["x", "v"]);
        vars.input_vars.push("u".into());
        vars.constants.insert("c".into(), 0.75);
        let mut dynamics = AffineDynamics::zero(2, 1);
        dynamics.a[0][1] = Coef::num(1.0);
        dynamics.b[1][0] = Coef::num(2.0);
        dynamics.c[1] = Coef::num(-9.81);
        let reset = ResetMap::identity(2).assign(1, vec![Coef::zero(), Coef::symbol("c").neg()], Coef::zero());
        HybridAutomaton {
            name: "toy".into(),
            vars,
            locations: vec![Location {
                name: "l".into(),
                invariant: Condition::truth(),
                dynamics,
            }],
            transitions: vec![Transition {
                source: "l".into(),
                target: "l".into(),
                guard: Condition::truth(),
                reset,
                label: None,
            }],
            input_range: vec![Interval::new(-1.0, 1.0)],
        }
    }

    #[test]
    fn binding_constant_folds_reset_entry() {
        let a = bind_constant(&toy(), "c", 0.75).unwrap();
        assert_eq!(a.transitions[0].reset.matrix[1][1], Coef::num(-0.75));
        assert!(a.vars.constants.is_empty());
        assert!(validate(&a).is_empty());
    }

    #[test]
    fn binding_input_folds_b_column_into_drift() {
        let a = bind_constant(&toy(), "u", 0.5).unwrap();
        assert!(a.vars.input_vars.is_empty());
        assert!(a.input_range.is_empty());
        assert_eq!(a.locations[0].dynamics.b[1].len(), 0);
        assert_eq!(a.locations[0].dynamics.c[1], Coef::num(-8.81));
        assert!(validate(&a).is_empty());
    }

    #[test]
    fn binding_unknown_symbol_fails() {
        assert_eq!(
            bind_constant(&toy(), "z", 1.0),
            Err(BindError::UnknownSymbol("z".into()))
        );
    }
}
