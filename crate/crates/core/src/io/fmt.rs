//! Text formatting shared by the emitters.

use crate::ir::{Coef, Condition, LinearConstraint};

/// Shortest decimal that reads back to the same `f64`; `-0` prints as `0`.
pub fn fmt_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

/// `Σ coeffs[i]*names[i] + constant`, e.g. `2*x - c*v + 3`.
pub fn fmt_affine(coeffs: &[Coef], names: &[String], constant: &Coef) -> String {
    let mut out = String::new();
    for (k, name) in coeffs.iter().zip(names) {
        if k.is_zero() {
            continue;
        }
        let (neg, mag) = k.factor_parts();
        let term = if mag.is_empty() {
            name.clone()
        } else {
            format!("{mag}*{name}")
        };
        push_term(&mut out, neg, &term);
    }
    if !constant.is_zero() {
        let text = constant.to_string();
        match text.strip_prefix('-') {
            Some(rest) => push_term(&mut out, true, rest),
            None => push_term(&mut out, false, &text),
        }
    }
    if out.is_empty() {
        out.push('0');
    }
    out
}

fn push_term(out: &mut String, neg: bool, term: &str) {
    match (out.is_empty(), neg) {
        (true, false) => out.push_str(term),
        (true, true) => {
            out.push('-');
            out.push_str(term);
        }
        (false, false) => {
            out.push_str(" + ");
            out.push_str(term);
        }
        (false, true) => {
            out.push_str(" - ");
            out.push_str(term);
        }
    }
}

pub fn fmt_constraint(c: &LinearConstraint, names: &[String]) -> String {
    format!(
        "{} {} {}",
        fmt_affine(&c.coeffs, names, &Coef::zero()),
        c.relation,
        fmt_bound(&c.bound)
    )
}

fn fmt_bound(b: &Coef) -> String {
    if b.is_numeric() || b.terms().count() == 1 {
        b.to_string()
    } else {
        format!("({b})")
    }
}

/// Constraints joined by `sep`; the empty condition prints as the empty string.
pub fn fmt_condition(cond: &Condition, names: &[String], sep: &str) -> String {
    cond.constraints
        .iter()
        .map(|c| fmt_constraint(c, names))
        .collect::<Vec<_>>()
        .join(sep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ir::Relation;

    #[test]
    fn numbers_round_trip() {
        for v in [0.1, -9.81, 1.0 / 3.0, 1e-9, 2.5e20, 12.0, -0.7] {
            assert_eq!(fmt_number(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(fmt_number(-0.0), "0");
        assert_eq!(fmt_number(12.0), "12");
        assert_eq!(fmt_number(1e-9), "1e-9");
    }

    #[test]
    fn affine_text() {
        let names: Vec<String> = ["x", "v"].iter().map(|s| s.to_string()).collect();
        let coeffs = vec![Coef::num(1.0), Coef::symbol("c").neg()];
        assert_eq!(fmt_affine(&coeffs, &names, &Coef::num(-3.0)), "x - c*v - 3");
        assert_eq!(fmt_affine(&[Coef::zero(), Coef::zero()], &names, &Coef::zero()), "0");
        let two = vec![Coef::num(-2.0), Coef::num(1.0).sub(&Coef::symbol("c"))];
        assert_eq!(fmt_affine(&two, &names, &Coef::zero()), "-2*x + (1 - c)*v");
    }

    #[test]
    fn constraint_text() {
        let names = vec!["x".to_string()];
        let c = LinearConstraint::axis(1, 0, Relation::Ge, 0.0);
        assert_eq!(fmt_constraint(&c, &names), "x >= 0");
    }
}
