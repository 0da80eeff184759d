//! Coefficients that may mention named constants.
//!
//! A [`Coef`] is a polynomial over the automaton's constants with `f64`
//! factors. Plain numbers are the degree-0 case. Flows such as `v' == -c*v`
//! keep `c` symbolic until [`crate::ir::bind_constant`] folds it.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::io::fmt::fmt_number;

/// Sorted multiset of constant names; the empty monomial is the number 1.
pub type Monomial = Vec<String>;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Coef {
    terms: BTreeMap<Monomial, f64>,
}

impl Coef {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn num(value: f64) -> Self {
        let mut c = Self::default();
        c.push(Vec::new(), value);
        c
    }

    pub fn symbol(name: &str) -> Self {
        let mut c = Self::default();
        c.push(vec![name.to_string()], 1.0);
        c
    }

    fn push(&mut self, mono: Monomial, factor: f64) {
        let entry = self.terms.entry(mono).or_insert(0.0);
        *entry += factor;
        if *entry == 0.0 {
            // keep the map canonical: no zero monomials, no negative zero
            self.terms.retain(|_, v| *v != 0.0);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// The numeric value when no constant is mentioned.
    pub fn as_number(&self) -> Option<f64> {
        match self.terms.len() {
            0 => Some(0.0),
            1 => self.terms.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        self.as_number().is_some()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, v)| (m, *v))
    }

    pub fn symbols(&self) -> BTreeSet<&str> {
        self.terms.keys().flat_map(|m| m.iter().map(String::as_str)).collect()
    }

    pub fn all_finite(&self) -> bool {
        self.terms.values().all(|v| v.is_finite())
    }

    pub fn neg(&self) -> Self {
        Self {
            terms: self.terms.iter().map(|(m, v)| (m.clone(), -v)).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (m, v) in &other.terms {
            out.push(m.clone(), *v);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ma, va) in &self.terms {
            for (mb, vb) in &other.terms {
                let mut mono: Monomial = ma.iter().chain(mb.iter()).cloned().collect();
                mono.sort();
                out.push(mono, va * vb);
            }
        }
        out
    }

    pub fn scale(&self, k: f64) -> Self {
        let mut out = Self::zero();
        for (m, v) in &self.terms {
            out.push(m.clone(), v * k);
        }
        out
    }

    /// Evaluates against a constant table; returns the first unknown name on failure.
    pub fn eval(&self, constants: &BTreeMap<String, f64>) -> Result<f64, String> {
        let mut acc = 0.0;
        for (mono, factor) in &self.terms {
            let mut term = *factor;
            for name in mono {
                term *= constants.get(name).ok_or_else(|| name.clone())?;
            }
            acc += term;
        }
        Ok(acc)
    }

    /// Replaces every occurrence of `name` by `value`.
    pub fn substitute(&self, name: &str, value: f64) -> Self {
        let mut out = Self::zero();
        for (mono, factor) in &self.terms {
            let mut k = *factor;
            let rest: Monomial = mono
                .iter()
                .filter(|s| {
                    if s.as_str() == name {
                        k *= value;
                        false
                    } else {
                        true
                    }
                })
                .cloned()
                .collect();
            out.push(rest, k);
        }
        out
    }

    pub fn mentions(&self, name: &str) -> bool {
        self.terms.keys().any(|m| m.iter().any(|s| s == name))
    }

    /// Text form used as the factor in front of a variable (`2`, `-c`, `(1 + 2*c)`).
    /// Returns `(negative, magnitude_text)` where an empty text means 1.
    pub(crate) fn factor_parts(&self) -> (bool, String) {
        if self.terms.len() == 1 {
            let (mono, v) = self.terms.iter().next().unwrap();
            let neg = *v < 0.0;
            let mag = v.abs();
            let mut parts = Vec::new();
            if mag != 1.0 || mono.is_empty() {
                parts.push(fmt_number(mag));
            }
            parts.extend(mono.iter().cloned());
            let text = parts.join("*");
            if text == "1" {
                return (neg, String::new());
            }
            return (neg, text);
        }
        (false, format!("({self})"))
    }
}

impl From<f64> for Coef {
    fn from(v: f64) -> Self {
        Self::num(v)
    }
}

impl fmt::Display for Coef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (mono, v)) in self.terms.iter().enumerate() {
            let neg = *v < 0.0;
            let mag = v.abs();
            let mut parts = Vec::new();
            if mag != 1.0 || mono.is_empty() {
                parts.push(fmt_number(mag));
            }
            parts.extend(mono.iter().cloned());
            let body = parts.join("*");
            match (i, neg) {
                (0, true) => write!(f, "-{body}")?,
                (0, false) => f.write_str(&body)?,
                (_, true) => write!(f, " - {body}")?,
                (_, false) => write!(f, " + {body}")?,
            }
        }
        Ok(())
    }
}
