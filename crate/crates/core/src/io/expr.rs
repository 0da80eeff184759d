//! Expression grammar for flows, guards, invariants, resets and config values.
//!
//! ```text
//! conj  := cmp (('&' | '&&') cmp)*
//! cmp   := sum ((REL | ':=') sum)*        REL ∈ <= < == = >= >
//! sum   := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := ('-' | '+') unary | atom
//! atom  := NUMBER | IDENT ['\''] | '(' conj ')'
//! ```

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::ir::{Coef, Condition, LinearConstraint, Relation, VariableTable};

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("column {}: syntax error: {msg}", pos + 1)]
    Syntax { pos: usize, msg: String },
    #[error("column {}: nonlinear term is not supported: {msg}", pos + 1)]
    NonlinearUnsupported { pos: usize, msg: String },
    #[error("column {}: unknown identifier `{name}`", pos + 1)]
    UnknownIdentifier { pos: usize, name: String },
    #[error("column {}: {msg}", pos + 1)]
    Misplaced { pos: usize, msg: String },
}

impl ExprError {
    pub fn pos(&self) -> usize {
        match self {
            ExprError::Syntax { pos, .. }
            | ExprError::NonlinearUnsupported { pos, .. }
            | ExprError::UnknownIdentifier { pos, .. }
            | ExprError::Misplaced { pos, .. } => *pos,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expr {
    /// Byte offset of the node in the source text.
    pub pos: usize,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ExprKind {
    Number(f64),
    Ident {
        name: String,
        primed: bool,
    },
    /// A named constant from the variable table.
    Constant(String),
    Negate(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Compare(Relation, Box<Expr>, Box<Expr>),
    Assign(Box<Expr>, Box<Expr>),
    And(Vec<Expr>),
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Prime,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Rel(Relation),
    Assign,
    And,
    End,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "`{s}`"),
            Tok::Prime => f.write_str("`'`"),
            Tok::Plus => f.write_str("`+`"),
            Tok::Minus => f.write_str("`-`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Rel(r) => write!(f, "`{r}`"),
            Tok::Assign => f.write_str("`:=`"),
            Tok::And => f.write_str("`&`"),
            Tok::End => f.write_str("end of input"),
        }
    }
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let b = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let syntax = |pos: usize, msg: String| ExprError::Syntax { pos, msg };
    while i < b.len() {
        let c = b[i];
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let two = |s: &str| text[i..].starts_with(s);
        let tok = if c.is_ascii_digit() || (c == b'.' && b.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < b.len() && (b[i].is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let lit = &text[start..i];
            let v = lit
                .parse::<f64>()
                .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
            out.push((Tok::Num(v), start));
            continue;
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < b.len() && (b[i].is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(text[start..i].to_string()), start));
            continue;
        } else if two("&&") {
            i += 2;
            Tok::And
        } else if two("<=") {
            i += 2;
            Tok::Rel(Relation::Le)
        } else if two(">=") {
            i += 2;
            Tok::Rel(Relation::Ge)
        } else if two("==") {
            i += 2;
            Tok::Rel(Relation::Eq)
        } else if two(":=") {
            i += 2;
            Tok::Assign
        } else {
            i += 1;
            match c {
                b'&' => Tok::And,
                b'<' => Tok::Rel(Relation::Lt),
                b'>' => Tok::Rel(Relation::Gt),
                b'=' => Tok::Rel(Relation::Eq),
                b'+' => Tok::Plus,
                b'-' => Tok::Minus,
                b'*' => Tok::Star,
                b'/' => Tok::Slash,
                b'(' => Tok::LParen,
                b')' => Tok::RParen,
                b'\'' => Tok::Prime,
                _ => {
                    let ch = text[start..].chars().next().unwrap_or('?');
                    return Err(syntax(start, format!("unexpected character `{ch}`")));
                }
            }
        };
        out.push((tok, start));
    }
    out.push((Tok::End, text.len()));
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    at: usize,
    table: &'a VariableTable,
}

fn node(pos: usize, kind: ExprKind) -> Expr {
    Expr { pos, kind }
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    fn pos(&self) -> usize {
        self.toks[self.at].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn unexpected(&self, want: &str) -> ExprError {
        ExprError::Syntax {
            pos: self.pos(),
            msg: format!("expected {want}, found {}", self.peek()),
        }
    }

    fn conj(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        let mut parts = vec![self.cmp()?];
        while *self.peek() == Tok::And {
            self.bump();
            parts.push(self.cmp()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            node(pos, ExprKind::And(parts))
        })
    }

    fn cmp(&mut self) -> Result<Expr, ExprError> {
        let first = self.sum()?;
        let mut links = Vec::new();
        let mut lhs = first;
        loop {
            let pos = self.pos();
            let assign = match self.peek() {
                Tok::Rel(_) => false,
                Tok::Assign => true,
                _ => break,
            };
            let (tok, _) = self.bump();
            let rhs = self.sum()?;
            let kind = match tok {
                Tok::Rel(r) => ExprKind::Compare(r, Box::new(lhs), Box::new(rhs.clone())),
                _ if assign => ExprKind::Assign(Box::new(lhs), Box::new(rhs.clone())),
                _ => unreachable!(),
            };
            links.push(node(pos, kind));
            lhs = rhs;
        }
        Ok(match links.len() {
            0 => lhs,
            1 => links.pop().unwrap(),
            _ => node(links[0].pos, ExprKind::And(links)),
        })
    }

    fn sum(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let pos = self.pos();
            let kind: fn(Box<Expr>, Box<Expr>) -> ExprKind = match self.peek() {
                Tok::Plus => ExprKind::Add,
                Tok::Minus => ExprKind::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = node(pos, kind(Box::new(lhs), Box::new(rhs)));
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            let kind: fn(Box<Expr>, Box<Expr>) -> ExprKind = match self.peek() {
                Tok::Star => ExprKind::Mul,
                Tok::Slash => ExprKind::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = node(pos, kind(Box::new(lhs), Box::new(rhs)));
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek() {
            Tok::Minus => {
                self.bump();
                Ok(node(pos, ExprKind::Negate(Box::new(self.unary()?))))
            }
            Tok::Plus => {
                self.bump();
                self.unary()
            }
            _ => self.atom(),
        }
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(node(pos, ExprKind::Number(v)))
            }
            Tok::Ident(name) => {
                self.bump();
                let primed = *self.peek() == Tok::Prime;
                if primed {
                    self.bump();
                }
                let t = self.table;
                let known = if primed {
                    t.state_index(&name).is_some()
                } else {
                    t.state_index(&name).is_some() || t.input_index(&name).is_some() || t.is_constant(&name)
                };
                if !known {
                    let shown = if primed { format!("{name}'") } else { name };
                    return Err(ExprError::UnknownIdentifier { pos, name: shown });
                }
                if !primed && t.is_constant(&name) {
                    return Ok(node(pos, ExprKind::Constant(name)));
                }
                Ok(node(pos, ExprKind::Ident { name, primed }))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.conj()?;
                if *self.peek() != Tok::RParen {
                    return Err(self.unexpected("`)`"));
                }
                self.bump();
                Ok(inner)
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }
}

/// Parses `text` against the names in `table`. The empty string is `true`.
pub fn parse_expression(text: &str, table: &VariableTable) -> Result<Expr, ExprError> {
    let mut p = Parser {
        toks: lex(text)?,
        at: 0,
        table,
    };
    if *p.peek() == Tok::End {
        return Ok(node(0, ExprKind::And(Vec::new())));
    }
    let e = p.conj()?;
    if *p.peek() != Tok::End {
        return Err(p.unexpected("`&` or end of input"));
    }
    Ok(e)
}

/// Linear form `Σ terms[v]·v + constant`. Primed variables are keyed as `v'`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Affine {
    pub terms: BTreeMap<String, Coef>,
    pub constant: Coef,
}

impl Affine {
    fn var(name: String) -> Self {
        let mut terms = BTreeMap::new();
        terms.insert(name, Coef::num(1.0));
        Self {
            terms,
            constant: Coef::zero(),
        }
    }

    fn constant(c: Coef) -> Self {
        Self {
            terms: BTreeMap::new(),
            constant: c,
        }
    }

    fn combine(&self, o: &Self, sign: f64) -> Self {
        let mut terms = self.terms.clone();
        for (k, v) in &o.terms {
            let sum = terms.get(k).cloned().unwrap_or_default().add(&v.scale(sign));
            if sum.is_zero() {
                terms.remove(k);
            } else {
                terms.insert(k.clone(), sum);
            }
        }
        Self {
            terms,
            constant: self.constant.add(&o.constant.scale(sign)),
        }
    }

    fn times(&self, k: &Coef) -> Self {
        Self {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.clone(), c.mul(k)))
                .filter(|(_, c)| !c.is_zero())
                .collect(),
            constant: self.constant.mul(k),
        }
    }

    pub fn coef(&self, name: &str) -> Coef {
        self.terms.get(name).cloned().unwrap_or_default()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }
}

/// Arithmetic subtree to linear form.
pub fn linearize(e: &Expr) -> Result<Affine, ExprError> {
    match &e.kind {
        ExprKind::Number(v) => Ok(Affine::constant(Coef::num(*v))),
        ExprKind::Ident { name, primed: true } => Ok(Affine::var(format!("{name}'"))),
        ExprKind::Ident { name, primed: false } => Ok(Affine::var(name.clone())),
        ExprKind::Constant(name) => Ok(Affine::constant(Coef::symbol(name))),
        ExprKind::Negate(a) => Ok(linearize(a)?.times(&Coef::num(-1.0))),
        ExprKind::Add(a, b) => Ok(linearize(a)?.combine(&linearize(b)?, 1.0)),
        ExprKind::Sub(a, b) => Ok(linearize(a)?.combine(&linearize(b)?, -1.0)),
        ExprKind::Mul(a, b) => {
            let (x, y) = (linearize(a)?, linearize(b)?);
            if x.is_constant() {
                Ok(y.times(&x.constant))
            } else if y.is_constant() {
                Ok(x.times(&y.constant))
            } else {
                Err(ExprError::NonlinearUnsupported {
                    pos: e.pos,
                    msg: "product of two variables".into(),
                })
            }
        }
        ExprKind::Div(a, b) => {
            let (x, y) = (linearize(a)?, linearize(b)?);
            match (y.is_constant(), y.constant.as_number()) {
                (true, Some(d)) if d != 0.0 => Ok(x.times(&Coef::num(1.0 / d))),
                (true, Some(_)) => Err(ExprError::Misplaced {
                    pos: b.pos,
                    msg: "division by zero".into(),
                }),
                _ => Err(ExprError::NonlinearUnsupported {
                    pos: e.pos,
                    msg: "division by a variable or symbolic constant".into(),
                }),
            }
        }
        ExprKind::Compare(..) | ExprKind::Assign(..) | ExprKind::And(_) => Err(ExprError::Misplaced {
            pos: e.pos,
            msg: "comparison used as a value".into(),
        }),
    }
}

/// Top-level conjuncts of `e` (a non-conjunction is a single conjunct).
pub fn conjuncts(e: &Expr) -> Vec<&Expr> {
    match &e.kind {
        ExprKind::And(parts) => parts.iter().flat_map(conjuncts).collect(),
        _ => vec![e],
    }
}

/// One atomic comparison as `diff rel 0` with `diff = lhs − rhs`.
#[derive(Clone, Debug, PartialEq)]
pub struct Atom {
    pub pos: usize,
    pub diff: Affine,
    pub relation: Relation,
}

/// Every conjunct must be a comparison.
pub fn atoms(e: &Expr) -> Result<Vec<Atom>, ExprError> {
    conjuncts(e)
        .into_iter()
        .map(|c| match &c.kind {
            ExprKind::Compare(rel, a, b) => Ok(Atom {
                pos: c.pos,
                diff: linearize(a)?.combine(&linearize(b)?, -1.0),
                relation: *rel,
            }),
            _ => Err(ExprError::Misplaced {
                pos: c.pos,
                msg: "expected a comparison".into(),
            }),
        })
        .collect()
}

/// `atom` as a constraint over the state variables; rejects inputs and primes.
pub fn atom_to_constraint(atom: &Atom, table: &VariableTable) -> Result<LinearConstraint, ExprError> {
    for name in atom.diff.terms.keys() {
        if table.state_index(name).is_none() {
            return Err(ExprError::Misplaced {
                pos: atom.pos,
                msg: format!("`{name}` may not appear in a condition over the state"),
            });
        }
    }
    Ok(LinearConstraint {
        coeffs: table.state_vars.iter().map(|v| atom.diff.coef(v)).collect(),
        relation: atom.relation,
        bound: atom.diff.constant.neg(),
    })
}

/// Parses a conjunction of linear comparisons over the state variables.
pub fn parse_condition(text: &str, table: &VariableTable) -> Result<Condition, ExprError> {
    let e = parse_expression(text, table)?;
    let constraints = atoms(&e)?
        .iter()
        .map(|a| atom_to_constraint(a, table))
        .collect::<Result<_, _>>()?;
    Ok(Condition { constraints })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> VariableTable {
        let mut t = VariableTable::new(&["x", "v"]);
        t.constants.insert("c".into(), 0.75);
        t.input_vars.push("u".into());
        t
    }

    #[test]
    fn guard_conjunction_has_two_constraints() {
        let c = parse_condition("x == 0 & v <= 0", &ball()).unwrap();
        assert_eq!(c.constraints.len(), 2);
        assert_eq!(c.constraints[0].relation, Relation::Eq);
        assert_eq!(c.constraints[1].coeffs, vec![Coef::zero(), Coef::num(1.0)]);
    }

    #[test]
    fn empty_text_is_true() {
        assert!(parse_condition("", &ball()).unwrap().is_true());
        assert!(parse_condition("   ", &ball()).unwrap().is_true());
    }

    #[test]
    fn product_of_variables_is_rejected() {
        let err = parse_condition("x*v <= 1", &ball()).unwrap_err();
        assert!(matches!(err, ExprError::NonlinearUnsupported { pos: 1, .. }));
    }

    #[test]
    fn unknown_identifier_reports_position() {
        let err = parse_condition("x + zz <= 1", &ball()).unwrap_err();
        assert_eq!(
            err,
            ExprError::UnknownIdentifier {
                pos: 4,
                name: "zz".into()
            }
        );
    }

    #[test]
    fn precedence_and_symbols() {
        let e = parse_expression("v' == -c*v + 2*3 - x/4", &ball()).unwrap();
        let a = &atoms(&e).unwrap()[0];
        assert_eq!(a.diff.coef("v'"), Coef::num(1.0));
        assert_eq!(a.diff.coef("v"), Coef::symbol("c"));
        assert_eq!(a.diff.coef("x"), Coef::num(0.25));
        assert_eq!(a.diff.constant, Coef::num(-6.0));
    }

    #[test]
    fn both_conjunction_and_equality_spellings() {
        let a = parse_condition("x = 0 && v <= 0", &ball()).unwrap();
        let b = parse_condition("x == 0 & v <= 0", &ball()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn chained_comparison_splits() {
        let c = parse_condition("0 <= x <= 1", &ball()).unwrap();
        assert_eq!(c.constraints.len(), 2);
    }

    #[test]
    fn syntax_errors_are_positioned() {
        assert!(matches!(
            parse_condition("x <= ", &ball()),
            Err(ExprError::Syntax { pos: 5, .. })
        ));
        assert!(matches!(
            parse_condition("x <= 1 )", &ball()),
            Err(ExprError::Syntax { pos: 7, .. })
        ));
        assert!(matches!(
            parse_condition("x # 1", &ball()),
            Err(ExprError::Syntax { pos: 2, .. })
        ));
    }

    #[test]
    fn inputs_are_not_state_conditions() {
        assert!(parse_condition("u <= 1", &ball()).is_err());
    }

    #[test]
    fn exponents_parse() {
        let c = parse_condition("x <= 1e-3", &ball()).unwrap();
        assert_eq!(c.constraints[0].bound, Coef::num(1e-3));
    }

    mod totality {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn never_panics(s in "[xvcu0-9 .*/+\\-()<>=&:'e]{0,40}") {
                let _ = parse_expression(&s, &ball()).map(|e| atoms(&e));
            }
        }
    }
}
