//! `key = value` analysis settings.
//!
//! ```text
//! system = "ball"
//! initially = "x >= 10 & x <= 10.2 & v == 0 & loc(ball) == always"
//! forbidden = "v >= 10.7"
//! time-horizon = 40
//! sampling-time = 0.01
//! max-jumps = 20
//! output-variables = "x, v"
//! fixpoint = false
//! ```
//!
//! `#` starts a comment. Values may be double-quoted. `sampling-time`
//! defaults to `time-horizon / 1000`, `max-jumps` to 10, `fixpoint` to
//! false and `output-variables` to the first two state variables.

use thiserror::Error;

use super::expr::{self, ExprError};
use super::fmt::{fmt_condition, fmt_number};
use super::ModelBundle;
use crate::ir::{HybridAutomaton, InitialCondition, ReachSettings, Relation};
use crate::setrep::Interval;

pub const DEFAULT_MAX_JUMPS: usize = 10;

#[derive(Clone, Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("{line}:1: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("missing required key `{0}`")]
    MissingKey(&'static str),
    #[error("{line}:{col}: `{key}`: {msg}")]
    BadValue {
        line: usize,
        col: usize,
        key: String,
        msg: String,
    },
}

/// Parsed config file.
#[derive(Clone, Debug, PartialEq)]
pub struct Config {
    pub system: Option<String>,
    pub settings: ReachSettings,
    pub initial: InitialCondition,
}

struct Entry<'a> {
    line: usize,
    /// Byte column (0-based) where the value starts.
    col: usize,
    key: &'a str,
    value: &'a str,
}

fn entries(text: &str) -> Result<Vec<Entry<'_>>, ConfigError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if body.trim().is_empty() {
            continue;
        }
        let Some(eq) = body.find('=') else {
            return Err(ConfigError::BadValue {
                line,
                col: 1,
                key: body.trim().to_string(),
                msg: "expected `key = value`".into(),
            });
        };
        let key = body[..eq].trim();
        let after = &body[eq + 1..];
        let lead = after.len() - after.trim_start().len();
        let mut value = after.trim();
        let mut col = eq + 1 + lead;
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
            col += 1;
        }
        out.push(Entry { line, col, key, value });
    }
    Ok(out)
}

fn bad(e: &Entry<'_>, msg: impl Into<String>) -> ConfigError {
    ConfigError::BadValue {
        line: e.line,
        col: e.col + 1,
        key: e.key.to_string(),
        msg: msg.into(),
    }
}

fn expr_err(e: &Entry<'_>, err: ExprError) -> ConfigError {
    ConfigError::BadValue {
        line: e.line,
        col: e.col + err.pos() + 1,
        key: e.key.to_string(),
        msg: err.to_string(),
    }
}

fn number(e: &Entry<'_>) -> Result<f64, ConfigError> {
    e.value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| bad(e, format!("expected a number, found `{}`", e.value)))
}

/// Splits off `loc(...) == name` conjuncts; returns the location name and the rest.
fn split_location(e: &Entry<'_>) -> Result<(Option<String>, String), ConfigError> {
    let mut loc = None;
    let mut rest = Vec::new();
    for part in e.value.split('&').filter(|p| !p.trim().is_empty()) {
        let t = part.trim();
        if let Some(after) = t.strip_prefix("loc(") {
            let Some((_, name)) = after.split_once("==") else {
                return Err(bad(e, format!("malformed location constraint `{t}`")));
            };
            loc = Some(name.trim().to_string());
        } else {
            rest.push(part);
        }
    }
    Ok((loc, rest.join("&")))
}

fn initial_box(e: &Entry<'_>, aut: &HybridAutomaton, text: &str) -> Result<Vec<Interval>, ConfigError> {
    let n = aut.vars.n();
    let mut ivs = vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); n];
    let parsed = expr::parse_expression(text, &aut.vars).map_err(|err| expr_err(e, err))?;
    for atom in expr::atoms(&parsed).map_err(|err| expr_err(e, err))? {
        let c = expr::atom_to_constraint(&atom, &aut.vars).map_err(|err| expr_err(e, err))?;
        let nz: Vec<usize> = (0..n).filter(|i| !c.coeffs[*i].is_zero()).collect();
        let (Some(k), Some(b), &[i]) = (
            nz.first().and_then(|i| c.coeffs[*i].as_number()),
            c.bound.eval(&aut.vars.constants).ok(),
            &nz[..],
        ) else {
            return Err(bad(e, "initial constraints must bound one variable each"));
        };
        let v = b / k;
        let rel = if k < 0.0 { c.relation.flipped() } else { c.relation };
        let iv = &mut ivs[i];
        match rel {
            Relation::Le | Relation::Lt => iv.hi = iv.hi.min(v),
            Relation::Ge | Relation::Gt => iv.lo = iv.lo.max(v),
            Relation::Eq => *iv = iv.meet(&Interval::point(v)),
        }
    }
    for (name, iv) in aut.vars.state_vars.iter().zip(&ivs) {
        if !iv.lo.is_finite() || !iv.hi.is_finite() {
            return Err(bad(e, format!("`{name}` is not bounded on both sides")));
        }
        if iv.is_empty() {
            return Err(bad(e, format!("`{name}` has an empty range")));
        }
    }
    Ok(ivs)
}

/// Parses settings and the initial set against the names of `aut`.
pub fn parse_config(text: &str, aut: &HybridAutomaton) -> Result<Config, ConfigError> {
    let mut system = None;
    let mut horizon = None;
    let mut step = None;
    let mut max_jumps = DEFAULT_MAX_JUMPS;
    let mut forbidden = None;
    let mut output = None;
    let mut fixpoint = false;
    let mut initial = None;
    for e in entries(text)? {
        match e.key {
            "system" => system = Some(e.value.to_string()),
            "time-horizon" => horizon = Some(number(&e)?),
            "sampling-time" => step = Some(number(&e)?),
            "max-jumps" => {
                max_jumps = e
                    .value
                    .parse()
                    .map_err(|_| bad(&e, format!("expected a count, found `{}`", e.value)))?
            }
            "fixpoint" => {
                fixpoint = match e.value {
                    "true" | "on" | "yes" => true,
                    "false" | "off" | "no" => false,
                    v => return Err(bad(&e, format!("expected true or false, found `{v}`"))),
                }
            }
            "forbidden" => {
                forbidden = Some(expr::parse_condition(e.value, &aut.vars).map_err(|err| expr_err(&e, err))?)
            }
            "output-variables" => {
                let names: Vec<String> = e
                    .value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                let [a, b] = &names[..] else {
                    return Err(bad(&e, "expected two comma-separated names"));
                };
                for v in [a, b] {
                    if aut.vars.state_index(v).is_none() {
                        return Err(bad(&e, format!("`{v}` is not a state variable")));
                    }
                }
                output = Some((a.clone(), b.clone()));
            }
            "initially" => {
                let (loc, rest) = split_location(&e)?;
                let location = match loc {
                    Some(l) if aut.location(&l).is_none() => {
                        return Err(bad(&e, format!("unknown location `{l}`")));
                    }
                    Some(l) => l,
                    None => aut
                        .locations
                        .first()
                        .map(|l| l.name.clone())
                        .ok_or_else(|| bad(&e, "automaton has no locations"))?,
                };
                let intervals = initial_box(&e, aut, &rest)?;
                initial = Some(InitialCondition { location, intervals });
            }
            other => {
                return Err(ConfigError::UnknownKey {
                    line: e.line,
                    key: other.to_string(),
                })
            }
        }
    }
    let horizon = horizon.ok_or(ConfigError::MissingKey("time-horizon"))?;
    let initial = initial.ok_or(ConfigError::MissingKey("initially"))?;
    let vars = &aut.vars.state_vars;
    let output_vars = output.unwrap_or_else(|| {
        let a = vars.first().cloned().unwrap_or_default();
        let b = vars.get(1).cloned().unwrap_or_else(|| a.clone());
        (a, b)
    });
    Ok(Config {
        system,
        settings: ReachSettings {
            horizon,
            step: step.unwrap_or(horizon / 1000.0),
            max_jumps,
            forbidden,
            output_vars,
            fixpoint_check: fixpoint,
        },
        initial,
    })
}

/// Config text for `bundle`; [`parse_config`] reads it back unchanged.
pub fn emit_config(bundle: &ModelBundle) -> String {
    let aut = &bundle.automaton;
    let s = &bundle.settings;
    let mut init: Vec<String> = Vec::new();
    for (v, iv) in aut.vars.state_vars.iter().zip(&bundle.initial.intervals) {
        if iv.lo == iv.hi {
            init.push(format!("{v} == {}", fmt_number(iv.lo)));
        } else {
            init.push(format!("{v} >= {} & {v} <= {}", fmt_number(iv.lo), fmt_number(iv.hi)));
        }
    }
    init.push(format!("loc({}) == {}", aut.name, bundle.initial.location));
    let mut out = String::new();
    out.push_str(&format!("system = \"{}\"\n", aut.name));
    out.push_str(&format!("initially = \"{}\"\n", init.join(" & ")));
    if let Some(f) = &s.forbidden {
        out.push_str(&format!(
            "forbidden = \"{}\"\n",
            fmt_condition(f, &aut.vars.state_vars, " & ")
        ));
    }
    out.push_str(&format!("time-horizon = {}\n", fmt_number(s.horizon)));
    out.push_str(&format!("sampling-time = {}\n", fmt_number(s.step)));
    out.push_str(&format!("max-jumps = {}\n", s.max_jumps));
    out.push_str(&format!(
        "output-variables = \"{}, {}\"\n",
        s.output_vars.0, s.output_vars.1
    ));
    out.push_str(&format!("fixpoint = {}\n", s.fixpoint_check));
    out
}
