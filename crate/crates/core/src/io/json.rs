//! Canonical JSON interchange. Schema: `docs/model.schema.json`.
//!
//! Coefficients are numbers, or strings holding a polynomial over the
//! declared constants (`"-c"`, `"1 - 2*c"`).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::expr;
use super::{ModelBundle, ModelError, SourceFormat};
use crate::ir::{
    AffineDynamics, Coef, Condition, HybridAutomaton, InitialCondition, LinearConstraint, Location, ReachSettings,
    Relation, ResetMap, Transition, VariableTable,
};
use crate::setrep::Interval;

pub const FORMAT_TAG: &str = "hyra-model/1";

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum JCoef {
    Num(f64),
    Expr(String),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JConstraint {
    coeffs: Vec<JCoef>,
    relation: Relation,
    bound: JCoef,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JLocation {
    name: String,
    invariant: Vec<JConstraint>,
    a: Vec<Vec<JCoef>>,
    b: Vec<Vec<JCoef>>,
    c: Vec<JCoef>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JTransition {
    source: String,
    target: String,
    label: Option<String>,
    guard: Vec<JConstraint>,
    reset_matrix: Vec<Vec<JCoef>>,
    reset_offset: Vec<JCoef>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JInitial {
    location: String,
    #[serde(rename = "box")]
    intervals: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JSettings {
    horizon: f64,
    step: f64,
    max_jumps: usize,
    forbidden: Option<Vec<JConstraint>>,
    output_vars: [String; 2],
    fixpoint: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct JBundle {
    format: String,
    name: String,
    source_format: SourceFormat,
    state_vars: Vec<String>,
    input_vars: Vec<String>,
    constants: BTreeMap<String, f64>,
    input_range: Vec<[f64; 2]>,
    locations: Vec<JLocation>,
    transitions: Vec<JTransition>,
    initial: JInitial,
    settings: JSettings,
}

fn norm(v: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

fn jc(c: &Coef) -> JCoef {
    match c.as_number() {
        Some(v) => JCoef::Num(norm(v)),
        None if c.is_zero() => JCoef::Num(0.0),
        None => JCoef::Expr(c.to_string()),
    }
}

fn jrows(rows: &[Vec<Coef>]) -> Vec<Vec<JCoef>> {
    rows.iter().map(|r| r.iter().map(jc).collect()).collect()
}

fn jcond(c: &Condition) -> Vec<JConstraint> {
    c.constraints
        .iter()
        .map(|k| JConstraint {
            coeffs: k.coeffs.iter().map(jc).collect(),
            relation: k.relation,
            bound: jc(&k.bound),
        })
        .collect()
}

fn pair(iv: &Interval) -> [f64; 2] {
    [norm(iv.lo), norm(iv.hi)]
}

/// Canonical text: fixed key order, two-space indent, trailing newline.
pub fn write_json(bundle: &ModelBundle) -> String {
    let aut = &bundle.automaton;
    let s = &bundle.settings;
    let j = JBundle {
        format: FORMAT_TAG.into(),
        name: aut.name.clone(),
        source_format: bundle.source_format,
        state_vars: aut.vars.state_vars.clone(),
        input_vars: aut.vars.input_vars.clone(),
        constants: aut.vars.constants.iter().map(|(k, v)| (k.clone(), norm(*v))).collect(),
        input_range: aut.input_range.iter().map(pair).collect(),
        locations: aut
            .locations
            .iter()
            .map(|l| JLocation {
                name: l.name.clone(),
                invariant: jcond(&l.invariant),
                a: jrows(&l.dynamics.a),
                b: jrows(&l.dynamics.b),
                c: l.dynamics.c.iter().map(jc).collect(),
            })
            .collect(),
        transitions: aut
            .transitions
            .iter()
            .map(|t| JTransition {
                source: t.source.clone(),
                target: t.target.clone(),
                label: t.label.clone(),
                guard: jcond(&t.guard),
                reset_matrix: jrows(&t.reset.matrix),
                reset_offset: t.reset.offset.iter().map(jc).collect(),
            })
            .collect(),
        initial: JInitial {
            location: bundle.initial.location.clone(),
            intervals: bundle.initial.intervals.iter().map(pair).collect(),
        },
        settings: JSettings {
            horizon: s.horizon,
            step: s.step,
            max_jumps: s.max_jumps,
            forbidden: s.forbidden.as_ref().map(jcond),
            output_vars: [s.output_vars.0.clone(), s.output_vars.1.clone()],
            fixpoint: s.fixpoint_check,
        },
    };
    let mut out = serde_json::to_string_pretty(&j).expect("bundle serializes");
    out.push('\n');
    out
}

struct Reader {
    consts: VariableTable,
}

impl Reader {
    fn coef(&self, c: &JCoef, at: &str) -> Result<Coef, ModelError> {
        match c {
            JCoef::Num(v) => Ok(Coef::num(*v)),
            JCoef::Expr(s) => {
                let bad = |m: String| ModelError::Schema(format!("{at}: coefficient `{s}`: {m}"));
                let e = expr::parse_expression(s, &self.consts).map_err(|e| bad(e.to_string()))?;
                let a = expr::linearize(&e).map_err(|e| bad(e.to_string()))?;
                Ok(a.constant)
            }
        }
    }

    fn rows(&self, rows: &[Vec<JCoef>], at: &str) -> Result<Vec<Vec<Coef>>, ModelError> {
        rows.iter()
            .map(|r| r.iter().map(|c| self.coef(c, at)).collect())
            .collect()
    }

    fn vec(&self, v: &[JCoef], at: &str) -> Result<Vec<Coef>, ModelError> {
        v.iter().map(|c| self.coef(c, at)).collect()
    }

    fn cond(&self, c: &[JConstraint], at: &str) -> Result<Condition, ModelError> {
        Ok(Condition {
            constraints: c
                .iter()
                .map(|k| {
                    Ok(LinearConstraint {
                        coeffs: self.vec(&k.coeffs, at)?,
                        relation: k.relation,
                        bound: self.coef(&k.bound, at)?,
                    })
                })
                .collect::<Result<_, ModelError>>()?,
        })
    }
}

fn interval([lo, hi]: [f64; 2]) -> Interval {
    Interval::new(lo, hi)
}

/// Reads a bundle; rejects unknown fields, wrong types and ill-formed models.
pub fn read_json(text: &str) -> Result<ModelBundle, ModelError> {
    let j: JBundle = serde_json::from_str(text).map_err(|e| ModelError::Schema(e.to_string()))?;
    if j.format != FORMAT_TAG {
        return Err(ModelError::Schema(format!(
            "format tag `{}` is not `{FORMAT_TAG}`",
            j.format
        )));
    }
    let vars = VariableTable {
        state_vars: j.state_vars,
        input_vars: j.input_vars,
        constants: j.constants,
    };
    let r = Reader {
        consts: VariableTable {
            constants: vars.constants.clone(),
            ..VariableTable::default()
        },
    };
    let mut locations = Vec::new();
    for l in &j.locations {
        let at = format!("location `{}`", l.name);
        locations.push(Location {
            name: l.name.clone(),
            invariant: r.cond(&l.invariant, &at)?,
            dynamics: AffineDynamics {
                a: r.rows(&l.a, &at)?,
                b: r.rows(&l.b, &at)?,
                c: r.vec(&l.c, &at)?,
            },
        });
    }
    let mut transitions = Vec::new();
    for (i, t) in j.transitions.iter().enumerate() {
        let at = format!("transition #{i}");
        transitions.push(Transition {
            source: t.source.clone(),
            target: t.target.clone(),
            guard: r.cond(&t.guard, &at)?,
            reset: ResetMap {
                matrix: r.rows(&t.reset_matrix, &at)?,
                offset: r.vec(&t.reset_offset, &at)?,
            },
            label: t.label.clone(),
        });
    }
    let s = &j.settings;
    let bundle = ModelBundle {
        automaton: HybridAutomaton {
            name: j.name,
            vars,
            locations,
            transitions,
            input_range: j.input_range.into_iter().map(interval).collect(),
        },
        settings: ReachSettings {
            horizon: s.horizon,
            step: s.step,
            max_jumps: s.max_jumps,
            forbidden: s
                .forbidden
                .as_ref()
                .map(|f| r.cond(f, "settings.forbidden"))
                .transpose()?,
            output_vars: (s.output_vars[0].clone(), s.output_vars[1].clone()),
            fixpoint_check: s.fixpoint,
        },
        initial: InitialCondition {
            location: j.initial.location,
            intervals: j.initial.intervals.into_iter().map(interval).collect(),
        },
        source_format: j.source_format,
    };
    bundle.check()?;
    Ok(bundle)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{parse_config, parse_spaceex};

    const XML: &str = r#"<sspaceex><component id="ball">
<param name="x" dynamics="any"/><param name="v" dynamics="any"/>
<param name="c" dynamics="const" value="0.75"/>
<location id="1" name="always"><invariant>x &gt;= 0</invariant><flow>x' == v &amp; v' == -9.81</flow></location>
<transition source="1" target="1"><guard>x == 0 &amp; v &lt;= 0</guard><assignment>v := -c*v</assignment></transition>
</component></sspaceex>"#;

    fn bundle() -> ModelBundle {
        let automaton = parse_spaceex(XML).unwrap();
        let cfg = parse_config(
            "initially = \"x >= 10 & x <= 10.2 & v == 0\"\ntime-horizon = 40\nforbidden = v >= 10.7\n",
            &automaton,
        )
        .unwrap();
        ModelBundle {
            automaton,
            settings: cfg.settings,
            initial: cfg.initial,
            source_format: SourceFormat::Spaceex,
        }
    }

    #[test]
    fn idempotent() {
        let s = write_json(&bundle());
        let back = read_json(&s).unwrap();
        assert_eq!(back, bundle());
        assert_eq!(write_json(&back), s);
    }

    #[test]
    fn lists_the_constant() {
        let v: serde_json::Value = serde_json::from_str(&write_json(&bundle())).unwrap();
        assert_eq!(v["constants"]["c"], serde_json::json!(0.75));
        assert_eq!(v["transitions"][0]["reset_matrix"][1][1], serde_json::json!("-c"));
    }

    #[test]
    fn wrong_field_type_is_a_schema_violation() {
        let s = write_json(&bundle()).replace("\"horizon\": 40.0", "\"horizon\": \"forty\"");
        assert!(matches!(read_json(&s), Err(ModelError::Schema(_))));
        let s = write_json(&bundle()).replace("\"fixpoint\": false", "\"fixpoint\": false, \"extra\": 1");
        assert!(matches!(read_json(&s), Err(ModelError::Schema(_))));
    }

    #[test]
    fn invalid_model_is_rejected() {
        let s = write_json(&bundle()).replace("\"target\": \"always\"", "\"target\": \"missing\"");
        assert!(matches!(read_json(&s), Err(ModelError::Invalid(_))));
    }
}
