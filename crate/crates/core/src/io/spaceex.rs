//! SpaceEx-style XML: one base component, no networks.
//!
//! Constants are `param` elements with `dynamics="const"` and a `value`
//! attribute. Inputs are `param`s with `controlled="false"`; their ranges
//! are written as bounds inside every location invariant.

use std::collections::BTreeMap;

use quick_xml::escape::{escape, resolve_predefined_entity};
use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::expr::{self, Affine, Atom, ExprKind};
use super::fmt::{fmt_affine, fmt_condition, fmt_number};
use super::{ModelError, TextPos};
use crate::ir::{
    validate, AffineDynamics, Coef, Condition, HybridAutomaton, Location, Relation, ResetMap, Transition, VariableTable,
};
use crate::setrep::Interval;

const NAMESPACE: &str = "http://www-verimag.imag.fr/xml-namespaces/sspaceex";

#[derive(Debug, Default)]
struct Element {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Element>,
    text: String,
    /// `(offset in text, offset in source)` for each text piece.
    text_map: Vec<(usize, usize)>,
    pos: usize,
}

impl Element {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    fn source_offset(&self, text_pos: usize) -> usize {
        match self.text_map.iter().rev().find(|(t, _)| *t <= text_pos) {
            Some((t, s)) => s + (text_pos - t),
            None => self.pos,
        }
    }

    fn child(&self, name: &str) -> Option<&Element> {
        self.children.iter().find(|c| c.name == name)
    }
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn at(&self, offset: usize) -> TextPos {
        TextPos::of_offset(self.text, offset)
    }

    fn malformed(&self, offset: usize, msg: impl Into<String>) -> ModelError {
        ModelError::XmlMalformed {
            at: self.at(offset),
            msg: msg.into(),
        }
    }

    fn unsupported(&self, offset: usize, msg: impl Into<String>) -> ModelError {
        ModelError::UnsupportedFeature {
            at: self.at(offset),
            msg: msg.into(),
        }
    }

    fn structure(&self, offset: usize, msg: impl Into<String>) -> ModelError {
        ModelError::Structure {
            at: self.at(offset),
            msg: msg.into(),
        }
    }

    fn expression(&self, el: &Element, context: String, e: expr::ExprError) -> ModelError {
        ModelError::Expression {
            at: self.at(el.source_offset(e.pos())),
            context,
            source: e,
        }
    }

    fn start(&self, e: &BytesStart<'_>, pos: usize) -> Result<Element, ModelError> {
        let name = String::from_utf8_lossy(e.local_name().as_ref()).into_owned();
        let mut attrs = Vec::new();
        for a in e.attributes() {
            let a = a.map_err(|err| self.malformed(pos, err.to_string()))?;
            let key = String::from_utf8_lossy(a.key.local_name().as_ref()).into_owned();
            let value = a
                .unescape_value()
                .map_err(|err| self.malformed(pos, err.to_string()))?
                .into_owned();
            attrs.push((key, value));
        }
        Ok(Element {
            name,
            attrs,
            pos,
            ..Element::default()
        })
    }

    fn tree(&self) -> Result<Element, ModelError> {
        let mut reader = Reader::from_str(self.text);
        let mut stack: Vec<Element> = vec![Element::default()];
        loop {
            let pos = reader.buffer_position() as usize;
            let ev = reader
                .read_event()
                .map_err(|e| self.malformed(reader.error_position() as usize, e.to_string()))?;
            let top = stack.last_mut().expect("root sentinel");
            match ev {
                Event::Start(e) => {
                    let el = self.start(&e, pos)?;
                    stack.push(el);
                }
                Event::Empty(e) => {
                    let el = self.start(&e, pos)?;
                    top.children.push(el);
                }
                Event::End(_) => {
                    let done = stack.pop().expect("matched end");
                    let Some(parent) = stack.last_mut() else {
                        return Err(self.malformed(pos, "unbalanced end tag"));
                    };
                    parent.children.push(done);
                }
                Event::Text(t) => {
                    let s = t.decode().map_err(|e| self.malformed(pos, e.to_string()))?;
                    top.text_map.push((top.text.len(), pos));
                    top.text.push_str(&s);
                }
                Event::CData(t) => {
                    let s = t.decode().map_err(|e| self.malformed(pos, e.to_string()))?;
                    top.text_map.push((top.text.len(), pos + "<![CDATA[".len()));
                    top.text.push_str(&s);
                }
                Event::GeneralRef(r) => {
                    let resolved = match r.resolve_char_ref() {
                        Ok(Some(c)) => c.to_string(),
                        Ok(None) => {
                            let name = r.decode().map_err(|e| self.malformed(pos, e.to_string()))?;
                            resolve_predefined_entity(&name)
                                .ok_or_else(|| self.malformed(pos, format!("unknown entity `&{name};`")))?
                                .to_string()
                        }
                        Err(e) => return Err(self.malformed(pos, e.to_string())),
                    };
                    top.text_map.push((top.text.len(), pos));
                    top.text.push_str(&resolved);
                }
                Event::Eof => break,
                _ => {}
            }
        }
        if stack.len() != 1 {
            return Err(self.malformed(self.text.len(), "unexpected end of document"));
        }
        let mut root = stack.pop().unwrap();
        match root.children.len() {
            1 => Ok(root.children.pop().unwrap()),
            0 => Err(self.malformed(0, "document has no root element")),
            _ => Err(self.malformed(root.children[1].pos, "more than one root element")),
        }
    }
}

enum ParamKind {
    State,
    Input,
    Constant(f64),
    Label,
}

fn param_kind(src: &Source<'_>, p: &Element) -> Result<(String, ParamKind), ModelError> {
    let name = p
        .attr("name")
        .ok_or_else(|| src.structure(p.pos, "param without a name"))?
        .to_string();
    for dim in ["d1", "d2"] {
        if p.attr(dim).is_some_and(|d| d != "1") {
            return Err(src.unsupported(p.pos, format!("matrix-valued param `{name}`")));
        }
    }
    match p.attr("type").unwrap_or("real") {
        "label" => {
            if p.attr("local") == Some("false") {
                return Err(src.unsupported(p.pos, format!("synchronization label `{name}`")));
            }
            Ok((name, ParamKind::Label))
        }
        "real" => match p.attr("dynamics").unwrap_or("any") {
            "const" => {
                let value = p
                    .attr("value")
                    .ok_or_else(|| src.structure(p.pos, format!("constant `{name}` needs a `value` attribute")))?;
                let v = value
                    .trim()
                    .parse::<f64>()
                    .map_err(|_| src.structure(p.pos, format!("constant `{name}`: bad value `{value}`")))?;
                Ok((name, ParamKind::Constant(v)))
            }
            "any" if p.attr("controlled") == Some("false") => Ok((name, ParamKind::Input)),
            "any" => Ok((name, ParamKind::State)),
            other => Err(src.unsupported(p.pos, format!("param dynamics `{other}`"))),
        },
        other => Err(src.unsupported(p.pos, format!("param type `{other}`"))),
    }
}

struct Ctx<'a> {
    src: Source<'a>,
    vars: VariableTable,
}

impl Ctx<'_> {
    fn atoms(&self, el: &Element, what: &str) -> Result<Vec<Atom>, ModelError> {
        let e = expr::parse_expression(&el.text, &self.vars).map_err(|e| self.src.expression(el, what.into(), e))?;
        expr::atoms(&e).map_err(|e| self.src.expression(el, what.into(), e))
    }

    fn misplaced(&self, el: &Element, what: &str, pos: usize, msg: String) -> ModelError {
        self.src
            .expression(el, what.into(), expr::ExprError::Misplaced { pos, msg })
    }

    /// Invariant text: state constraints plus per-input bounds.
    fn invariant(&self, el: Option<&Element>) -> Result<(Condition, Vec<Interval>), ModelError> {
        let m = self.vars.m();
        let mut ranges = vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); m];
        let Some(el) = el else {
            return Ok((Condition::truth(), ranges));
        };
        let mut cond = Condition::truth();
        for atom in self.atoms(el, "invariant")? {
            let inputs: Vec<usize> = atom
                .diff
                .terms
                .keys()
                .filter_map(|k| self.vars.input_index(k))
                .collect();
            if inputs.is_empty() {
                let c = expr::atom_to_constraint(&atom, &self.vars)
                    .map_err(|e| self.src.expression(el, "invariant".into(), e))?;
                cond.constraints.push(c);
                continue;
            }
            let (Some(k), Some(rhs), &[j]) = (
                atom.diff.terms.values().next().and_then(Coef::as_number),
                atom.diff.constant.neg().as_number(),
                &inputs[..],
            ) else {
                return Err(self.misplaced(
                    el,
                    "invariant",
                    atom.pos,
                    "input bounds must have the form `u <= number`".into(),
                ));
            };
            if atom.diff.terms.len() != 1 {
                return Err(self.misplaced(el, "invariant", atom.pos, "input bound mixes inputs and state".into()));
            }
            let v = rhs / k;
            let rel = if k < 0.0 {
                atom.relation.flipped()
            } else {
                atom.relation
            };
            let iv = &mut ranges[j];
            match rel {
                Relation::Le | Relation::Lt => iv.hi = iv.hi.min(v),
                Relation::Ge | Relation::Gt => iv.lo = iv.lo.max(v),
                Relation::Eq => *iv = iv.meet(&Interval::point(v)),
            }
        }
        Ok((cond, ranges))
    }

    fn flow(&self, el: Option<&Element>) -> Result<AffineDynamics, ModelError> {
        let (n, m) = (self.vars.n(), self.vars.m());
        let mut dyn_ = AffineDynamics::zero(n, m);
        let Some(el) = el else {
            return Ok(dyn_);
        };
        let mut seen = vec![false; n];
        for atom in self.atoms(el, "flow")? {
            if atom.relation != Relation::Eq {
                return Err(self.misplaced(el, "flow", atom.pos, "flows must be equalities".into()));
            }
            let (i, row) = self.solve_primed(el, "flow", &atom)?;
            if std::mem::replace(&mut seen[i], true) {
                return Err(self.misplaced(
                    el,
                    "flow",
                    atom.pos,
                    format!("second flow for `{}`", self.vars.state_vars[i]),
                ));
            }
            for (j, v) in self.vars.state_vars.iter().enumerate() {
                dyn_.a[i][j] = row.coef(v);
            }
            for (j, v) in self.vars.input_vars.iter().enumerate() {
                dyn_.b[i][j] = row.coef(v);
            }
            dyn_.c[i] = row.constant.clone();
        }
        Ok(dyn_)
    }

    /// Solves `k·x' + rest == 0` for `x'`; returns the state index and `−rest/k`.
    fn solve_primed(&self, el: &Element, what: &str, atom: &Atom) -> Result<(usize, Affine), ModelError> {
        let primed: Vec<&String> = atom.diff.terms.keys().filter(|k| k.ends_with('\'')).collect();
        let [p] = primed[..] else {
            return Err(self.misplaced(el, what, atom.pos, "expected exactly one primed variable".into()));
        };
        let name = p.trim_end_matches('\'');
        let i = self
            .vars
            .state_index(name)
            .expect("parser admits primed state vars only");
        let Some(k) = atom.diff.coef(p).as_number() else {
            return Err(self.misplaced(el, what, atom.pos, "symbolic factor on a primed variable".into()));
        };
        let mut rest = atom.diff.clone();
        rest.terms.remove(p.as_str());
        let scale = -1.0 / k;
        let row = Affine {
            terms: rest.terms.iter().map(|(n, c)| (n.clone(), c.scale(scale))).collect(),
            constant: rest.constant.scale(scale),
        };
        Ok((i, row))
    }

    fn reset(&self, el: Option<&Element>) -> Result<ResetMap, ModelError> {
        let n = self.vars.n();
        let mut reset = ResetMap::identity(n);
        let Some(el) = el else {
            return Ok(reset);
        };
        let what = "assignment";
        let e = expr::parse_expression(&el.text, &self.vars).map_err(|e| self.src.expression(el, what.into(), e))?;
        let mut seen = vec![false; n];
        for part in expr::conjuncts(&e) {
            let (i, row) = match &part.kind {
                ExprKind::Assign(lhs, rhs) => {
                    let ExprKind::Ident { name, .. } = &lhs.kind else {
                        return Err(self.misplaced(el, what, lhs.pos, "left of `:=` must be a variable".into()));
                    };
                    let Some(i) = self.vars.state_index(name) else {
                        return Err(self.misplaced(el, what, lhs.pos, format!("`{name}` is not a state variable")));
                    };
                    let row = expr::linearize(rhs).map_err(|e| self.src.expression(el, what.into(), e))?;
                    (i, row)
                }
                ExprKind::Compare(Relation::Eq, a, b) => {
                    let diff = expr::linearize(a)
                        .and_then(|x| expr::linearize(b).map(|y| (x, y)))
                        .map_err(|e| self.src.expression(el, what.into(), e))?;
                    let atom = Atom {
                        pos: part.pos,
                        diff: sub(&diff.0, &diff.1),
                        relation: Relation::Eq,
                    };
                    self.solve_primed(el, what, &atom)?
                }
                _ => {
                    return Err(self.misplaced(el, what, part.pos, "expected `x := expr` or `x' == expr`".into()));
                }
            };
            if let Some(bad) = row.terms.keys().find(|k| self.vars.state_index(k).is_none()) {
                return Err(self.misplaced(
                    el,
                    what,
                    part.pos,
                    format!("`{bad}` may not appear on the right of a reset"),
                ));
            }
            if std::mem::replace(&mut seen[i], true) {
                return Err(self.misplaced(
                    el,
                    what,
                    part.pos,
                    format!("`{}` is assigned twice", self.vars.state_vars[i]),
                ));
            }
            reset.matrix[i] = self.vars.state_vars.iter().map(|v| row.coef(v)).collect();
            reset.offset[i] = row.constant.clone();
        }
        Ok(reset)
    }
}

fn sub(a: &Affine, b: &Affine) -> Affine {
    let mut out = a.clone();
    for (k, v) in &b.terms {
        let s = out.coef(k).sub(v);
        if s.is_zero() {
            out.terms.remove(k);
        } else {
            out.terms.insert(k.clone(), s);
        }
    }
    out.constant = out.constant.sub(&b.constant);
    out
}

/// Parses the supported SpaceEx subset into a validated automaton.
pub fn parse_spaceex(xml_text: &str) -> Result<HybridAutomaton, ModelError> {
    let src = Source { text: xml_text };
    let root = src.tree()?;
    if root.name != "sspaceex" {
        return Err(src.structure(root.pos, format!("expected <sspaceex> root, found <{}>", root.name)));
    }
    let comps: Vec<&Element> = root.children.iter().filter(|c| c.name == "component").collect();
    let comp = match comps[..] {
        [c] => c,
        [] => return Err(src.structure(root.pos, "no component")),
        [_, second, ..] => {
            return Err(src.unsupported(second.pos, "more than one component (networks are not supported)"));
        }
    };
    let name = comp
        .attr("id")
        .ok_or_else(|| src.structure(comp.pos, "component without an id"))?
        .to_string();

    let mut vars = VariableTable::default();
    for el in &comp.children {
        match el.name.as_str() {
            "param" => match param_kind(&src, el)? {
                (n, ParamKind::State) => vars.state_vars.push(n),
                (n, ParamKind::Input) => vars.input_vars.push(n),
                (n, ParamKind::Constant(v)) => {
                    vars.constants.insert(n, v);
                }
                (_, ParamKind::Label) => {}
            },
            "bind" => return Err(src.unsupported(el.pos, "component instantiation (bind)")),
            "location" | "transition" | "note" => {}
            other => return Err(src.unsupported(el.pos, format!("element <{other}>"))),
        }
    }
    let ctx = Ctx { src, vars };
    let src = &ctx.src;

    let mut ids: BTreeMap<String, String> = BTreeMap::new();
    let mut locations = Vec::new();
    let mut ranges: Option<Vec<Interval>> = None;
    for el in comp.children.iter().filter(|c| c.name == "location") {
        let id = el
            .attr("id")
            .ok_or_else(|| src.structure(el.pos, "location without an id"))?;
        let lname = el.attr("name").unwrap_or(id).to_string();
        if ids.insert(id.to_string(), lname.clone()).is_some() {
            return Err(src.structure(el.pos, format!("duplicate location id `{id}`")));
        }
        let (invariant, r) = ctx.invariant(el.child("invariant"))?;
        ranges = Some(match ranges {
            None => r,
            Some(prev) => prev.iter().zip(&r).map(|(a, b)| a.hull(b)).collect(),
        });
        locations.push(Location {
            name: lname,
            invariant,
            dynamics: ctx.flow(el.child("flow"))?,
        });
    }

    let mut transitions = Vec::new();
    for el in comp.children.iter().filter(|c| c.name == "transition") {
        let end = |key: &str| -> Result<String, ModelError> {
            let id = el
                .attr(key)
                .ok_or_else(|| src.structure(el.pos, format!("transition without {key}")))?;
            ids.get(id)
                .cloned()
                .ok_or_else(|| src.structure(el.pos, format!("transition {key} `{id}` is not a location id")))
        };
        let guard = match el.child("guard") {
            None => Condition::truth(),
            Some(g) => Condition {
                constraints: ctx
                    .atoms(g, "guard")?
                    .iter()
                    .map(|a| expr::atom_to_constraint(a, &ctx.vars).map_err(|e| src.expression(g, "guard".into(), e)))
                    .collect::<Result<_, _>>()?,
            },
        };
        transitions.push(Transition {
            source: end("source")?,
            target: end("target")?,
            guard,
            reset: ctx.reset(el.child("assignment"))?,
            label: el.child("label").map(|l| l.text.trim().to_string()),
        });
    }

    let m = ctx.vars.m();
    let aut = HybridAutomaton {
        name,
        vars: ctx.vars,
        locations,
        transitions,
        input_range: ranges.unwrap_or_else(|| vec![Interval::new(f64::NEG_INFINITY, f64::INFINITY); m]),
    };
    let report = validate(&aut);
    if !report.is_empty() {
        return Err(ModelError::Invalid(report));
    }
    Ok(aut)
}

fn param_line(out: &mut String, name: &str, extra: &str) {
    out.push_str(&format!(
        "    <param name=\"{}\" type=\"real\" local=\"false\" d1=\"1\" d2=\"1\"{extra} />\n",
        escape(name)
    ));
}

/// SpaceEx-style XML for `aut`; deterministic.
pub fn emit_spaceex(aut: &HybridAutomaton) -> String {
    let vars = &aut.vars;
    let mut out = String::new();
    out.push_str("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n");
    out.push_str(&format!(
        "<sspaceex xmlns=\"{NAMESPACE}\" version=\"0.2\" math=\"SpaceEx\">\n"
    ));
    out.push_str(&format!("  <component id=\"{}\">\n", escape(aut.name.as_str())));
    for v in &vars.state_vars {
        param_line(&mut out, v, " dynamics=\"any\"");
    }
    for v in &vars.input_vars {
        param_line(&mut out, v, " dynamics=\"any\" controlled=\"false\"");
    }
    for (k, v) in &vars.constants {
        param_line(
            &mut out,
            k,
            &format!(" dynamics=\"const\" value=\"{}\"", fmt_number(*v)),
        );
    }
    let mut labels: Vec<&str> = aut.transitions.iter().filter_map(|t| t.label.as_deref()).collect();
    labels.sort_unstable();
    labels.dedup();
    for l in labels {
        out.push_str(&format!(
            "    <param name=\"{}\" type=\"label\" local=\"true\" />\n",
            escape(l)
        ));
    }

    let mut flow_names = vars.state_vars.clone();
    flow_names.extend(vars.input_vars.iter().cloned());
    for (id, loc) in aut.locations.iter().enumerate() {
        out.push_str(&format!(
            "    <location id=\"{}\" name=\"{}\">\n",
            id + 1,
            escape(loc.name.as_str())
        ));
        let mut inv = vec![fmt_condition(&loc.invariant, &vars.state_vars, " & ")];
        for (u, iv) in vars.input_vars.iter().zip(&aut.input_range) {
            inv.push(format!("{u} >= {} & {u} <= {}", fmt_number(iv.lo), fmt_number(iv.hi)));
        }
        inv.retain(|s| !s.is_empty());
        if !inv.is_empty() {
            out.push_str(&format!("      <invariant>{}</invariant>\n", escape(inv.join(" & "))));
        }
        let d = &loc.dynamics;
        let flows: Vec<String> = (0..vars.n())
            .map(|i| {
                let mut row = d.a[i].clone();
                row.extend(d.b[i].iter().cloned());
                format!("{}' == {}", vars.state_vars[i], fmt_affine(&row, &flow_names, &d.c[i]))
            })
            .collect();
        out.push_str(&format!("      <flow>{}</flow>\n", escape(flows.join(" & "))));
        out.push_str("    </location>\n");
    }
    for t in &aut.transitions {
        let id = |name: &str| aut.location_index(name).map_or(0, |i| i + 1);
        out.push_str(&format!(
            "    <transition source=\"{}\" target=\"{}\">\n",
            id(&t.source),
            id(&t.target)
        ));
        if let Some(l) = &t.label {
            out.push_str(&format!("      <label>{}</label>\n", escape(l.as_str())));
        }
        if !t.guard.is_true() {
            out.push_str(&format!(
                "      <guard>{}</guard>\n",
                escape(fmt_condition(&t.guard, &vars.state_vars, " & "))
            ));
        }
        let identity = ResetMap::identity(vars.n());
        let assigns: Vec<String> = (0..vars.n())
            .filter(|&i| t.reset.matrix[i] != identity.matrix[i] || !t.reset.offset[i].is_zero())
            .map(|i| {
                format!(
                    "{}' == {}",
                    vars.state_vars[i],
                    fmt_affine(&t.reset.matrix[i], &vars.state_vars, &t.reset.offset[i])
                )
            })
            .collect();
        if !assigns.is_empty() {
            out.push_str(&format!(
                "      <assignment>{}</assignment>\n",
                escape(assigns.join(" & "))
            ));
        }
        out.push_str("    </transition>\n");
    }
    out.push_str("  </component>\n</sspaceex>\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const BALL: &str = r#"<?xml version="1.0" encoding="iso-8859-1"?>
<sspaceex xmlns="http://www-verimag.imag.fr/xml-namespaces/sspaceex" version="0.2" math="SpaceEx">
  <component id="ball">
    <param name="x" type="real" local="false" d1="1" d2="1" dynamics="any" />
    <param name="v" type="real" local="false" d1="1" d2="1" dynamics="any" />
    <param name="hop" type="label" local="true" />
    <location id="1" name="always" x="200" y="100">
      <invariant>x &gt;= 0</invariant>
      <flow>x' == v &amp; v' == -9.81</flow>
    </location>
    <transition source="1" target="1">
      <label>hop</label>
      <guard>x &lt;= 0 &amp;&amp; v &lt; 0</guard>
      <assignment>v := -0.75*v</assignment>
    </transition>
  </component>
</sspaceex>
"#;

    #[test]
    fn ball_matches_hand_model() {
        let a = parse_spaceex(BALL).unwrap();
        assert_eq!(a.name, "ball");
        assert_eq!(a.vars.state_vars, ["x", "v"]);
        assert_eq!(a.locations.len(), 1);
        let d = &a.locations[0].dynamics;
        assert_eq!(d.a[0][1], Coef::num(1.0));
        assert_eq!(d.c[1], Coef::num(-9.81));
        let t = &a.transitions[0];
        assert_eq!(t.reset.matrix[1][1], Coef::num(-0.75));
        assert_eq!(t.reset.matrix[0][0], Coef::num(1.0));
        assert_eq!(t.guard.constraints.len(), 2);
        assert_eq!(t.label.as_deref(), Some("hop"));
    }

    #[test]
    fn empty_invariant_is_true() {
        let xml = BALL.replace("<invariant>x &gt;= 0</invariant>", "<invariant></invariant>");
        assert!(parse_spaceex(&xml).unwrap().locations[0].invariant.is_true());
    }

    #[test]
    fn round_trip_is_structural_identity() {
        let a = parse_spaceex(BALL).unwrap();
        let text = emit_spaceex(&a);
        assert_eq!(parse_spaceex(&text).unwrap(), a);
        assert_eq!(emit_spaceex(&parse_spaceex(&text).unwrap()), text);
    }

    #[test]
    fn networks_are_unsupported() {
        let xml = BALL.replace(
            "</sspaceex>",
            "<component id=\"sys\"><bind component=\"ball\" as=\"b\"/></component></sspaceex>",
        );
        assert!(matches!(
            parse_spaceex(&xml),
            Err(ModelError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn sync_labels_are_unsupported() {
        let xml = BALL.replace("type=\"label\" local=\"true\"", "type=\"label\" local=\"false\"");
        assert!(matches!(
            parse_spaceex(&xml),
            Err(ModelError::UnsupportedFeature { .. })
        ));
    }

    #[test]
    fn expression_errors_point_into_the_file() {
        let xml = BALL.replace("x' == v &amp;", "x' == v*x &amp;");
        let err = parse_spaceex(&xml).unwrap_err();
        let ModelError::Expression { at, .. } = err else {
            panic!("{err}");
        };
        assert_eq!(at.line, 9);
        assert_eq!(at.col, 20);
    }

    #[test]
    fn malformed_xml_is_reported() {
        let xml = BALL.replace("</location>", "");
        assert!(matches!(parse_spaceex(&xml), Err(ModelError::XmlMalformed { .. })));
    }

    #[test]
    fn constant_and_input_params() {
        let xml = BALL
            .replace(
                "<param name=\"hop\"",
                "<param name=\"c\" type=\"real\" local=\"false\" d1=\"1\" d2=\"1\" dynamics=\"const\" value=\"0.75\" />\n    \
                 <param name=\"u\" type=\"real\" local=\"false\" d1=\"1\" d2=\"1\" dynamics=\"any\" controlled=\"false\" />\n    <param name=\"hop\"",
            )
            .replace("x &gt;= 0</invariant>", "x &gt;= 0 &amp; u &lt;= 1 &amp; -u &lt;= 1</invariant>")
            .replace("v' == -9.81", "v' == -9.81 + 2*u")
            .replace("-0.75*v", "-c*v");
        let a = parse_spaceex(&xml).unwrap();
        assert_eq!(a.vars.constants["c"], 0.75);
        assert_eq!(a.input_range, vec![Interval::new(-1.0, 1.0)]);
        assert_eq!(a.locations[0].dynamics.b[1][0], Coef::num(2.0));
        assert_eq!(a.transitions[0].reset.matrix[1][1], Coef::symbol("c").neg());
        assert_eq!(parse_spaceex(&emit_spaceex(&a)).unwrap(), a);
    }
}
