//! Flow*-style hybrid reachability text.

use std::fmt::Write;

use super::fmt::{fmt_affine, fmt_constraint, fmt_number};
use super::ModelBundle;
use crate::ir::{Condition, Relation, ResetMap};

fn closed(cond: &Condition, names: &[String]) -> Vec<String> {
    cond.constraints
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.relation = match c.relation {
                Relation::Lt => Relation::Le,
                Relation::Gt => Relation::Ge,
                r => r,
            };
            fmt_constraint(&c, names).replace("==", "=")
        })
        .collect()
}

/// Flow*-style model text; byte-identical for identical bundles.
pub fn emit_flowstar(bundle: &ModelBundle) -> String {
    let aut = &bundle.automaton;
    let s = &bundle.settings;
    let vars = &aut.vars;
    let names = &vars.state_vars;
    let mut o = String::new();
    let w = &mut o;
    let _ = writeln!(w, "hybrid reachability");
    let _ = writeln!(w, "{{");
    let _ = writeln!(w, "  state var {}", names.join(", "));
    if !vars.constants.is_empty() {
        let _ = writeln!(w, "\n  par\n  {{");
        for (k, v) in &vars.constants {
            let _ = writeln!(w, "    {k} = {}", fmt_number(*v));
        }
        let _ = writeln!(w, "  }}");
    }
    let _ = writeln!(w, "\n  setting\n  {{");
    let _ = writeln!(w, "    fixed steps {}", fmt_number(s.step));
    let _ = writeln!(w, "    time {}", fmt_number(s.horizon));
    let _ = writeln!(w, "    remainder estimation 1e-4");
    let _ = writeln!(w, "    identity precondition");
    let _ = writeln!(w, "    gnuplot interval {}, {}", s.output_vars.0, s.output_vars.1);
    let _ = writeln!(w, "    fixed orders 4");
    let _ = writeln!(w, "    cutoff 1e-15");
    let _ = writeln!(w, "    precision 53");
    let _ = writeln!(w, "    output {}", aut.name);
    let _ = writeln!(w, "    max jumps {}", s.max_jumps);
    let _ = writeln!(w, "    print on");
    let _ = writeln!(w, "  }}");

    let mut flow_names = names.clone();
    flow_names.extend(vars.input_vars.iter().cloned());
    let _ = writeln!(w, "\n  modes\n  {{");
    for (k, loc) in aut.locations.iter().enumerate() {
        if k > 0 {
            let _ = writeln!(w);
        }
        let _ = writeln!(w, "    {}\n    {{", loc.name);
        let _ = writeln!(w, "      lti ode\n      {{");
        let d = &loc.dynamics;
        for (i, v) in names.iter().enumerate() {
            let mut row = d.a[i].clone();
            row.extend(d.b[i].iter().cloned());
            let _ = writeln!(w, "        {v}' = {}", fmt_affine(&row, &flow_names, &d.c[i]));
        }
        for (u, iv) in vars.input_vars.iter().zip(&aut.input_range) {
            let _ = writeln!(w, "        {u} in [{}, {}]", fmt_number(iv.lo), fmt_number(iv.hi));
        }
        let _ = writeln!(w, "      }}");
        let _ = writeln!(w, "      inv\n      {{");
        for c in closed(&loc.invariant, names) {
            let _ = writeln!(w, "        {c}");
        }
        let _ = writeln!(w, "      }}");
        let _ = writeln!(w, "    }}");
    }
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w, "\n  jumps\n  {{");
    let identity = ResetMap::identity(names.len());
    for (k, t) in aut.transitions.iter().enumerate() {
        if k > 0 {
            let _ = writeln!(w);
        }
        let _ = writeln!(w, "    {} -> {}", t.source, t.target);
        let _ = writeln!(w, "    guard {{ {} }}", closed(&t.guard, names).join("   "));
        let assigns: Vec<String> = (0..names.len())
            .filter(|&i| t.reset.matrix[i] != identity.matrix[i] || !t.reset.offset[i].is_zero())
            .map(|i| {
                format!(
                    "{}' := {}",
                    names[i],
                    fmt_affine(&t.reset.matrix[i], names, &t.reset.offset[i])
                )
            })
            .collect();
        let _ = writeln!(w, "    reset {{ {} }}", assigns.join("   "));
        let _ = writeln!(w, "    interval aggregation");
    }
    let _ = writeln!(w, "  }}");

    let _ = writeln!(w, "\n  init\n  {{");
    let _ = writeln!(w, "    {}\n    {{", bundle.initial.location);
    for (v, iv) in names.iter().zip(&bundle.initial.intervals) {
        let _ = writeln!(w, "      {v} in [{}, {}]", fmt_number(iv.lo), fmt_number(iv.hi));
    }
    let _ = writeln!(w, "    }}");
    let _ = writeln!(w, "  }}");
    let _ = writeln!(w, "}}");

    if let Some(f) = &s.forbidden {
        let _ = writeln!(w, "\nunsafe\n{{");
        for (k, loc) in aut.locations.iter().enumerate() {
            if k > 0 {
                let _ = writeln!(w);
            }
            let _ = writeln!(w, "  {}\n  {{", loc.name);
            for c in closed(f, names) {
                let _ = writeln!(w, "    {c}");
            }
            let _ = writeln!(w, "  }}");
        }
        let _ = writeln!(w, "}}");
    }
    o
}
