use crate::model::*;
use std::fmt::Write;

fn quote(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
    out
}

fn value_set(v: &ValueSet) -> String {
    match v {
        ValueSet::Interval(lo, hi) => format!("[{lo}, {hi}]"),
        ValueSet::Literals(vs) => {
            let parts: Vec<String> = vs.iter().map(|x| x.to_string()).collect();
            format!("{{{}}}", parts.join(", "))
        }
    }
}

fn transition_line(t: &Transition) -> String {
    let mut s = format!("  transition {} {} -> {} : {}", t.id, t.source, t.target, t.event);
    if let Some(g) = &t.guard {
        let _ = write!(s, " [{g}]");
    }
    let mut effects: Vec<String> = t
        .assignments
        .iter()
        .map(|(v, x)| format!("{v} := {x}"))
        .collect();
    effects.extend(t.emits.iter().cloned());
    s.push_str(" /");
    if !effects.is_empty() {
        let _ = write!(s, " {}", effects.join(", "));
    }
    for l in &t.ssr_labels {
        let _ = write!(s, " @{l}");
    }
    s
}

/// Writes a project back in the `.stpa` format; parsing the result yields an equal project.
pub fn render_project(p: &Project) -> String {
    let mut out = String::new();
    for a in &p.accidents {
        let _ = writeln!(out, "accident {} {}", a.id, quote(&a.description));
    }
    for h in &p.hazards {
        let _ = writeln!(
            out,
            "hazard {} {} {{ accidents {} }}",
            h.id,
            quote(&h.description),
            h.accidents.join(" ")
        );
    }
    for c in &p.controllers {
        let _ = writeln!(out, "controller {} {}", c.id, quote(&c.description));
    }
    for v in &p.variables {
        let _ = write!(out, "variable {} {}", v.name, v.kind.keyword());
        if let Some((pv, pl)) = &v.parent {
            let _ = write!(out, " parent {pv} == {pl}");
        }
        let _ = writeln!(out, " {{ {} }}", v.domain.join(" "));
    }
    for a in &p.actions {
        let _ = write!(out, "action {} by {}", a.name, a.controller);
        if a.safety_critical {
            out.push_str(" critical");
        }
        let _ = writeln!(out, " {{ relevant {} }}", a.relevant.join(" "));
    }
    for u in &p.ucas {
        let _ = writeln!(
            out,
            "uca {} {} {} {} {{ hazards {} }}",
            u.id,
            u.action,
            u.guide_type.keyword(),
            quote(&u.description),
            u.hazards.join(" ")
        );
    }
    for r in &p.requirements {
        let _ = write!(out, "ssr {} {}", r.id, quote(&r.text));
        if r.source_uca.is_some() || r.refined_constraint.is_some() || r.ltl.is_some() {
            out.push_str(" {\n");
            if let Some(u) = &r.source_uca {
                let _ = writeln!(out, "  source {u}");
            }
            if let Some(c) = &r.refined_constraint {
                let _ = writeln!(out, "  constraint {c}");
            }
            if let Some(f) = &r.ltl {
                let _ = writeln!(out, "  ltl {}", quote(&f.to_string()));
            }
            out.push('}');
        }
        out.push('\n');
    }
    for r in &p.domain_rules {
        let _ = writeln!(
            out,
            "rule {} {} {{ forbid {} }}",
            r.id,
            quote(&r.description),
            r.forbidden
        );
    }
    for r in &p.hazard_rules {
        let _ = writeln!(
            out,
            "hazard-rule {} {} {} {{\n  when {}\n  hazards {}\n  ssrs {}\n}}",
            r.id,
            r.action,
            r.kind.keyword(),
            r.when,
            r.hazards.join(" "),
            r.ssrs.join(" ")
        );
    }
    if let Some(m) = &p.efsm {
        let _ = writeln!(out, "statemachine {} {{", m.name);
        let _ = writeln!(out, "  states {}", m.states.join(" "));
        let init: Vec<String> = m.initial.iter().map(|(v, x)| format!("{v} = {x}")).collect();
        let _ = writeln!(out, "  initial {} {{ {} }}", m.initial_state, init.join(", "));
        let _ = writeln!(out, "  events {}", m.events.join(" "));
        for t in &m.transitions {
            let _ = writeln!(out, "{}", transition_line(t));
        }
        out.push_str("}\n");
    }
    let mut vars: Vec<&str> = Vec::new();
    for m in &p.concretization.mappings {
        if !vars.contains(&m.variable.as_str()) {
            vars.push(&m.variable);
        }
    }
    for v in vars {
        let _ = writeln!(out, "concretize {v} {{");
        for m in p.concretization.mappings.iter().filter(|m| m.variable == v) {
            let _ = writeln!(out, "  {} {}", m.label, value_set(&m.values));
        }
        out.push_str("}\n");
    }
    out
}
