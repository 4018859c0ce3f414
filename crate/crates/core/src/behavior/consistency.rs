//! Structural check of the machine against hazardous context rows.
//!
//! Rows describe the context in which an action is issued, which for a
//! transition is the configuration after its assignments. A hazardous
//! providing row is violated by a reachable edge that emits the action and
//! lands in a configuration matching the row. A hazardous not-providing row is
//! violated by a reachable matching configuration that was not entered by
//! emitting the action and has no enabled transition that emits it while
//! staying inside the row.

use super::{Config, Configuration, Kripke, Machine};
use crate::context::{ContextRow, HazardVerdict};
use crate::model::ContextKind;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub action: String,
    pub kind: ContextKind,
    pub row: Vec<(String, String)>,
    pub hazards: Vec<String>,
    pub configuration: Configuration,
    /// Transition that issued the action (providing rows only).
    pub transition: Option<String>,
}

/// Resolved row: variable indices and value indices; `None` if the machine lacks a column.
fn resolve(m: &Machine, row: &ContextRow) -> Option<Vec<(usize, u16)>> {
    row.valuation
        .iter()
        .map(|(v, x)| {
            let vi = m.var_id(v)?;
            let xi = m.vars[vi].domain.iter().position(|l| l == x)?;
            Some((vi, xi as u16))
        })
        .collect()
}

fn matches(c: &Config, atoms: &[(usize, u16)]) -> bool {
    atoms.iter().all(|&(v, x)| c.values[v] == x)
}

pub fn check_model_consistency(k: &Kripke, rows: &[ContextRow]) -> Vec<Violation> {
    let m = &k.machine;
    let mut out = Vec::new();
    for row in rows {
        let HazardVerdict::Hazardous { hazards, .. } = &row.verdict else {
            continue;
        };
        let Some(action) = m.actions.iter().position(|a| *a == row.action) else {
            // the machine never issues the action: no providing violation possible
            if row.kind == ContextKind::NotProviding {
                if let Some(atoms) = resolve(m, row) {
                    for n in &k.nodes {
                        if matches(&n.config, &atoms) {
                            out.push(violation(m, row, hazards, &n.config, None));
                        }
                    }
                }
            }
            continue;
        };
        let Some(atoms) = resolve(m, row) else {
            continue;
        };
        match row.kind {
            ContextKind::Providing => {
                for edges in &k.succ {
                    for e in edges {
                        let Some(t) = e.transition else { continue };
                        let post = &k.nodes[e.target].config;
                        if m.transitions[t].emits == Some(action) && matches(post, &atoms) {
                            out.push(violation(m, row, hazards, post, Some(t)));
                        }
                    }
                }
            }
            ContextKind::NotProviding => {
                for (n, node) in k.nodes.iter().enumerate() {
                    if !matches(&node.config, &atoms) || node.last_emitted == Some(action) {
                        continue;
                    }
                    let remedied = k.succ[n].iter().any(|e| {
                        e.transition.is_some_and(|t| m.transitions[t].emits == Some(action))
                            && matches(&k.nodes[e.target].config, &atoms)
                    });
                    if !remedied {
                        out.push(violation(m, row, hazards, &node.config, None));
                    }
                }
            }
        }
    }
    let mut unique: Vec<Violation> = Vec::with_capacity(out.len());
    for v in out {
        if !unique.contains(&v) {
            unique.push(v);
        }
    }
    unique
}

fn violation(
    m: &Machine,
    row: &ContextRow,
    hazards: &std::collections::BTreeSet<String>,
    c: &Config,
    t: Option<usize>,
) -> Violation {
    Violation {
        action: row.action.clone(),
        kind: row.kind,
        row: row.valuation.clone(),
        hazards: hazards.iter().cloned().collect(),
        configuration: m.configuration(c),
        transition: t.map(|t| m.transitions[t].id.clone()),
    }
}
