//! Context tables: enumeration or t-way sampling of process-model contexts,
//! domain-rule filtering, hazard evaluation and constraint refinement.

mod covering;

pub use covering::{
    combinations, covers, generate_covering_array, generate_covering_array_with, CoveringArray,
};

use crate::model::{
    BoolExpr, ContextKind, ControlAction, DomainRule, GuideType, HazardRule, ProcessVariable,
    Project, SafetyRequirement, UnsafeControlAction,
};
use serde::Serialize;
use std::collections::BTreeSet;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ContextError {
    #[error("no process model declared for action `{0}`")]
    NoProcessModel(String),
    #[error("strength {strength} exceeds the {variables} variables")]
    Strength { strength: usize, variables: usize },
    #[error("variable domain is empty")]
    EmptyDomain,
    #[error("no hazardous context row is tagged with requirement `{0}`")]
    NoTaggedRows(String),
    #[error("{0}")]
    Internal(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum HazardVerdict {
    Hazardous {
        hazards: BTreeSet<String>,
        ssrs: BTreeSet<String>,
    },
    NotHazardous,
    Undetermined,
}

impl HazardVerdict {
    pub fn is_hazardous(&self) -> bool {
        matches!(self, HazardVerdict::Hazardous { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            HazardVerdict::Hazardous { .. } => "yes",
            HazardVerdict::NotHazardous => "no",
            HazardVerdict::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContextRow {
    pub action: String,
    pub kind: ContextKind,
    /// Values of the action's relevant variables, in column order.
    pub valuation: Vec<(String, String)>,
    pub verdict: HazardVerdict,
}

impl ContextRow {
    pub fn value(&self, var: &str) -> Option<&str> {
        self.valuation
            .iter()
            .find(|(v, _)| v == var)
            .map(|(_, x)| x.as_str())
    }

    /// Conjunction of the row's atoms.
    pub fn as_expr(&self) -> BoolExpr {
        BoolExpr::all(
            self.valuation
                .iter()
                .map(|(v, x)| BoolExpr::eq(v, x))
                .collect(),
        )
    }
}

/// Full cartesian product of the variables' domains, last variable fastest.
pub fn enumerate_contexts(
    action: &ControlAction,
    kind: ContextKind,
    variables: &[&ProcessVariable],
) -> Result<Vec<ContextRow>, ContextError> {
    if variables.is_empty() {
        return Err(ContextError::NoProcessModel(action.name.clone()));
    }
    if variables.iter().any(|v| v.domain.is_empty()) {
        return Err(ContextError::EmptyDomain);
    }
    let mut rows = Vec::new();
    let mut idx = vec![0usize; variables.len()];
    loop {
        rows.push(row_at(action, kind, variables, &idx));
        let mut k = variables.len();
        loop {
            if k == 0 {
                return Ok(rows);
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < variables[k].domain.len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

pub(crate) fn row_at(
    action: &ControlAction,
    kind: ContextKind,
    variables: &[&ProcessVariable],
    idx: &[usize],
) -> ContextRow {
    ContextRow {
        action: action.name.clone(),
        kind,
        valuation: variables
            .iter()
            .zip(idx)
            .map(|(v, &i)| (v.name.clone(), v.domain[i].clone()))
            .collect(),
        verdict: HazardVerdict::Undetermined,
    }
}

/// Context rows from a covering array over the variables' domains.
pub fn sample_contexts(
    action: &ControlAction,
    kind: ContextKind,
    variables: &[&ProcessVariable],
    strength: usize,
    seed: u64,
) -> Result<(CoveringArray, Vec<ContextRow>), ContextError> {
    if variables.is_empty() {
        return Err(ContextError::NoProcessModel(action.name.clone()));
    }
    let domains: Vec<usize> = variables.iter().map(|v| v.domain.len()).collect();
    let array = generate_covering_array(&domains, strength, seed)?;
    let rows = array
        .rows
        .iter()
        .map(|r| row_at(action, kind, variables, r))
        .collect();
    Ok((array, rows))
}

/// A row dropped by a domain rule.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemovedRow {
    pub row: ContextRow,
    pub rule: String,
}

/// Drops rows on which some rule's forbidden expression holds; the first such rule is recorded.
pub fn apply_domain_rules(
    rows: Vec<ContextRow>,
    rules: &[DomainRule],
) -> (Vec<ContextRow>, Vec<RemovedRow>) {
    let mut kept = Vec::new();
    let mut removed = Vec::new();
    for row in rows {
        let hit = rules
            .iter()
            .find(|r| r.forbidden.eval(&row.valuation).unwrap_or(false));
        match hit {
            Some(r) => removed.push(RemovedRow {
                row,
                rule: r.id.clone(),
            }),
            None => kept.push(row),
        }
    }
    (kept, removed)
}

/// Sets each row's verdict from the hazard rules of its (action, kind).
pub fn evaluate_hazards(mut rows: Vec<ContextRow>, rules: &[HazardRule]) -> Vec<ContextRow> {
    for row in &mut rows {
        row.verdict = verdict_for(row, rules);
    }
    rows
}

fn verdict_for(row: &ContextRow, rules: &[HazardRule]) -> HazardVerdict {
    let applicable: Vec<&HazardRule> = rules
        .iter()
        .filter(|r| r.action == row.action && r.kind == row.kind)
        .collect();
    if applicable.is_empty() {
        return HazardVerdict::Undetermined;
    }
    let mut hazards = BTreeSet::new();
    let mut ssrs = BTreeSet::new();
    for r in applicable {
        if r.when.eval(&row.valuation).unwrap_or(false) {
            hazards.extend(r.hazards.iter().cloned());
            ssrs.extend(r.ssrs.iter().cloned());
        }
    }
    if hazards.is_empty() {
        HazardVerdict::NotHazardous
    } else {
        HazardVerdict::Hazardous { hazards, ssrs }
    }
}

fn tagged<'a>(rows: &'a [ContextRow], ssr: &'a str) -> impl Iterator<Item = &'a ContextRow> {
    rows.iter().filter(move |r| match &r.verdict {
        HazardVerdict::Hazardous { ssrs, .. } => ssrs.contains(ssr),
        _ => false,
    })
}

/// Disjunction over the requirement's hazardous rows of each row's conjunction.
pub fn refine_constraints(
    rows: &[ContextRow],
    requirement: &SafetyRequirement,
) -> Result<BoolExpr, ContextError> {
    let parts: Vec<BoolExpr> = tagged(rows, &requirement.id).map(ContextRow::as_expr).collect();
    if parts.is_empty() {
        return Err(ContextError::NoTaggedRows(requirement.id.clone()));
    }
    Ok(BoolExpr::any(parts))
}

/// A refined constraint plus the context it came from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Refinement {
    pub ssr: String,
    pub action: String,
    pub kind: ContextKind,
    pub constraint: BoolExpr,
    pub rows: usize,
    /// Derived from a sampled rather than a full table.
    pub sample_derived: bool,
}

/// Refines every requirement that has tagged rows. Requirements tagged from
/// several (action, kind) tables get one refinement per table.
pub fn refine_all(project: &Project, rows: &[ContextRow], sample_derived: bool) -> Vec<Refinement> {
    let mut out = Vec::new();
    for req in &project.requirements {
        let mut keys: Vec<(String, ContextKind)> = Vec::new();
        for r in tagged(rows, &req.id) {
            let key = (r.action.clone(), r.kind);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        for (action, kind) in keys {
            let subset: Vec<ContextRow> = rows
                .iter()
                .filter(|r| r.action == action && r.kind == kind)
                .cloned()
                .collect();
            if let Ok(constraint) = refine_constraints(&subset, req) {
                out.push(Refinement {
                    ssr: req.id.clone(),
                    action,
                    kind,
                    rows: tagged(&subset, &req.id).count(),
                    constraint,
                    sample_derived,
                });
            }
        }
    }
    out
}

/// One empty UCA template per (safety-critical action, guide type) pair.
pub fn build_uca_table(actions: &[ControlAction]) -> Vec<UnsafeControlAction> {
    let mut out = Vec::new();
    for a in actions.iter().filter(|a| a.safety_critical) {
        for g in GuideType::ALL {
            out.push(UnsafeControlAction {
                id: format!("UCA.{}.{}", a.name, g.keyword()),
                action: a.name.clone(),
                guide_type: g,
                description: String::new(),
                hazards: Vec::new(),
            });
        }
    }
    out
}

/// Full, evaluated tables for every analysed (action, kind) pair.
pub fn full_tables(project: &Project) -> Result<Vec<ContextRow>, ContextError> {
    let mut rows = Vec::new();
    for (action, kind) in project.analysed_contexts() {
        let a = project
            .action(&action)
            .ok_or_else(|| ContextError::NoProcessModel(action.clone()))?;
        let vars = project.relevant_variables(&action);
        let table = enumerate_contexts(a, kind, &vars)?;
        let (kept, _) = apply_domain_rules(table, &project.domain_rules);
        rows.extend(evaluate_hazards(kept, &project.hazard_rules));
    }
    Ok(rows)
}

/// CSV with one column per variable, then `kind,hazardous,hazards,ssrs,removed_by_rule`.
pub fn to_csv(
    variables: &[String],
    kept: &[ContextRow],
    removed: &[RemovedRow],
) -> Result<String, csv::Error> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<&str> = variables.iter().map(String::as_str).collect();
    header.extend(["kind", "hazardous", "hazards", "ssrs", "removed_by_rule"]);
    w.write_record(&header)?;
    let rows = kept
        .iter()
        .map(|r| (r, ""))
        .chain(removed.iter().map(|r| (&r.row, r.rule.as_str())));
    for (row, rule) in rows {
        let mut rec: Vec<String> = variables
            .iter()
            .map(|v| row.value(v).unwrap_or("").to_string())
            .collect();
        rec.push(row.kind.keyword().to_string());
        rec.push(if rule.is_empty() { row.verdict.label() } else { "" }.to_string());
        let (h, s) = match &row.verdict {
            HazardVerdict::Hazardous { hazards, ssrs } => (
                hazards.iter().cloned().collect::<Vec<_>>().join(";"),
                ssrs.iter().cloned().collect::<Vec<_>>().join(";"),
            ),
            _ => (String::new(), String::new()),
        };
        rec.push(h);
        rec.push(s);
        rec.push(rule.to_string());
        w.write_record(&rec)?;
    }
    let bytes = w.into_inner().map_err(|e| e.into_error())?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::VariableKind;

    fn var(name: &str, domain: &[&str]) -> ProcessVariable {
        ProcessVariable {
            name: name.into(),
            kind: VariableKind::Internal,
            domain: domain.iter().map(|s| s.to_string()).collect(),
            parent: None,
        }
    }

    fn action() -> ControlAction {
        ControlAction {
            name: "act".into(),
            controller: "C".into(),
            safety_critical: true,
            relevant: vec![],
        }
    }

    #[test]
    fn enumeration_counts_and_order() {
        let a = var("a", &["x", "y"]);
        let b = var("b", &["p", "q", "r"]);
        let rows = enumerate_contexts(&action(), ContextKind::Providing, &[&a]).unwrap();
        assert_eq!(rows.len(), 2);
        let rows = enumerate_contexts(&action(), ContextKind::Providing, &[&a, &b]).unwrap();
        let flat: Vec<String> = rows
            .iter()
            .map(|r| format!("{}{}", r.valuation[0].1, r.valuation[1].1))
            .collect();
        assert_eq!(flat, ["xp", "xq", "xr", "yp", "yq", "yr"]);
        assert!(rows.iter().all(|r| r.verdict == HazardVerdict::Undetermined));
        assert!(matches!(
            enumerate_contexts(&action(), ContextKind::Providing, &[]),
            Err(ContextError::NoProcessModel(_))
        ));
    }

    #[test]
    fn domain_rules() {
        let a = var("a", &["x", "y"]);
        let rows = enumerate_contexts(&action(), ContextKind::Providing, &[&a]).unwrap();
        let (kept, removed) = apply_domain_rules(rows.clone(), &[]);
        assert_eq!(kept, rows);
        assert!(removed.is_empty());
        let taut = DomainRule {
            id: "R".into(),
            description: "all".into(),
            forbidden: BoolExpr::Const(true),
        };
        let (kept, removed) = apply_domain_rules(rows, &[taut]);
        assert!(kept.is_empty());
        assert_eq!(removed.len(), 2);
        assert_eq!(removed[0].rule, "R");
    }

    #[test]
    fn verdicts() {
        let a = var("a", &["x", "y"]);
        let rows = enumerate_contexts(&action(), ContextKind::Providing, &[&a]).unwrap();
        assert!(evaluate_hazards(rows.clone(), &[])
            .iter()
            .all(|r| r.verdict == HazardVerdict::Undetermined));
        let rule = HazardRule {
            id: "HR".into(),
            action: "act".into(),
            kind: ContextKind::Providing,
            when: BoolExpr::eq("a", "y"),
            hazards: vec!["H1".into()],
            ssrs: vec!["S".into()],
        };
        let ev = evaluate_hazards(rows, &[rule]);
        assert_eq!(ev[0].verdict, HazardVerdict::NotHazardous);
        assert!(ev[1].verdict.is_hazardous());
    }

    #[test]
    fn refinement_of_two_rows() {
        let a = var("a", &["x", "y"]);
        let m = var("mode", &["cruise", "follow"]);
        let rows = enumerate_contexts(&action(), ContextKind::Providing, &[&a, &m]).unwrap();
        let rule = HazardRule {
            id: "HR".into(),
            action: "act".into(),
            kind: ContextKind::Providing,
            when: BoolExpr::eq("a", "x"),
            hazards: vec!["H1".into()],
            ssrs: vec!["S".into()],
        };
        let rows = evaluate_hazards(rows, &[rule]);
        let req = SafetyRequirement {
            id: "S".into(),
            text: "t".into(),
            source_uca: None,
            refined_constraint: None,
            ltl: None,
        };
        let e = refine_constraints(&rows, &req).unwrap();
        match &e {
            BoolExpr::Or(parts) => {
                assert_eq!(parts.len(), 2);
                assert!(parts.iter().all(|p| matches!(p, BoolExpr::And(xs) if xs.len() == 2)));
            }
            other => panic!("{other:?}"),
        }
        let other = SafetyRequirement { id: "T".into(), ..req };
        assert_eq!(
            refine_constraints(&rows, &other),
            Err(ContextError::NoTaggedRows("T".into()))
        );
    }

    #[test]
    fn uca_templates() {
        let mut b = action();
        b.name = "other".into();
        let t = build_uca_table(&[action(), b.clone()]);
        assert_eq!(t.len(), 8);
        let one = build_uca_table(&[action()]);
        let types: Vec<GuideType> = one.iter().map(|u| u.guide_type).collect();
        assert_eq!(types, GuideType::ALL.to_vec());
        b.safety_critical = false;
        assert!(build_uca_table(&[b]).is_empty());
    }
}
