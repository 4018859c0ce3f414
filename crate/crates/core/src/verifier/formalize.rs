//! Turning refined safety constraints into LTL.

use super::ltl::Ltl;
use crate::model::{BoolExpr, ContextKind, SafetyRequirement};
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FormalizeError {
    #[error("requirement `{0}` has neither a refined constraint nor an LTL override")]
    MissingConstraint(String),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum FormulaSource {
    /// Hand-written in the project file.
    Override,
    /// Generated from the refined constraint.
    Template,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Formalization {
    pub requirement: String,
    pub formula: Ltl,
    pub source: FormulaSource,
    pub warnings: Vec<String>,
}

/// Propositional LTL with the same meaning as a guard expression.
pub fn bool_to_ltl(e: &BoolExpr) -> Ltl {
    match e {
        BoolExpr::Const(true) => Ltl::True,
        BoolExpr::Const(false) => Ltl::False,
        BoolExpr::Eq(v, x) => Ltl::prop(v, x),
        BoolExpr::Ne(v, x) => Ltl::not(Ltl::prop(v, x)),
        BoolExpr::Not(a) => Ltl::not(bool_to_ltl(a)),
        BoolExpr::And(xs) => Ltl::all(xs.iter().map(bool_to_ltl)),
        BoolExpr::Or(xs) => Ltl::any(xs.iter().map(bool_to_ltl)),
    }
}

/// The template formula for a constraint.
///
/// Providing: `G (c -> !(emits == action))`. Not providing: `G (c -> F (emits == action))`.
pub fn template(constraint: &BoolExpr, action: &str, kind: ContextKind) -> Ltl {
    let c = bool_to_ltl(constraint);
    let emits = Ltl::prop("emits", action);
    let consequent = match kind {
        ContextKind::Providing => Ltl::not(emits),
        ContextKind::NotProviding => Ltl::finally(emits),
    };
    Ltl::globally(Ltl::implies(c, consequent))
}

/// The formula to check for a requirement. An override in the project wins over the template.
pub fn formalize_requirement(
    req: &SafetyRequirement,
    action: &str,
    kind: ContextKind,
) -> Result<Formalization, FormalizeError> {
    if let Some(f) = &req.ltl {
        return Ok(Formalization {
            requirement: req.id.clone(),
            formula: f.clone(),
            source: FormulaSource::Override,
            warnings: Vec::new(),
        });
    }
    let c = req
        .refined_constraint
        .as_ref()
        .ok_or_else(|| FormalizeError::MissingConstraint(req.id.clone()))?;
    let mut warnings = Vec::new();
    if c.atoms().is_empty() && c.eval(&Vec::new()) == Ok(false) {
        warnings.push(format!(
            "constraint of {} is unsatisfiable; the formula holds vacuously",
            req.id
        ));
    }
    Ok(Formalization {
        requirement: req.id.clone(),
        formula: template(c, action, kind),
        source: FormulaSource::Template,
        warnings,
    })
}
