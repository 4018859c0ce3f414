//! Domain model of an STPA analysis project.
//!
//! Everything the pipeline consumes is a plain value type here: hazards and
//! accidents, the controller's process model, unsafe control actions, safety
//! requirements, the analyst's context rules, the safe behaviour state machine
//! and the concretization used to turn symbolic test inputs into numbers.
//! Cross references are by identifier and are checked by [`validate`].

mod expr;
mod validate;

pub use expr::{eval_bool, BoolExpr, EvalError, Valuation};
pub use validate::{validate, Finding, ValidationReport};

use crate::verifier::Ltl;
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accident {
    pub id: String,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hazard {
    pub id: String,
    pub description: String,
    /// Accidents this hazard can lead to.
    pub accidents: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Controller {
    pub id: String,
    pub description: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VariableKind {
    Internal,
    InteractionInterface,
    Environmental,
}

impl VariableKind {
    pub fn keyword(self) -> &'static str {
        match self {
            VariableKind::Internal => "internal",
            VariableKind::InteractionInterface => "interaction",
            VariableKind::Environmental => "environmental",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "internal" => Some(VariableKind::Internal),
            "interaction" => Some(VariableKind::InteractionInterface),
            "environmental" => Some(VariableKind::Environmental),
            _ => None,
        }
    }

    /// Variables whose value is set from outside the controller.
    pub fn is_input(self) -> bool {
        !matches!(self, VariableKind::Internal)
    }
}

/// A process-model variable with a finite, ordered domain of symbolic labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessVariable {
    pub name: String,
    pub kind: VariableKind,
    pub domain: Vec<String>,
    /// For sub-state variables: the `(variable, value)` under which this one is active.
    pub parent: Option<(String, String)>,
}

impl ProcessVariable {
    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.domain.iter().position(|l| l == label)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlAction {
    pub name: String,
    pub controller: String,
    pub safety_critical: bool,
    /// Process-model variables that define this action's contexts, in table column order.
    pub relevant: Vec<String>,
}

/// The four hazardous-behaviour categories a control action is checked against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GuideType {
    NotProvided,
    ProvidedUnsafe,
    WrongTimingOrOrder,
    StoppedTooSoonOrAppliedTooLong,
}

impl GuideType {
    pub const ALL: [GuideType; 4] = [
        GuideType::NotProvided,
        GuideType::ProvidedUnsafe,
        GuideType::WrongTimingOrOrder,
        GuideType::StoppedTooSoonOrAppliedTooLong,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            GuideType::NotProvided => "not_provided",
            GuideType::ProvidedUnsafe => "provided_unsafe",
            GuideType::WrongTimingOrOrder => "wrong_timing",
            GuideType::StoppedTooSoonOrAppliedTooLong => "stopped_too_soon",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        GuideType::ALL.into_iter().find(|g| g.keyword() == s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnsafeControlAction {
    pub id: String,
    pub action: String,
    pub guide_type: GuideType,
    pub description: String,
    pub hazards: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SafetyRequirement {
    pub id: String,
    pub text: String,
    pub source_uca: Option<String>,
    pub refined_constraint: Option<BoolExpr>,
    /// Hand-written temporal formula; takes precedence over the generated template.
    pub ltl: Option<Ltl>,
}

/// Whether a context row describes the action being provided or withheld.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ContextKind {
    Providing,
    NotProviding,
}

impl ContextKind {
    pub fn keyword(self) -> &'static str {
        match self {
            ContextKind::Providing => "providing",
            ContextKind::NotProviding => "not_providing",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        match s {
            "providing" => Some(ContextKind::Providing),
            "not_providing" => Some(ContextKind::NotProviding),
            _ => None,
        }
    }
}

impl fmt::Display for ContextKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

/// Rows satisfying `forbidden` are dropped from context tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainRule {
    pub id: String,
    pub description: String,
    pub forbidden: BoolExpr,
}

/// Declarative encoding of the analyst's "hazardous?" judgement for one action and context kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardRule {
    pub id: String,
    pub action: String,
    pub kind: ContextKind,
    pub when: BoolExpr,
    pub hazards: Vec<String>,
    pub ssrs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transition {
    pub id: String,
    pub source: String,
    pub target: String,
    pub event: String,
    pub guard: Option<BoolExpr>,
    pub assignments: Vec<(String, String)>,
    pub emits: Option<String>,
    pub ssr_labels: Vec<String>,
}

/// The safe behaviour model: control states, data variables and guarded transitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Efsm {
    pub name: String,
    pub states: Vec<String>,
    pub initial_state: String,
    /// Initial valuation; its variables are exactly the ones the machine reads and writes.
    pub initial: Vec<(String, String)>,
    pub events: Vec<String>,
    pub transitions: Vec<Transition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ValueSet {
    /// Closed interval `[lo, hi]`.
    Interval(f64, f64),
    Literals(Vec<f64>),
}

impl ValueSet {
    pub fn contains(&self, x: f64) -> bool {
        match self {
            ValueSet::Interval(lo, hi) => *lo <= x && x <= *hi,
            ValueSet::Literals(vs) => vs.contains(&x),
        }
    }

    pub fn min(&self) -> f64 {
        match self {
            ValueSet::Interval(lo, _) => *lo,
            ValueSet::Literals(vs) => vs.iter().copied().fold(f64::INFINITY, f64::min),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            ValueSet::Interval(_, hi) => *hi,
            ValueSet::Literals(vs) => vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn is_empty(&self) -> bool {
        match self {
            ValueSet::Interval(lo, hi) => lo.partial_cmp(hi).is_none_or(|o| o.is_gt()),
            ValueSet::Literals(vs) => vs.is_empty(),
        }
    }

    /// Whether two sets share a concrete value.
    pub fn overlaps(&self, other: &ValueSet) -> bool {
        match (self, other) {
            (ValueSet::Interval(a, b), ValueSet::Interval(c, d)) => a <= d && c <= b,
            (ValueSet::Literals(vs), s) | (s, ValueSet::Literals(vs)) => {
                vs.iter().any(|x| s.contains(*x))
            }
        }
    }
}

/// Concrete values backing one symbolic label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub variable: String,
    pub label: String,
    pub values: ValueSet,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Concretization {
    pub mappings: Vec<LabelMapping>,
}

impl Concretization {
    pub fn lookup(&self, variable: &str, label: &str) -> Option<&ValueSet> {
        self.mappings
            .iter()
            .find(|m| m.variable == variable && m.label == label)
            .map(|m| &m.values)
    }

    /// Maps a concrete reading back to the label whose set contains it.
    pub fn abstract_value(&self, variable: &str, x: f64) -> Option<&str> {
        self.mappings
            .iter()
            .find(|m| m.variable == variable && m.values.contains(x))
            .map(|m| m.label.as_str())
    }

    pub fn covers_variable(&self, variable: &str) -> bool {
        self.mappings.iter().any(|m| m.variable == variable)
    }
}

/// A complete analysis input.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Project {
    pub accidents: Vec<Accident>,
    pub hazards: Vec<Hazard>,
    pub controllers: Vec<Controller>,
    pub variables: Vec<ProcessVariable>,
    pub actions: Vec<ControlAction>,
    pub ucas: Vec<UnsafeControlAction>,
    pub requirements: Vec<SafetyRequirement>,
    pub domain_rules: Vec<DomainRule>,
    pub hazard_rules: Vec<HazardRule>,
    pub efsm: Option<Efsm>,
    pub concretization: Concretization,
}

impl Project {
    pub fn variable(&self, name: &str) -> Option<&ProcessVariable> {
        self.variables.iter().find(|v| v.name == name)
    }

    pub fn action(&self, name: &str) -> Option<&ControlAction> {
        self.actions.iter().find(|a| a.name == name)
    }

    pub fn requirement(&self, id: &str) -> Option<&SafetyRequirement> {
        self.requirements.iter().find(|r| r.id == id)
    }

    pub fn requirement_mut(&mut self, id: &str) -> Option<&mut SafetyRequirement> {
        self.requirements.iter_mut().find(|r| r.id == id)
    }

    pub fn uca(&self, id: &str) -> Option<&UnsafeControlAction> {
        self.ucas.iter().find(|u| u.id == id)
    }

    /// Resolves the relevant variables of an action, skipping unknown names.
    pub fn relevant_variables(&self, action: &str) -> Vec<&ProcessVariable> {
        self.action(action)
            .map(|a| a.relevant.iter().filter_map(|n| self.variable(n)).collect())
            .unwrap_or_default()
    }

    /// The (action, kind) pairs that have at least one hazard rule, in first-rule order.
    pub fn analysed_contexts(&self) -> Vec<(String, ContextKind)> {
        let mut out: Vec<(String, ContextKind)> = Vec::new();
        for r in &self.hazard_rules {
            let key = (r.action.clone(), r.kind);
            if !out.contains(&key) {
                out.push(key);
            }
        }
        out
    }
}
