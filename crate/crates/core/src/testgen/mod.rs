//! Safety-based test generation from the behaviour model.
//!
//! Suites come from coverage-driven traversal ([`generate`]) and from model
//! checking counterexamples ([`from_counterexample`]). Every case records the
//! fired transition of each step so it can be replayed against the machine;
//! coverage ([`measure`]) is always recomputed from the steps.

mod concrete;
mod coverage;
mod generate;
mod trace;

pub use concrete::{concretize, ConcreteScript, ConcreteStep, ConcretizeError};
pub use coverage::{dedup, measure, CoverageReport, Metric, Reachable};
pub use generate::{generate, generate_with, GenerateOptions};
pub use trace::{traceability, TraceabilityMatrix};

use crate::behavior::{Config, Machine};
use crate::verifier::Counterexample;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Criterion {
    AllStates,
    AllTransitions,
    AllTransitionPairs,
    AllActions,
}

impl Criterion {
    pub const ALL: [Criterion; 4] = [
        Criterion::AllStates,
        Criterion::AllTransitions,
        Criterion::AllTransitionPairs,
        Criterion::AllActions,
    ];

    pub fn keyword(self) -> &'static str {
        match self {
            Criterion::AllStates => "states",
            Criterion::AllTransitions => "transitions",
            Criterion::AllTransitionPairs => "pairs",
            Criterion::AllActions => "actions",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Self> {
        Criterion::ALL.into_iter().find(|c| c.keyword() == s)
    }
}

impl fmt::Display for Criterion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestStep {
    pub event: String,
    /// Values set by the environment on this step (input variables only).
    pub inputs: BTreeMap<String, String>,
    pub expected_emission: Option<String>,
    pub expected_state: String,
    /// `None` for a stutter step, where nothing fires.
    pub transition: Option<String>,
    pub ssr_labels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Origin {
    Traversal { seed: u64 },
    Counterexample { requirement: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    MustReproduce,
    /// The steps describe forbidden behaviour; a correct system diverges from them.
    MustNotReproduce,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestCase {
    pub id: String,
    pub origin: Origin,
    pub polarity: Polarity,
    pub steps: Vec<TestStep>,
    pub covered_transitions: BTreeSet<String>,
    pub covered_ssrs: BTreeSet<String>,
}

impl TestCase {
    fn new(id: String, origin: Origin, polarity: Polarity, steps: Vec<TestStep>) -> Self {
        let covered_transitions = steps.iter().filter_map(|s| s.transition.clone()).collect();
        let covered_ssrs = steps.iter().flat_map(|s| s.ssr_labels.iter().cloned()).collect();
        TestCase {
            id,
            origin,
            polarity,
            steps,
            covered_transitions,
            covered_ssrs,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSuite {
    pub machine: String,
    pub seed: u64,
    pub criteria: Vec<Criterion>,
    pub budget: usize,
    pub cases: Vec<TestCase>,
    /// Obligations left uncovered, with the reason.
    pub shortfall: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("test {test}, step {step}: {message}")]
pub struct IntegrityError {
    pub test: String,
    pub step: usize,
    pub message: String,
}

/// The step record for firing transition `t` from `from`.
pub(crate) fn step_record(m: &Machine, from: &Config, t: usize) -> (TestStep, Config) {
    let tr = &m.transitions[t];
    let next = m.apply(from, t);
    let inputs = tr
        .assignments
        .iter()
        .filter(|(v, _)| m.vars[*v].kind.is_input())
        .map(|&(v, x)| (m.vars[v].name.clone(), m.vars[v].domain[x as usize].clone()))
        .collect();
    let step = TestStep {
        event: m.events[tr.event].clone(),
        inputs,
        expected_emission: m.action_name(tr.emits).map(str::to_string),
        expected_state: m.states[tr.target].clone(),
        transition: Some(tr.id.clone()),
        ssr_labels: tr.ssr_labels.clone(),
    };
    (step, next)
}

/// Replays a case on the machine from its initial configuration, returning the fired transitions.
pub fn replay_case(m: &Machine, case: &TestCase) -> Result<Vec<Option<usize>>, IntegrityError> {
    let err = |step: usize, message: String| IntegrityError {
        test: case.id.clone(),
        step,
        message,
    };
    let mut config = m.initial.clone();
    let mut fired = Vec::with_capacity(case.steps.len());
    for (i, s) in case.steps.iter().enumerate() {
        let Some(expected_t) = &s.transition else {
            if m.states[config.state as usize] != s.expected_state {
                return Err(err(i, format!("stutter step expects state {}", s.expected_state)));
            }
            fired.push(None);
            continue;
        };
        let e = m.event_id(&s.event).map_err(|e| err(i, e.to_string()))?;
        let r = m.step_idx(&config, e);
        let Some(t) = r.transition else {
            return Err(err(i, format!("event {} fires nothing", s.event)));
        };
        let (record, next) = step_record(m, &config, t);
        if &m.transitions[t].id != expected_t {
            return Err(err(
                i,
                format!("fired {} instead of {expected_t}", m.transitions[t].id),
            ));
        }
        if record != *s {
            return Err(err(i, "recorded step differs from the machine".into()));
        }
        config = next;
        fired.push(Some(t));
    }
    Ok(fired)
}

/// Directed test reproducing a counterexample: the prefix plus one pass of the cycle.
pub fn from_counterexample(
    m: &Machine,
    cex: &Counterexample,
    requirement: &str,
) -> Result<TestCase, IntegrityError> {
    let id = format!("CX-{requirement}");
    let mut config = m.initial.clone();
    let mut steps = Vec::new();
    for (i, ts) in cex.steps().enumerate() {
        let err = |message: String| IntegrityError {
            test: id.clone(),
            step: i,
            message,
        };
        match &ts.transition {
            None => steps.push(TestStep {
                event: ts.event.clone(),
                inputs: BTreeMap::new(),
                expected_emission: None,
                expected_state: m.states[config.state as usize].clone(),
                transition: None,
                ssr_labels: Vec::new(),
            }),
            Some(tid) => {
                let e = m.event_id(&ts.event).map_err(|e| err(e.to_string()))?;
                let t = m
                    .fire_idx(&config, e)
                    .filter(|&t| &m.transitions[t].id == tid)
                    .ok_or_else(|| err(format!("transition {tid} does not fire here")))?;
                let (record, next) = step_record(m, &config, t);
                steps.push(record);
                config = next;
            }
        }
    }
    Ok(TestCase::new(
        id,
        Origin::Counterexample {
            requirement: requirement.to_string(),
        },
        Polarity::MustNotReproduce,
        steps,
    ))
}
