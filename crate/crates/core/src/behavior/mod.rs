//! Executable semantics of the safe behaviour state machine.
//!
//! [`Machine`] is an index-based compilation of a validated [`Efsm`]. Events
//! are input-enabled: an event with no enabled transition leaves the
//! configuration unchanged. When several transitions are enabled the first in
//! declaration order fires; [`Machine::check_determinism`] reports every such
//! overlap.

mod consistency;
mod kripke;

pub use consistency::{check_model_consistency, Violation};
pub use kripke::{expand, KEdge, KNode, Kripke, DEFAULT_NODE_CAP, STUTTER};

use crate::model::{BoolExpr, Efsm, ProcessVariable, Project, VariableKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BehaviorError {
    #[error("project has no statemachine")]
    NoStateMachine,
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("statemachine refers to undeclared {what} `{name}`")]
    Undeclared { what: &'static str, name: String },
    #[error("state space exceeds {limit} nodes ({frontier} configurations still unexplored)")]
    ResourceExceeded { limit: usize, visited: usize, frontier: usize },
}

/// A runtime snapshot: control state plus a total valuation of the machine's variables.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Configuration {
    pub state: String,
    pub valuation: BTreeMap<String, String>,
}

/// Compact configuration: state index and one value index per machine variable.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Config {
    pub state: u16,
    pub values: Vec<u16>,
}

#[derive(Debug, Clone)]
pub struct MachineVar {
    pub name: String,
    pub kind: VariableKind,
    pub domain: Vec<String>,
}

/// Guard with variables and values resolved to indices.
#[derive(Debug, Clone)]
pub enum Guard {
    Const(bool),
    Eq(usize, u16),
    Not(Box<Guard>),
    And(Vec<Guard>),
    Or(Vec<Guard>),
}

impl Guard {
    pub fn eval(&self, values: &[u16]) -> bool {
        match self {
            Guard::Const(b) => *b,
            Guard::Eq(v, x) => values[*v] == *x,
            Guard::Not(g) => !g.eval(values),
            Guard::And(gs) => gs.iter().all(|g| g.eval(values)),
            Guard::Or(gs) => gs.iter().any(|g| g.eval(values)),
        }
    }

    fn vars(&self, out: &mut Vec<usize>) {
        match self {
            Guard::Const(_) => {}
            Guard::Eq(v, _) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Guard::Not(g) => g.vars(out),
            Guard::And(gs) | Guard::Or(gs) => gs.iter().for_each(|g| g.vars(out)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct MachineTransition {
    pub id: String,
    pub source: usize,
    pub target: usize,
    pub event: usize,
    pub guard: Option<Guard>,
    pub assignments: Vec<(usize, u16)>,
    /// Index into [`Machine::actions`].
    pub emits: Option<usize>,
    pub ssr_labels: Vec<String>,
}

/// Result of firing one event.
#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub config: Config,
    pub emitted: Option<usize>,
    pub transition: Option<usize>,
}

/// Two transitions from one state on one event whose guards can hold together.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conflict {
    pub state: String,
    pub event: String,
    pub first: String,
    pub second: String,
    /// A valuation (over the variables both guards read) enabling both.
    pub witness: Vec<(String, String)>,
}

#[derive(Debug, Clone)]
pub struct Machine {
    pub name: String,
    pub states: Vec<String>,
    pub vars: Vec<MachineVar>,
    pub events: Vec<String>,
    /// Distinct emitted control actions, in first-emission order.
    pub actions: Vec<String>,
    pub transitions: Vec<MachineTransition>,
    pub initial: Config,
    var_index: HashMap<String, usize>,
    event_index: HashMap<String, usize>,
    /// `[state][event]` -> transitions in declaration order.
    outgoing: Vec<Vec<Vec<usize>>>,
}

impl Machine {
    pub fn compile(project: &Project) -> Result<Machine, BehaviorError> {
        let efsm = project.efsm.as_ref().ok_or(BehaviorError::NoStateMachine)?;
        Machine::from_efsm(efsm, &project.variables)
    }

    /// Compiles an EFSM whose variables are declared in `variables`.
    pub fn from_efsm(efsm: &Efsm, variables: &[ProcessVariable]) -> Result<Machine, BehaviorError> {
        let undeclared = |what, name: &str| BehaviorError::Undeclared {
            what,
            name: name.to_string(),
        };
        let mut vars = Vec::new();
        let mut var_index = HashMap::new();
        let mut init_values = Vec::new();
        for (name, value) in &efsm.initial {
            let pv = variables
                .iter()
                .find(|v| &v.name == name)
                .ok_or_else(|| undeclared("variable", name))?;
            let idx = pv.index_of(value).ok_or_else(|| undeclared("value", value))?;
            var_index.insert(name.clone(), vars.len());
            vars.push(MachineVar {
                name: name.clone(),
                kind: pv.kind,
                domain: pv.domain.clone(),
            });
            init_values.push(idx as u16);
        }
        let state_index: HashMap<&str, usize> =
            efsm.states.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let event_index: HashMap<String, usize> =
            efsm.events.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let state_of = |s: &str| state_index.get(s).copied().ok_or_else(|| undeclared("state", s));

        let mut actions: Vec<String> = Vec::new();
        let mut transitions = Vec::new();
        let mut outgoing = vec![vec![Vec::new(); efsm.events.len()]; efsm.states.len()];
        for t in &efsm.transitions {
            let source = state_of(&t.source)?;
            let target = state_of(&t.target)?;
            let event = *event_index
                .get(&t.event)
                .ok_or_else(|| undeclared("event", &t.event))?;
            let guard = match &t.guard {
                Some(g) => Some(compile_guard(g, &vars, &var_index)?),
                None => None,
            };
            let mut assignments = Vec::new();
            for (v, x) in &t.assignments {
                let vi = *var_index.get(v).ok_or_else(|| undeclared("variable", v))?;
                let xi = vars[vi]
                    .domain
                    .iter()
                    .position(|l| l == x)
                    .ok_or_else(|| undeclared("value", x))?;
                assignments.push((vi, xi as u16));
            }
            let emits = t.emits.as_ref().map(|a| match actions.iter().position(|x| x == a) {
                Some(i) => i,
                None => {
                    actions.push(a.clone());
                    actions.len() - 1
                }
            });
            outgoing[source][event].push(transitions.len());
            transitions.push(MachineTransition {
                id: t.id.clone(),
                source,
                target,
                event,
                guard,
                assignments,
                emits,
                ssr_labels: t.ssr_labels.clone(),
            });
        }
        let initial = Config {
            state: state_of(&efsm.initial_state)? as u16,
            values: init_values,
        };
        Ok(Machine {
            name: efsm.name.clone(),
            states: efsm.states.clone(),
            vars,
            events: efsm.events.clone(),
            actions,
            transitions,
            initial,
            var_index,
            event_index,
            outgoing,
        })
    }

    pub fn event_id(&self, event: &str) -> Result<usize, BehaviorError> {
        self.event_index
            .get(event)
            .copied()
            .ok_or_else(|| BehaviorError::UnknownEvent(event.to_string()))
    }

    pub fn var_id(&self, name: &str) -> Option<usize> {
        self.var_index.get(name).copied()
    }

    pub fn transition_id(&self, id: &str) -> Option<usize> {
        self.transitions.iter().position(|t| t.id == id)
    }

    pub fn action_name(&self, a: Option<usize>) -> Option<&str> {
        a.map(|i| self.actions[i].as_str())
    }

    /// Transitions from the configuration's state on `event`, in declaration order.
    pub fn outgoing(&self, state: usize, event: usize) -> &[usize] {
        &self.outgoing[state][event]
    }

    /// Enabled transitions on an event index.
    pub fn enabled_idx(&self, config: &Config, event: usize) -> Vec<usize> {
        self.outgoing[config.state as usize][event]
            .iter()
            .copied()
            .filter(|&t| self.guard_holds(t, config))
            .collect()
    }

    pub fn enabled(&self, config: &Config, event: &str) -> Result<Vec<usize>, BehaviorError> {
        Ok(self.enabled_idx(config, self.event_id(event)?))
    }

    pub fn guard_holds(&self, t: usize, config: &Config) -> bool {
        self.transitions[t]
            .guard
            .as_ref()
            .is_none_or(|g| g.eval(&config.values))
    }

    /// The first enabled transition on `event`, if any.
    pub fn fire_idx(&self, config: &Config, event: usize) -> Option<usize> {
        self.outgoing[config.state as usize][event]
            .iter()
            .copied()
            .find(|&t| self.guard_holds(t, config))
    }

    /// Applies a transition's effect without checking its guard.
    pub fn apply(&self, config: &Config, t: usize) -> Config {
        let tr = &self.transitions[t];
        let mut next = Config {
            state: tr.target as u16,
            values: config.values.clone(),
        };
        for &(v, x) in &tr.assignments {
            next.values[v] = x;
        }
        next
    }

    pub fn step_idx(&self, config: &Config, event: usize) -> StepResult {
        match self.fire_idx(config, event) {
            Some(t) => StepResult {
                config: self.apply(config, t),
                emitted: self.transitions[t].emits,
                transition: Some(t),
            },
            None => StepResult {
                config: config.clone(),
                emitted: None,
                transition: None,
            },
        }
    }

    pub fn step(&self, config: &Config, event: &str) -> Result<StepResult, BehaviorError> {
        Ok(self.step_idx(config, self.event_id(event)?))
    }

    pub fn configuration(&self, c: &Config) -> Configuration {
        Configuration {
            state: self.states[c.state as usize].clone(),
            valuation: self
                .vars
                .iter()
                .zip(&c.values)
                .map(|(v, &x)| (v.name.clone(), v.domain[x as usize].clone()))
                .collect(),
        }
    }

    /// Inverse of [`Machine::configuration`]; `None` if anything fails to resolve.
    pub fn config_of(&self, c: &Configuration) -> Option<Config> {
        let state = self.states.iter().position(|s| *s == c.state)? as u16;
        let mut values = Vec::with_capacity(self.vars.len());
        for v in &self.vars {
            let label = c.valuation.get(&v.name)?;
            values.push(v.domain.iter().position(|l| l == label)? as u16);
        }
        Some(Config { state, values })
    }

    pub fn value_label(&self, c: &Config, var: usize) -> &str {
        &self.vars[var].domain[c.values[var] as usize]
    }

    /// Pairs of simultaneously enabled transitions, found by enumerating valuations of the guards' variables.
    pub fn check_determinism(&self) -> Vec<Conflict> {
        let mut out = Vec::new();
        for (s, per_event) in self.outgoing.iter().enumerate() {
            for (e, ts) in per_event.iter().enumerate() {
                for (i, &a) in ts.iter().enumerate() {
                    for &b in &ts[i + 1..] {
                        if let Some(w) = self.overlap(a, b) {
                            out.push(Conflict {
                                state: self.states[s].clone(),
                                event: self.events[e].clone(),
                                first: self.transitions[a].id.clone(),
                                second: self.transitions[b].id.clone(),
                                witness: w,
                            });
                        }
                    }
                }
            }
        }
        out
    }

    fn overlap(&self, a: usize, b: usize) -> Option<Vec<(String, String)>> {
        let mut vs = Vec::new();
        for t in [a, b] {
            if let Some(g) = &self.transitions[t].guard {
                g.vars(&mut vs);
            }
        }
        vs.sort_unstable();
        let mut values = self.initial.values.clone();
        let mut counter = vec![0u16; vs.len()];
        loop {
            for (k, &v) in vs.iter().enumerate() {
                values[v] = counter[k];
            }
            let probe = Config {
                state: self.transitions[a].source as u16,
                values: values.clone(),
            };
            if self.guard_holds(a, &probe) && self.guard_holds(b, &probe) {
                return Some(
                    vs.iter()
                        .map(|&v| (self.vars[v].name.clone(), self.value_label(&probe, v).to_string()))
                        .collect(),
                );
            }
            // odometer increment over the guard variables
            let mut k = 0;
            loop {
                if k == vs.len() {
                    return None;
                }
                counter[k] += 1;
                if (counter[k] as usize) < self.vars[vs[k]].domain.len() {
                    break;
                }
                counter[k] = 0;
                k += 1;
            }
        }
    }
}

fn compile_guard(
    e: &BoolExpr,
    vars: &[MachineVar],
    index: &HashMap<String, usize>,
) -> Result<Guard, BehaviorError> {
    let atom = |v: &str, x: &str| -> Result<Guard, BehaviorError> {
        let vi = *index.get(v).ok_or_else(|| BehaviorError::Undeclared {
            what: "variable",
            name: v.to_string(),
        })?;
        let xi = vars[vi]
            .domain
            .iter()
            .position(|l| l == x)
            .ok_or_else(|| BehaviorError::Undeclared {
                what: "value",
                name: x.to_string(),
            })?;
        Ok(Guard::Eq(vi, xi as u16))
    };
    Ok(match e {
        BoolExpr::Const(b) => Guard::Const(*b),
        BoolExpr::Eq(v, x) => atom(v, x)?,
        BoolExpr::Ne(v, x) => Guard::Not(Box::new(atom(v, x)?)),
        BoolExpr::Not(a) => Guard::Not(Box::new(compile_guard(a, vars, index)?)),
        BoolExpr::And(xs) => Guard::And(
            xs.iter()
                .map(|x| compile_guard(x, vars, index))
                .collect::<Result<_, _>>()?,
        ),
        BoolExpr::Or(xs) => Guard::Or(
            xs.iter()
                .map(|x| compile_guard(x, vars, index))
                .collect::<Result<_, _>>()?,
        ),
    })
}
