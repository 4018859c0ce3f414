//! Checking LTL formulas over a Kripke structure.

use super::buchi::{translate, Buchi};
use super::lasso::eval_lasso;
use super::ltl::Ltl;
use crate::behavior::{Configuration, Kripke, STUTTER};
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::time::Instant;
use thiserror::Error;

/// One position of a trace: the node and the edge taken out of it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub node: usize,
    pub configuration: Configuration,
    /// Action emitted on the step into this node.
    pub emitted: Option<String>,
    pub event: String,
    pub transition: Option<String>,
}

/// A lasso: the cycle repeats forever after the prefix. The last cycle step
/// returns to the first cycle node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub prefix: Vec<TraceStep>,
    pub cycle: Vec<TraceStep>,
}

impl Counterexample {
    /// Index of the first cycle step within prefix ++ cycle.
    pub fn cycle_start(&self) -> usize {
        self.prefix.len()
    }

    pub fn steps(&self) -> impl Iterator<Item = &TraceStep> {
        self.prefix.iter().chain(&self.cycle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "result")]
pub enum CheckResult {
    Holds {
        /// The formula's antecedent never holds on a reachable node.
        vacuous: bool,
    },
    Violated {
        counterexample: Counterexample,
    },
    ResourceExceeded {
        limit: usize,
    },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Statistics {
    pub method: String,
    pub kripke_nodes: usize,
    pub automaton_states: usize,
    /// Nodes (or product states) visited by the search.
    pub visited: usize,
    pub millis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub requirement: String,
    pub formula: String,
    #[serde(flatten)]
    pub result: CheckResult,
    pub stats: Statistics,
}

impl Verdict {
    pub fn holds(&self) -> bool {
        matches!(self.result, CheckResult::Holds { .. })
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match &self.result {
            CheckResult::Violated { counterexample } => Some(counterexample),
            _ => None,
        }
    }

    pub fn for_requirement(mut self, id: &str) -> Self {
        self.requirement = id.to_string();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplayError {
    #[error("trace has an empty cycle")]
    EmptyCycle,
    #[error("trace does not start at the initial node")]
    WrongStart,
    #[error("step {index} refers to node {node}, which does not exist")]
    UnknownNode { index: usize, node: usize },
    #[error("step {index}: recorded configuration differs from node {node}")]
    ConfigurationMismatch { index: usize, node: usize },
    #[error("step {index}: no edge {from} --{event}--> {to}")]
    NotAnEdge {
        index: usize,
        from: usize,
        to: usize,
        event: String,
    },
    #[error("the trace satisfies the formula")]
    NotViolated,
}

fn trace_step(k: &Kripke, n: usize, edge: Option<usize>) -> TraceStep {
    let e = edge.map(|i| k.succ[n][i]);
    TraceStep {
        node: n,
        configuration: k.configuration(n),
        emitted: k.machine.action_name(k.nodes[n].last_emitted).map(str::to_string),
        event: e.map_or(STUTTER.to_string(), |e| k.event_name(&e).to_string()),
        transition: e
            .and_then(|e| e.transition)
            .map(|t| k.machine.transitions[t].id.clone()),
    }
}

/// `G p` with propositional `p`.
fn invariant_body(f: &Ltl) -> Option<&Ltl> {
    match f {
        Ltl::Globally(p) if p.is_propositional() => Some(p),
        _ => None,
    }
}

/// `G (a -> b)` is vacuous when no reachable node satisfies propositional `a`.
fn vacuous(k: &Kripke, f: &Ltl) -> bool {
    let Ltl::Globally(body) = f else { return false };
    let Ltl::Implies(a, _) = &**body else {
        return false;
    };
    a.is_propositional() && (0..k.nodes.len()).all(|n| !a.eval_state(&|p| k.holds(n, p)))
}

/// Breadth-first invariant check. A violation is reported with a shortest
/// prefix and a stutter cycle at the violating node.
pub fn check_invariant(k: &Kripke, predicate: &Ltl) -> Verdict {
    let start = Instant::now();
    let formula = Ltl::globally(predicate.clone());
    let mut stats = Statistics {
        method: "invariant".into(),
        kripke_nodes: k.nodes.len(),
        ..Default::default()
    };
    // nodes are stored in breadth-first order, so the first hit is a nearest one
    let bad = (0..k.nodes.len()).find(|&n| !predicate.eval_state(&|p| k.holds(n, p)));
    stats.visited = bad.map_or(k.nodes.len(), |n| n + 1);
    let result = match bad {
        None => CheckResult::Holds {
            vacuous: vacuous(k, &formula),
        },
        Some(n) => {
            let prefix = k
                .path_to(n)
                .into_iter()
                .map(|(p, e)| trace_step(k, p, Some(e)))
                .collect();
            let cycle = vec![trace_step(k, n, None)];
            CheckResult::Violated {
                counterexample: Counterexample { prefix, cycle },
            }
        }
    };
    stats.millis = start.elapsed().as_secs_f64() * 1e3;
    let v = Verdict {
        requirement: String::new(),
        formula: formula.to_string(),
        result,
        stats,
    };
    certify(k, &formula, &v);
    v
}

/// Checks `formula` on all paths from the initial node, exploring at most `cap` product states.
pub fn check_ltl(k: &Kripke, formula: &Ltl, cap: usize) -> Verdict {
    match invariant_body(formula) {
        Some(p) => check_invariant(k, p),
        None => check_ltl_product(k, formula, cap),
    }
}

/// The automaton-based check, without the invariant fast path.
pub fn check_ltl_product(k: &Kripke, formula: &Ltl, cap: usize) -> Verdict {
    let start = Instant::now();
    let aut = translate(&Ltl::not(formula.clone()));
    let mut stats = Statistics {
        method: "ndfs".into(),
        kripke_nodes: k.nodes.len(),
        automaton_states: aut.num_states(),
        ..Default::default()
    };
    let search = Ndfs::new(k, &aut, cap).run();
    stats.visited = search.visited;
    let result = match search.outcome {
        NdfsOutcome::NoCycle => CheckResult::Holds {
            vacuous: vacuous(k, formula),
        },
        NdfsOutcome::Capped => CheckResult::ResourceExceeded { limit: cap },
        NdfsOutcome::Lasso { prefix, cycle } => CheckResult::Violated {
            counterexample: Counterexample {
                prefix: prefix.into_iter().map(|(n, e)| trace_step(k, n, Some(e))).collect(),
                cycle: cycle.into_iter().map(|(n, e)| trace_step(k, n, Some(e))).collect(),
            },
        },
    };
    stats.millis = start.elapsed().as_secs_f64() * 1e3;
    let v = Verdict {
        requirement: String::new(),
        formula: formula.to_string(),
        result,
        stats,
    };
    certify(k, formula, &v);
    v
}

/// Every violation must replay; anything else is a checker bug.
fn certify(k: &Kripke, formula: &Ltl, v: &Verdict) {
    if let Some(cex) = v.counterexample() {
        if let Err(e) = replay(k, cex, formula) {
            panic!("counterexample for {formula} failed certification: {e}");
        }
    }
}

type PState = (usize, usize);

enum NdfsOutcome {
    NoCycle,
    Capped,
    /// `(kripke node, edge index)` pairs.
    Lasso {
        prefix: Vec<(usize, usize)>,
        cycle: Vec<(usize, usize)>,
    },
}

struct NdfsResult {
    outcome: NdfsOutcome,
    visited: usize,
}

struct Frame {
    state: PState,
    succs: Vec<(PState, usize)>,
    next: usize,
    /// Kripke edge index taken from the parent frame into this state.
    via: usize,
}

struct Ndfs<'a> {
    k: &'a Kripke,
    aut: &'a Buchi,
    cap: usize,
    visited: usize,
}

impl<'a> Ndfs<'a> {
    fn new(k: &'a Kripke, aut: &'a Buchi, cap: usize) -> Self {
        Ndfs {
            k,
            aut,
            cap,
            visited: 0,
        }
    }

    /// Product successors: the automaton reads the label of the node being left.
    fn succs(&self, (n, q): PState) -> Vec<(PState, usize)> {
        let mut out = Vec::new();
        for be in &self.aut.edges[q] {
            if !Buchi::enabled(be, &|p| self.k.holds(n, p)) {
                continue;
            }
            for (i, ke) in self.k.succ[n].iter().enumerate() {
                out.push(((ke.target, be.target), i));
            }
        }
        out
    }

    fn frame(&self, state: PState, via: usize) -> Frame {
        Frame {
            state,
            succs: self.succs(state),
            next: 0,
            via,
        }
    }

    fn path(frames: &[Frame]) -> Vec<(usize, usize)> {
        frames
            .windows(2)
            .map(|w| (w[0].state.0, w[1].via))
            .collect()
    }

    fn run(mut self) -> NdfsResult {
        let init = (0usize, 0usize);
        let mut outer_seen: HashSet<PState> = HashSet::from([init]);
        let mut inner_seen: HashSet<PState> = HashSet::new();
        self.visited = 1;
        let mut stack = vec![self.frame(init, usize::MAX)];
        loop {
            let Some(top) = stack.last_mut() else {
                return self.done(NdfsOutcome::NoCycle);
            };
            if top.next < top.succs.len() {
                let (t, via) = top.succs[top.next];
                top.next += 1;
                if outer_seen.insert(t) {
                    self.visited += 1;
                    if self.visited > self.cap {
                        return self.done(NdfsOutcome::Capped);
                    }
                    let f = self.frame(t, via);
                    stack.push(f);
                }
                continue;
            }
            // post-order: search for a cycle through accepting states
            if self.aut.accepting[top.state.1] {
                let seed = top.state;
                match self.inner(seed, &mut inner_seen) {
                    Ok(Some(cycle)) => {
                        let prefix = Self::path(&stack);
                        return self.done(NdfsOutcome::Lasso { prefix, cycle });
                    }
                    Ok(None) => {}
                    Err(()) => return self.done(NdfsOutcome::Capped),
                }
            }
            stack.pop();
        }
    }

    /// Depth-first search from `seed` for a path back to it.
    fn inner(
        &mut self,
        seed: PState,
        seen: &mut HashSet<PState>,
    ) -> Result<Option<Vec<(usize, usize)>>, ()> {
        let mut stack = vec![self.frame(seed, usize::MAX)];
        loop {
            let Some(top) = stack.last_mut() else {
                return Ok(None);
            };
            if top.next < top.succs.len() {
                let (t, via) = top.succs[top.next];
                top.next += 1;
                if t == seed {
                    let mut cycle = Self::path(&stack);
                    cycle.push((stack.last().unwrap().state.0, via));
                    return Ok(Some(cycle));
                }
                if seen.insert(t) {
                    self.visited += 1;
                    if self.visited > self.cap {
                        return Err(());
                    }
                    let f = self.frame(t, via);
                    stack.push(f);
                }
                continue;
            }
            stack.pop();
        }
    }

    fn done(self, outcome: NdfsOutcome) -> NdfsResult {
        NdfsResult {
            outcome,
            visited: self.visited,
        }
    }
}

/// Certifies a counterexample: it must be a path of `k` from the initial node
/// and its lasso word must violate `formula`.
///
/// A single stutter step as the cycle is also accepted when `formula` is
/// `G p` and `p` fails at that node; that pseudo-edge need not exist in `k`.
pub fn replay(k: &Kripke, cex: &Counterexample, formula: &Ltl) -> Result<(), ReplayError> {
    if cex.cycle.is_empty() {
        return Err(ReplayError::EmptyCycle);
    }
    let steps: Vec<&TraceStep> = cex.steps().collect();
    if steps[0].node != 0 {
        return Err(ReplayError::WrongStart);
    }
    for (i, s) in steps.iter().enumerate() {
        if s.node >= k.nodes.len() {
            return Err(ReplayError::UnknownNode { index: i, node: s.node });
        }
        if k.configuration(s.node) != s.configuration {
            return Err(ReplayError::ConfigurationMismatch { index: i, node: s.node });
        }
    }
    let cycle_start = cex.cycle_start();
    for (i, s) in steps.iter().enumerate() {
        let to = if i + 1 < steps.len() {
            steps[i + 1].node
        } else {
            steps[cycle_start].node
        };
        let real = k.succ[s.node].iter().any(|e| {
            e.target == to
                && k.event_name(e) == s.event
                && e.transition.map(|t| k.machine.transitions[t].id.as_str())
                    == s.transition.as_deref()
        });
        let pseudo_stutter = i == cycle_start
            && cex.cycle.len() == 1
            && s.event == STUTTER
            && s.transition.is_none()
            && to == s.node
            && invariant_body(formula)
                .is_some_and(|p| !p.eval_state(&|prop| k.holds(s.node, prop)));
        if !real && !pseudo_stutter {
            return Err(ReplayError::NotAnEdge {
                index: i,
                from: s.node,
                to,
                event: s.event.clone(),
            });
        }
    }
    let nodes: Vec<usize> = steps.iter().map(|s| s.node).collect();
    let satisfied = eval_lasso(formula, nodes.len(), cycle_start, &|i, p| k.holds(nodes[i], p));
    if satisfied {
        Err(ReplayError::NotViolated)
    } else {
        Ok(())
    }
}
