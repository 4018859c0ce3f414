//! Explicit-state expansion of a machine into a Kripke structure.

use super::{BehaviorError, Config, Configuration, Machine};
use crate::verifier::Prop;
use std::collections::{HashMap, VecDeque};
use std::fmt::Write;

pub const DEFAULT_NODE_CAP: usize = 1_000_000;

/// Reserved event name of deadlock self-loops.
pub const STUTTER: &str = "stutter";

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct KNode {
    pub config: Config,
    /// Action emitted on the step into this node; `None` at the initial node.
    pub last_emitted: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KEdge {
    pub target: usize,
    /// `None` for a stutter self-loop.
    pub event: Option<usize>,
    pub transition: Option<usize>,
}

/// Reachable configurations of a machine. Node 0 is initial.
#[derive(Debug, Clone)]
pub struct Kripke {
    pub machine: Machine,
    pub nodes: Vec<KNode>,
    pub succ: Vec<Vec<KEdge>>,
    /// BFS parent edge `(node, edge index)` of each node, used for shortest prefixes.
    pub parent: Vec<Option<(usize, usize)>>,
}

/// Breadth-first closure from the initial configuration under all events.
pub fn expand(machine: &Machine, node_cap: usize) -> Result<Kripke, BehaviorError> {
    let start = KNode {
        config: machine.initial.clone(),
        last_emitted: None,
    };
    let mut index: HashMap<KNode, usize> = HashMap::new();
    let mut nodes = vec![start.clone()];
    let mut parent = vec![None];
    let mut succ: Vec<Vec<KEdge>> = Vec::new();
    index.insert(start, 0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(n) = queue.pop_front() {
        let config = nodes[n].config.clone();
        let mut edges = Vec::new();
        for e in 0..machine.events.len() {
            let Some(t) = machine.fire_idx(&config, e) else {
                continue;
            };
            let next = KNode {
                config: machine.apply(&config, t),
                last_emitted: machine.transitions[t].emits,
            };
            let target = match index.get(&next) {
                Some(&i) => i,
                None => {
                    if nodes.len() >= node_cap {
                        return Err(BehaviorError::ResourceExceeded {
                            limit: node_cap,
                            visited: nodes.len(),
                            frontier: queue.len() + 1,
                        });
                    }
                    let i = nodes.len();
                    index.insert(next.clone(), i);
                    nodes.push(next);
                    parent.push(Some((n, edges.len())));
                    queue.push_back(i);
                    i
                }
            };
            edges.push(KEdge {
                target,
                event: Some(e),
                transition: Some(t),
            });
        }
        if edges.is_empty() {
            edges.push(KEdge {
                target: n,
                event: None,
                transition: None,
            });
        }
        if succ.len() <= n {
            succ.resize(n + 1, Vec::new());
        }
        succ[n] = edges;
    }
    Ok(Kripke {
        machine: machine.clone(),
        nodes,
        succ,
        parent,
    })
}

impl Kripke {
    pub fn num_edges(&self) -> usize {
        self.succ.iter().map(Vec::len).sum()
    }

    pub fn state_name(&self, n: usize) -> &str {
        &self.machine.states[self.nodes[n].config.state as usize]
    }

    pub fn emitted_name(&self, n: usize) -> &str {
        self.machine
            .action_name(self.nodes[n].last_emitted)
            .unwrap_or("none")
    }

    pub fn event_name(&self, e: &KEdge) -> &str {
        e.event.map_or(STUTTER, |i| self.machine.events[i].as_str())
    }

    pub fn configuration(&self, n: usize) -> Configuration {
        self.machine.configuration(&self.nodes[n].config)
    }

    /// Truth of an atomic proposition at a node. Unknown subjects are false.
    pub fn holds(&self, n: usize, p: &Prop) -> bool {
        match p {
            Prop::Named(s) => self.state_name(n) == s,
            Prop::Eq { subject, value } => match subject.as_str() {
                "state" => self.state_name(n) == value,
                "emits" => self.emitted_name(n) == value,
                var => self.machine.var_id(var).is_some_and(|v| {
                    self.machine.value_label(&self.nodes[n].config, v) == value
                }),
            },
        }
    }

    /// Whether a proposition names a known subject and value.
    pub fn declares(&self, p: &Prop) -> bool {
        let m = &self.machine;
        match p {
            Prop::Named(s) => m.states.contains(s),
            Prop::Eq { subject, value } => match subject.as_str() {
                "state" => m.states.contains(value),
                "emits" => value == "none" || m.actions.contains(value),
                var => m
                    .var_id(var)
                    .is_some_and(|v| m.vars[v].domain.contains(value)),
            },
        }
    }

    /// Shortest edge path from the initial node, as `(node, edge index)` pairs.
    pub fn path_to(&self, n: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut cur = n;
        while let Some((p, e)) = self.parent[cur] {
            out.push((p, e));
            cur = p;
        }
        out.reverse();
        out
    }

    /// Graph interchange text: `node` lines with propositions, then `edge` lines.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for n in 0..self.nodes.len() {
            let _ = write!(out, "node {n} state={}", self.state_name(n));
            for (v, x) in self.configuration(n).valuation {
                let _ = write!(out, " {v}={x}");
            }
            let _ = writeln!(out, " emits={}", self.emitted_name(n));
        }
        for (n, edges) in self.succ.iter().enumerate() {
            for e in edges {
                let t = e
                    .transition
                    .map_or("-", |t| self.machine.transitions[t].id.as_str());
                let _ = writeln!(out, "edge {n} {} {} {t}", self.event_name(e), e.target);
            }
        }
        out
    }
}
