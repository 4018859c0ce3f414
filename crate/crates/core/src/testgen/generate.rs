//! Coverage-driven traversal of the Kripke structure.

use super::{step_record, Criterion, Origin, Polarity, TestCase, TestSuite};
use crate::behavior::{expand, BehaviorError, Kripke, Machine, DEFAULT_NODE_CAP};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, HashMap};

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateOptions {
    pub criteria: Vec<Criterion>,
    pub seed: u64,
    /// Maximum number of test cases before deduplication.
    pub budget: usize,
    pub node_cap: usize,
}

impl Default for GenerateOptions {
    fn default() -> Self {
        GenerateOptions {
            criteria: Criterion::ALL.to_vec(),
            seed: 0,
            budget: 5000,
            node_cap: DEFAULT_NODE_CAP,
        }
    }
}

/// One coverage obligation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Goal {
    State(usize),
    Transition(usize),
    Pair(usize, usize),
    Event(usize),
}

impl Goal {
    fn describe(self, m: &Machine, reason: &str) -> String {
        match self {
            Goal::State(s) => format!("state {}: {reason}", m.states[s]),
            Goal::Transition(t) => format!("transition {}: {reason}", m.transitions[t].id),
            Goal::Pair(a, b) => {
                format!("pair {}->{}: {reason}", m.transitions[a].id, m.transitions[b].id)
            }
            Goal::Event(e) => format!("action {}: {reason}", m.events[e]),
        }
    }
}

/// Obligations of the chosen criteria over the whole machine, in criterion order.
fn goals(m: &Machine, criteria: &[Criterion]) -> Vec<Goal> {
    let mut out = Vec::new();
    for c in Criterion::ALL.into_iter().filter(|c| criteria.contains(c)) {
        match c {
            Criterion::AllStates => out.extend((0..m.states.len()).map(Goal::State)),
            Criterion::AllTransitions => out.extend((0..m.transitions.len()).map(Goal::Transition)),
            Criterion::AllTransitionPairs => {
                for (a, ta) in m.transitions.iter().enumerate() {
                    for (b, tb) in m.transitions.iter().enumerate() {
                        if tb.source == ta.target {
                            out.push(Goal::Pair(a, b));
                        }
                    }
                }
            }
            Criterion::AllActions => out.extend((0..m.events.len()).map(Goal::Event)),
        }
    }
    out
}

/// Fired edges out of a node as `(transition, target)`.
fn moves(k: &Kripke, n: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
    k.succ[n].iter().filter_map(|e| e.transition.map(|t| (t, e.target)))
}

/// The obligations a move satisfies.
fn satisfied(m: &Machine, last: Option<usize>, t: usize) -> impl Iterator<Item = Goal> {
    let tr = &m.transitions[t];
    [
        Some(Goal::State(tr.target)),
        Some(Goal::Transition(t)),
        last.map(|a| Goal::Pair(a, t)),
        Some(Goal::Event(tr.event)),
    ]
    .into_iter()
    .flatten()
}

pub fn generate(
    machine: &Machine,
    criteria: &[Criterion],
    seed: u64,
    budget: usize,
) -> Result<TestSuite, BehaviorError> {
    generate_with(
        machine,
        &GenerateOptions {
            criteria: criteria.to_vec(),
            seed,
            budget,
            ..GenerateOptions::default()
        },
    )
}

/// Generates one test per reachable obligation of the chosen criteria.
///
/// A single breadth-first tree is grown over (node, last transition) pairs,
/// visiting the moves of each pair in an order shuffled by the seed. The
/// test for an obligation is the tree path to the first move that satisfies
/// it, so tests share prefixes and [`super::dedup`] removes the redundant ones.
/// Obligations no path can satisfy, and those beyond the budget, are
/// reported in the shortfall.
pub fn generate_with(machine: &Machine, opts: &GenerateOptions) -> Result<TestSuite, BehaviorError> {
    let k = expand(machine, opts.node_cap)?;
    let m = &k.machine;
    let wanted = goals(m, &opts.criteria);

    // BFS tree over (node, last transition).
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let root = (0usize, None);
    let mut order = vec![root];
    let mut index: HashMap<(usize, Option<usize>), usize> = HashMap::from([(root, 0)]);
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    // First move satisfying each obligation: (tree vertex, transition).
    let mut witness: BTreeMap<Goal, (usize, usize)> = BTreeMap::new();
    let mut head = 0;
    while head < order.len() {
        let (node, last) = order[head];
        let mut mv: Vec<(usize, usize)> = moves(&k, node).collect();
        mv.shuffle(&mut rng);
        for (t, target) in mv {
            for g in satisfied(m, last, t) {
                witness.entry(g).or_insert((head, t));
            }
            let next = (target, Some(t));
            if let std::collections::hash_map::Entry::Vacant(slot) = index.entry(next) {
                slot.insert(order.len());
                order.push(next);
                parent.push(Some((head, t)));
            }
        }
        head += 1;
    }
    // The initial state needs only some first step.
    let init = m.initial.state as usize;
    if let Some(&(t, _)) = moves(&k, 0).collect::<Vec<_>>().first() {
        witness.insert(Goal::State(init), (0, t));
    }

    let mut cases = Vec::new();
    let mut shortfall = Vec::new();
    for g in wanted {
        let Some(&(v, t)) = witness.get(&g) else {
            shortfall.push(g.describe(m, "unreachable"));
            continue;
        };
        if cases.len() >= opts.budget {
            shortfall.push(g.describe(m, "budget exhausted"));
            continue;
        }
        let mut path = vec![t];
        let mut at = v;
        while let Some((p, pt)) = parent[at] {
            path.push(pt);
            at = p;
        }
        path.reverse();
        let mut config = m.initial.clone();
        let steps = path
            .into_iter()
            .map(|t| {
                let (step, next) = step_record(m, &config, t);
                config = next;
                step
            })
            .collect();
        cases.push(TestCase::new(
            format!("T{:03}", cases.len() + 1),
            Origin::Traversal { seed: opts.seed },
            Polarity::MustReproduce,
            steps,
        ));
    }

    Ok(TestSuite {
        machine: m.name.clone(),
        seed: opts.seed,
        criteria: opts.criteria.clone(),
        budget: opts.budget,
        cases,
        shortfall,
    })
}
