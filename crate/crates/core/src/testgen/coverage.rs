//! Coverage measurement and duplicate removal.

use super::{replay_case, IntegrityError, Polarity, TestSuite};
use crate::behavior::{Kripke, Machine};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

/// Items that some path of the machine can cover.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Reachable {
    pub states: BTreeSet<usize>,
    pub transitions: BTreeSet<usize>,
    pub pairs: BTreeSet<(usize, usize)>,
    pub events: BTreeSet<usize>,
}

impl Reachable {
    pub fn from_kripke(k: &Kripke) -> Self {
        let mut r = Reachable::default();
        r.states.insert(k.nodes[0].config.state as usize);
        let mut incoming: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); k.nodes.len()];
        for edges in &k.succ {
            for e in edges {
                if let (Some(t), Some(ev)) = (e.transition, e.event) {
                    r.transitions.insert(t);
                    r.events.insert(ev);
                    r.states.insert(k.nodes[e.target].config.state as usize);
                    incoming[e.target].insert(t);
                }
            }
        }
        for (n, edges) in k.succ.iter().enumerate() {
            for e in edges {
                if let Some(t) = e.transition {
                    for &a in &incoming[n] {
                        r.pairs.insert((a, t));
                    }
                }
            }
        }
        r
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Metric {
    pub covered: usize,
    pub total: usize,
    /// Items some path can reach, when known.
    pub reachable: Option<usize>,
}

impl Metric {
    pub fn percent(&self) -> f64 {
        pct(self.covered, self.total)
    }

    /// Coverage relative to reachable items (falls back to the total).
    pub fn reachable_percent(&self) -> f64 {
        pct(self.covered, self.reachable.unwrap_or(self.total))
    }
}

fn pct(a: usize, b: usize) -> f64 {
    if b == 0 {
        100.0
    } else {
        100.0 * a as f64 / b as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub states: Metric,
    pub transitions: Metric,
    pub transition_pairs: Metric,
    /// Input events exercised.
    pub actions: Metric,
}

/// Covered item sets of a suite, recomputed by replay.
#[derive(Debug, Clone, Default, PartialEq)]
pub(crate) struct Covered {
    pub states: BTreeSet<usize>,
    pub transitions: BTreeSet<usize>,
    pub pairs: BTreeSet<(usize, usize)>,
    pub events: BTreeSet<usize>,
}

pub(crate) fn covered(suite: &TestSuite, m: &Machine) -> Result<Covered, IntegrityError> {
    let mut c = Covered::default();
    for case in &suite.cases {
        let fired = replay_case(m, case)?;
        if !case.steps.is_empty() {
            c.states.insert(m.initial.state as usize);
        }
        let mut prev: Option<usize> = None;
        for t in fired {
            if let Some(t) = t {
                let tr = &m.transitions[t];
                c.transitions.insert(t);
                c.events.insert(tr.event);
                c.states.insert(tr.target);
                if let Some(p) = prev {
                    c.pairs.insert((p, t));
                }
            }
            prev = t;
        }
    }
    Ok(c)
}

/// All `(a, b)` with `target(a) == source(b)`.
pub fn all_pairs(m: &Machine) -> usize {
    m.transitions
        .iter()
        .map(|a| m.transitions.iter().filter(|b| b.source == a.target).count())
        .sum()
}

/// Exact coverage of a suite; `reachable` adds the reachable denominators.
pub fn measure(
    suite: &TestSuite,
    m: &Machine,
    reachable: Option<&Reachable>,
) -> Result<CoverageReport, IntegrityError> {
    let c = covered(suite, m)?;
    let metric = |covered: usize, total: usize, r: Option<usize>| Metric {
        covered,
        total,
        reachable: r,
    };
    Ok(CoverageReport {
        states: metric(c.states.len(), m.states.len(), reachable.map(|r| r.states.len())),
        transitions: metric(
            c.transitions.len(),
            m.transitions.len(),
            reachable.map(|r| r.transitions.len()),
        ),
        transition_pairs: metric(c.pairs.len(), all_pairs(m), reachable.map(|r| r.pairs.len())),
        actions: metric(c.events.len(), m.events.len(), reachable.map(|r| r.events.len())),
    })
}

/// Removes exact duplicates and cases whose steps are a prefix of another
/// case of the same polarity. The first of several identical cases is kept.
pub fn dedup(suite: &TestSuite) -> TestSuite {
    let cases = &suite.cases;
    let subsumed = |i: usize| {
        cases.iter().enumerate().any(|(j, other)| {
            j != i
                && other.polarity == cases[i].polarity
                && other.steps.starts_with(&cases[i].steps)
                && (other.steps.len() > cases[i].steps.len() || j < i)
        })
    };
    let kept = (0..cases.len())
        .filter(|&i| cases[i].polarity == Polarity::MustNotReproduce || !subsumed(i))
        .map(|i| cases[i].clone())
        .collect();
    TestSuite {
        cases: kept,
        ..suite.clone()
    }
}
