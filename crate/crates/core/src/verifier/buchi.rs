//! Tableau translation of LTL to a Büchi automaton with state acceptance.
//!
//! States of the tableau are sets of obligations in negation normal form.
//! Expanding a state produces one edge per consistent cover: the literals the
//! current letter must satisfy and the obligations that move to the successor.
//! Each `U` yields a transition acceptance set (edges where it is not left
//! pending). A level counter then degeneralizes the result.

use super::ltl::{Ltl, Prop};
use std::collections::{BTreeSet, HashMap, VecDeque};

/// A literal: proposition and required truth value.
pub type Literal = (Prop, bool);

#[derive(Debug, Clone, PartialEq)]
pub struct BuchiEdge {
    /// Conjunction of literals the letter read on this step must satisfy.
    pub guard: Vec<Literal>,
    pub target: usize,
}

/// Reachable part of the degeneralized automaton. State 0 is initial.
#[derive(Debug, Clone)]
pub struct Buchi {
    pub edges: Vec<Vec<BuchiEdge>>,
    pub accepting: Vec<bool>,
}

impl Buchi {
    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    /// Whether a letter (truth assignment given by `holds`) satisfies an edge guard.
    pub fn enabled(edge: &BuchiEdge, holds: &dyn Fn(&Prop) -> bool) -> bool {
        edge.guard.iter().all(|(p, v)| holds(p) == *v)
    }
}

type GenEdge = (Vec<Literal>, usize, Vec<bool>);

struct Cover {
    guard: BTreeSet<Literal>,
    next: BTreeSet<Ltl>,
    pending: BTreeSet<Ltl>,
}

fn expand(obligations: &BTreeSet<Ltl>) -> Vec<Cover> {
    let mut out = Vec::new();
    let todo: Vec<Ltl> = obligations.iter().cloned().collect();
    let start = Cover {
        guard: BTreeSet::new(),
        next: BTreeSet::new(),
        pending: BTreeSet::new(),
    };
    expand_rec(todo, BTreeSet::new(), start, &mut out);
    out
}

fn expand_rec(mut todo: Vec<Ltl>, mut done: BTreeSet<Ltl>, mut cur: Cover, out: &mut Vec<Cover>) {
    while let Some(f) = todo.pop() {
        if !done.insert(f.clone()) {
            continue;
        }
        match f {
            Ltl::True => {}
            Ltl::False => return,
            Ltl::Prop(p) => {
                if cur.guard.contains(&(p.clone(), false)) {
                    return;
                }
                cur.guard.insert((p, true));
            }
            Ltl::Not(inner) => {
                let Ltl::Prop(p) = *inner else {
                    unreachable!("formula not in negation normal form")
                };
                if cur.guard.contains(&(p.clone(), true)) {
                    return;
                }
                cur.guard.insert((p, false));
            }
            Ltl::And(a, b) => {
                todo.push(*a);
                todo.push(*b);
            }
            Ltl::Next(a) => {
                cur.next.insert(*a);
            }
            Ltl::Or(a, b) => {
                let mut left = todo.clone();
                left.push(*a);
                expand_rec(left, done.clone(), clone_cover(&cur), out);
                todo.push(*b);
            }
            Ltl::Until(ref a, ref b) => {
                let mut now = todo.clone();
                now.push((**b).clone());
                expand_rec(now, done.clone(), clone_cover(&cur), out);
                todo.push((**a).clone());
                cur.next.insert(f.clone());
                cur.pending.insert(f.clone());
            }
            Ltl::Release(ref a, ref b) => {
                let mut now = todo.clone();
                now.push((**a).clone());
                now.push((**b).clone());
                expand_rec(now, done.clone(), clone_cover(&cur), out);
                todo.push((**b).clone());
                cur.next.insert(f.clone());
            }
            Ltl::Implies(..) | Ltl::Iff(..) | Ltl::Globally(_) | Ltl::Finally(_) => {
                unreachable!("formula not in negation normal form")
            }
        }
    }
    out.push(cur);
}

fn clone_cover(c: &Cover) -> Cover {
    Cover {
        guard: c.guard.clone(),
        next: c.next.clone(),
        pending: c.pending.clone(),
    }
}

fn untils(f: &Ltl, out: &mut Vec<Ltl>) {
    match f {
        Ltl::Until(a, b) => {
            if !out.contains(f) {
                out.push(f.clone());
            }
            untils(a, out);
            untils(b, out);
        }
        Ltl::Release(a, b) | Ltl::And(a, b) | Ltl::Or(a, b) => {
            untils(a, out);
            untils(b, out);
        }
        Ltl::Next(a) | Ltl::Not(a) => untils(a, out),
        _ => {}
    }
}

/// Builds an automaton accepting exactly the words that satisfy `formula`.
pub fn translate(formula: &Ltl) -> Buchi {
    let f = formula.nnf();
    let mut us = Vec::new();
    untils(&f, &mut us);
    let k = us.len();

    // generalized automaton, explored lazily from the initial obligation set
    let mut gen_ids: HashMap<BTreeSet<Ltl>, usize> = HashMap::new();
    // per state: (guard, target, acceptance set memberships)
    let mut gen_edges: Vec<Vec<GenEdge>> = Vec::new();
    let init: BTreeSet<Ltl> = [f].into_iter().collect();
    gen_ids.insert(init.clone(), 0);
    gen_edges.push(Vec::new());
    let mut queue = VecDeque::from([init]);
    while let Some(obl) = queue.pop_front() {
        let id = gen_ids[&obl];
        let mut edges = Vec::new();
        for c in expand(&obl) {
            let target = match gen_ids.get(&c.next) {
                Some(&t) => t,
                None => {
                    let t = gen_edges.len();
                    gen_ids.insert(c.next.clone(), t);
                    gen_edges.push(Vec::new());
                    queue.push_back(c.next.clone());
                    t
                }
            };
            let acc: Vec<bool> = us.iter().map(|u| !c.pending.contains(u)).collect();
            let guard: Vec<Literal> = c.guard.into_iter().collect();
            let e = (guard, target, acc);
            if !edges.contains(&e) {
                edges.push(e);
            }
        }
        gen_edges[id] = edges;
    }

    // degeneralize: state (q, level); level k marks acceptance
    let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
    let mut edges: Vec<Vec<BuchiEdge>> = Vec::new();
    let mut accepting = Vec::new();
    ids.insert((0, 0), 0);
    edges.push(Vec::new());
    accepting.push(k == 0);
    let mut queue = VecDeque::from([(0usize, 0usize)]);
    while let Some((q, level)) = queue.pop_front() {
        let id = ids[&(q, level)];
        let mut out = Vec::new();
        for (guard, target, acc) in &gen_edges[q] {
            let mut l = if level == k { 0 } else { level };
            while l < k && acc[l] {
                l += 1;
            }
            let key = (*target, l);
            let t = match ids.get(&key) {
                Some(&t) => t,
                None => {
                    let t = edges.len();
                    ids.insert(key, t);
                    edges.push(Vec::new());
                    accepting.push(l == k);
                    queue.push_back(key);
                    t
                }
            };
            out.push(BuchiEdge {
                guard: guard.clone(),
                target: t,
            });
        }
        edges[id] = out;
    }
    Buchi { edges, accepting }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::ltl::parse_ltl;

    fn size(src: &str) -> usize {
        translate(&parse_ltl(src).unwrap()).num_states()
    }

    #[test]
    fn small_automata() {
        assert_eq!(size("G p"), 1);
        assert_eq!(size("F p"), 2);
        assert_eq!(size("p"), 2);
        let g = translate(&parse_ltl("G p").unwrap());
        assert!(g.accepting[0]);
        assert_eq!(g.edges[0].len(), 1);
        assert_eq!(g.edges[0][0].guard, vec![(Prop::Named("p".into()), true)]);
    }

    #[test]
    fn false_has_no_edges() {
        let b = translate(&Ltl::False);
        assert!(b.edges[0].is_empty());
    }

    #[test]
    fn contradictory_literals_pruned() {
        let b = translate(&parse_ltl("p && !p").unwrap());
        assert!(b.edges[0].is_empty());
    }
}
