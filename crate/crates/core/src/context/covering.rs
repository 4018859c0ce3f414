//! Greedy t-way covering arrays.

use super::ContextError;
use crate::par::Exec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

/// Candidate rows scored per construction step.
const POOL: usize = 32;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoveringArray {
    pub strength: usize,
    pub domains: Vec<usize>,
    /// Value indices, one entry per variable.
    pub rows: Vec<Vec<usize>>,
}

/// All `t`-element subsets of `0..k` in lexicographic order.
pub fn combinations(k: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(t);
    fn go(start: usize, k: usize, t: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            go(i + 1, k, t, cur, out);
            cur.pop();
        }
    }
    go(0, k, t, &mut cur, &mut out);
    out
}

/// Tracks which value tuples of each variable subset are covered.
struct Tuples<'a> {
    domains: &'a [usize],
    subsets: Vec<Vec<usize>>,
    covered: Vec<Vec<bool>>,
    remaining: usize,
}

impl<'a> Tuples<'a> {
    fn new(domains: &'a [usize], t: usize) -> Self {
        let subsets = combinations(domains.len(), t);
        let covered: Vec<Vec<bool>> = subsets
            .iter()
            .map(|s| vec![false; s.iter().map(|&v| domains[v]).product()])
            .collect();
        let remaining = covered.iter().map(Vec::len).sum();
        Tuples {
            domains,
            subsets,
            covered,
            remaining,
        }
    }

    fn index(&self, s: usize, row: &[usize]) -> usize {
        self.subsets[s]
            .iter()
            .fold(0, |acc, &v| acc * self.domains[v] + row[v])
    }

    fn decode(&self, s: usize, mut idx: usize) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.subsets[s]
            .iter()
            .rev()
            .map(|&v| {
                let x = idx % self.domains[v];
                idx /= self.domains[v];
                (v, x)
            })
            .collect();
        out.reverse();
        out
    }

    fn gain(&self, row: &[usize]) -> usize {
        (0..self.subsets.len())
            .filter(|&s| !self.covered[s][self.index(s, row)])
            .count()
    }

    fn mark(&mut self, row: &[usize]) {
        for s in 0..self.subsets.len() {
            let i = self.index(s, row);
            if !self.covered[s][i] {
                self.covered[s][i] = true;
                self.remaining -= 1;
            }
        }
    }

    fn uncovered(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (s, cov) in self.covered.iter().enumerate() {
            for (i, &c) in cov.iter().enumerate() {
                if !c {
                    out.push((s, i));
                }
            }
        }
        out
    }

    /// Builds one candidate: seed it with an uncovered tuple, then fill the
    /// remaining variables one by one with the value covering most new tuples
    /// among the variables already fixed.
    fn candidate(&self, seed_tuple: (usize, usize), rng: &mut ChaCha8Rng) -> Vec<usize> {
        let k = self.domains.len();
        let mut row: Vec<Option<usize>> = vec![None; k];
        for (v, x) in self.decode(seed_tuple.0, seed_tuple.1) {
            row[v] = Some(x);
        }
        let mut order: Vec<usize> = (0..k).filter(|&v| row[v].is_none()).collect();
        order.shuffle(rng);
        for v in order {
            let mut best = (0usize, 0usize);
            for x in 0..self.domains[v] {
                row[v] = Some(x);
                let score = self
                    .subsets
                    .iter()
                    .enumerate()
                    .filter(|(_, sub)| sub.contains(&v) && sub.iter().all(|&u| row[u].is_some()))
                    .filter(|(s, sub)| {
                        let idx = sub
                            .iter()
                            .fold(0, |acc, &u| acc * self.domains[u] + row[u].unwrap());
                        !self.covered[*s][idx]
                    })
                    .count();
                // strict improvement only, so ties keep the smallest value index
                if x == 0 || score > best.0 {
                    best = (score, x);
                }
            }
            row[v] = Some(best.1);
        }
        row.into_iter().map(Option::unwrap).collect()
    }
}

/// Whether every `t`-way value tuple appears in some row.
pub fn covers(rows: &[Vec<usize>], domains: &[usize], t: usize) -> bool {
    let mut tuples = Tuples::new(domains, t);
    for r in rows {
        tuples.mark(r);
    }
    tuples.remaining == 0
}

pub fn generate_covering_array(
    domains: &[usize],
    strength: usize,
    seed: u64,
) -> Result<CoveringArray, ContextError> {
    generate_covering_array_with(domains, strength, seed, Exec::default())
}

/// Greedy construction; the result is identical for both execution modes.
pub fn generate_covering_array_with(
    domains: &[usize],
    strength: usize,
    seed: u64,
    exec: Exec,
) -> Result<CoveringArray, ContextError> {
    if strength < 1 || strength > domains.len() {
        return Err(ContextError::Strength {
            strength,
            variables: domains.len(),
        });
    }
    if domains.contains(&0) {
        return Err(ContextError::EmptyDomain);
    }
    let mut tuples = Tuples::new(domains, strength);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    while tuples.remaining > 0 {
        let uncovered = tuples.uncovered();
        let jobs: Vec<((usize, usize), u64)> = (0..POOL)
            .map(|_| (uncovered[rng.gen_range(0..uncovered.len())], rng.gen()))
            .collect();
        let scored = exec.map(&jobs, |&(tuple, s)| {
            let mut r = ChaCha8Rng::seed_from_u64(s);
            let row = tuples.candidate(tuple, &mut r);
            (tuples.gain(&row), row)
        });
        // highest gain; ties go to the smallest row, then pool (draw) order
        let mut best = &scored[0];
        for c in &scored[1..] {
            if c.0 > best.0 || (c.0 == best.0 && c.1 < best.1) {
                best = c;
            }
        }
        let row = best.1.clone();
        tuples.mark(&row);
        rows.push(row);
    }
    if !covers(&rows, domains, strength) {
        return Err(ContextError::Internal("covering array failed its tuple check".into()));
    }
    Ok(CoveringArray {
        strength,
        domains: domains.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_strength_is_the_product() {
        let a = generate_covering_array(&[2, 2], 2, 0).unwrap();
        assert_eq!(a.rows.len(), 4);
        let mut rows = a.rows.clone();
        rows.sort();
        assert_eq!(rows, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
    }

    #[test]
    fn three_binary_needs_four_rows() {
        let a = generate_covering_array(&[2, 2, 2], 2, 7).unwrap();
        assert!(a.rows.len() >= 4);
    }

    #[test]
    fn strength_too_large() {
        assert!(matches!(
            generate_covering_array(&[2, 2], 3, 0),
            Err(ContextError::Strength { .. })
        ));
    }

    #[test]
    fn acc_domains_band() {
        for seed in 0..20 {
            let a = generate_covering_array(&[3, 3, 2, 4], 2, seed).unwrap();
            assert!((12..=15).contains(&a.rows.len()), "seed {seed}: {}", a.rows.len());
        }
    }

    #[test]
    fn modes_agree() {
        let a = generate_covering_array_with(&[3, 3, 2, 4, 2], 2, 5, Exec::Sequential).unwrap();
        let b = generate_covering_array_with(&[3, 3, 2, 4, 2], 2, 5, Exec::Parallel).unwrap();
        assert_eq!(a, b);
    }
}
