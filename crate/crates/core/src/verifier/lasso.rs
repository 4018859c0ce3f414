//! Direct evaluation of LTL on ultimately periodic words.
//!
//! A lasso of `len` positions loops from its last position back to
//! `loop_start`. Each subformula is evaluated at every position; `U` is the
//! least and `R` the greatest fixpoint of its one-step unfolding. This is
//! independent of the automaton construction and serves as its cross-check.

use super::ltl::{Ltl, Prop};

/// Truth value of `f` at each position of the lasso.
pub fn eval_positions(
    f: &Ltl,
    len: usize,
    loop_start: usize,
    holds: &dyn Fn(usize, &Prop) -> bool,
) -> Vec<bool> {
    assert!(loop_start < len, "lasso loop start out of range");
    let succ = |i: usize| if i + 1 == len { loop_start } else { i + 1 };
    let rec = |g: &Ltl| eval_positions(g, len, loop_start, holds);
    match f {
        Ltl::True => vec![true; len],
        Ltl::False => vec![false; len],
        Ltl::Prop(p) => (0..len).map(|i| holds(i, p)).collect(),
        Ltl::Not(a) => rec(a).into_iter().map(|x| !x).collect(),
        Ltl::And(a, b) => zip(rec(a), rec(b), |x, y| x && y),
        Ltl::Or(a, b) => zip(rec(a), rec(b), |x, y| x || y),
        Ltl::Implies(a, b) => zip(rec(a), rec(b), |x, y| !x || y),
        Ltl::Iff(a, b) => zip(rec(a), rec(b), |x, y| x == y),
        Ltl::Next(a) => {
            let v = rec(a);
            (0..len).map(|i| v[succ(i)]).collect()
        }
        Ltl::Globally(a) => fixpoint(&vec![false; len], &rec(a), true, succ),
        Ltl::Finally(a) => fixpoint(&vec![true; len], &rec(a), false, succ),
        Ltl::Until(a, b) => fixpoint(&rec(a), &rec(b), false, succ),
        Ltl::Release(a, b) => fixpoint(&rec(a), &rec(b), true, succ),
    }
}

fn zip(a: Vec<bool>, b: Vec<bool>, op: impl Fn(bool, bool) -> bool) -> Vec<bool> {
    a.into_iter().zip(b).map(|(x, y)| op(x, y)).collect()
}

/// `until`: s = b | (a & X s) from false. `release`: s = b & (a | X s) from true.
fn fixpoint(a: &[bool], b: &[bool], release: bool, succ: impl Fn(usize) -> usize) -> Vec<bool> {
    let len = a.len();
    let mut s = vec![release; len];
    loop {
        let mut changed = false;
        for i in (0..len).rev() {
            let v = if release {
                b[i] && (a[i] || s[succ(i)])
            } else {
                b[i] || (a[i] && s[succ(i)])
            };
            if v != s[i] {
                s[i] = v;
                changed = true;
            }
        }
        if !changed {
            return s;
        }
    }
}

/// Whether the lasso word satisfies `f` from its first position.
pub fn eval_lasso(
    f: &Ltl,
    len: usize,
    loop_start: usize,
    holds: &dyn Fn(usize, &Prop) -> bool,
) -> bool {
    eval_positions(f, len, loop_start, holds)[0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verifier::ltl::parse_ltl;

    /// Word over a single proposition `p`, given as a bit string.
    fn check(src: &str, bits: &[bool], loop_start: usize) -> bool {
        let f = parse_ltl(src).unwrap();
        eval_lasso(&f, bits.len(), loop_start, &|i, _| bits[i])
    }

    #[test]
    fn basic_operators() {
        let (t, f) = (true, false);
        assert!(check("G p", &[t, t], 0));
        assert!(!check("G p", &[t, f], 1));
        assert!(check("F p", &[f, f, t], 2));
        assert!(check("F p", &[t, f], 1));
        assert!(!check("F p", &[f, f], 0));
        assert!(check("X p", &[f, t], 1));
        assert!(check("G F p", &[f, f, t], 1));
        assert!(!check("F G p", &[t, t, f], 0));
        assert!(check("F G p", &[f, t], 1));
        assert!(check("p U !p", &[t, f], 0));
        assert!(!check("p U !p", &[t, t], 0));
        assert!(check("!p R p", &[t, t], 0));
    }
}
