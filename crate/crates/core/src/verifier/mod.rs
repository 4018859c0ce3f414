//! Embedded explicit-state LTL model checker.
//!
//! Formulas are negated, put in negation normal form and translated to a
//! Büchi automaton ([`ltl_to_buchi`]). The product with the Kripke structure is
//! searched for an accepting cycle by nested depth-first search. Formulas of
//! the form `G p` with propositional `p` take a breadth-first fast path that
//! yields shortest counterexamples. Every counterexample is certified by
//! [`replay`] against direct lasso-word evaluation before it is returned.

mod buchi;
mod check;
mod formalize;
mod lasso;
mod ltl;

pub use buchi::{translate as ltl_to_buchi, Buchi, BuchiEdge, Literal};
pub use check::{
    check_invariant, check_ltl, check_ltl_product, replay, CheckResult, Counterexample,
    ReplayError, Statistics, TraceStep, Verdict,
};
pub use formalize::{bool_to_ltl, formalize_requirement, template, Formalization, FormalizeError, FormulaSource};
pub use lasso::{eval_lasso, eval_positions};
pub use ltl::{parse_ltl, Ltl, Prop};
