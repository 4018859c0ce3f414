//! Randomised checks against independent oracles.

mod common;

use common::*;

fn ok(r: Result<(), String>) {
    if let Err(e) = r {
        panic!("{e}");
    }
}

#[test]
fn covering_arrays_cover_every_tuple() {
    ok(prop_covering_array(256));
}

#[test]
fn de_morgan_and_nnf() {
    ok(prop_de_morgan(256));
}

#[test]
fn guards_and_projects_round_trip() {
    ok(prop_round_trip(256));
}

#[test]
fn dedup_preserves_coverage() {
    ok(prop_dedup_preserves_coverage(256));
}

#[test]
fn generated_tests_replay() {
    ok(prop_replay_soundness(256));
}

#[test]
fn check_ltl_agrees_with_lasso_enumeration() {
    let (holds, violated) = check_ltl_agreement(1000).unwrap_or_else(|e| panic!("{e}"));
    // both verdicts must be well represented for the comparison to mean anything
    assert!(holds > 200 && violated > 200, "holds {holds}, violated {violated}");
}

#[test]
fn buchi_translation_agrees_with_direct_evaluation() {
    let formulas = buchi_formulas(40);
    let n = buchi_agreement(&formulas).unwrap_or_else(|e| panic!("{e}"));
    assert_eq!(n, formulas.len() * lasso_words(2, 6).len());
}

#[test]
fn lasso_word_count() {
    // sum over len 1..=6 of 4^len * len
    assert_eq!(lasso_words(2, 6).len(), 4 + 32 + 192 + 1024 + 5120 + 24576);
}

#[test]
fn brute_force_oracle_rejects_incomplete_arrays() {
    let full: Vec<Vec<usize>> = (0..4).map(|i| vec![i / 2, i % 2]).collect();
    assert!(brute_force_covers(&full, &[2, 2], 2));
    assert!(!brute_force_covers(&full[..3], &[2, 2], 2));
    assert!(!brute_force_covers(&full[..1], &[2, 2], 1));
    assert!(brute_force_covers(&[vec![0, 0], vec![1, 1]], &[2, 2], 1));
}
