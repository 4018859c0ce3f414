//! Fixtures, independent oracles and generators shared by the integration
//! tests and the acceptance runner.

#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::path::PathBuf;
use stpa_workbench::behavior::{expand, Kripke, Machine, STUTTER};
use stpa_workbench::context::generate_covering_array_with;
use stpa_workbench::dsl::{parse_guard, parse_project, render_project};
use stpa_workbench::harness::load_project;
use stpa_workbench::model::{BoolExpr, Project};
use stpa_workbench::par::Exec;
use stpa_workbench::testgen::{dedup, generate, measure, replay_case, Criterion, Reachable};
use stpa_workbench::verifier::{eval_lasso, Buchi, Counterexample, Ltl, Prop};

pub fn project_path(file: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../projects").join(file)
}

pub fn load(file: &str) -> Project {
    load_project(&project_path(file)).expect("bundled project loads").0
}

pub fn acc() -> Project {
    load("acc.stpa")
}

pub fn acc_mutant() -> Project {
    load("acc_mutant.stpa")
}

pub const ALL_CRITERIA: [Criterion; 4] = Criterion::ALL;

// ---------------------------------------------------------------------------
// Covering arrays

/// Every value tuple over every `t` columns, checked one tuple at a time.
pub fn brute_force_covers(rows: &[Vec<usize>], domains: &[usize], t: usize) -> bool {
    fn columns(k: usize, t: usize, from: usize, acc: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if acc.len() == t {
            out.push(acc.clone());
            return;
        }
        for c in from..k {
            acc.push(c);
            columns(k, t, c + 1, acc, out);
            acc.pop();
        }
    }
    let mut sets = Vec::new();
    columns(domains.len(), t, 0, &mut Vec::new(), &mut sets);
    for cols in sets {
        let mut values = vec![0usize; t];
        loop {
            let present = rows
                .iter()
                .any(|r| cols.iter().zip(&values).all(|(&c, &v)| r[c] == v));
            if !present {
                return false;
            }
            let mut i = t;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                values[i] += 1;
                if values[i] < domains[cols[i]] {
                    break;
                }
                values[i] = 0;
            }
            if values.iter().all(|&v| v == 0) {
                break;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Random expressions and models

pub const VARS: [(&str, &[&str]); 2] = [("x", &["a", "b"]), ("y", &["p", "q"])];

/// Guard over `x` and `y`, as a tree with n-ary connectives of two or more operands.
pub fn random_guard(rng: &mut ChaCha8Rng, depth: u32) -> BoolExpr {
    let atom = |rng: &mut ChaCha8Rng| {
        let (v, dom) = VARS[rng.gen_range(0..VARS.len())];
        let l = dom[rng.gen_range(0..dom.len())];
        if rng.gen_bool(0.5) {
            BoolExpr::Eq(v.into(), l.into())
        } else {
            BoolExpr::Ne(v.into(), l.into())
        }
    };
    if depth == 0 || rng.gen_bool(0.4) {
        return atom(rng);
    }
    match rng.gen_range(0..3) {
        0 => BoolExpr::Not(Box::new(random_guard(rng, depth - 1))),
        k => {
            let n = rng.gen_range(2..=3);
            let parts = (0..n).map(|_| random_guard(rng, depth - 1)).collect();
            if k == 1 {
                BoolExpr::And(parts)
            } else {
                BoolExpr::Or(parts)
            }
        }
    }
}

/// Source of a small random project: two or three states, two events, up to
/// six guarded transitions over `x` (input) and `y` (internal).
pub fn random_model_source(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let states = rng.gen_range(2..=3);
    let names: Vec<String> = (0..states).map(|i| format!("s{i}")).collect();
    let mut src = String::from(
        "variable x interaction { a b }\nvariable y internal { p q }\nstatemachine R {\n",
    );
    src += &format!("  states {}\n", names.join(" "));
    src += "  initial s0 { x = a, y = p }\n  events e0 e1\n";
    for t in 1..=rng.gen_range(1..=6) {
        let from = &names[rng.gen_range(0..states)];
        let to = &names[rng.gen_range(0..states)];
        let event = rng.gen_range(0..2);
        let guard = if rng.gen_bool(0.5) {
            format!(" [{}]", random_guard(&mut rng, 2))
        } else {
            String::new()
        };
        let mut effects = Vec::new();
        for (v, dom) in VARS {
            if rng.gen_bool(0.35) {
                effects.push(format!("{v} := {}", dom[rng.gen_range(0..dom.len())]));
            }
        }
        if rng.gen_bool(0.5) {
            effects.push(["go", "stop"][rng.gen_range(0..2)].to_string());
        }
        let label = if rng.gen_bool(0.5) {
            format!(" @S{}", rng.gen_range(1..=2))
        } else {
            String::new()
        };
        src += &format!(
            "  transition t{t} {from} -> {to} : e{event}{guard} / {}{label}\n",
            effects.join(", ")
        );
    }
    src + "}\n"
}

pub fn random_machine(seed: u64) -> Machine {
    let src = random_model_source(seed);
    let p = parse_project(&src).unwrap_or_else(|e| panic!("{e:?}\n{src}"));
    Machine::compile(&p).expect("random model compiles")
}

pub fn random_kripke(seed: u64) -> Kripke {
    expand(&random_machine(seed), 10_000).expect("random model is small")
}

pub fn model_atoms() -> Vec<Prop> {
    vec![
        Prop::eq("state", "s0"),
        Prop::eq("state", "s1"),
        Prop::eq("x", "a"),
        Prop::eq("y", "q"),
        Prop::eq("emits", "go"),
        Prop::eq("emits", "none"),
    ]
}

/// Random LTL formula over the given atoms, using every operator.
pub fn random_ltl(rng: &mut ChaCha8Rng, atoms: &[Prop], depth: u32) -> Ltl {
    if depth == 0 || rng.gen_bool(0.25) {
        return match rng.gen_range(0..12) {
            0 => Ltl::True,
            1 => Ltl::False,
            _ => Ltl::Prop(atoms[rng.gen_range(0..atoms.len())].clone()),
        };
    }
    let sub = |rng: &mut ChaCha8Rng| random_ltl(rng, atoms, depth - 1);
    match rng.gen_range(0..10) {
        0 => Ltl::not(sub(rng)),
        1 => Ltl::next(sub(rng)),
        2 => Ltl::globally(sub(rng)),
        3 => Ltl::finally(sub(rng)),
        4 => Ltl::and(sub(rng), sub(rng)),
        5 => Ltl::or(sub(rng), sub(rng)),
        6 => Ltl::implies(sub(rng), sub(rng)),
        7 => Ltl::Iff(Box::new(sub(rng)), Box::new(sub(rng))),
        8 => Ltl::until(sub(rng), sub(rng)),
        _ => Ltl::release(sub(rng), sub(rng)),
    }
}

// ---------------------------------------------------------------------------
// Model-checking oracles

/// Searches every lasso path of `k` with at most `max_len` positions for one
/// whose word falsifies `f`. Returns the node sequence and loop start.
pub fn violating_lasso(k: &Kripke, f: &Ltl, max_len: usize) -> Option<(Vec<usize>, usize)> {
    fn walk(k: &Kripke, f: &Ltl, path: &mut Vec<usize>, max_len: usize) -> Option<(Vec<usize>, usize)> {
        let last = *path.last().unwrap();
        for e in &k.succ[last] {
            if let Some(j) = path.iter().position(|&n| n == e.target) {
                let nodes = path.clone();
                if !eval_lasso(f, nodes.len(), j, &|i, p| k.holds(nodes[i], p)) {
                    return Some((nodes, j));
                }
            }
        }
        if path.len() == max_len {
            return None;
        }
        for e in &k.succ[last] {
            path.push(e.target);
            if let Some(hit) = walk(k, f, path, max_len) {
                return Some(hit);
            }
            path.pop();
        }
        None
    }
    walk(k, f, &mut vec![0], max_len)
}

/// Independent check of a reported counterexample: a real path from the
/// initial node whose lasso falsifies `f`. A lone stutter cycle stands for
/// any continuation and is accepted when `f` is `G p` with `p` false there.
pub fn certify_counterexample(k: &Kripke, f: &Ltl, cex: &Counterexample) -> Result<(), String> {
    let steps: Vec<_> = cex.steps().collect();
    if steps.is_empty() || cex.cycle.is_empty() || steps[0].node != 0 {
        return Err("malformed lasso".into());
    }
    let start = cex.cycle_start();
    for (i, s) in steps.iter().enumerate() {
        if k.configuration(s.node) != s.configuration {
            return Err(format!("step {i}: configuration differs from node {}", s.node));
        }
        let to = steps.get(i + 1).map_or(steps[start].node, |n| n.node);
        let edge = k.succ[s.node].iter().any(|e| {
            e.target == to
                && k.event_name(e) == s.event
                && e.transition.map(|t| k.machine.transitions[t].id.clone()) == s.transition
        });
        if edge {
            continue;
        }
        let lone_stutter = i == start && cex.cycle.len() == 1 && s.event == STUTTER && to == s.node;
        return match (lone_stutter, f) {
            (true, Ltl::Globally(p)) if !eval_lasso(p, 1, 0, &|_, q| k.holds(s.node, q)) => Ok(()),
            _ => Err(format!("step {i}: no edge {} -> {to} on {}", s.node, s.event)),
        };
    }
    let nodes: Vec<usize> = steps.iter().map(|s| s.node).collect();
    if eval_lasso(f, nodes.len(), start, &|i, p| k.holds(nodes[i], p)) {
        Err("lasso satisfies the formula".into())
    } else {
        Ok(())
    }
}

/// Whether `b` has an accepting run on the lasso word `word[..] (word[loop_start..])^ω`
/// where `word[i]` gives the truth of atom `j` as bit `j`.
pub fn buchi_accepts(b: &Buchi, atoms: &[Prop], word: &[u8], loop_start: usize) -> bool {
    let len = word.len();
    let next = |i: usize| if i + 1 == len { loop_start } else { i + 1 };
    let succ = |(q, i): (usize, usize)| -> Vec<(usize, usize)> {
        let holds = |p: &Prop| {
            atoms
                .iter()
                .position(|a| a == p)
                .is_some_and(|j| word[i] >> j & 1 == 1)
        };
        b.edges[q]
            .iter()
            .filter(|e| Buchi::enabled(e, &holds))
            .map(|e| (e.target, next(i)))
            .collect()
    };
    let reach = |from: Vec<(usize, usize)>| {
        let mut seen = std::collections::BTreeSet::new();
        let mut stack = from;
        while let Some(n) = stack.pop() {
            if seen.insert(n) {
                stack.extend(succ(n));
            }
        }
        seen
    };
    reach(vec![(0, 0)])
        .into_iter()
        .filter(|&(q, _)| b.accepting[q])
        .any(|n| reach(succ(n)).contains(&n))
}

/// Every lasso word of length `1..=max_len` over `atoms` bits, with every loop start.
pub fn lasso_words(atoms: usize, max_len: usize) -> Vec<(Vec<u8>, usize)> {
    let letters = 1u8 << atoms;
    let mut out = Vec::new();
    for len in 1..=max_len {
        let mut w = vec![0u8; len];
        loop {
            for j in 0..len {
                out.push((w.clone(), j));
            }
            let mut i = len;
            loop {
                if i == 0 {
                    break;
                }
                i -= 1;
                w[i] += 1;
                if w[i] < letters {
                    break;
                }
                w[i] = 0;
            }
            if w.iter().all(|&x| x == 0) {
                break;
            }
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Property runners, shared by the proptest suite and the acceptance runner

fn runner(cases: u32) -> TestRunner {
    TestRunner::new_with_rng(
        Config {
            cases,
            failure_persistence: None,
            ..Config::default()
        },
        TestRng::deterministic_rng(RngAlgorithm::ChaCha),
    )
}

fn expr_strategy() -> impl Strategy<Value = BoolExpr> {
    let atom = (0..VARS.len(), 0usize..2, any::<bool>()).prop_map(|(v, l, eq)| {
        let (name, dom) = VARS[v];
        if eq {
            BoolExpr::Eq(name.into(), dom[l].into())
        } else {
            BoolExpr::Ne(name.into(), dom[l].into())
        }
    });
    let leaf = prop_oneof![4 => atom, 1 => any::<bool>().prop_map(BoolExpr::Const)];
    leaf.prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| BoolExpr::Not(Box::new(e))),
            prop::collection::vec(inner.clone(), 2..4).prop_map(BoolExpr::And),
            prop::collection::vec(inner, 2..4).prop_map(BoolExpr::Or),
        ]
    })
}

fn valuation_strategy() -> impl Strategy<Value = BTreeMap<String, String>> {
    (0usize..2, 0usize..2).prop_map(|(x, y)| {
        BTreeMap::from([
            ("x".to_string(), VARS[0].1[x].to_string()),
            ("y".to_string(), VARS[1].1[y].to_string()),
        ])
    })
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(msg()))
    }
}

/// Greedy covering arrays cover every t-tuple, stay in range and do not depend on the execution mode.
pub fn prop_covering_array(cases: u32) -> Result<(), String> {
    let strategy = prop::collection::vec(1usize..=4, 2..=5)
        .prop_flat_map(|d| {
            let n = d.len();
            (Just(d), 1..=n.min(3), any::<u64>())
        });
    runner(cases)
        .run(&strategy, |(domains, t, seed)| {
            let seq = generate_covering_array_with(&domains, t, seed, Exec::Sequential)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            let par = generate_covering_array_with(&domains, t, seed, Exec::Parallel)
                .map_err(|e| TestCaseError::fail(e.to_string()))?;
            check(seq == par, || "modes disagree".into())?;
            check(
                seq.rows.iter().all(|r| r.iter().zip(&domains).all(|(&v, &d)| v < d)),
                || "value out of range".into(),
            )?;
            let product: usize = domains.iter().product();
            check(seq.rows.len() <= product, || "more rows than the full table".into())?;
            check(brute_force_covers(&seq.rows, &domains, t), || {
                format!("{:?} t={t} not covered by {:?}", domains, seq.rows)
            })
        })
        .map_err(|e| e.to_string())
}

/// De Morgan's laws and `!=` as negated `==` under `eval`, and negation normal
/// form preserving LTL truth on lasso words.
pub fn prop_de_morgan(cases: u32) -> Result<(), String> {
    let strategy = (
        prop::collection::vec(expr_strategy(), 2..4),
        valuation_strategy(),
        0usize..2,
        0usize..2,
        any::<u64>(),
    );
    runner(cases)
        .run(&strategy, |(parts, val, v, l, seed)| {
            let ev = |e: &BoolExpr| e.eval(&val).unwrap();
            let negs: Vec<BoolExpr> = parts.iter().map(|p| BoolExpr::Not(Box::new(p.clone()))).collect();
            let not_and = BoolExpr::Not(Box::new(BoolExpr::And(parts.clone())));
            let not_or = BoolExpr::Not(Box::new(BoolExpr::Or(parts.clone())));
            check(ev(&not_and) == ev(&BoolExpr::Or(negs.clone())), || format!("!(and) {parts:?}"))?;
            check(ev(&not_or) == ev(&BoolExpr::And(negs)), || format!("!(or) {parts:?}"))?;
            let (name, dom) = VARS[v];
            check(
                ev(&BoolExpr::ne(name, dom[l])) == !ev(&BoolExpr::eq(name, dom[l])),
                || "!= is not the negation of ==".into(),
            )?;

            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let atoms = [Prop::Named("p".into()), Prop::Named("q".into())];
            let f = random_ltl(&mut rng, &atoms, 3);
            let len = rng.gen_range(1..=5);
            let start = rng.gen_range(0..len);
            let word: Vec<u8> = (0..len).map(|_| rng.gen_range(0..4)).collect();
            let holds = |i: usize, p: &Prop| word[i] >> atoms.iter().position(|a| a == p).unwrap() & 1 == 1;
            check(
                eval_lasso(&f, len, start, &holds) == eval_lasso(&f.nnf(), len, start, &holds),
                || format!("nnf changes the truth of {f}"),
            )
        })
        .map_err(|e| e.to_string())
}

/// Guards survive render and re-parse, and so do whole projects.
pub fn prop_round_trip(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(expr_strategy(), any::<u64>()), |(e, seed)| {
            let text = e.to_string();
            let back = parse_guard(&text).map_err(|err| TestCaseError::fail(format!("{text}: {err}")))?;
            check(back == e, || format!("{text} re-parsed as {back:?}"))?;

            let src = random_model_source(seed);
            let p = parse_project(&src).map_err(|err| TestCaseError::fail(format!("{err:?}")))?;
            let rendered = render_project(&p);
            let q = parse_project(&rendered)
                .map_err(|err| TestCaseError::fail(format!("{err:?}\n{rendered}")))?;
            check(p == q, || format!("project changed through\n{rendered}"))
        })
        .map_err(|e| e.to_string())
}

/// Deduplication never changes any of the four coverage measures, also on
/// arbitrary sub-suites with duplicated cases.
pub fn prop_dedup_preserves_coverage(cases: u32) -> Result<(), String> {
    let strategy = (any::<u64>(), any::<u64>(), prop::collection::vec(any::<bool>(), 0..64));
    runner(cases)
        .run(&strategy, |(model, seed, keep)| {
            let m = random_machine(model);
            let k = expand(&m, 10_000).unwrap();
            let reach = Reachable::from_kripke(&k);
            let mut suite = generate(&m, &ALL_CRITERIA, seed, 5000).unwrap();
            let picked: Vec<_> = suite
                .cases
                .iter()
                .enumerate()
                .filter(|(i, _)| keep.is_empty() || keep[i % keep.len()])
                .map(|(_, c)| c.clone())
                .collect();
            let copies: Vec<_> = picked.iter().step_by(3).cloned().collect();
            suite.cases = picked;
            suite.cases.extend(copies);
            let before = measure(&suite, &m, Some(&reach)).unwrap();
            let deduped = dedup(&suite);
            let after = measure(&deduped, &m, Some(&reach)).unwrap();
            check(deduped.cases.len() <= suite.cases.len(), || "dedup grew the suite".into())?;
            check(before == after, || format!("coverage changed: {before:?} -> {after:?}"))
        })
        .map_err(|e| e.to_string())
}

/// Every generated test replays on the machine it came from.
pub fn prop_replay_soundness(cases: u32) -> Result<(), String> {
    runner(cases)
        .run(&(any::<u64>(), any::<u64>()), |(model, seed)| {
            let m = random_machine(model);
            let suite = generate(&m, &ALL_CRITERIA, seed, 5000).unwrap();
            for c in suite.cases.iter().chain(&dedup(&suite).cases) {
                replay_case(&m, c).map_err(|e| TestCaseError::fail(e.to_string()))?;
            }
            Ok(())
        })
        .map_err(|e| e.to_string())
}

// ---------------------------------------------------------------------------
// Checker agreement

/// Longest lasso the enumeration oracle tries.
pub const LASSO_BOUND: usize = 7;

/// Runs `check_ltl` and the automaton route on random models and formulas.
/// A `Holds` verdict must leave the enumeration oracle without a violating
/// lasso; a `Violated` verdict must carry an independently certified lasso.
/// Returns the number of (holds, violated) verdicts.
pub fn check_ltl_agreement(models: u64) -> Result<(usize, usize), String> {
    use stpa_workbench::verifier::{check_ltl, check_ltl_product, CheckResult};
    let atoms = model_atoms();
    let (mut holds, mut violated) = (0, 0);
    for seed in 0..models {
        let k = random_kripke(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37_79b9_7f4a_7c15));
        let f = if seed % 4 == 0 {
            // invariants take the breadth-first route in check_ltl
            Ltl::globally(random_ltl(&mut rng, &atoms, 0))
        } else {
            random_ltl(&mut rng, &atoms, 3)
        };
        for v in [check_ltl(&k, &f, 1 << 20), check_ltl_product(&k, &f, 1 << 20)] {
            match &v.result {
                CheckResult::Holds { .. } => {
                    if let Some((nodes, j)) = violating_lasso(&k, &f, LASSO_BOUND) {
                        return Err(format!(
                            "model {seed}: {f} reported to hold, but lasso {nodes:?} loop {j} violates it"
                        ));
                    }
                    holds += 1;
                }
                CheckResult::Violated { counterexample } => {
                    certify_counterexample(&k, &f, counterexample)
                        .map_err(|e| format!("model {seed}: {f}: {e}"))?;
                    violated += 1;
                }
                CheckResult::ResourceExceeded { limit } => {
                    return Err(format!("model {seed}: {f}: cap {limit} exceeded"));
                }
            }
        }
    }
    Ok((holds, violated))
}

/// Formulas over `p` and `q` compared against direct evaluation: all of
/// nesting depth at most one, a few classic shapes and seeded random ones.
pub fn buchi_formulas(random: usize) -> Vec<Ltl> {
    use stpa_workbench::verifier::parse_ltl;
    let p = || Ltl::named("p");
    let q = || Ltl::named("q");
    let leaves = [Ltl::True, Ltl::False, p(), q()];
    let mut out: Vec<Ltl> = leaves.to_vec();
    for a in &leaves {
        out.push(Ltl::not(a.clone()));
        out.push(Ltl::next(a.clone()));
        out.push(Ltl::globally(a.clone()));
        out.push(Ltl::finally(a.clone()));
        for b in &leaves {
            out.push(Ltl::and(a.clone(), b.clone()));
            out.push(Ltl::or(a.clone(), b.clone()));
            out.push(Ltl::implies(a.clone(), b.clone()));
            out.push(Ltl::Iff(Box::new(a.clone()), Box::new(b.clone())));
            out.push(Ltl::until(a.clone(), b.clone()));
            out.push(Ltl::release(a.clone(), b.clone()));
        }
    }
    for s in [
        "G F p",
        "F G p",
        "G (p -> F q)",
        "G (p -> X q)",
        "!(p U q)",
        "(p U q) U p",
        "p U (q U p)",
        "G F p -> G F q",
        "F (p && X !p)",
        "X X p",
        "(p R q) && F !q",
        "G (p <-> X !p)",
    ] {
        out.push(parse_ltl(s).unwrap_or_else(|e| panic!("{s}: {e}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let atoms = [Prop::Named("p".into()), Prop::Named("q".into())];
    out.extend((0..random).map(|_| random_ltl(&mut rng, &atoms, 3)));
    out
}

/// Compares automaton acceptance with direct evaluation on every lasso word
/// of length at most six over two atoms. Returns the number of comparisons.
pub fn buchi_agreement(formulas: &[Ltl]) -> Result<usize, String> {
    use stpa_workbench::verifier::ltl_to_buchi;
    let atoms = [Prop::Named("p".into()), Prop::Named("q".into())];
    let words = lasso_words(2, 6);
    let mut n = 0;
    for f in formulas {
        let b = ltl_to_buchi(f);
        for (w, j) in &words {
            let direct = eval_lasso(f, w.len(), *j, &|i, p| {
                w[i] >> atoms.iter().position(|a| a == p).unwrap() & 1 == 1
            });
            if buchi_accepts(&b, &atoms, w, *j) != direct {
                return Err(format!("{f} on {w:?} loop {j}: direct evaluation gives {direct}"));
            }
            n += 1;
        }
    }
    Ok(n)
}
