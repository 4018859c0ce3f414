//! End-to-end checks of the library pipeline on bundled and random projects.

mod common;

use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet, HashSet, VecDeque};
use stpa_workbench::behavior::{check_model_consistency, expand, Config, Machine, DEFAULT_NODE_CAP};
use stpa_workbench::context::{refine_constraints, ContextRow, HazardVerdict};
use stpa_workbench::dsl::{parse_project, render_project};
use stpa_workbench::harness::pipeline::{self, Mode, TestgenOptions};
use stpa_workbench::harness::{execute_suite, sut_by_name, Outcome};
use stpa_workbench::model::{BoolExpr, ContextKind, SafetyRequirement, ValueSet};
use stpa_workbench::par::Exec;
use stpa_workbench::testgen::{replay_case, Origin, Polarity};

/// Reading implied by a sensor event of the ACC model.
fn implied_reading(event: &str) -> Option<(&'static str, &'static str)> {
    Some(match event {
        "distClose" => ("distance", "lessOrEqualSafe"),
        "distFar" => ("distance", "greaterThanSafe"),
        "targetLost" => ("distance", "noTarget"),
        "speedLow" => ("speed", "lessThanDesired"),
        "speedEqual" => ("speed", "equalsDesired"),
        "speedHigh" => ("speed", "greaterThanDesired"),
        "brakePedal" => ("brake", "applied"),
        "releaseBrake" => ("brake", "notApplied"),
        _ => return None,
    })
}

fn draw(values: &ValueSet, rng: &mut ChaCha8Rng) -> f64 {
    match values {
        ValueSet::Interval(lo, hi) => (rng.gen_range(*lo..=*hi) * 100.0).round() / 100.0,
        ValueSet::Literals(vs) => vs[rng.gen_range(0..vs.len())],
    }
}

#[test]
fn reference_controller_matches_the_model() {
    let p = acc();
    let m = Machine::compile(&p).unwrap();
    let conc = &p.concretization;
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut fired = BTreeSet::new();
    for walk in 0..300 {
        let mut sut = sut_by_name("acc-ref").unwrap();
        sut.reset();
        let mut config = m.initial.clone();
        for step in 0..40 {
            let event = m.events[rng.gen_range(0..m.events.len())].clone();
            let mut inputs = BTreeMap::new();
            if let Some((var, label)) = implied_reading(&event) {
                inputs.insert(var.to_string(), draw(conc.lookup(var, label).unwrap(), &mut rng));
            }
            let r = m.step(&config, &event).unwrap();
            let emitted = sut.apply(&event, &inputs).unwrap();
            let at = format!("walk {walk} step {step} event {event}");
            assert_eq!(emitted.as_deref(), m.action_name(r.emitted), "{at}");
            config = r.config;
            fired.extend(r.transition);
            let expected = m.configuration(&config);
            let seen = sut.observe();
            assert_eq!(seen.state, expected.state, "{at}");
            for (var, x) in &seen.readings {
                assert_eq!(conc.abstract_value(var, *x), Some(expected.valuation[var].as_str()), "{at}: {var}");
            }
        }
    }
    assert_eq!(fired.len(), m.transitions.len(), "walks should fire every transition");
}

/// Providing and not-providing violations found by exploring the machine
/// event by event, without the Kripke structure.
fn simulated_violations(m: &Machine, row: &ContextRow) -> BTreeSet<(String, Option<String>)> {
    let holds = |c: &Config| {
        let conf = m.configuration(c);
        row.valuation.iter().all(|(v, x)| conf.valuation.get(v) == Some(x))
    };
    let action = m.actions.iter().position(|a| *a == row.action);
    let mut seen = HashSet::new();
    let mut queue = VecDeque::from([(m.initial.clone(), None::<usize>)]);
    let mut out = BTreeSet::new();
    while let Some((c, last)) = queue.pop_front() {
        if !seen.insert((c.clone(), last)) {
            continue;
        }
        let mut remedied = false;
        for e in 0..m.events.len() {
            let r = m.step(&c, &m.events[e]).unwrap();
            let Some(t) = r.transition else { continue };
            let emits = action.is_some() && r.emitted == action;
            if emits && holds(&r.config) {
                remedied = true;
                if row.kind == ContextKind::Providing {
                    out.insert((m.configuration(&r.config).state, Some(m.transitions[t].id.clone())));
                }
            }
            queue.push_back((r.config, r.emitted));
        }
        let entered_by_action = action.is_some() && last == action;
        if row.kind == ContextKind::NotProviding && holds(&c) && !entered_by_action && !remedied {
            out.insert((m.configuration(&c).state, None));
        }
    }
    out
}

#[test]
fn consistency_agrees_with_simulation() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut nonempty = 0;
    for seed in 0..300 {
        let m = random_machine(seed);
        let k = expand(&m, DEFAULT_NODE_CAP).unwrap();
        let row = ContextRow {
            action: ["go", "stop"][rng.gen_range(0..2)].into(),
            kind: if rng.gen_bool(0.5) { ContextKind::Providing } else { ContextKind::NotProviding },
            valuation: VARS
                .iter()
                .filter_map(|(v, dom)| {
                    let keep = rng.gen_bool(0.7);
                    let x = dom[rng.gen_range(0..dom.len())];
                    keep.then(|| (v.to_string(), x.to_string()))
                })
                .collect(),
            verdict: HazardVerdict::Hazardous {
                hazards: BTreeSet::from(["H1".into()]),
                ssrs: BTreeSet::new(),
            },
        };
        let found: BTreeSet<_> = check_model_consistency(&k, std::slice::from_ref(&row))
            .into_iter()
            .map(|v| (v.configuration.state, v.transition))
            .collect();
        let expected = simulated_violations(&m, &row);
        assert_eq!(found, expected, "model {seed}, row {row:?}\n{}", random_model_source(seed));
        nonempty += usize::from(!found.is_empty());
    }
    assert!(nonempty > 30, "only {nonempty} models with violations");
}

#[test]
fn analysis_is_independent_of_execution_mode() {
    let p = acc();
    for mode in [Mode::Full, Mode::Strength(2), Mode::Strength(3)] {
        for seed in [0, 1, 42] {
            let a = pipeline::analyze_with(&p, mode, seed, Exec::Sequential).unwrap();
            let b = pipeline::analyze_with(&p, mode, seed, Exec::Parallel).unwrap();
            assert_eq!(a.tables, b.tables, "{mode} seed {seed}");
            assert_eq!(a.refinements, b.refinements, "{mode} seed {seed}");
        }
    }
}

#[test]
fn bundled_projects_round_trip_through_render() {
    for file in ["acc.stpa", "acc_mutant.stpa"] {
        let p = load(file);
        let text = render_project(&p);
        assert_eq!(parse_project(&text).unwrap(), p, "{file}");
    }
}

fn tagged(mode: &str) -> ContextRow {
    ContextRow {
        action: "accelerateSignal".into(),
        kind: ContextKind::Providing,
        valuation: vec![
            ("distance".into(), "lessOrEqualSafe".into()),
            ("speed".into(), "greaterThanDesired".into()),
            ("brake".into(), "notApplied".into()),
            ("mode".into(), mode.into()),
        ],
        verdict: HazardVerdict::Hazardous {
            hazards: BTreeSet::from(["H1".into()]),
            ssrs: BTreeSet::from(["R".into()]),
        },
    }
}

fn requirement() -> SafetyRequirement {
    let p = parse_project("ssr R \"text\" { }").unwrap();
    p.requirements[0].clone()
}

#[test]
fn rows_differing_in_mode_refine_to_a_disjunction() {
    let e = refine_constraints(&[tagged("cruise"), tagged("follow")], &requirement()).unwrap();
    let BoolExpr::Or(parts) = &e else { panic!("{e}") };
    assert_eq!(parts.len(), 2);
    assert!(parts.iter().all(|p| matches!(p, BoolExpr::And(a) if a.len() == 4)));
}

#[test]
fn rows_covering_every_valuation_refine_to_a_tautology() {
    let p = acc();
    let vars = ["distance", "speed", "brake", "mode"].map(|v| p.variable(v).unwrap());
    let mut rows = Vec::new();
    let mut idx = [0usize; 4];
    'outer: loop {
        let mut r = tagged("cruise");
        r.valuation = vars
            .iter()
            .zip(idx)
            .map(|(v, i)| (v.name.clone(), v.domain[i].clone()))
            .collect();
        rows.push(r);
        for k in (0..4).rev() {
            idx[k] += 1;
            if idx[k] < vars[k].domain.len() {
                continue 'outer;
            }
            idx[k] = 0;
        }
        break;
    }
    let e = refine_constraints(&rows, &requirement()).unwrap();
    for r in &rows {
        assert!(e.eval(&r.valuation).unwrap());
    }
}

#[test]
fn mutant_counterexample_becomes_a_forbidden_trace_test() {
    let mutant = acc_mutant();
    let opts = TestgenOptions {
        criteria: ALL_CRITERIA.to_vec(),
        seed: 0,
        budget: 5000,
        boundary: true,
        concrete: false,
        node_cap: DEFAULT_NODE_CAP,
    };
    let g = pipeline::testgen(&mutant, &opts).unwrap();
    let cx = g
        .suite
        .cases
        .iter()
        .find(|c| c.origin == Origin::Counterexample { requirement: "SSR1.4".into() })
        .expect("counterexample test kept by dedup");
    assert_eq!(cx.polarity, Polarity::MustNotReproduce);
    assert!(cx.covered_ssrs.contains("SSR1.4"));
    replay_case(&Machine::compile(&mutant).unwrap(), cx).unwrap();

    // the reference controller does not show the forbidden behaviour, the overspeed one does
    let conc = &mutant.concretization;
    let single = stpa_workbench::testgen::TestSuite {
        cases: vec![cx.clone()],
        ..g.suite.clone()
    };
    let run = |name: &str| {
        let mut sut = sut_by_name(name).unwrap();
        execute_suite(sut.as_mut(), &single, conc, 0, true).results[0].outcome.clone()
    };
    assert_eq!(run("acc-ref"), Outcome::Pass);
    assert!(matches!(run("acc-mutant-overspeed"), Outcome::Fail { .. }));
}

#[test]
fn every_traversal_test_passes_on_the_reference_for_any_seed() {
    let p = acc();
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..5 {
        let seed = rng.gen();
        let opts = TestgenOptions {
            criteria: ALL_CRITERIA.to_vec(),
            seed,
            budget: 5000,
            boundary: false,
            concrete: false,
            node_cap: DEFAULT_NODE_CAP,
        };
        let g = pipeline::testgen(&p, &opts).unwrap();
        let mut sut = sut_by_name("acc-ref").unwrap();
        let r = execute_suite(sut.as_mut(), &g.suite, &p.concretization, seed, true);
        assert!(r.all_passed(), "seed {seed}: {:?}", r.totals);
    }
}
