//! Running test suites against an adapter.

use super::sut::SutAdapter;
use crate::model::Concretization;
use crate::testgen::{concretize, ConcreteScript, Polarity, TestCase, TestSuite};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict")]
pub enum Outcome {
    Pass,
    Fail {
        /// Which concrete script failed: `random`, `min` or `max`.
        variant: String,
        step: usize,
        expected: String,
        observed: String,
    },
    Error {
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: String,
    pub polarity: Polarity,
    pub ssrs: Vec<String>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Totals {
    pub total: usize,
    pub pass: usize,
    pub fail: usize,
    pub error: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecutionReport {
    pub sut: String,
    pub seed: u64,
    pub boundary: bool,
    pub results: Vec<TestResult>,
    pub totals: Totals,
}

impl ExecutionReport {
    pub fn all_passed(&self) -> bool {
        self.totals.pass == self.totals.total
    }
}

/// Where a run first departs from the script.
struct Divergence {
    step: usize,
    expected: String,
    observed: String,
}

fn show(x: &Option<String>) -> String {
    x.clone().unwrap_or_else(|| "nothing".into())
}

fn run_script(
    sut: &mut dyn SutAdapter,
    script: &ConcreteScript,
    case: &TestCase,
    conc: &Concretization,
) -> Result<Option<Divergence>, String> {
    sut.reset();
    for (i, (step, abs)) in script.steps.iter().zip(&case.steps).enumerate() {
        let diverge = |expected: String, observed: String| {
            Ok(Some(Divergence {
                step: i,
                expected,
                observed,
            }))
        };
        if step.transition.is_some() {
            let emitted = sut.apply(&step.event, &step.inputs).map_err(|e| e.to_string())?;
            if emitted != step.expected_emission {
                return diverge(
                    format!("emits {}", show(&step.expected_emission)),
                    format!("emits {}", show(&emitted)),
                );
            }
        }
        let obs = sut.observe();
        if obs.state != step.expected_state {
            return diverge(format!("state {}", step.expected_state), format!("state {}", obs.state));
        }
        for (var, label) in &abs.inputs {
            let seen = obs
                .readings
                .get(var)
                .and_then(|&x| conc.abstract_value(var, x).map(|l| (x, l)));
            match seen {
                Some((_, l)) if l == label => {}
                Some((x, l)) => return diverge(format!("{var} == {label}"), format!("{var} == {l} ({x})")),
                None => return diverge(format!("{var} == {label}"), format!("no reading for {var}")),
            }
        }
    }
    Ok(None)
}

/// Runs every concrete variant of one case; polarity decides what passing means.
pub fn execute_case(
    sut: &mut dyn SutAdapter,
    case: &TestCase,
    conc: &Concretization,
    seed: u64,
    boundary: bool,
) -> TestResult {
    let outcome = match concretize(case, conc, seed, boundary) {
        Err(e) => Outcome::Error { message: e.to_string() },
        Ok(scripts) => {
            let mut outcome = Outcome::Pass;
            for script in &scripts {
                let fail = match (run_script(sut, script, case, conc), case.polarity) {
                    (Err(message), _) => {
                        outcome = Outcome::Error { message };
                        break;
                    }
                    (Ok(Some(d)), Polarity::MustReproduce) => Some((d.step, d.expected, d.observed)),
                    (Ok(None), Polarity::MustNotReproduce) => Some((
                        case.steps.len().saturating_sub(1),
                        "divergence from the forbidden trace".into(),
                        "trace reproduced".into(),
                    )),
                    _ => None,
                };
                if let Some((step, expected, observed)) = fail {
                    outcome = Outcome::Fail {
                        variant: script.variant.clone(),
                        step,
                        expected,
                        observed,
                    };
                    break;
                }
            }
            outcome
        }
    };
    TestResult {
        test: case.id.clone(),
        polarity: case.polarity,
        ssrs: case.covered_ssrs.iter().cloned().collect(),
        outcome,
    }
}

/// Runs a suite sequentially on one adapter instance.
pub fn execute_suite(
    sut: &mut dyn SutAdapter,
    suite: &TestSuite,
    conc: &Concretization,
    seed: u64,
    boundary: bool,
) -> ExecutionReport {
    let results: Vec<TestResult> = suite
        .cases
        .iter()
        .map(|c| execute_case(sut, c, conc, seed, boundary))
        .collect();
    let mut totals = Totals {
        total: results.len(),
        ..Totals::default()
    };
    for r in &results {
        match r.outcome {
            Outcome::Pass => totals.pass += 1,
            Outcome::Fail { .. } => totals.fail += 1,
            Outcome::Error { .. } => totals.error += 1,
        }
    }
    ExecutionReport {
        sut: sut.name().to_string(),
        seed,
        boundary,
        results,
        totals,
    }
}
