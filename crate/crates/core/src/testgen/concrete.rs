//! Concrete input values for abstract test steps.

use super::TestCase;
use crate::model::{Concretization, ValueSet};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConcretizeError {
    #[error("no concrete values for label `{label}` of variable `{variable}`")]
    MissingMapping { variable: String, label: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteStep {
    pub event: String,
    pub inputs: BTreeMap<String, f64>,
    pub expected_emission: Option<String>,
    pub expected_state: String,
    pub transition: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConcreteScript {
    pub test: String,
    /// `random`, `min` or `max`.
    pub variant: String,
    pub steps: Vec<ConcreteStep>,
}

#[derive(Clone, Copy)]
enum Pick {
    Random,
    Min,
    Max,
}

fn stream_of(id: &str) -> u64 {
    // FNV-1a, stable across runs and platforms.
    id.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn draw(set: &ValueSet, pick: Pick, rng: &mut ChaCha8Rng) -> f64 {
    match (set, pick) {
        (_, Pick::Min) => set.min(),
        (_, Pick::Max) => set.max(),
        (ValueSet::Interval(lo, hi), Pick::Random) => {
            let x = rng.gen_range(*lo..=*hi);
            ((x * 100.0).round() / 100.0).clamp(*lo, *hi)
        }
        (ValueSet::Literals(vs), Pick::Random) => vs[rng.gen_range(0..vs.len())],
    }
}

/// Concrete scripts for a case: one with uniform draws, plus the minimum and
/// maximum of every set when `boundary` is on. Draws depend only on `seed`
/// and the case id.
pub fn concretize(
    case: &TestCase,
    c: &Concretization,
    seed: u64,
    boundary: bool,
) -> Result<Vec<ConcreteScript>, ConcretizeError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_of(&case.id));
    let mut picks = vec![(Pick::Random, "random")];
    if boundary {
        picks.extend([(Pick::Min, "min"), (Pick::Max, "max")]);
    }
    picks
        .into_iter()
        .map(|(pick, variant)| {
            let steps = case
                .steps
                .iter()
                .map(|s| {
                    let inputs = s
                        .inputs
                        .iter()
                        .map(|(var, label)| {
                            let set = c.lookup(var, label).ok_or_else(|| {
                                ConcretizeError::MissingMapping {
                                    variable: var.clone(),
                                    label: label.clone(),
                                }
                            })?;
                            Ok((var.clone(), draw(set, pick, &mut rng)))
                        })
                        .collect::<Result<_, ConcretizeError>>()?;
                    Ok(ConcreteStep {
                        event: s.event.clone(),
                        inputs,
                        expected_emission: s.expected_emission.clone(),
                        expected_state: s.expected_state.clone(),
                        transition: s.transition.clone(),
                    })
                })
                .collect::<Result<_, ConcretizeError>>()?;
            Ok(ConcreteScript {
                test: case.id.clone(),
                variant: variant.to_string(),
                steps,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::super::tests::lamp;
    use super::super::{generate, Criterion};
    use super::*;
    use crate::model::LabelMapping;

    fn conc() -> Concretization {
        Concretization {
            mappings: vec![
                LabelMapping {
                    variable: "power".into(),
                    label: "off".into(),
                    values: ValueSet::Literals(vec![0.0]),
                },
                LabelMapping {
                    variable: "power".into(),
                    label: "on".into(),
                    values: ValueSet::Interval(0.5, 240.0),
                },
            ],
        }
    }

    #[test]
    fn values_map_back_to_labels() {
        let m = lamp();
        let s = generate(&m, &Criterion::ALL, 3, 100).unwrap();
        let c = conc();
        for case in &s.cases {
            let scripts = concretize(case, &c, 7, true).unwrap();
            assert_eq!(scripts.len(), 3);
            assert_eq!(scripts, concretize(case, &c, 7, true).unwrap());
            for sc in &scripts {
                for (abs, con) in case.steps.iter().zip(&sc.steps) {
                    for (var, label) in &abs.inputs {
                        let x = con.inputs[var];
                        assert_eq!(c.abstract_value(var, x), Some(label.as_str()));
                        assert_eq!((x * 100.0).round() / 100.0, x);
                    }
                }
            }
            if case.steps[0].inputs.contains_key("power") {
                assert_eq!(scripts[1].steps[0].inputs["power"], 0.5);
                assert_eq!(scripts[2].steps[0].inputs["power"], 240.0);
            }
        }
    }

    #[test]
    fn missing_mapping_is_reported() {
        let m = lamp();
        let s = generate(&m, &Criterion::ALL, 0, 100).unwrap();
        let e = concretize(&s.cases[0], &Concretization::default(), 0, false).unwrap_err();
        assert!(matches!(e, ConcretizeError::MissingMapping { .. }));
    }
}
