//! Systems under test.
//!
//! An adapter receives abstract events together with concrete sensor
//! readings, and reports the control action it issued. The bundled adapter
//! is a hand-written ACC controller working on concrete values, plus faulty
//! variants of it used to check that the pipeline catches defects.

use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SutError {
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("reading `{variable}` = {value} is out of range")]
    BadReading { variable: String, value: f64 },
}

/// What the adapter exposes after each step.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// Abstract control state, named as in the behaviour model.
    pub state: String,
    /// Concrete readings the controller currently holds.
    pub readings: BTreeMap<String, f64>,
}

pub trait SutAdapter {
    fn name(&self) -> &str;
    /// Back to the power-on state.
    fn reset(&mut self);
    /// Delivers one event; returns the emitted control action, if any.
    fn apply(&mut self, event: &str, inputs: &BTreeMap<String, f64>) -> Result<Option<String>, SutError>;
    fn observe(&self) -> Observation;
}

/// Injected defects of the ACC controller.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccFault {
    /// Keeps accelerating on a control tick while above the desired speed.
    Overspeed,
    /// Ignores the brake pedal while cruising or following.
    MissingBrakeCheck,
    /// Stays in follow mode when the target vehicle leaves the lane.
    StuckFollow,
}

pub const SUT_NAMES: [&str; 4] = [
    "acc-ref",
    "acc-mutant-overspeed",
    "acc-mutant-missing-brake-check",
    "acc-mutant-stuck-follow",
];

pub fn sut_by_name(name: &str) -> Option<Box<dyn SutAdapter>> {
    let fault = match name {
        "acc-ref" => None,
        "acc-mutant-overspeed" => Some(AccFault::Overspeed),
        "acc-mutant-missing-brake-check" => Some(AccFault::MissingBrakeCheck),
        "acc-mutant-stuck-follow" => Some(AccFault::StuckFollow),
        _ => return None,
    };
    Some(Box::new(AccController::new(fault)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AccMode {
    Off,
    Standby,
    Cruise,
    Follow,
}

const SAFE_DISTANCE: f64 = 50.0;
const DESIRED_SPEED: f64 = 100.0;
const ACCELERATE: &str = "accelerateSignal";
const BRAKE: &str = "brakeSignal";

/// ACC controller over concrete readings: distance in metres (negative when
/// no target is tracked), speed in km/h, brake pedal 0 or 1.
#[derive(Debug, Clone)]
pub struct AccController {
    name: &'static str,
    fault: Option<AccFault>,
    mode: AccMode,
    distance: f64,
    speed: f64,
    brake: f64,
}

impl AccController {
    pub fn new(fault: Option<AccFault>) -> Self {
        let name = match fault {
            None => SUT_NAMES[0],
            Some(AccFault::Overspeed) => SUT_NAMES[1],
            Some(AccFault::MissingBrakeCheck) => SUT_NAMES[2],
            Some(AccFault::StuckFollow) => SUT_NAMES[3],
        };
        let mut c = AccController {
            name,
            fault,
            mode: AccMode::Off,
            distance: 0.0,
            speed: 0.0,
            brake: 0.0,
        };
        c.reset();
        c
    }

    fn has(&self, f: AccFault) -> bool {
        self.fault == Some(f)
    }

    fn target_close(&self) -> bool {
        self.distance >= 0.0 && self.distance <= SAFE_DISTANCE
    }

    fn too_slow(&self) -> bool {
        self.speed < DESIRED_SPEED
    }

    fn pedal_pressed(&self) -> bool {
        self.brake >= 0.5
    }

    fn read(&mut self, inputs: &BTreeMap<String, f64>) -> Result<(), SutError> {
        for (var, &value) in inputs {
            let slot = match var.as_str() {
                "distance" => &mut self.distance,
                "speed" => &mut self.speed,
                "brake" => &mut self.brake,
                _ => continue,
            };
            if !value.is_finite() {
                return Err(SutError::BadReading {
                    variable: var.clone(),
                    value,
                });
            }
            *slot = value;
        }
        Ok(())
    }

    fn accelerate_if_slow(&self) -> Option<String> {
        self.too_slow().then(|| ACCELERATE.to_string())
    }
}

impl SutAdapter for AccController {
    fn name(&self) -> &str {
        self.name
    }

    fn reset(&mut self) {
        self.mode = AccMode::Off;
        self.distance = -1.0;
        self.speed = DESIRED_SPEED;
        self.brake = 0.0;
    }

    fn apply(&mut self, event: &str, inputs: &BTreeMap<String, f64>) -> Result<Option<String>, SutError> {
        use AccMode::*;
        const SENSOR: [&str; 6] = [
            "distClose",
            "distFar",
            "targetLost",
            "speedLow",
            "speedEqual",
            "speedHigh",
        ];
        let known = SENSOR.contains(&event)
            || ["accOn", "accOff", "setSpeed", "brakePedal", "releaseBrake", "controlSpeed"].contains(&event);
        if !known {
            return Err(SutError::UnknownEvent(event.to_string()));
        }
        let out = match (self.mode, event) {
            (Off, "accOn") => {
                self.mode = Standby;
                None
            }
            (Off | Standby, "brakePedal" | "releaseBrake") => {
                self.read(inputs)?;
                None
            }
            (Standby | Cruise | Follow, "accOff") => {
                self.mode = Off;
                None
            }
            (Standby, e) if SENSOR.contains(&e) => {
                self.read(inputs)?;
                None
            }
            (Standby, "setSpeed") if !self.pedal_pressed() => {
                if self.target_close() {
                    self.mode = Follow;
                    Some(BRAKE.to_string())
                } else {
                    self.mode = Cruise;
                    self.accelerate_if_slow()
                }
            }
            (Cruise | Follow, "brakePedal") if !self.has(AccFault::MissingBrakeCheck) => {
                self.read(inputs)?;
                self.mode = Standby;
                None
            }
            (Cruise, "distClose") => {
                self.read(inputs)?;
                self.mode = Follow;
                Some(BRAKE.to_string())
            }
            (Cruise, "speedLow" | "speedEqual" | "speedHigh" | "distFar" | "targetLost") => {
                self.read(inputs)?;
                self.accelerate_if_slow()
            }
            (Cruise, "controlSpeed") => {
                if self.has(AccFault::Overspeed) && self.speed > DESIRED_SPEED {
                    Some(ACCELERATE.to_string())
                } else {
                    self.accelerate_if_slow()
                }
            }
            (Follow, "distClose" | "speedLow" | "speedEqual" | "speedHigh" | "controlSpeed") => {
                self.read(inputs)?;
                Some(BRAKE.to_string())
            }
            (Follow, "targetLost") if self.has(AccFault::StuckFollow) => {
                self.read(inputs)?;
                Some(BRAKE.to_string())
            }
            (Follow, "distFar" | "targetLost") => {
                self.read(inputs)?;
                self.mode = Cruise;
                self.accelerate_if_slow()
            }
            _ => None,
        };
        Ok(out)
    }

    fn observe(&self) -> Observation {
        let state = match self.mode {
            AccMode::Off => "off",
            AccMode::Standby => "standby",
            AccMode::Cruise => "cruisespeed",
            AccMode::Follow => "followdistance",
        };
        Observation {
            state: state.to_string(),
            readings: BTreeMap::from([
                ("distance".to_string(), self.distance),
                ("speed".to_string(), self.speed),
                ("brake".to_string(), self.brake),
            ]),
        }
    }
}
