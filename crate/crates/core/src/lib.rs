//! STPA safety-engineering workbench.
//!
//! The pipeline runs from a `.stpa` project file to verified requirements and
//! executed tests:
//!
//! 1. [`dsl`] parses the project into the [`model`] types, which [`model::validate`] checks.
//! 2. [`context`] builds context tables (full or t-way sampled), filters them
//!    with domain rules, evaluates hazards and refines safety constraints.
//! 3. [`behavior`] compiles the safe behaviour state machine and expands it
//!    into a Kripke structure.
//! 4. [`verifier`] formalizes requirements in LTL and model-checks them.
//! 5. [`testgen`] generates, deduplicates and concretizes test cases and
//!    builds the traceability matrix.
//! 6. [`harness`] executes suites against system-under-test adapters and
//!    writes reports; it also implements the command-line stages.

pub mod behavior;
pub mod context;
pub mod dsl;
pub mod harness;
pub mod model;
pub mod par;
pub mod testgen;
pub mod verifier;
