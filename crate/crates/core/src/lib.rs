//! Scheduling for distributed assembly flowshops whose assembly buffer is
//! small enough to deadlock.
//!
//! Jobs are made in identical-layout flowshop factories and staged in a
//! shared buffer until their product is assembled. A Petri net of the
//! assembly stage amends job orders so the buffer never deadlocks, a
//! backward pass turns an amended coding into a schedule, and a cooperative
//! co-evolution search looks for short makespans.

pub mod bench;
pub mod cli;
pub mod error;
pub mod instance;
pub mod petri;
pub mod schedule;
pub mod solver;

pub use error::{Error, Result};
pub use instance::{decode, validate_coding, Coding, Instance, Solution, Time};
pub use petri::{build_app, iba_safe, idam, AppNet, Marking};
pub use schedule::{evaluate, EvalResult, Evaluator, Schedule};
pub use solver::{solve, Preset, SolveOutcome, SolverParams, Variant};
