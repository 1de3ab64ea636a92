//! Deterministic flit-level mesh simulator.
//!
//! [`config`] defines the run description, [`traffic`] the workload
//! sources, [`stats`] the result tables, and the engine itself lives in a
//! private module behind [`run`], [`run_detailed`], [`single_message`] and
//! [`compare_modes`].

pub mod config;
pub mod stats;
pub mod traffic;

mod engine;

pub use engine::{
    compare_modes, load_trace_file, run, run_detailed, single_message, MessageRecord, SimError,
};
