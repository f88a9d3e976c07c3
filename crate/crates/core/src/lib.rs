//! A planning runtime that executes generated logic programs over tabular
//! payment data.
//!
//! * [`logic`]: parser, knowledge base and SLD solver for a Prolog subset.
//! * [`exec`]: sequential or data-parallel execution of bulk work.
//! * [`agent`]: prompting, scoring and retrying a planner, then running its plan.

pub mod agent;
pub mod data;
pub mod eval;
pub mod exec;
pub mod logic;
pub mod tools;

pub use exec::Execution;
