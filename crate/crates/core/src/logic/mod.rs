//! The logic language: terms, parser, knowledge base and solver.

pub mod arith;
pub mod builtins;
pub mod kb;
pub mod ops;
pub mod parser;
pub mod solve;
pub mod subst;
pub mod term;
pub mod write;

pub use kb::{ArgMode, Clause, ForeignError, ForeignPredicate, KbError, KnowledgeBase, Provenance};
pub use solve::{solve, solve_all, Answer, Query, Solutions, SolveBudget, SolveError};
pub use subst::{unify, Bindings, Substitution};
pub use term::{PredKey, Term, VarId};

/// Acquirer facts, their domains and two rules; the standard small example.
pub const ACQUIRER_PROGRAM: &str = include_str!("../../assets/programs/acquirers.pl");
