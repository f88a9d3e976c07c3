//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

pub mod datalog;
pub mod fees;
pub mod golden;
pub mod relations;
pub mod terms;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Parses a single term, for building tool arguments from text.
pub fn term(src: &str) -> logiplan::logic::Term {
    logiplan::logic::parser::read_goal(src, &logiplan::logic::ops::OpTable::default())
        .unwrap_or_else(|e| panic!("{src}: {e}"))
        .term
}
