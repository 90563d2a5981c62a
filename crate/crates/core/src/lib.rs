//! Constraint-based local search over abstract constraint specifications.

pub mod domain;
pub mod value;
pub mod eval;
pub mod lang;
pub mod neighbourhood;
pub mod search;
pub mod harness;
