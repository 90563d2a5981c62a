//! Expression evaluation: a from-scratch structural evaluator and the
//! incremental engine used during search.

pub mod eliminate;
pub mod engine;
pub mod scratch;
pub mod violation;

pub use engine::Engine;
pub use violation::{Attribution, Label, ViolationMap};

/// Violation assigned to a Boolean expression with an undefined operand;
/// every violation saturates here.
pub const UNDEFINED_VIOLATION: u64 = 1 << 32;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Evaluation {
    pub violation: u64,
    /// Objective in the user's sign; `None` when absent or undefined.
    pub objective: Option<i64>,
    pub constraint_violations: Vec<u64>,
}
