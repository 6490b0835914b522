//! Past-time LTL: formulas, reference semantics and the incremental monitor.

mod alphabet;
mod formula;
mod monitor;
mod semantics;

use thiserror::Error;

pub use alphabet::{Alphabet, PropId, State, Trace, TraceLabel};
pub(crate) use alphabet::is_identifier;
pub use formula::{parse_formula, parse_formula_open, Formula, FormulaDisplay, Operator};
pub use monitor::Monitor;
pub use semantics::{earliest_violation, eval_at, holds_at_end, holds_globally};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PltlError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("`{operator}` at byte {position} takes {expected} argument(s), found {found}")]
    Arity {
        position: usize,
        operator: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown proposition `{0}`")]
    UnknownProposition(String),
    #[error("duplicate proposition `{0}`")]
    DuplicateProposition(String),
    #[error("`{0}` is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("alphabet mismatch: expected width {expected}, found {found}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("position {index} out of range for trace of length {len}")]
    IndexOutOfRange { index: usize, len: usize },
}
