//! SAT-based synthesis of small PLTL formulas separating positive from
//! negative traces.

mod cnf;
mod encode;
mod external;
mod search;
mod solver;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pltl::{Alphabet, Operator, Trace};

pub use cnf::{CnfFormula, Lit};
pub use encode::{Encoding, NodeLabel};
pub use external::ExternalSolver;
pub use search::{
    canonical, encode, select_best, split_holdout, synthesize_candidates, synthesize_min,
    synthesize_candidates_with, synthesize_ranked, synthesize_ranked_with, Candidate, HoldoutSplit,
};
pub use solver::{sat_solve, SolveResult, Solver, SolverStats};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SynthError {
    #[error("empty clause")]
    EmptyClause,
    #[error("literal references undeclared variable {0}")]
    UnknownVariable(usize),
    #[error("DIMACS line {line}: {message}")]
    Dimacs { line: usize, message: String },
    #[error("alphabet is empty")]
    EmptyAlphabet,
    #[error("trace has width {found}, alphabet has {expected}")]
    AlphabetMismatch { expected: usize, found: usize },
    #[error("positive trace {positive} equals negative trace {negative}")]
    InconsistentSample { positive: usize, negative: usize },
    #[error("no consistent formula with at most {max} nodes")]
    BoundExceeded { max: usize },
    #[error("synthesis timed out")]
    Timeout,
    #[error("size must be at least 1")]
    InvalidSize,
    #[error("formula uses an operator outside the menu")]
    OperatorNotInMenu,
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error("decoded formula {0} disagrees with the sample")]
    Verification(String),
    #[error("no candidates to choose from")]
    NoCandidates,
    #[error("external solver: {0}")]
    External(String),
}

/// When a formula counts as satisfied by a trace.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SatSemantics {
    /// Holds at every position; what the monitors check.
    #[default]
    Global,
    /// Holds at the last position.
    FinalPosition,
}

/// Operators without `Once` and `Historically`.
pub const CORE_OPERATORS: [Operator; 7] = [
    Operator::True,
    Operator::False,
    Operator::Not,
    Operator::And,
    Operator::Or,
    Operator::Yesterday,
    Operator::Since,
];

#[derive(Debug, Clone)]
pub struct SynthesisProblem {
    pub alphabet: Alphabet,
    pub positives: Vec<Trace>,
    pub negatives: Vec<Trace>,
    /// Largest formula size tried.
    pub max_size: usize,
    pub operators: Vec<Operator>,
    pub semantics: SatSemantics,
    pub timeout: Option<Duration>,
}

impl SynthesisProblem {
    pub const DEFAULT_MAX_SIZE: usize = 12;
    pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(60);

    pub fn new(alphabet: Alphabet, positives: Vec<Trace>, negatives: Vec<Trace>) -> Self {
        SynthesisProblem {
            alphabet,
            positives,
            negatives,
            max_size: Self::DEFAULT_MAX_SIZE,
            operators: Operator::ALL.to_vec(),
            semantics: SatSemantics::Global,
            timeout: Some(Self::DEFAULT_TIMEOUT),
        }
    }

    pub fn with_max_size(mut self, max: usize) -> Self {
        self.max_size = max;
        self
    }

    pub fn with_operators(mut self, ops: &[Operator]) -> Self {
        self.operators = ops.to_vec();
        self
    }

    pub fn with_semantics(mut self, semantics: SatSemantics) -> Self {
        self.semantics = semantics;
        self
    }

    pub fn with_timeout(mut self, timeout: Option<Duration>) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        self.check_alphabet()?;
        for (i, p) in self.positives.iter().enumerate() {
            if let Some(j) = self.negatives.iter().position(|n| n.states() == p.states()) {
                return Err(SynthError::InconsistentSample {
                    positive: i,
                    negative: j,
                });
            }
        }
        Ok(())
    }

    pub(crate) fn check_alphabet(&self) -> Result<(), SynthError> {
        if self.alphabet.is_empty() {
            return Err(SynthError::EmptyAlphabet);
        }
        let width = self.alphabet.len();
        if let Some(t) = self
            .positives
            .iter()
            .chain(&self.negatives)
            .find(|t| t.width() != width)
        {
            return Err(SynthError::AlphabetMismatch {
                expected: width,
                found: t.width(),
            });
        }
        Ok(())
    }

    /// Whether `f` is consistent with the whole sample.
    pub fn accepts(&self, f: &crate::pltl::Formula) -> bool {
        let sat = |t: &Trace| satisfies(f, t, self.semantics);
        self.positives.iter().all(sat) && !self.negatives.iter().any(sat)
    }
}

pub(crate) fn satisfies(f: &crate::pltl::Formula, t: &Trace, semantics: SatSemantics) -> bool {
    let r = match semantics {
        SatSemantics::Global => crate::pltl::holds_globally(f, t),
        SatSemantics::FinalPosition => crate::pltl::holds_at_end(f, t),
    };
    r.expect("problem validated against the alphabet")
}
