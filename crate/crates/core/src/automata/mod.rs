//! DFA and Mealy-machine signatures with step monitors.

mod dfa;
mod mealy;
mod text;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use dfa::{Dfa, DfaCursor};
pub use mealy::{MealyCursor, MealyMachine, BENIGN};

/// Sentinel for an undefined transition in dense tables.
pub(crate) const NONE: u32 = u32::MAX;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    #[error("symbol `{0}` is not in the alphabet")]
    UnknownSymbol(String),
    #[error("duplicate symbol `{0}` in alphabet")]
    DuplicateSymbol(String),
    #[error("state {state} out of range for {count} states")]
    StateOutOfRange { state: usize, count: usize },
    #[error("nondeterministic transition from state {state} on `{symbol}`")]
    Nondeterministic { state: usize, symbol: String },
    #[error("output alphabet must contain `benign`")]
    MissingBenign,
    #[error("machine needs at least one state")]
    NoStates,
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RunMode {
    #[default]
    StopFirst,
    ReportAll,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepOutcome {
    Continue,
    /// `None` for DFA rejections, the output label for Mealy machines.
    Violation(Option<String>),
}

impl StepOutcome {
    pub fn is_violation(&self) -> bool {
        matches!(self, StepOutcome::Violation(_))
    }
}

impl fmt::Display for StepOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepOutcome::Continue => f.write_str("ok"),
            StepOutcome::Violation(None) => f.write_str("violation"),
            StepOutcome::Violation(Some(name)) => write!(f, "violation({name})"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunVerdict {
    pub outcomes: Vec<StepOutcome>,
    pub first_violation: Option<usize>,
    /// Mealy steps that hit an undefined transition.
    pub undefined_transitions: usize,
}

impl RunVerdict {
    pub(crate) fn record(&mut self, outcome: StepOutcome) {
        if outcome.is_violation() && self.first_violation.is_none() {
            self.first_violation = Some(self.outcomes.len());
        }
        self.outcomes.push(outcome);
    }

    pub fn violations(&self) -> impl Iterator<Item = (usize, &StepOutcome)> {
        self.outcomes
            .iter()
            .enumerate()
            .filter(|(_, o)| o.is_violation())
    }
}

/// Maps symbol names to dense indices, preserving declaration order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub(crate) struct SymbolTable {
    names: Vec<String>,
    index: std::collections::HashMap<String, u32>,
}

impl SymbolTable {
    pub(crate) fn new<I, S>(names: I) -> Result<Self, AutomataError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut table = SymbolTable::default();
        for name in names {
            let name = name.into();
            if table.index.contains_key(&name) {
                return Err(AutomataError::DuplicateSymbol(name));
            }
            table.index.insert(name.clone(), table.names.len() as u32);
            table.names.push(name);
        }
        Ok(table)
    }

    pub(crate) fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).map(|&i| i as usize)
    }

    pub(crate) fn lookup(&self, name: &str) -> Result<usize, AutomataError> {
        self.get(name)
            .ok_or_else(|| AutomataError::UnknownSymbol(name.to_string()))
    }

    pub(crate) fn names(&self) -> &[String] {
        &self.names
    }

    pub(crate) fn len(&self) -> usize {
        self.names.len()
    }
}
