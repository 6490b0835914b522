//! Signature database, monitoring pipeline, metrics, benchmarks and memory
//! accounting.

pub mod bench;
pub mod db;
pub mod engine;
pub mod experiment;
pub mod memory;
pub mod metrics;

use std::path::Path;

use thiserror::Error;

use crate::automata::AutomataError;
use crate::pltl::PltlError;
use crate::rpni::LearnError;
use crate::synth::SynthError;
use crate::traces::TraceError;

pub use bench::{bench_throughput, Throughput};
pub use db::{
    collect_files, load_db, parse_db, write_db, CompiledSignature, Severity, SignatureBody, SignatureDb,
    SignatureEntry, SignatureKind,
};
pub use engine::{evaluate, run_monitors, Engine, Hit, MetricsReport, MetricsRow, RunReport, StreamMonitor, TraceClass, Verdict};
pub use experiment::{learn_dfa, learn_mm, pltl_problem, synthesize_signature, SynthConfig};
pub use memory::{dfa_bits, mealy_bits, mem_report, published_reference_bits, pltl_bits, MemReport, MemRow, MemTotal};
pub use metrics::Confusion;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HarnessError {
    #[error("database line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("signature name `{0}` used twice")]
    DuplicateName(String),
    #[error("signature `{name}`: {message}")]
    Body { name: String, message: String },
    #[error("signature `{name}` refers to missing file `{path}`")]
    MissingFile { name: String, path: String },
    #[error("signature `{name}`: {message}")]
    AlphabetMismatch { name: String, message: String },
    #[error("trace {trace} has no label")]
    Unlabeled { trace: usize },
    #[error("{0}")]
    Invalid(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Pltl(#[from] PltlError),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Learn(#[from] LearnError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
