//! Trace data model, the trace file format, corpus generation and the
//! built-in attack catalog.

mod catalog;
mod format;
mod generate;
mod model;

use std::path::Path;

use thiserror::Error;

use crate::pltl::PltlError;

pub use catalog::{add_catalog_file, catalog_from_files, load_catalog, AttackSpec, VariantCatalog};
pub use format::{
    parse_alphabet, parse_traces, parse_traces_with, write_alphabet, write_traces, ParseWarning,
    ParsedTraces,
};
pub use generate::{
    attack_session_bounds, gen_benign, gen_malicious, AttackCount, GenConfig, SessionSampling,
};
pub use model::{
    event_to_state, CorpusAlphabet, Event, Layer, Session, TraceSkeleton,
    DEFAULT_INITIATION_LABELS,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("message label `{0}` is not in the alphabet")]
    UnknownLabel(String),
    #[error("predicate `{0}` is not in the alphabet")]
    UnknownPredicate(String),
    #[error("bad event `{0}`")]
    InvalidEvent(String),
    #[error("seed session pool is empty")]
    EmptyPool,
    #[error("unknown attack `{0}`")]
    UnknownAttack(String),
    #[error("attack `{attack}`: {message}")]
    MalformedSkeleton { attack: String, message: String },
    #[error("{0}")]
    InvalidConfig(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Pltl(#[from] PltlError),
}

impl TraceError {
    pub(crate) fn io(path: &Path, e: std::io::Error) -> Self {
        TraceError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }
}
