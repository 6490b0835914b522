//! Request and response types shared by the HTTP service, its client and
//! the in-process backend, with one handler per operation.
//!
//! Everything travels as text in the crate's own file formats, so a request
//! body is what the CLI would otherwise read from disk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::automata::RunMode;
use crate::harness::experiment::{learn_dfa, learn_mm, synthesize_signature, SynthConfig};
use crate::harness::{
    bench_throughput, evaluate, mem_report, run_monitors, Engine, HarnessError, MemReport, MetricsReport,
    RunReport, SignatureDb, Throughput,
};
use crate::synth::{Candidate, ExternalSolver, SynthError};
use crate::traces::{
    catalog_from_files, gen_benign, gen_malicious, parse_alphabet, parse_traces, write_traces, CorpusAlphabet,
    GenConfig, Layer, Session, TraceError, TraceSkeleton,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Malformed input.
    Invalid,
    NotFound,
    /// Well-formed input the operation could not satisfy, e.g. no formula
    /// within the size bound.
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("{message}")]
pub struct ApiError {
    pub kind: ErrorKind,
    pub message: String,
}

impl ApiError {
    pub fn invalid(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::Invalid,
            message: message.into(),
        }
    }

    pub fn not_found(message: impl Into<String>) -> Self {
        ApiError {
            kind: ErrorKind::NotFound,
            message: message.into(),
        }
    }
}

impl From<HarnessError> for ApiError {
    fn from(e: HarnessError) -> Self {
        let kind = match &e {
            HarnessError::Synth(
                SynthError::BoundExceeded { .. } | SynthError::Timeout | SynthError::External(_),
            )
            | HarnessError::Learn(_) => ErrorKind::Failed,
            HarnessError::Trace(TraceError::UnknownAttack(_)) => ErrorKind::NotFound,
            _ => ErrorKind::Invalid,
        };
        ApiError {
            kind,
            message: e.to_string(),
        }
    }
}

impl From<TraceError> for ApiError {
    fn from(e: TraceError) -> Self {
        HarnessError::from(e).into()
    }
}

/// Signature database as text plus the automaton files it names.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DbSource {
    pub db: String,
    #[serde(default)]
    pub files: BTreeMap<String, String>,
    /// Alphabet file text. Without it PLTL signatures ignore names they do
    /// not mention instead of rejecting them.
    #[serde(default)]
    pub alphabet: Option<String>,
}

impl DbSource {
    pub fn corpus(&self) -> Result<Option<CorpusAlphabet>, ApiError> {
        self.alphabet.as_deref().map(parse_alphabet).transpose().map_err(ApiError::from)
    }

    pub fn compile(&self) -> Result<SignatureDb, ApiError> {
        let corpus = self.corpus()?;
        Ok(SignatureDb::compile(&self.db, &self.files, corpus.as_ref())?)
    }

    pub fn engine(&self) -> Result<Engine, ApiError> {
        Ok(Engine::new(self.compile()?))
    }
}

/// Parsed traces plus rendered parse warnings.
pub fn read_traces(text: &str) -> Result<(Vec<TraceSkeleton>, Vec<String>), ApiError> {
    let parsed = parse_traces(text)?;
    let warnings = parsed
        .warnings
        .iter()
        .map(|w| format!("line {}: {}", w.line, w.message))
        .collect();
    Ok((parsed.traces, warnings))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

pub fn health() -> Health {
    Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorRequest {
    #[serde(flatten)]
    pub source: DbSource,
    pub traces: String,
    #[serde(default)]
    pub mode: RunMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonitorResponse {
    pub report: RunReport,
    #[serde(default)]
    pub warnings: Vec<String>,
}

pub fn monitor(req: &MonitorRequest) -> Result<MonitorResponse, ApiError> {
    let mut engine = req.source.engine()?;
    let (traces, warnings) = read_traces(&req.traces)?;
    let report = run_monitors(&mut engine, &traces, req.mode)?;
    Ok(MonitorResponse { report, warnings })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPltlRequest {
    /// Benign traces.
    pub pos: String,
    /// Attack traces; `@attack-sessions` marks where to cut them.
    pub neg: String,
    #[serde(default)]
    pub alphabet: Option<String>,
    #[serde(default)]
    pub config: SynthConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthPltlResponse {
    /// Best first.
    pub candidates: Vec<Candidate>,
}

pub fn synth_pltl(req: &SynthPltlRequest, external: Option<&ExternalSolver>) -> Result<SynthPltlResponse, ApiError> {
    let (pos, _) = read_traces(&req.pos)?;
    let (neg, _) = read_traces(&req.neg)?;
    let corpus = req.alphabet.as_deref().map(parse_alphabet).transpose()?;
    let candidates = synthesize_signature(&pos, &neg, corpus.as_ref(), &req.config, external)?;
    Ok(SynthPltlResponse { candidates })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthAutomatonRequest {
    pub pos: String,
    /// Attack traces; for Mealy machines each needs an `@label attack`.
    pub neg: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthAutomatonResponse {
    /// Machine in the automaton text format.
    pub machine: String,
    pub states: usize,
    pub transitions: usize,
}

pub fn synth_dfa(req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse, ApiError> {
    let (pos, _) = read_traces(&req.pos)?;
    let (neg, _) = read_traces(&req.neg)?;
    let d = learn_dfa(&pos, &neg)?;
    Ok(SynthAutomatonResponse {
        machine: d.to_text(),
        states: d.state_count(),
        transitions: d.transition_count(),
    })
}

pub fn synth_mm(req: &SynthAutomatonRequest) -> Result<SynthAutomatonResponse, ApiError> {
    let (pos, _) = read_traces(&req.pos)?;
    let (neg, _) = read_traces(&req.neg)?;
    let m = learn_mm(&pos, &neg)?;
    Ok(SynthAutomatonResponse {
        machine: m.to_text(),
        states: m.state_count(),
        transitions: m.transition_count(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GenKind {
    Benign,
    Malicious,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenRequest {
    pub kind: GenKind,
    #[serde(default)]
    pub attack: Option<String>,
    /// Seed sessions as trace text; every session of every trace is pooled.
    /// Defaults to the built-in pool of the layer.
    #[serde(default)]
    pub sessions: Option<String>,
    /// Layer of the built-in pool for benign traces without `sessions`.
    #[serde(default)]
    pub layer: Option<Layer>,
    /// Extra catalog files by file name, as in a catalog directory.
    #[serde(default)]
    pub catalog: BTreeMap<String, String>,
    pub config: GenConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenResponse {
    pub traces: String,
    pub count: usize,
}

pub fn generate(req: &GenRequest) -> Result<GenResponse, ApiError> {
    let catalog = catalog_from_files(&req.catalog)?;
    let layer = match (&req.attack, req.layer) {
        (Some(a), _) => catalog.attack(a)?.layer,
        (None, Some(l)) => l,
        (None, None) => Layer::Nas,
    };
    let pool: Vec<Session> = match &req.sessions {
        Some(text) => read_traces(text)?.0.into_iter().flat_map(|t| t.sessions).collect(),
        None => catalog.benign_pool(layer).to_vec(),
    };
    let traces = match req.kind {
        GenKind::Benign => gen_benign(&pool, &req.config)?,
        GenKind::Malicious => {
            let attack = req
                .attack
                .as_deref()
                .ok_or_else(|| ApiError::invalid("malicious generation needs an attack name"))?;
            gen_malicious(&pool, &catalog, attack, &req.config)?
        }
    };
    Ok(GenResponse {
        count: traces.len(),
        traces: write_traces(&traces),
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalRequest {
    #[serde(flatten)]
    pub source: DbSource,
    pub traces: String,
}

pub fn eval(req: &EvalRequest) -> Result<MetricsReport, ApiError> {
    let mut engine = req.source.engine()?;
    let (traces, _) = read_traces(&req.traces)?;
    Ok(evaluate(&mut engine, &traces)?)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchRequest {
    #[serde(flatten)]
    pub source: DbSource,
    pub traces: String,
    pub repeat: usize,
    #[serde(default)]
    pub mode: RunMode,
}

pub fn bench(req: &BenchRequest) -> Result<Throughput, ApiError> {
    let mut engine = req.source.engine()?;
    let (traces, _) = read_traces(&req.traces)?;
    Ok(bench_throughput(&mut engine, &traces, req.repeat, req.mode)?)
}

pub fn mem(source: &DbSource) -> Result<MemReport, ApiError> {
    Ok(mem_report(&source.compile()?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamCreated {
    pub id: String,
    pub signatures: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamRequest {
    #[serde(flatten)]
    pub source: DbSource,
    #[serde(default)]
    pub mode: RunMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamEvents {
    /// Event lines as in a trace file; blank lines and comments are allowed.
    pub events: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamVerdicts {
    pub verdicts: Vec<crate::harness::Verdict>,
    /// Events consumed by the stream so far.
    pub steps: usize,
}

/// A long-lived monitor fed a few events at a time.
#[derive(Debug, Clone)]
pub struct LiveStream {
    engine: Engine,
    monitor: crate::harness::StreamMonitor,
}

impl LiveStream {
    pub fn new(req: &StreamRequest) -> Result<Self, ApiError> {
        let engine = req.source.engine()?;
        let monitor = engine.stream(req.mode);
        Ok(LiveStream { engine, monitor })
    }

    pub fn signatures(&self) -> usize {
        self.engine.signature_count()
    }

    pub fn feed(&mut self, req: &StreamEvents) -> Result<StreamVerdicts, ApiError> {
        let (traces, _) = read_traces(&req.events)?;
        let mut ids = Vec::new();
        for t in &traces {
            ids.extend(self.engine.intern_trace(t)?);
        }
        let mut verdicts = Vec::new();
        for id in ids {
            verdicts.extend(self.monitor.step(&self.engine, 0, id));
        }
        Ok(StreamVerdicts {
            verdicts,
            steps: self.monitor.steps(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RLF_DB: &str = "[signature]\nname=rlf_report\nlayer=RRC\nkind=pltl\nseverity=high\nbody=(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))\n";

    #[test]
    fn json_shapes() {
        let req = MonitorRequest {
            source: DbSource {
                db: RLF_DB.into(),
                ..DbSource::default()
            },
            traces: "rrcConnectionRequest\nueInformationRequest\n".into(),
            mode: RunMode::StopFirst,
        };
        let v = serde_json::to_value(&req).unwrap();
        assert_eq!(v["mode"], "stop-first");
        assert!(v["db"].is_string());
        let back: MonitorRequest = serde_json::from_value(v).unwrap();
        assert_eq!(back, req);
        let resp = monitor(&req).unwrap();
        let v = serde_json::to_value(&resp).unwrap();
        assert_eq!(v["report"]["verdicts"][0]["hit"]["kind"], "pltl-false");
        assert_eq!(v["report"]["verdicts"][0]["step"], 1);
    }

    #[test]
    fn generate_then_evaluate() {
        let mut cfg = GenConfig::new(3, 20, 1);
        let b = generate(&GenRequest {
            kind: GenKind::Benign,
            attack: None,
            sessions: None,
            layer: Some(Layer::Rrc),
            catalog: BTreeMap::new(),
            config: cfg,
        })
        .unwrap();
        cfg.seed = 2;
        let m = generate(&GenRequest {
            kind: GenKind::Malicious,
            attack: Some("rlf_report".into()),
            sessions: None,
            layer: None,
            catalog: BTreeMap::new(),
            config: cfg,
        })
        .unwrap();
        assert_eq!(m.count, 20);
        let r = eval(&EvalRequest {
            source: DbSource {
                db: RLF_DB.into(),
                ..DbSource::default()
            },
            traces: b.traces + "---\n" + &m.traces,
        })
        .unwrap();
        assert_eq!(r.rows[0].f1, 1.0);
    }

    #[test]
    fn stream_keeps_state_between_batches() {
        let mut s = LiveStream::new(&StreamRequest {
            source: DbSource {
                db: RLF_DB.into(),
                ..DbSource::default()
            },
            mode: RunMode::ReportAll,
        })
        .unwrap();
        let a = s.feed(&StreamEvents { events: "rrcConnectionRequest\nsecurityModeComplete\n".into() }).unwrap();
        assert!(a.verdicts.is_empty());
        let b = s.feed(&StreamEvents { events: "ueInformationRequest\n".into() }).unwrap();
        assert!(b.verdicts.is_empty());
        assert_eq!(b.steps, 3);
        let c = s.feed(&StreamEvents { events: "rrcConnectionRequest\nueInformationRequest\n".into() }).unwrap();
        assert_eq!(c.verdicts.len(), 1);
        assert_eq!(c.verdicts[0].step, 4);
    }

    #[test]
    fn errors_are_classified() {
        let e = monitor(&MonitorRequest {
            source: DbSource {
                db: "[signature]\nname=a\n".into(),
                ..DbSource::default()
            },
            traces: String::new(),
            mode: RunMode::StopFirst,
        })
        .unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invalid);
        let e = generate(&GenRequest {
            kind: GenKind::Malicious,
            attack: None,
            sessions: None,
            layer: None,
            catalog: BTreeMap::new(),
            config: GenConfig::new(1, 1, 0),
        })
        .unwrap_err();
        assert_eq!(e.kind, ErrorKind::Invalid);
    }
}
