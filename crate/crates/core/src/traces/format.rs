//! Line-oriented trace files.
//!
//! ```text
//! # comment
//! @label attack rlf_report
//! @attack-sessions 1
//! rrcConnectionRequest
//! rrcConnectionSetup
//!
//! rrcConnectionRequest
//! ueInformationRequest
//! ---
//! @label benign
//! attachRequest
//! identityRequest imsi=0 imei=1
//! ```
//!
//! Blank lines separate sessions, `---` separates traces. `@attack-sessions`
//! records which sessions were injected by the generator.

use std::fmt::Write as _;

use super::model::{CorpusAlphabet, Event, Session, TraceSkeleton, DEFAULT_INITIATION_LABELS};
use super::TraceError;
use crate::pltl::{is_identifier, TraceLabel};

/// Non-fatal finding while reading a trace file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedTraces {
    pub traces: Vec<TraceSkeleton>,
    pub warnings: Vec<ParseWarning>,
}

fn perr(line: usize, message: impl Into<String>) -> TraceError {
    TraceError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_event(line: &str, lineno: usize) -> Result<Event, TraceError> {
    let mut toks = line.split_whitespace();
    let label = toks.next().unwrap_or_default();
    if !is_identifier(label) {
        return Err(perr(lineno, format!("bad message label `{label}`")));
    }
    let mut e = Event::new(label);
    for tok in toks {
        let (name, value) = tok
            .split_once('=')
            .ok_or_else(|| perr(lineno, format!("expected pred=0|1, got `{tok}`")))?;
        if !is_identifier(name) {
            return Err(perr(lineno, format!("bad predicate name `{name}`")));
        }
        if e.predicates.iter().any(|(p, _)| p == name) {
            return Err(perr(lineno, format!("predicate `{name}` given twice")));
        }
        let value = match value {
            "0" => false,
            "1" => true,
            _ => return Err(perr(lineno, format!("predicate value must be 0 or 1, got `{value}`"))),
        };
        e.predicates.push((name.to_string(), value));
    }
    Ok(e)
}

struct Builder {
    trace: TraceSkeleton,
    session: Vec<Event>,
    session_line: usize,
    touched: bool,
}

impl Builder {
    fn new() -> Self {
        Builder {
            trace: TraceSkeleton::new(Vec::new()),
            session: Vec::new(),
            session_line: 0,
            touched: false,
        }
    }

    fn close_session(&mut self, initiation: &[&str], warnings: &mut Vec<ParseWarning>) {
        if self.session.is_empty() {
            return;
        }
        let s = Session::new(std::mem::take(&mut self.session));
        if !s.starts_with_initiation(initiation) {
            warnings.push(ParseWarning {
                line: self.session_line,
                message: format!(
                    "session starts with `{}`, not a connection-initiation message",
                    s.events[0].label
                ),
            });
        }
        self.trace.sessions.push(s);
    }

    fn finish(
        mut self,
        initiation: &[&str],
        warnings: &mut Vec<ParseWarning>,
        line: usize,
    ) -> Result<Option<TraceSkeleton>, TraceError> {
        self.close_session(initiation, warnings);
        if let Some(&k) = self
            .trace
            .attack_sessions
            .iter()
            .find(|&&k| k >= self.trace.sessions.len())
        {
            return Err(perr(
                line,
                format!(
                    "attack session {k} out of range ({} sessions)",
                    self.trace.sessions.len()
                ),
            ));
        }
        Ok(self.touched.then_some(self.trace))
    }
}

/// Reads traces with the default connection-initiation labels.
pub fn parse_traces(text: &str) -> Result<ParsedTraces, TraceError> {
    parse_traces_with(text, &DEFAULT_INITIATION_LABELS)
}

pub fn parse_traces_with(text: &str, initiation: &[&str]) -> Result<ParsedTraces, TraceError> {
    let mut out = ParsedTraces::default();
    let mut b = Builder::new();
    let mut last = 0;
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        last = lineno;
        let line = raw.trim();
        if line.starts_with('#') {
            continue;
        }
        if line.is_empty() {
            b.close_session(initiation, &mut out.warnings);
            continue;
        }
        if line == "---" {
            let done = std::mem::replace(&mut b, Builder::new());
            if let Some(t) = done.finish(initiation, &mut out.warnings, lineno)? {
                out.traces.push(t);
            }
            continue;
        }
        if let Some(rest) = line.strip_prefix('@') {
            let mut toks = rest.split_whitespace();
            match toks.next() {
                Some("label") => {
                    if b.trace.label.is_some() || !b.trace.sessions.is_empty() || !b.session.is_empty() {
                        return Err(perr(lineno, "@label must come first in a trace"));
                    }
                    let label = match (toks.next(), toks.next(), toks.next()) {
                        (Some("benign"), None, _) => TraceLabel::Benign,
                        (Some("attack"), Some(name), None) if is_identifier(name) => {
                            TraceLabel::Attack(name.to_string())
                        }
                        _ => {
                            return Err(perr(lineno, "expected `@label benign` or `@label attack <name>`"))
                        }
                    };
                    b.trace.label = Some(label);
                }
                Some("attack-sessions") => {
                    for tok in toks {
                        let k: usize = tok
                            .parse()
                            .map_err(|_| perr(lineno, format!("bad session index `{tok}`")))?;
                        b.trace.attack_sessions.push(k);
                    }
                }
                other => {
                    return Err(perr(
                        lineno,
                        format!("unknown directive `@{}`", other.unwrap_or_default()),
                    ))
                }
            }
            b.touched = true;
            continue;
        }
        let e = parse_event(line, lineno)?;
        if b.session.is_empty() {
            b.session_line = lineno;
        }
        b.session.push(e);
        b.touched = true;
    }
    if let Some(t) = b.finish(initiation, &mut out.warnings, last)? {
        out.traces.push(t);
    }
    Ok(out)
}

pub fn write_traces(traces: &[TraceSkeleton]) -> String {
    let mut out = String::new();
    for (i, t) in traces.iter().enumerate() {
        if i > 0 {
            out.push_str("---\n");
        }
        match &t.label {
            Some(TraceLabel::Benign) => out.push_str("@label benign\n"),
            Some(TraceLabel::Attack(name)) => {
                let _ = writeln!(out, "@label attack {name}");
            }
            None => {}
        }
        if !t.attack_sessions.is_empty() {
            out.push_str("@attack-sessions");
            for k in &t.attack_sessions {
                let _ = write!(out, " {k}");
            }
            out.push('\n');
        }
        for (k, s) in t.sessions.iter().enumerate() {
            if k > 0 {
                out.push('\n');
            }
            for e in &s.events {
                let _ = writeln!(out, "{e}");
            }
        }
    }
    out
}

/// Alphabet file: labels one per line, then `%predicates`, then predicates.
pub fn parse_alphabet(text: &str) -> Result<CorpusAlphabet, TraceError> {
    let mut labels = Vec::new();
    let mut predicates = Vec::new();
    let mut in_preds = false;
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "%predicates" {
            if in_preds {
                return Err(perr(i + 1, "second %predicates marker"));
            }
            in_preds = true;
            continue;
        }
        if !is_identifier(line) {
            return Err(perr(i + 1, format!("bad identifier `{line}`")));
        }
        if in_preds {
            predicates.push(line.to_string());
        } else {
            labels.push(line.to_string());
        }
    }
    CorpusAlphabet::new(labels, predicates)
}

pub fn write_alphabet(a: &CorpusAlphabet) -> String {
    let mut out = String::new();
    for l in &a.labels {
        out.push_str(l);
        out.push('\n');
    }
    out.push_str("%predicates\n");
    for p in &a.predicates {
        out.push_str(p);
        out.push('\n');
    }
    out
}
