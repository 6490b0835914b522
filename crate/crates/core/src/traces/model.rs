use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::TraceError;
use crate::pltl::{is_identifier, Alphabet, PropId, State, Trace, TraceLabel};

/// Control-plane layer a message or signature belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Layer {
    #[serde(rename = "NAS")]
    Nas,
    #[serde(rename = "RRC")]
    Rrc,
}

impl Layer {
    pub fn as_str(self) -> &'static str {
        match self {
            Layer::Nas => "NAS",
            Layer::Rrc => "RRC",
        }
    }
}

impl fmt::Display for Layer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Layer {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "NAS" | "nas" => Ok(Layer::Nas),
            "RRC" | "rrc" => Ok(Layer::Rrc),
            _ => Err(format!("unknown layer `{s}` (expected NAS or RRC)")),
        }
    }
}

/// Labels that open a new session unless configured otherwise.
pub const DEFAULT_INITIATION_LABELS: [&str; 4] =
    ["rrcConnectionRequest", "attachRequest", "serviceRequest", "tauRequest"];

/// One protocol message: its type plus Boolean predicates over its payload.
/// Predicates keep their written order so files round-trip byte for byte.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub predicates: Vec<(String, bool)>,
}

impl Event {
    pub fn new(label: impl Into<String>) -> Self {
        Event {
            label: label.into(),
            predicates: Vec::new(),
        }
    }

    pub fn with(mut self, predicate: impl Into<String>, value: bool) -> Self {
        self.predicates.push((predicate.into(), value));
        self
    }

    /// Value of a predicate; absent means false.
    pub fn predicate(&self, name: &str) -> bool {
        self.predicates.iter().any(|(p, v)| *v && p == name)
    }

    /// Automaton symbol: the label followed by `+pred` for each true
    /// predicate, sorted. `identityRequest+imsi`.
    pub fn symbol(&self) -> String {
        let mut on: Vec<&str> = self
            .predicates
            .iter()
            .filter(|(_, v)| *v)
            .map(|(p, _)| p.as_str())
            .collect();
        on.sort_unstable();
        on.dedup();
        let mut s = self.label.clone();
        for p in on {
            s.push('+');
            s.push_str(p);
        }
        s
    }

    /// Inverse of [`Event::symbol`].
    pub fn from_symbol(symbol: &str) -> Result<Self, TraceError> {
        let mut parts = symbol.split('+');
        let label = parts.next().unwrap_or_default();
        if !is_identifier(label) {
            return Err(TraceError::InvalidEvent(symbol.to_string()));
        }
        let mut e = Event::new(label);
        for p in parts {
            if !is_identifier(p) {
                return Err(TraceError::InvalidEvent(symbol.to_string()));
            }
            e.predicates.push((p.to_string(), true));
        }
        Ok(e)
    }

    /// One-hot label proposition plus predicate propositions; everything
    /// else false.
    pub fn to_state(&self, alphabet: &Alphabet) -> Result<State, TraceError> {
        let mut s = State::new(alphabet.len());
        let id = alphabet
            .get(&self.label)
            .ok_or_else(|| TraceError::UnknownLabel(self.label.clone()))?;
        s.set(id, true);
        for (p, v) in &self.predicates {
            let id = alphabet
                .get(p)
                .ok_or_else(|| TraceError::UnknownPredicate(p.clone()))?;
            if *v {
                s.set(id, true);
            }
        }
        Ok(s)
    }

    /// Like [`Event::to_state`] but names outside the alphabet are ignored.
    pub fn to_state_lenient(&self, alphabet: &Alphabet) -> State {
        let mut s = State::new(alphabet.len());
        if let Some(id) = alphabet.get(&self.label) {
            s.set(id, true);
        }
        for (p, v) in &self.predicates {
            if let (true, Some(id)) = (*v, alphabet.get(p)) {
                s.set(id, true);
            }
        }
        s
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label)?;
        for (p, v) in &self.predicates {
            write!(f, " {p}={}", u8::from(*v))?;
        }
        Ok(())
    }
}

/// Free function form of [`Event::to_state`].
pub fn event_to_state(e: &Event, alphabet: &Alphabet) -> Result<State, TraceError> {
    e.to_state(alphabet)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Session {
    pub events: Vec<Event>,
}

impl Session {
    pub fn new(events: Vec<Event>) -> Self {
        Session { events }
    }

    /// Space-separated symbols, as produced by [`Event::symbol`].
    pub fn from_symbols(text: &str) -> Result<Self, TraceError> {
        let events = text
            .split_whitespace()
            .map(Event::from_symbol)
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Session { events })
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn starts_with_initiation(&self, initiation: &[&str]) -> bool {
        self.events
            .first()
            .is_some_and(|e| initiation.contains(&e.label.as_str()))
    }
}

/// A trace as a sequence of sessions, with the ground-truth label and the
/// positions of injected attack sessions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TraceSkeleton {
    pub sessions: Vec<Session>,
    pub label: Option<TraceLabel>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attack_sessions: Vec<usize>,
}

impl TraceSkeleton {
    pub fn new(sessions: Vec<Session>) -> Self {
        TraceSkeleton {
            sessions,
            label: None,
            attack_sessions: Vec::new(),
        }
    }

    pub fn with_label(mut self, label: TraceLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn is_attack(&self) -> bool {
        self.label.as_ref().is_some_and(TraceLabel::is_attack)
    }

    pub fn events(&self) -> impl Iterator<Item = &Event> + '_ {
        self.sessions.iter().flat_map(|s| &s.events)
    }

    /// Number of events.
    pub fn len(&self) -> usize {
        self.sessions.iter().map(Session::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Event index range of each session.
    pub fn session_spans(&self) -> Vec<Range<usize>> {
        let mut at = 0;
        self.sessions
            .iter()
            .map(|s| {
                let r = at..at + s.len();
                at = r.end;
                r
            })
            .collect()
    }

    /// Session holding event `index`.
    pub fn session_of(&self, index: usize) -> Option<usize> {
        self.session_spans().iter().position(|r| r.contains(&index))
    }

    pub fn symbols(&self) -> Vec<String> {
        self.events().map(Event::symbol).collect()
    }

    /// Symbols up to the end of the first attack session, or all of them.
    pub fn symbols_through_first_attack(&self) -> Vec<String> {
        let spans = self.session_spans();
        let end = self
            .attack_sessions
            .iter()
            .min()
            .map_or(self.len(), |&k| spans[k].end);
        self.events().take(end).map(Event::symbol).collect()
    }

    /// The trace cut after its first attack session (unchanged when there
    /// is none).
    pub fn through_first_attack(&self) -> TraceSkeleton {
        match self.attack_sessions.iter().min() {
            Some(&k) => TraceSkeleton {
                sessions: self.sessions[..=k].to_vec(),
                label: self.label.clone(),
                attack_sessions: vec![k],
            },
            None => self.clone(),
        }
    }

    /// Encodes every event over `alphabet`; the label is carried over.
    pub fn to_trace(&self, alphabet: &Alphabet) -> Result<Trace, TraceError> {
        let mut t = Trace::new(alphabet.len());
        for e in self.events() {
            t.push(e.to_state(alphabet)?)?;
        }
        t.label = self.label.clone();
        Ok(t)
    }
}

/// Message labels and payload predicates of a corpus. The PLTL alphabet is
/// the labels followed by the predicates.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct CorpusAlphabet {
    pub labels: Vec<String>,
    pub predicates: Vec<String>,
}

impl CorpusAlphabet {
    pub fn new(labels: Vec<String>, predicates: Vec<String>) -> Result<Self, TraceError> {
        let a = CorpusAlphabet { labels, predicates };
        a.alphabet()?;
        Ok(a)
    }

    /// Everything mentioned by the given traces, in first-seen order.
    pub fn from_skeletons<'a, I>(traces: I) -> Self
    where
        I: IntoIterator<Item = &'a TraceSkeleton>,
    {
        let mut a = CorpusAlphabet::default();
        for t in traces {
            a.extend_with(t.events());
        }
        a
    }

    pub fn extend_with<'a, I>(&mut self, events: I)
    where
        I: IntoIterator<Item = &'a Event>,
    {
        for e in events {
            if !self.labels.contains(&e.label) {
                self.labels.push(e.label.clone());
            }
            for (p, _) in &e.predicates {
                if !self.predicates.contains(p) {
                    self.predicates.push(p.clone());
                }
            }
        }
    }

    pub fn alphabet(&self) -> Result<Alphabet, TraceError> {
        Ok(Alphabet::new(self.labels.iter().chain(&self.predicates))?)
    }

    pub fn len(&self) -> usize {
        self.labels.len() + self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Only the propositions that are ever true in `traces`, kept in this
    /// alphabet's order. A proposition that is never true is equivalent to
    /// `false` on the sample, so dropping it keeps synthesis small.
    pub fn restrict_to<'a, I>(&self, traces: I) -> CorpusAlphabet
    where
        I: IntoIterator<Item = &'a TraceSkeleton>,
    {
        let mut used = BTreeSet::new();
        for t in traces {
            for e in t.events() {
                used.insert(e.label.as_str());
                for (p, v) in &e.predicates {
                    if *v {
                        used.insert(p.as_str());
                    }
                }
            }
        }
        CorpusAlphabet {
            labels: self.labels.iter().filter(|l| used.contains(l.as_str())).cloned().collect(),
            predicates: self
                .predicates
                .iter()
                .filter(|p| used.contains(p.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn is_label(&self, id: PropId) -> bool {
        id.0 < self.labels.len()
    }
}
