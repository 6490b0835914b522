//! Dispatches events to every signature of a database.
//!
//! Events are interned once: for each distinct event the engine keeps the
//! PLTL state or automaton symbol id per signature, so a step is a table
//! lookup plus one monitor update per signature.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use super::db::{SignatureBody, SignatureDb, SignatureKind};
use super::{Confusion, HarnessError};
use crate::automata::RunMode;
use crate::pltl::{Monitor, State, TraceLabel};
use crate::rpni::vulnerability_output;
use crate::traces::{Event, Layer, TraceSkeleton};

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "output", rename_all = "kebab-case")]
pub enum Hit {
    DfaReject,
    MmOutput(String),
    PltlFalse,
}

impl fmt::Display for Hit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hit::DfaReject => f.write_str("dfa-reject"),
            Hit::MmOutput(o) => write!(f, "mm-output({o})"),
            Hit::PltlFalse => f.write_str("pltl-false"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub trace: usize,
    pub step: usize,
    pub signature: String,
    pub hit: Hit,
}

impl Verdict {
    /// Attack this verdict points at: the signature name, or for Mealy
    /// machines the output with its `vulnerability_` prefix removed.
    pub fn attack(&self) -> &str {
        match &self.hit {
            Hit::MmOutput(o) => o.strip_prefix("vulnerability_").unwrap_or(o),
            _ => &self.signature,
        }
    }
}

/// Per-event encoding for one signature.
#[derive(Debug, Clone)]
enum Encoded {
    State(State),
    /// `None` when the event is outside the automaton's alphabet.
    Symbol(Option<u32>),
}

/// Internal hit with the Mealy output kept as an index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RawHit {
    Dfa,
    Mm(u32),
    Pltl,
}

/// Immutable monitoring setup shared by all streams.
#[derive(Debug, Clone)]
pub struct Engine {
    db: SignatureDb,
    strict: bool,
    index: HashMap<String, u32>,
    /// `encoded[event * signatures + sig]`
    encoded: Vec<Encoded>,
}

impl Engine {
    /// PLTL events are checked against the corpus alphabet when the
    /// database was compiled with one; otherwise unknown names are ignored.
    pub fn new(db: SignatureDb) -> Self {
        let strict = db.alphabet_size.is_some();
        Engine {
            db,
            strict,
            index: HashMap::new(),
            encoded: Vec::new(),
        }
    }

    pub fn db(&self) -> &SignatureDb {
        &self.db
    }

    pub fn signature_count(&self) -> usize {
        self.db.signatures.len()
    }

    /// Number of distinct events seen so far.
    pub fn event_count(&self) -> usize {
        self.index.len()
    }

    /// Id of `event`, encoding it for every signature on first sight.
    pub fn intern(&mut self, event: &Event) -> Result<u32, HarnessError> {
        let symbol = event.symbol();
        if let Some(&id) = self.index.get(&symbol) {
            return Ok(id);
        }
        for sig in &self.db.signatures {
            let enc = match &sig.body {
                SignatureBody::Pltl { alphabet, .. } => {
                    if self.strict {
                        Encoded::State(event.to_state(alphabet).map_err(|e| {
                            HarnessError::AlphabetMismatch {
                                name: sig.entry.name.clone(),
                                message: e.to_string(),
                            }
                        })?)
                    } else {
                        Encoded::State(event.to_state_lenient(alphabet))
                    }
                }
                SignatureBody::Dfa(d) => Encoded::Symbol(d.symbol_id(&symbol).map(|i| i as u32)),
                SignatureBody::Mm(m) => Encoded::Symbol(m.input_id(&symbol).map(|i| i as u32)),
            };
            self.encoded.push(enc);
        }
        let id = self.index.len() as u32;
        self.index.insert(symbol, id);
        Ok(id)
    }

    pub fn intern_trace(&mut self, trace: &TraceSkeleton) -> Result<Vec<u32>, HarnessError> {
        trace.events().map(|e| self.intern(e)).collect()
    }

    pub fn stream(&self, mode: RunMode) -> StreamMonitor {
        StreamMonitor::new(self, mode)
    }

    pub(crate) fn hit(&self, sig: usize, raw: RawHit) -> Hit {
        match raw {
            RawHit::Dfa => Hit::DfaReject,
            RawHit::Pltl => Hit::PltlFalse,
            RawHit::Mm(o) => match &self.db.signatures[sig].body {
                SignatureBody::Mm(m) => Hit::MmOutput(m.outputs()[o as usize].clone()),
                _ => unreachable!("mealy hit from a non-mealy signature"),
            },
        }
    }
}

#[derive(Debug, Clone)]
enum Slot {
    Pltl(Monitor),
    Dfa(Option<u32>),
    Mm(u32),
}

/// Monitoring state of one trace stream. State carries over session
/// boundaries; call [`StreamMonitor::reset`] between unrelated traces.
#[derive(Debug, Clone)]
pub struct StreamMonitor {
    mode: RunMode,
    slots: Vec<Slot>,
    stopped: Vec<bool>,
    skipped: Vec<u64>,
    undefined: Vec<u64>,
    steps: usize,
}

impl StreamMonitor {
    pub fn new(engine: &Engine, mode: RunMode) -> Self {
        let slots: Vec<Slot> = engine
            .db
            .signatures
            .iter()
            .map(|s| match &s.body {
                SignatureBody::Pltl { formula, alphabet } => Slot::Pltl(Monitor::new(formula, alphabet.len())),
                SignatureBody::Dfa(d) => Slot::Dfa(Some(d.start() as u32)),
                SignatureBody::Mm(m) => Slot::Mm(m.start() as u32),
            })
            .collect();
        let n = slots.len();
        StreamMonitor {
            mode,
            slots,
            stopped: vec![false; n],
            skipped: vec![0; n],
            undefined: vec![0; n],
            steps: 0,
        }
    }

    pub fn reset(&mut self, engine: &Engine) {
        *self = StreamMonitor::new(engine, self.mode);
    }

    /// Steps consumed since the last reset.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Feeds one interned event; `on_hit` gets the signature index of every
    /// violation at this step, in database order.
    #[inline]
    pub(crate) fn step_with(&mut self, engine: &Engine, event: u32, mut on_hit: impl FnMut(usize, RawHit)) {
        let n = self.slots.len();
        let row = &engine.encoded[event as usize * n..(event as usize + 1) * n];
        for (k, slot) in self.slots.iter_mut().enumerate() {
            if self.stopped[k] {
                continue;
            }
            let hit = match (slot, &row[k], &engine.db.signatures[k].body) {
                (Slot::Pltl(m), Encoded::State(s), _) => (!m.step_unchecked(s)).then_some(RawHit::Pltl),
                (Slot::Dfa(state), Encoded::Symbol(sym), SignatureBody::Dfa(d)) => match sym {
                    None => {
                        self.skipped[k] += 1;
                        None
                    }
                    Some(sym) => {
                        *state = state.and_then(|q| d.next(q as usize, *sym as usize).map(|t| t as u32));
                        let ok = state.is_some_and(|q| d.is_accepting(q as usize));
                        (!ok).then_some(RawHit::Dfa)
                    }
                },
                (Slot::Mm(state), Encoded::Symbol(sym), SignatureBody::Mm(m)) => match sym {
                    None => {
                        self.skipped[k] += 1;
                        None
                    }
                    Some(sym) => {
                        let out = match m.next(*state as usize, *sym as usize) {
                            Some((to, out)) => {
                                *state = to as u32;
                                out
                            }
                            None => {
                                self.undefined[k] += 1;
                                m.benign_id()
                            }
                        };
                        (out != m.benign_id()).then_some(RawHit::Mm(out as u32))
                    }
                },
                _ => unreachable!("slot and signature kinds always match"),
            };
            if let Some(h) = hit {
                on_hit(k, h);
                if self.mode == RunMode::StopFirst {
                    self.stopped[k] = true;
                }
            }
        }
        self.steps += 1;
    }

    /// Feeds one interned event and returns the verdicts it caused.
    pub fn step(&mut self, engine: &Engine, trace: usize, event: u32) -> Vec<Verdict> {
        let step = self.steps;
        let mut out = Vec::new();
        self.step_with(engine, event, |k, raw| {
            out.push(Verdict {
                trace,
                step,
                signature: engine.db.signatures[k].entry.name.clone(),
                hit: engine.hit(k, raw),
            })
        });
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceClass {
    pub trace: usize,
    /// Attacks flagged in this trace, in first-detection order. Empty means
    /// benign.
    pub attacks: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureDiagnostics {
    /// Events outside an automaton's alphabet.
    pub skipped_events: u64,
    /// Mealy steps with no defined transition.
    pub undefined_transitions: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunReport {
    pub verdicts: Vec<Verdict>,
    pub classes: Vec<TraceClass>,
    pub events: u64,
    /// Only signatures with something to report.
    pub diagnostics: BTreeMap<String, SignatureDiagnostics>,
}

impl RunReport {
    pub fn has_violations(&self) -> bool {
        !self.verdicts.is_empty()
    }

    pub fn flagged_traces(&self) -> usize {
        self.classes.iter().filter(|c| !c.attacks.is_empty()).count()
    }
}

/// Runs each trace through a fresh stream.
pub fn run_monitors(engine: &mut Engine, traces: &[TraceSkeleton], mode: RunMode) -> Result<RunReport, HarnessError> {
    let mut report = RunReport::default();
    let n = engine.signature_count();
    let mut skipped = vec![0u64; n];
    let mut undefined = vec![0u64; n];
    for (t, trace) in traces.iter().enumerate() {
        let ids = engine.intern_trace(trace)?;
        let mut stream = engine.stream(mode);
        let mut attacks: Vec<String> = Vec::new();
        for id in ids {
            for v in stream.step(engine, t, id) {
                if !attacks.iter().any(|a| a == v.attack()) {
                    attacks.push(v.attack().to_string());
                }
                report.verdicts.push(v);
            }
        }
        report.events += stream.steps as u64;
        for k in 0..n {
            skipped[k] += stream.skipped[k];
            undefined[k] += stream.undefined[k];
        }
        report.classes.push(TraceClass { trace: t, attacks });
    }
    for (k, sig) in engine.db.signatures.iter().enumerate() {
        if skipped[k] > 0 || undefined[k] > 0 {
            report.diagnostics.insert(
                sig.entry.name.clone(),
                SignatureDiagnostics {
                    skipped_events: skipped[k],
                    undefined_transitions: undefined[k],
                },
            );
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub signature: String,
    pub kind: SignatureKind,
    pub layer: Layer,
    /// Attack whose traces count as positives.
    pub target: String,
    #[serde(flatten)]
    pub counts: Confusion,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub rows: Vec<MetricsRow>,
}

impl MetricsReport {
    pub fn row(&self, signature: &str, target: &str) -> Option<&MetricsRow> {
        self.rows.iter().find(|r| r.signature == signature && r.target == target)
    }
}

/// Per-signature detection counts.
///
/// A PLTL or DFA signature targets the attack it is named after; a Mealy
/// machine gets one row per vulnerability output. Benign traces flagged
/// by a row are false positives, traces of the target attack are the
/// positives, and traces of other attacks are left out of that row.
pub fn evaluate(engine: &mut Engine, traces: &[TraceSkeleton]) -> Result<MetricsReport, HarnessError> {
    let labels: Vec<&TraceLabel> = traces
        .iter()
        .enumerate()
        .map(|(i, t)| t.label.as_ref().ok_or(HarnessError::Unlabeled { trace: i }))
        .collect::<Result<_, _>>()?;
    // (signature index, target) for each row
    let mut rows: Vec<(usize, String)> = Vec::new();
    for (k, sig) in engine.db.signatures.iter().enumerate() {
        match &sig.body {
            SignatureBody::Mm(m) => {
                for o in m.outputs() {
                    if let Some(a) = o.strip_prefix("vulnerability_") {
                        rows.push((k, a.to_string()));
                    }
                }
            }
            _ => rows.push((k, sig.entry.name.clone())),
        }
    }
    let mut counts = vec![Confusion::default(); rows.len()];
    for (t, trace) in traces.iter().enumerate() {
        let ids = engine.intern_trace(trace)?;
        let mut stream = engine.stream(RunMode::ReportAll);
        let mut hits: Vec<(usize, RawHit)> = Vec::new();
        for id in ids {
            stream.step_with(engine, id, |k, raw| {
                if !hits.contains(&(k, raw)) {
                    hits.push((k, raw));
                }
            });
        }
        for (r, (k, target)) in rows.iter().enumerate() {
            let relevant = match labels[t] {
                TraceLabel::Benign => Some(false),
                TraceLabel::Attack(a) if a == target => Some(true),
                TraceLabel::Attack(_) => None,
            };
            let Some(is_attack) = relevant else { continue };
            let flagged = hits.iter().any(|&(hk, raw)| {
                hk == *k
                    && match engine.hit(hk, raw) {
                        Hit::MmOutput(o) => o == vulnerability_output(target),
                        _ => true,
                    }
            });
            counts[r].record(is_attack, flagged);
        }
    }
    let report = rows
        .into_iter()
        .zip(counts)
        .map(|((k, target), c)| {
            let e = &engine.db.signatures[k].entry;
            MetricsRow {
                signature: e.name.clone(),
                kind: e.kind,
                layer: e.layer,
                target,
                counts: c,
                precision: c.precision(),
                recall: c.recall(),
                f1: c.f1(),
            }
        })
        .collect();
    Ok(MetricsReport { rows: report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltl::earliest_violation;
    use crate::traces::{gen_benign, gen_malicious, GenConfig, VariantCatalog};

    const RLF: &str = "(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))";

    fn rlf_db(corpus: bool) -> SignatureDb {
        let text = format!("[signature]\nname=rlf_report\nlayer=RRC\nkind=pltl\nseverity=high\nbody={RLF}\n");
        let cat = VariantCatalog::builtin();
        let a = cat.corpus_alphabet();
        SignatureDb::compile(&text, &BTreeMap::new(), corpus.then_some(&a)).unwrap()
    }

    #[test]
    fn benign_corpus_has_no_verdicts() {
        let cat = VariantCatalog::builtin();
        let ts = gen_benign(cat.benign_pool(Layer::Rrc), &GenConfig::new(5, 200, 4)).unwrap();
        let mut e = Engine::new(rlf_db(true));
        let r = run_monitors(&mut e, &ts, RunMode::StopFirst).unwrap();
        assert!(r.verdicts.is_empty());
        assert_eq!(r.flagged_traces(), 0);
    }

    #[test]
    fn rlf_flagged_at_plaintext_request() {
        let cat = VariantCatalog::builtin();
        let ts = gen_malicious(cat.benign_pool(Layer::Rrc), &cat, "rlf_report", &GenConfig::new(4, 100, 8)).unwrap();
        let db = rlf_db(true);
        let alphabet = cat.corpus_alphabet().alphabet().unwrap();
        let SignatureBody::Pltl { formula, .. } = &db.signatures[0].body else { unreachable!() };
        let formula = formula.clone();
        let mut e = Engine::new(db);
        let r = run_monitors(&mut e, &ts, RunMode::StopFirst).unwrap();
        for (i, t) in ts.iter().enumerate() {
            let mine: Vec<_> = r.verdicts.iter().filter(|v| v.trace == i).collect();
            assert_eq!(mine.len(), 1);
            let oracle = earliest_violation(&formula, &t.to_trace(&alphabet).unwrap()).unwrap();
            assert_eq!(Some(mine[0].step), oracle);
            let ev: Vec<&Event> = t.events().collect();
            assert_eq!(ev[mine[0].step].label, "ueInformationRequest");
            assert_eq!(r.classes[i].attacks, ["rlf_report"]);
        }
    }

    #[test]
    fn lenient_without_corpus() {
        let mut e = Engine::new(rlf_db(false));
        let t = TraceSkeleton::new(vec![crate::traces::Session::from_symbols("rrcConnectionRequest ueInformationRequest unheardOf").unwrap()]);
        let r = run_monitors(&mut e, std::slice::from_ref(&t), RunMode::ReportAll).unwrap();
        assert_eq!(r.verdicts.len(), 1);
        let mut strict = Engine::new(rlf_db(true));
        assert!(matches!(
            run_monitors(&mut strict, &[t], RunMode::ReportAll),
            Err(HarnessError::AlphabetMismatch { .. })
        ));
    }

    fn automata_db() -> SignatureDb {
        let text = "[signature]\nname=d\nlayer=NAS\nkind=dfa\nseverity=low\nbody=d.dfa\n\n[signature]\nname=m\nlayer=NAS\nkind=mm\nseverity=low\nbody=m.mm\n";
        let mut files = BTreeMap::new();
        files.insert(
            "d.dfa".to_string(),
            "states: 2\nstart: 0\naccepting: 0\nalphabet: a b\ntrans: 0 a 0\ntrans: 0 b 1\ntrans: 1 a 1\n".to_string(),
        );
        files.insert(
            "m.mm".to_string(),
            "states: 1\nstart: 0\nalphabet: a b\noutputs: benign vulnerability_x\ntrans: 0 a 0 benign\ntrans: 0 b 0 vulnerability_x\n"
                .to_string(),
        );
        SignatureDb::compile(text, &files, None).unwrap()
    }

    #[test]
    fn automata_skip_unknown_and_stop_first() {
        let mut e = Engine::new(automata_db());
        let t = TraceSkeleton::new(vec![crate::traces::Session::from_symbols("a c b a b").unwrap()]);
        let r = run_monitors(&mut e, std::slice::from_ref(&t), RunMode::StopFirst).unwrap();
        let got: Vec<_> = r.verdicts.iter().map(|v| (v.step, v.signature.as_str(), v.hit.clone())).collect();
        assert_eq!(got, [(2, "d", Hit::DfaReject), (2, "m", Hit::MmOutput("vulnerability_x".into()))]);
        assert_eq!(r.diagnostics["d"].skipped_events, 1);
        assert_eq!(r.classes[0].attacks, ["d", "x"]);
        let all = run_monitors(&mut e, &[t], RunMode::ReportAll).unwrap();
        assert_eq!(all.verdicts.len(), 3 + 2);
    }

    #[test]
    fn evaluate_counts() {
        let mut e = Engine::new(automata_db());
        let mk = |s: &str, l: TraceLabel| {
            TraceSkeleton::new(vec![crate::traces::Session::from_symbols(s).unwrap()]).with_label(l)
        };
        let ts = vec![
            mk("a a", TraceLabel::Benign),
            mk("a b", TraceLabel::Benign),
            mk("b", TraceLabel::Attack("x".into())),
            mk("a", TraceLabel::Attack("x".into())),
            mk("b", TraceLabel::Attack("d".into())),
        ];
        let r = evaluate(&mut e, &ts).unwrap();
        let m = r.row("m", "x").unwrap();
        assert_eq!(m.counts, Confusion::new(1, 1, 1, 1));
        let d = r.row("d", "d").unwrap();
        assert_eq!(d.counts, Confusion::new(1, 1, 0, 1));
        assert_eq!(r.rows.len(), 2);
        let mut unl = ts.clone();
        unl[0].label = None;
        assert_eq!(evaluate(&mut e, &unl), Err(HarnessError::Unlabeled { trace: 0 }));
    }
}
