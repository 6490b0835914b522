//! Lower-bound memory for each signature kind.
//!
//! Every log is `ceil(log2 x)` with `log2 1 = 0`:
//!
//! * DFA: `M(2 lg N + lg A) + 2N + lg N` bits, 12-byte header
//! * Mealy: `M(2 lg N + lg I + lg O) + N + lg N` bits, 16-byte header
//! * PLTL: `P lg A + T lg 9` bits for the tree plus two live bits per
//!   distinct subformula, 8-byte header
//!
//! `P` counts proposition leaves and `T` every other node.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::db::{SignatureBody, SignatureDb, SignatureKind};
use crate::pltl::{Formula, Monitor};
use crate::traces::Layer;

/// Operator kinds a PLTL node can take.
pub const PLTL_OPERATOR_KINDS: u64 = 9;

pub const DFA_HEADER_BYTES: u64 = 12;
pub const MEALY_HEADER_BYTES: u64 = 16;
pub const PLTL_HEADER_BYTES: u64 = 8;

pub fn clog2(x: u64) -> u64 {
    if x <= 1 {
        0
    } else {
        64 - u64::from((x - 1).leading_zeros())
    }
}

pub fn dfa_bits(n: u64, m: u64, a: u64) -> u64 {
    m * (2 * clog2(n) + clog2(a)) + 2 * n + clog2(n)
}

pub fn mealy_bits(n: u64, m: u64, i: u64, o: u64) -> u64 {
    m * (2 * clog2(n) + clog2(i) + clog2(o)) + n + clog2(n)
}

/// Formula tree only; add [`pltl_monitor_bits`] for the live state.
pub fn pltl_bits(p: u64, t: u64, a: u64) -> u64 {
    p * clog2(a) + t * clog2(PLTL_OPERATOR_KINDS)
}

/// Previous and current truth bit for each distinct subformula.
pub fn pltl_monitor_bits(distinct_subformulas: u64) -> u64 {
    2 * distinct_subformulas
}

/// Totals as printed in the original evaluation, for display next to ours.
pub fn published_reference_bits(layer: Layer, kind: SignatureKind) -> u64 {
    match (layer, kind) {
        (Layer::Nas, SignatureKind::Pltl) => 90,
        (Layer::Nas, SignatureKind::Mm) => 1186,
        (Layer::Nas, SignatureKind::Dfa) => 8146,
        (Layer::Rrc, SignatureKind::Pltl) => 104,
        (Layer::Rrc, SignatureKind::Mm) => 629,
        (Layer::Rrc, SignatureKind::Dfa) => 166_886,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum MemParams {
    Dfa { n: u64, m: u64, a: u64 },
    Mm { n: u64, m: u64, i: u64, o: u64 },
    Pltl { p: u64, t: u64, a: u64, subformulas: u64 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemRow {
    pub signature: String,
    pub layer: Layer,
    pub params: MemParams,
    /// Structure bits by the formula for the kind.
    pub structure_bits: u64,
    /// Live monitor bits (PLTL only; automata keep one state index, which
    /// the `lg N` term already counts).
    pub monitor_bits: u64,
    pub header_bytes: u64,
}

impl MemRow {
    pub fn kind(&self) -> SignatureKind {
        match self.params {
            MemParams::Dfa { .. } => SignatureKind::Dfa,
            MemParams::Mm { .. } => SignatureKind::Mm,
            MemParams::Pltl { .. } => SignatureKind::Pltl,
        }
    }

    pub fn bits(&self) -> u64 {
        self.structure_bits + self.monitor_bits
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemTotal {
    pub layer: Layer,
    pub kind: SignatureKind,
    pub signatures: usize,
    pub bits: u64,
    pub header_bytes: u64,
    pub reference_bits: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemReport {
    pub rows: Vec<MemRow>,
    pub totals: Vec<MemTotal>,
}

fn pltl_counts(f: &Formula) -> (u64, u64) {
    let p = f.proposition_count() as u64;
    (p, f.size() as u64 - p)
}

pub fn mem_report(db: &SignatureDb) -> MemReport {
    let mut rows = Vec::new();
    for sig in &db.signatures {
        let (params, structure_bits, monitor_bits, header_bytes) = match &sig.body {
            SignatureBody::Dfa(d) => {
                let (n, m, a) = (d.state_count() as u64, d.transition_count() as u64, d.alphabet().len() as u64);
                (MemParams::Dfa { n, m, a }, dfa_bits(n, m, a), 0, DFA_HEADER_BYTES)
            }
            SignatureBody::Mm(mm) => {
                let (n, m, i, o) = (
                    mm.state_count() as u64,
                    mm.transition_count() as u64,
                    mm.inputs().len() as u64,
                    mm.outputs().len() as u64,
                );
                (MemParams::Mm { n, m, i, o }, mealy_bits(n, m, i, o), 0, MEALY_HEADER_BYTES)
            }
            SignatureBody::Pltl { formula, alphabet } => {
                let (p, t) = pltl_counts(formula);
                let a = alphabet.len() as u64;
                let subformulas = Monitor::new(formula, alphabet.len()).subformula_count() as u64;
                (
                    MemParams::Pltl { p, t, a, subformulas },
                    pltl_bits(p, t, a),
                    pltl_monitor_bits(subformulas),
                    PLTL_HEADER_BYTES,
                )
            }
        };
        rows.push(MemRow {
            signature: sig.entry.name.clone(),
            layer: sig.entry.layer,
            params,
            structure_bits,
            monitor_bits,
            header_bytes,
        });
    }
    let mut totals: BTreeMap<(u8, u8), MemTotal> = BTreeMap::new();
    for r in &rows {
        let kind = r.kind();
        let key = (r.layer as u8, kind as u8);
        let t = totals.entry(key).or_insert_with(|| MemTotal {
            layer: r.layer,
            kind,
            signatures: 0,
            bits: 0,
            header_bytes: 0,
            reference_bits: published_reference_bits(r.layer, kind),
        });
        t.signatures += 1;
        t.bits += r.bits();
        t.header_bytes += r.header_bytes;
    }
    MemReport {
        rows,
        totals: totals.into_values().collect(),
    }
}
