//! Tables for the terminal (aligned columns) or for spreadsheets (CSV).

use anyhow::Result;
use clap::ValueEnum;
use phoenix_core::harness::{MemReport, MetricsReport, RunReport, Throughput};
use phoenix_core::synth::Candidate;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
}

struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    fn render(&self, fmt: Format) -> Result<String> {
        match fmt {
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                Ok(String::from_utf8(w.into_inner()?)?)
            }
            Format::Text => {
                let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (w, c) in width.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let mut out = String::new();
                let header: Vec<String> = self.header.iter().map(|h| h.to_string()).collect();
                for r in std::iter::once(&header).chain(&self.rows) {
                    let cells: Vec<String> = r.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
                    out.push_str(cells.join("  ").trim_end());
                    out.push('\n');
                }
                Ok(out)
            }
        }
    }
}

fn f3(x: f64) -> String {
    format!("{x:.3}")
}

pub fn monitor(report: &RunReport, fmt: Format) -> Result<String> {
    let mut t = Table::new(&["trace", "step", "signature", "hit"]);
    for v in &report.verdicts {
        t.push(vec![v.trace.to_string(), v.step.to_string(), v.signature.clone(), v.hit.to_string()]);
    }
    let mut out = t.render(fmt)?;
    if fmt == Format::Text {
        out.push_str(&format!(
            "{} traces, {} events, {} flagged\n",
            report.classes.len(),
            report.events,
            report.flagged_traces()
        ));
        for (sig, d) in &report.diagnostics {
            out.push_str(&format!(
                "{sig}: {} events outside its alphabet, {} undefined transitions\n",
                d.skipped_events, d.undefined_transitions
            ));
        }
    }
    Ok(out)
}

pub fn candidates(cands: &[Candidate], fmt: Format) -> Result<String> {
    let mut t = Table::new(&["rank", "size", "f1", "formula"]);
    for (i, c) in cands.iter().enumerate() {
        t.push(vec![(i + 1).to_string(), c.size.to_string(), f3(c.f1), c.formula.clone()]);
    }
    t.render(fmt)
}

pub fn metrics(report: &MetricsReport, fmt: Format) -> Result<String> {
    let mut t = Table::new(&[
        "signature", "kind", "layer", "target", "tp", "fp", "fn", "tn", "precision", "recall", "f1",
    ]);
    for r in &report.rows {
        t.push(vec![
            r.signature.clone(),
            r.kind.to_string(),
            r.layer.to_string(),
            r.target.clone(),
            r.counts.tp.to_string(),
            r.counts.fp.to_string(),
            r.counts.fn_.to_string(),
            r.counts.tn.to_string(),
            f3(r.precision),
            f3(r.recall),
            f3(r.f1),
        ]);
    }
    t.render(fmt)
}

pub fn throughput(tp: &Throughput, fmt: Format) -> Result<String> {
    let mut t = Table::new(&["messages", "runs", "mean_msg_per_s", "sd_msg_per_s", "hits"]);
    t.push(vec![
        tp.messages.to_string(),
        tp.runs.to_string(),
        format!("{:.1}", tp.mean),
        format!("{:.1}", tp.sd),
        tp.hits.to_string(),
    ]);
    t.render(fmt)
}

pub fn memory(report: &MemReport, fmt: Format) -> Result<String> {
    let mut t = Table::new(&["signature", "layer", "kind", "structure_bits", "monitor_bits", "header_bytes"]);
    for r in &report.rows {
        t.push(vec![
            r.signature.clone(),
            r.layer.to_string(),
            r.kind().to_string(),
            r.structure_bits.to_string(),
            r.monitor_bits.to_string(),
            r.header_bytes.to_string(),
        ]);
    }
    let mut totals = Table::new(&["layer", "kind", "signatures", "bits", "header_bytes", "reference_bits"]);
    for r in &report.totals {
        totals.push(vec![
            r.layer.to_string(),
            r.kind.to_string(),
            r.signatures.to_string(),
            r.bits.to_string(),
            r.header_bytes.to_string(),
            r.reference_bits.to_string(),
        ]);
    }
    let mut out = t.render(fmt)?;
    out.push('\n');
    out.push_str(&totals.render(fmt)?);
    Ok(out)
}
