//! Runs a DIMACS-speaking solver binary instead of the embedded one.

use std::path::PathBuf;
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use super::cnf::{CnfFormula, Lit};
use super::solver::SolveResult;
use super::SynthError;

/// Solver invoked as `program args… file.cnf`, reporting in the usual
/// competition output format (`s SATISFIABLE`, `v … 0`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExternalSolver {
    pub program: PathBuf,
    pub args: Vec<String>,
}

static COUNTER: AtomicU64 = AtomicU64::new(0);

impl ExternalSolver {
    pub fn new(program: impl Into<PathBuf>) -> Self {
        ExternalSolver {
            program: program.into(),
            args: Vec::new(),
        }
    }

    pub fn solve(&self, cnf: &CnfFormula) -> Result<SolveResult, SynthError> {
        let path = std::env::temp_dir().join(format!(
            "phoenix-{}-{}.cnf",
            std::process::id(),
            COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        std::fs::write(&path, cnf.to_dimacs()).map_err(|e| SynthError::External(e.to_string()))?;
        let output = Command::new(&self.program)
            .args(&self.args)
            .arg(&path)
            .output();
        let _ = std::fs::remove_file(&path);
        let output = output.map_err(|e| SynthError::External(format!("{}: {e}", self.program.display())))?;
        parse_output(&String::from_utf8_lossy(&output.stdout), cnf.var_count())
    }
}

pub(crate) fn parse_output(text: &str, vars: usize) -> Result<SolveResult, SynthError> {
    let mut status = None;
    let mut model = vec![false; vars];
    for line in text.lines() {
        let line = line.trim();
        if let Some(s) = line.strip_prefix("s ") {
            status = Some(s.trim().to_string());
        } else if let Some(v) = line.strip_prefix("v ") {
            for tok in v.split_whitespace() {
                let n: i64 = tok
                    .parse()
                    .map_err(|_| SynthError::External(format!("bad model literal `{tok}`")))?;
                if let Some(l) = Lit::from_dimacs(n) {
                    if let Some(slot) = model.get_mut(l.var() as usize) {
                        *slot = !l.is_neg();
                    }
                }
            }
        }
    }
    match status.as_deref() {
        Some("SATISFIABLE") => Ok(SolveResult::Sat(model)),
        Some("UNSATISFIABLE") => Ok(SolveResult::Unsat),
        Some("UNKNOWN") => Ok(SolveResult::Unknown),
        _ => Err(SynthError::External("no `s` status line in solver output".into())),
    }
}
