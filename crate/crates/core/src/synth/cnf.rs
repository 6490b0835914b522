use std::fmt::{self, Write as _};
use std::ops::Not;

use super::SynthError;

/// Literal: variable index shifted left, low bit set when negated.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit(u32);

impl Lit {
    pub fn pos(var: u32) -> Self {
        Lit(var << 1)
    }

    pub fn neg(var: u32) -> Self {
        Lit(var << 1 | 1)
    }

    pub fn new(var: u32, positive: bool) -> Self {
        if positive {
            Lit::pos(var)
        } else {
            Lit::neg(var)
        }
    }

    #[inline]
    pub fn var(self) -> u32 {
        self.0 >> 1
    }

    #[inline]
    pub fn is_neg(self) -> bool {
        self.0 & 1 == 1
    }

    #[inline]
    pub(crate) fn code(self) -> usize {
        self.0 as usize
    }

    /// 1-based signed DIMACS integer.
    pub fn to_dimacs(self) -> i64 {
        let v = self.var() as i64 + 1;
        if self.is_neg() {
            -v
        } else {
            v
        }
    }

    pub fn from_dimacs(n: i64) -> Option<Self> {
        if n == 0 {
            return None;
        }
        let var = (n.unsigned_abs() - 1) as u32;
        Some(Lit::new(var, n > 0))
    }

    /// Truth of the literal under a total assignment.
    pub fn eval(self, model: &[bool]) -> bool {
        model[self.var() as usize] != self.is_neg()
    }
}

impl Not for Lit {
    type Output = Lit;

    #[inline]
    fn not(self) -> Lit {
        Lit(self.0 ^ 1)
    }
}

impl fmt::Debug for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_dimacs())
    }
}

/// Clause set over variables `0..var_count`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CnfFormula {
    var_count: u32,
    clauses: Vec<Vec<Lit>>,
}

impl CnfFormula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn new_var(&mut self) -> u32 {
        self.var_count += 1;
        self.var_count - 1
    }

    pub fn var_count(&self) -> usize {
        self.var_count as usize
    }

    pub fn clauses(&self) -> &[Vec<Lit>] {
        &self.clauses
    }

    pub fn add_clause(&mut self, lits: impl Into<Vec<Lit>>) -> Result<(), SynthError> {
        let lits = lits.into();
        if lits.is_empty() {
            return Err(SynthError::EmptyClause);
        }
        if let Some(l) = lits.iter().find(|l| l.var() >= self.var_count) {
            return Err(SynthError::UnknownVariable(l.var() as usize + 1));
        }
        self.clauses.push(lits);
        Ok(())
    }

    /// Like `add_clause` for clauses the encoder builds from its own
    /// variables.
    pub(crate) fn push(&mut self, lits: impl Into<Vec<Lit>>) {
        let lits = lits.into();
        debug_assert!(!lits.is_empty());
        debug_assert!(lits.iter().all(|l| l.var() < self.var_count));
        self.clauses.push(lits);
    }

    pub(crate) fn at_most_one(&mut self, lits: &[Lit]) {
        for (k, &a) in lits.iter().enumerate() {
            for &b in &lits[k + 1..] {
                self.push([!a, !b]);
            }
        }
    }

    pub(crate) fn exactly_one(&mut self, lits: &[Lit]) {
        self.push(lits.to_vec());
        self.at_most_one(lits);
    }

    pub fn is_satisfied_by(&self, model: &[bool]) -> bool {
        self.clauses
            .iter()
            .all(|c| c.iter().any(|l| l.eval(model)))
    }

    pub fn to_dimacs(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "p cnf {} {}", self.var_count, self.clauses.len());
        for c in &self.clauses {
            for l in c {
                let _ = write!(out, "{} ", l.to_dimacs());
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str) -> Result<Self, SynthError> {
        let mut cnf = CnfFormula::new();
        let mut declared = None;
        let mut current = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('c') || line.starts_with('%') {
                continue;
            }
            let bad = |msg: &str| SynthError::Dimacs {
                line: i + 1,
                message: msg.to_string(),
            };
            if let Some(header) = line.strip_prefix('p') {
                let parts: Vec<&str> = header.split_whitespace().collect();
                match parts.as_slice() {
                    ["cnf", v, c] => {
                        let v: u32 = v.parse().map_err(|_| bad("bad variable count"))?;
                        let c: usize = c.parse().map_err(|_| bad("bad clause count"))?;
                        cnf.var_count = v;
                        declared = Some(c);
                    }
                    _ => return Err(bad("expected `p cnf <vars> <clauses>`")),
                }
                continue;
            }
            if declared.is_none() {
                return Err(bad("clause before header"));
            }
            for tok in line.split_whitespace() {
                let n: i64 = tok.parse().map_err(|_| bad("bad literal"))?;
                match Lit::from_dimacs(n) {
                    None => {
                        if current.is_empty() {
                            return Err(bad("empty clause"));
                        }
                        cnf.add_clause(std::mem::take(&mut current))
                            .map_err(|e| bad(&e.to_string()))?;
                    }
                    Some(l) => current.push(l),
                }
            }
        }
        if !current.is_empty() {
            cnf.add_clause(current)?;
        }
        match declared {
            Some(n) if n != cnf.clauses.len() => Err(SynthError::Dimacs {
                line: 0,
                message: format!("header declares {n} clauses, found {}", cnf.clauses.len()),
            }),
            None => Err(SynthError::Dimacs {
                line: 0,
                message: "missing header".into(),
            }),
            _ => Ok(cnf),
        }
    }
}
