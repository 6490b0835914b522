use std::fmt::Write as _;

use super::text::{self, err, parse_usize, single_usize};
use super::{AutomataError, RunMode, RunVerdict, StepOutcome, SymbolTable, NONE};

/// Partial DFA. Undefined transitions lead to an implicit rejecting sink.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dfa {
    states: usize,
    start: usize,
    accepting: Vec<bool>,
    symbols: SymbolTable,
    // states × symbols, NONE where undefined
    table: Vec<u32>,
}

impl Dfa {
    pub fn new<I, S>(states: usize, start: usize, alphabet: I) -> Result<Self, AutomataError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        if states == 0 {
            return Err(AutomataError::NoStates);
        }
        if start >= states {
            return Err(AutomataError::StateOutOfRange {
                state: start,
                count: states,
            });
        }
        let symbols = SymbolTable::new(alphabet)?;
        Ok(Dfa {
            states,
            start,
            accepting: vec![false; states],
            table: vec![NONE; states * symbols.len()],
            symbols,
        })
    }

    fn check_state(&self, s: usize) -> Result<(), AutomataError> {
        if s < self.states {
            Ok(())
        } else {
            Err(AutomataError::StateOutOfRange {
                state: s,
                count: self.states,
            })
        }
    }

    pub fn set_accepting(&mut self, state: usize, accepting: bool) -> Result<(), AutomataError> {
        self.check_state(state)?;
        self.accepting[state] = accepting;
        Ok(())
    }

    pub fn add_transition(&mut self, from: usize, symbol: &str, to: usize) -> Result<(), AutomataError> {
        let sym = self.symbols.lookup(symbol)?;
        self.add_transition_id(from, sym, to)
    }

    pub fn add_transition_id(&mut self, from: usize, symbol: usize, to: usize) -> Result<(), AutomataError> {
        self.check_state(from)?;
        self.check_state(to)?;
        let slot = &mut self.table[from * self.symbols.len() + symbol];
        if *slot != NONE && *slot as usize != to {
            return Err(AutomataError::Nondeterministic {
                state: from,
                symbol: self.symbols.names()[symbol].clone(),
            });
        }
        *slot = to as u32;
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn is_accepting(&self, state: usize) -> bool {
        self.accepting[state]
    }

    pub fn accepting_states(&self) -> Vec<usize> {
        (0..self.states).filter(|&s| self.accepting[s]).collect()
    }

    pub fn alphabet(&self) -> &[String] {
        self.symbols.names()
    }

    pub fn symbol_id(&self, name: &str) -> Option<usize> {
        self.symbols.get(name)
    }

    pub fn transition_count(&self) -> usize {
        self.table.iter().filter(|&&t| t != NONE).count()
    }

    #[inline]
    pub fn next(&self, state: usize, symbol: usize) -> Option<usize> {
        match self.table[state * self.symbols.len() + symbol] {
            NONE => None,
            t => Some(t as usize),
        }
    }

    /// Defined transitions as `(from, symbol, to)`, ordered by state then symbol.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &str, usize)> + '_ {
        let a = self.symbols.len();
        self.table
            .iter()
            .enumerate()
            .filter(|(_, &t)| t != NONE)
            .map(move |(i, &t)| (i / a, self.symbols.names()[i % a].as_str(), t as usize))
    }

    pub fn cursor(&self) -> DfaCursor<'_> {
        DfaCursor {
            dfa: self,
            state: Some(self.start),
        }
    }

    pub fn run<S: AsRef<str>>(&self, word: &[S], mode: RunMode) -> Result<RunVerdict, AutomataError> {
        let ids = word
            .iter()
            .map(|s| self.symbols.lookup(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.run_ids(&ids, mode))
    }

    pub fn run_ids(&self, word: &[usize], mode: RunMode) -> RunVerdict {
        let mut cursor = self.cursor();
        let mut verdict = RunVerdict::default();
        for &sym in word {
            let ok = cursor.step(sym);
            verdict.record(if ok {
                StepOutcome::Continue
            } else {
                StepOutcome::Violation(None)
            });
            if !ok && mode == RunMode::StopFirst {
                break;
            }
        }
        verdict
    }

    /// Whether the whole word ends in an accepting state.
    pub fn accepts(&self, word: &[usize]) -> bool {
        let mut state = self.start;
        for &sym in word {
            match self.next(state, sym) {
                Some(t) => state = t,
                None => return false,
            }
        }
        self.accepting[state]
    }

    pub fn parse(text: &str) -> Result<Self, AutomataError> {
        let lines = text::lines(text)?;
        let mut states = None;
        let mut start = None;
        let mut accepting = Vec::new();
        let mut alphabet = None;
        let mut trans = Vec::new();
        for line in &lines {
            match line.key {
                "states" => states = Some(single_usize(line)?),
                "start" => start = Some(single_usize(line)?),
                "accepting" => {
                    for v in &line.values {
                        accepting.push((line.number, parse_usize(line.number, v)?));
                    }
                }
                "alphabet" => alphabet = Some(line.values.clone()),
                "trans" => match line.values.as_slice() {
                    [from, sym, to] => trans.push((
                        line.number,
                        parse_usize(line.number, from)?,
                        *sym,
                        parse_usize(line.number, to)?,
                    )),
                    _ => return Err(err(line.number, "expected `trans: from symbol to`")),
                },
                other => return Err(err(line.number, format!("unknown key `{other}`"))),
            }
        }
        let states = states.ok_or_else(|| err(0, "missing `states`"))?;
        let start = start.ok_or_else(|| err(0, "missing `start`"))?;
        let alphabet = alphabet.ok_or_else(|| err(0, "missing `alphabet`"))?;
        let mut dfa = Dfa::new(states, start, alphabet)?;
        for (line, s) in accepting {
            dfa.set_accepting(s, true).map_err(|e| err(line, e.to_string()))?;
        }
        for (line, from, sym, to) in trans {
            dfa.add_transition(from, sym, to)
                .map_err(|e| err(line, e.to_string()))?;
        }
        Ok(dfa)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states: {}", self.states);
        let _ = writeln!(out, "start: {}", self.start);
        let acc: Vec<String> = self.accepting_states().iter().map(|s| s.to_string()).collect();
        let _ = writeln!(out, "accepting: {}", acc.join(" "));
        let _ = writeln!(out, "alphabet: {}", self.symbols.names().join(" "));
        for (from, sym, to) in self.transitions() {
            let _ = writeln!(out, "trans: {from} {sym} {to}");
        }
        out
    }
}

/// Streaming position in a [`Dfa`]; `None` is the rejecting sink.
#[derive(Debug, Clone)]
pub struct DfaCursor<'a> {
    dfa: &'a Dfa,
    state: Option<usize>,
}

impl DfaCursor<'_> {
    /// Advances on `symbol` and reports whether the new state accepts.
    #[inline]
    pub fn step(&mut self, symbol: usize) -> bool {
        self.state = self.state.and_then(|s| self.dfa.next(s, symbol));
        self.state.is_some_and(|s| self.dfa.accepting[s])
    }

    pub fn state(&self) -> Option<usize> {
        self.state
    }

    pub fn reset(&mut self) {
        self.state = Some(self.dfa.start);
    }
}
