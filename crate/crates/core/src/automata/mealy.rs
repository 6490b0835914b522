use std::fmt::Write as _;

use super::text::{self, err, parse_usize, single_usize};
use super::{AutomataError, RunMode, RunVerdict, StepOutcome, SymbolTable, NONE};

/// Output meaning "nothing undesired seen".
pub const BENIGN: &str = "benign";

/// Partial Mealy machine. Undefined transitions emit [`BENIGN`] and stay put.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MealyMachine {
    states: usize,
    start: usize,
    inputs: SymbolTable,
    outputs: SymbolTable,
    benign: u32,
    // states × inputs
    targets: Vec<u32>,
    emitted: Vec<u32>,
}

impl MealyMachine {
    pub fn new<I, S, O, T>(
        states: usize,
        start: usize,
        inputs: I,
        outputs: O,
    ) -> Result<Self, AutomataError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
        O: IntoIterator<Item = T>,
        T: Into<String>,
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
        let inputs = SymbolTable::new(inputs)?;
        let outputs = SymbolTable::new(outputs)?;
        let benign = outputs.get(BENIGN).ok_or(AutomataError::MissingBenign)? as u32;
        Ok(MealyMachine {
            states,
            start,
            benign,
            targets: vec![NONE; states * inputs.len()],
            emitted: vec![NONE; states * inputs.len()],
            inputs,
            outputs,
        })
    }

    pub fn add_transition(
        &mut self,
        from: usize,
        input: &str,
        to: usize,
        output: &str,
    ) -> Result<(), AutomataError> {
        let i = self.inputs.lookup(input)?;
        let o = self.outputs.lookup(output)?;
        self.add_transition_id(from, i, to, o)
    }

    pub fn add_transition_id(
        &mut self,
        from: usize,
        input: usize,
        to: usize,
        output: usize,
    ) -> Result<(), AutomataError> {
        for s in [from, to] {
            if s >= self.states {
                return Err(AutomataError::StateOutOfRange {
                    state: s,
                    count: self.states,
                });
            }
        }
        let k = from * self.inputs.len() + input;
        if self.targets[k] != NONE
            && (self.targets[k] as usize != to || self.emitted[k] as usize != output)
        {
            return Err(AutomataError::Nondeterministic {
                state: from,
                symbol: self.inputs.names()[input].clone(),
            });
        }
        self.targets[k] = to as u32;
        self.emitted[k] = output as u32;
        Ok(())
    }

    pub fn state_count(&self) -> usize {
        self.states
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn inputs(&self) -> &[String] {
        self.inputs.names()
    }

    pub fn outputs(&self) -> &[String] {
        self.outputs.names()
    }

    pub fn input_id(&self, name: &str) -> Option<usize> {
        self.inputs.get(name)
    }

    pub fn output_id(&self, name: &str) -> Option<usize> {
        self.outputs.get(name)
    }

    pub fn benign_id(&self) -> usize {
        self.benign as usize
    }

    pub fn transition_count(&self) -> usize {
        self.targets.iter().filter(|&&t| t != NONE).count()
    }

    /// `(target, output)` if defined.
    #[inline]
    pub fn next(&self, state: usize, input: usize) -> Option<(usize, usize)> {
        let k = state * self.inputs.len() + input;
        match self.targets[k] {
            NONE => None,
            t => Some((t as usize, self.emitted[k] as usize)),
        }
    }

    /// Defined transitions as `(from, input, to, output)`, ordered by state then input.
    pub fn transitions(&self) -> impl Iterator<Item = (usize, &str, usize, &str)> + '_ {
        let n = self.inputs.len();
        self.targets.iter().enumerate().filter(|(_, &t)| t != NONE).map(move |(k, &t)| {
            (
                k / n,
                self.inputs.names()[k % n].as_str(),
                t as usize,
                self.outputs.names()[self.emitted[k] as usize].as_str(),
            )
        })
    }

    pub fn cursor(&self) -> MealyCursor<'_> {
        MealyCursor {
            machine: self,
            state: self.start,
            undefined: 0,
        }
    }

    /// Output sequence for `word`, using the stay-in-place convention.
    pub fn transduce(&self, word: &[usize]) -> Vec<usize> {
        let mut c = self.cursor();
        word.iter().map(|&i| c.step(i)).collect()
    }

    pub fn run<S: AsRef<str>>(&self, word: &[S], mode: RunMode) -> Result<RunVerdict, AutomataError> {
        let ids = word
            .iter()
            .map(|s| self.inputs.lookup(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.run_ids(&ids, mode))
    }

    pub fn run_ids(&self, word: &[usize], mode: RunMode) -> RunVerdict {
        let mut cursor = self.cursor();
        let mut verdict = RunVerdict::default();
        for &input in word {
            let out = cursor.step(input);
            if out == self.benign as usize {
                verdict.record(StepOutcome::Continue);
            } else {
                verdict.record(StepOutcome::Violation(Some(self.outputs.names()[out].clone())));
                if mode == RunMode::StopFirst {
                    break;
                }
            }
        }
        verdict.undefined_transitions = cursor.undefined;
        verdict
    }

    pub fn parse(text: &str) -> Result<Self, AutomataError> {
        let lines = text::lines(text)?;
        let mut states = None;
        let mut start = None;
        let mut alphabet = None;
        let mut outputs = None;
        let mut trans = Vec::new();
        for line in &lines {
            match line.key {
                "states" => states = Some(single_usize(line)?),
                "start" => start = Some(single_usize(line)?),
                "alphabet" => alphabet = Some(line.values.clone()),
                "outputs" => outputs = Some(line.values.clone()),
                "trans" => match line.values.as_slice() {
                    [from, input, to, output] => trans.push((
                        line.number,
                        parse_usize(line.number, from)?,
                        *input,
                        parse_usize(line.number, to)?,
                        *output,
                    )),
                    _ => {
                        return Err(err(line.number, "expected `trans: from input to output`"))
                    }
                },
                other => return Err(err(line.number, format!("unknown key `{other}`"))),
            }
        }
        let states = states.ok_or_else(|| err(0, "missing `states`"))?;
        let start = start.ok_or_else(|| err(0, "missing `start`"))?;
        let alphabet = alphabet.ok_or_else(|| err(0, "missing `alphabet`"))?;
        let outputs = outputs.ok_or_else(|| err(0, "missing `outputs`"))?;
        let mut m = MealyMachine::new(states, start, alphabet, outputs)?;
        for (line, from, input, to, output) in trans {
            m.add_transition(from, input, to, output)
                .map_err(|e| err(line, e.to_string()))?;
        }
        Ok(m)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "states: {}", self.states);
        let _ = writeln!(out, "start: {}", self.start);
        let _ = writeln!(out, "alphabet: {}", self.inputs.names().join(" "));
        let _ = writeln!(out, "outputs: {}", self.outputs.names().join(" "));
        for (from, input, to, output) in self.transitions() {
            let _ = writeln!(out, "trans: {from} {input} {to} {output}");
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct MealyCursor<'a> {
    machine: &'a MealyMachine,
    state: usize,
    undefined: usize,
}

impl MealyCursor<'_> {
    /// Consumes one input and returns the output index.
    #[inline]
    pub fn step(&mut self, input: usize) -> usize {
        match self.machine.next(self.state, input) {
            Some((to, out)) => {
                self.state = to;
                out
            }
            None => {
                self.undefined += 1;
                self.machine.benign as usize
            }
        }
    }

    pub fn state(&self) -> usize {
        self.state
    }

    pub fn undefined_transitions(&self) -> usize {
        self.undefined
    }

    pub fn reset(&mut self) {
        self.state = self.machine.start;
        self.undefined = 0;
    }
}
