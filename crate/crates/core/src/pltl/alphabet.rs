use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::PltlError;

/// Index of a proposition inside an [`Alphabet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PropId(pub usize);

/// Ordered set of proposition names. The position of a name is its [`PropId`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

pub(crate) fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Alphabet {
    pub fn new<I, S>(names: I) -> Result<Self, PltlError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut alphabet = Alphabet::default();
        for name in names {
            alphabet.push(name.into())?;
        }
        Ok(alphabet)
    }

    /// Appends a proposition, returning its index.
    pub fn push(&mut self, name: String) -> Result<PropId, PltlError> {
        if !is_identifier(&name) {
            return Err(PltlError::InvalidIdentifier(name));
        }
        if self.index.contains_key(&name) {
            return Err(PltlError::DuplicateProposition(name));
        }
        let id = self.names.len();
        self.index.insert(name.clone(), id);
        self.names.push(name);
        Ok(PropId(id))
    }

    /// Returns the index of `name`, adding it when absent.
    pub fn intern(&mut self, name: &str) -> Result<PropId, PltlError> {
        match self.get(name) {
            Some(id) => Ok(id),
            None => self.push(name.to_string()),
        }
    }

    pub fn get(&self, name: &str) -> Option<PropId> {
        self.index.get(name).copied().map(PropId)
    }

    pub fn name(&self, id: PropId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn ids(&self) -> impl Iterator<Item = PropId> {
        (0..self.names.len()).map(PropId)
    }

    /// Builds a state from the set of propositions that are true.
    pub fn state_from_true<'a, I>(&self, props: I) -> Result<State, PltlError>
    where
        I: IntoIterator<Item = &'a str>,
    {
        let mut state = State::new(self.len());
        for name in props {
            let id = self
                .get(name)
                .ok_or_else(|| PltlError::UnknownProposition(name.to_string()))?;
            state.set(id, true);
        }
        Ok(state)
    }
}

const WORD: usize = 64;

/// Total assignment of truth values to the propositions of an alphabet.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct State {
    words: Box<[u64]>,
    width: usize,
}

impl State {
    /// All-false state over `width` propositions.
    pub fn new(width: usize) -> Self {
        State {
            words: vec![0; width.div_ceil(WORD)].into_boxed_slice(),
            width,
        }
    }

    pub fn from_bools(values: &[bool]) -> Self {
        let mut state = State::new(values.len());
        for (i, &v) in values.iter().enumerate() {
            state.set(PropId(i), v);
        }
        state
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, id: PropId) -> bool {
        debug_assert!(id.0 < self.width);
        self.words[id.0 / WORD] >> (id.0 % WORD) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, id: PropId, value: bool) {
        assert!(id.0 < self.width, "proposition {} out of range", id.0);
        let mask = 1u64 << (id.0 % WORD);
        if value {
            self.words[id.0 / WORD] |= mask;
        } else {
            self.words[id.0 / WORD] &= !mask;
        }
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.width).map(|i| self.get(PropId(i))).collect()
    }
}

impl fmt::Debug for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("⟨")?;
        for i in 0..self.width {
            if i > 0 {
                f.write_str(",")?;
            }
            f.write_str(if self.get(PropId(i)) { "1" } else { "0" })?;
        }
        f.write_str("⟩")
    }
}

/// Ground-truth label carried by a trace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "kind", content = "attack", rename_all = "snake_case")]
pub enum TraceLabel {
    Benign,
    Attack(String),
}

impl TraceLabel {
    pub fn is_attack(&self) -> bool {
        matches!(self, TraceLabel::Attack(_))
    }

    pub fn attack_name(&self) -> Option<&str> {
        match self {
            TraceLabel::Attack(name) => Some(name),
            TraceLabel::Benign => None,
        }
    }
}

impl fmt::Display for TraceLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TraceLabel::Benign => f.write_str("benign"),
            TraceLabel::Attack(name) => write!(f, "attack {name}"),
        }
    }
}

/// Finite sequence of states over one alphabet width.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Trace {
    states: Vec<State>,
    width: usize,
    pub label: Option<TraceLabel>,
}

impl Trace {
    pub fn new(width: usize) -> Self {
        Trace {
            states: Vec::new(),
            width,
            label: None,
        }
    }

    pub fn from_states(width: usize, states: Vec<State>) -> Result<Self, PltlError> {
        if let Some(bad) = states.iter().find(|s| s.width() != width) {
            return Err(PltlError::AlphabetMismatch {
                expected: width,
                found: bad.width(),
            });
        }
        Ok(Trace {
            states,
            width,
            label: None,
        })
    }

    /// Convenience constructor from rows of booleans.
    pub fn from_rows(width: usize, rows: &[&[bool]]) -> Result<Self, PltlError> {
        Trace::from_states(width, rows.iter().map(|r| State::from_bools(r)).collect())
    }

    pub fn with_label(mut self, label: TraceLabel) -> Self {
        self.label = Some(label);
        self
    }

    pub fn push(&mut self, state: State) -> Result<(), PltlError> {
        if state.width() != self.width {
            return Err(PltlError::AlphabetMismatch {
                expected: self.width,
                found: state.width(),
            });
        }
        self.states.push(state);
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    pub fn state(&self, i: usize) -> &State {
        &self.states[i]
    }
}
