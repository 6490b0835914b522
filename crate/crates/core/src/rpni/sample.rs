use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::automata::BENIGN;

/// Positive and negative words over a sorted symbol alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InformedSample {
    alphabet: Vec<String>,
    positives: BTreeSet<Vec<u32>>,
    negatives: BTreeSet<Vec<u32>>,
}

pub(crate) fn render_word(alphabet: &[String], word: &[u32]) -> String {
    if word.is_empty() {
        return "ε".to_string();
    }
    word.iter()
        .map(|&s| alphabet[s as usize].as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

struct Interner {
    symbols: Vec<String>,
}

impl Interner {
    fn from_words<'a, I>(words: I) -> Self
    where
        I: IntoIterator<Item = &'a Vec<String>>,
    {
        let set: BTreeSet<&String> = words.into_iter().flatten().collect();
        Interner {
            symbols: set.into_iter().cloned().collect(),
        }
    }

    fn encode(&self, word: &[String]) -> Vec<u32> {
        word.iter()
            .map(|s| self.symbols.binary_search(s).expect("symbol interned") as u32)
            .collect()
    }
}

impl InformedSample {
    /// Builds a sample from already-closed sets. Fails if they intersect.
    pub fn new(
        alphabet: Vec<String>,
        positives: BTreeSet<Vec<u32>>,
        negatives: BTreeSet<Vec<u32>>,
    ) -> Result<Self, LearnError> {
        if let Some(w) = positives.intersection(&negatives).next() {
            return Err(LearnError::Conflict {
                word: render_word(&alphabet, w),
            });
        }
        Ok(InformedSample {
            alphabet,
            positives,
            negatives,
        })
    }

    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    pub fn positives(&self) -> &BTreeSet<Vec<u32>> {
        &self.positives
    }

    pub fn negatives(&self) -> &BTreeSet<Vec<u32>> {
        &self.negatives
    }

    pub fn render(&self, word: &[u32]) -> String {
        render_word(&self.alphabet, word)
    }
}

/// Positive set becomes ε plus every prefix of every positive word; negatives
/// are kept verbatim.
pub fn prep_dfa_sample(
    positives: &[Vec<String>],
    negatives: &[Vec<String>],
) -> Result<InformedSample, LearnError> {
    let interner = Interner::from_words(positives.iter().chain(negatives));
    let mut pos = BTreeSet::new();
    pos.insert(Vec::new());
    for w in positives {
        let w = interner.encode(w);
        for k in 1..=w.len() {
            pos.insert(w[..k].to_vec());
        }
    }
    let neg = negatives.iter().map(|w| interner.encode(w)).collect();
    InformedSample::new(interner.symbols, pos, neg)
}

/// Where a negative Mealy word carries its vulnerability output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NegativeLabeling {
    /// Only the last step; earlier steps are `benign`.
    #[default]
    FinalStep,
    /// Every step.
    AllSteps,
}

/// Training traces for one attack.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AttackSample {
    pub name: String,
    pub positives: Vec<Vec<String>>,
    pub negatives: Vec<Vec<String>>,
}

pub fn vulnerability_output(attack: &str) -> String {
    format!("vulnerability_{attack}")
}

/// Input words paired with output words, pooled over attacks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IoSample {
    inputs: Vec<String>,
    outputs: Vec<String>,
    pairs: BTreeMap<Vec<u32>, Vec<u32>>,
    sources: BTreeMap<Vec<u32>, String>,
}

impl IoSample {
    pub fn inputs(&self) -> &[String] {
        &self.inputs
    }

    /// `benign` first, then one `vulnerability_<attack>` per attack.
    pub fn outputs(&self) -> &[String] {
        &self.outputs
    }

    pub fn pairs(&self) -> &BTreeMap<Vec<u32>, Vec<u32>> {
        &self.pairs
    }

    /// Which attack (or `benign`) contributed a word.
    pub(crate) fn source(&self, word: &[u32]) -> &str {
        self.sources.get(word).map(String::as_str).unwrap_or(BENIGN)
    }

    pub fn render(&self, word: &[u32]) -> String {
        render_word(&self.inputs, word)
    }
}

pub fn prep_mm_sample(
    attacks: &[AttackSample],
    labeling: NegativeLabeling,
) -> Result<IoSample, LearnError> {
    let mut names = BTreeSet::new();
    for a in attacks {
        if !names.insert(a.name.as_str()) {
            return Err(LearnError::DuplicateAttack(a.name.clone()));
        }
    }
    let interner = Interner::from_words(
        attacks
            .iter()
            .flat_map(|a| a.positives.iter().chain(&a.negatives)),
    );
    let mut outputs = vec![BENIGN.to_string()];
    outputs.extend(names.iter().map(|n| vulnerability_output(n)));

    let mut pairs: BTreeMap<Vec<u32>, Vec<u32>> = BTreeMap::new();
    let mut sources: BTreeMap<Vec<u32>, String> = BTreeMap::new();
    let mut add = |word: Vec<u32>, out: Vec<u32>, source: &str| -> Result<(), LearnError> {
        match pairs.get(&word) {
            Some(existing) if *existing != out => Err(LearnError::OutputConflict {
                word: render_word(&interner.symbols, &word),
                first: sources[&word].clone(),
                second: source.to_string(),
            }),
            Some(_) => Ok(()),
            None => {
                sources.insert(word.clone(), source.to_string());
                pairs.insert(word, out);
                Ok(())
            }
        }
    };
    for a in attacks {
        for w in &a.positives {
            let w = interner.encode(w);
            let out = vec![0; w.len()];
            add(w, out, BENIGN)?;
        }
    }
    for a in attacks {
        let vuln = 1 + names.iter().position(|n| *n == a.name).unwrap() as u32;
        for w in &a.negatives {
            let w = interner.encode(w);
            let out = match labeling {
                NegativeLabeling::AllSteps => vec![vuln; w.len()],
                NegativeLabeling::FinalStep => {
                    let mut out = vec![0; w.len()];
                    if let Some(last) = out.last_mut() {
                        *last = vuln;
                    }
                    out
                }
            };
            add(w, out, &a.name)?;
        }
    }
    Ok(IoSample {
        inputs: interner.symbols,
        outputs,
        pairs,
        sources,
    })
}
