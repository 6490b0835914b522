//! Passive learning of DFA and Mealy signatures by state merging (RPNI).

mod merge;
mod sample;

use thiserror::Error;

use crate::automata::{Dfa, MealyMachine};
use merge::{Label, Trie};

pub use sample::{
    prep_dfa_sample, prep_mm_sample, vulnerability_output, AttackSample, InformedSample, IoSample,
    NegativeLabeling,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LearnError {
    #[error("word `{word}` is both positive and negative")]
    Conflict { word: String },
    #[error("word `{word}` has conflicting outputs from `{first}` and `{second}`")]
    OutputConflict {
        word: String,
        first: String,
        second: String,
    },
    #[error("attack `{0}` listed twice")]
    DuplicateAttack(String),
}

/// Size bookkeeping from one learning run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LearnStats {
    pub prefix_tree_states: usize,
    pub merges: usize,
    pub states: usize,
}

/// Learns a DFA accepting every positive and rejecting every negative word.
/// States never reached by a full word default to accepting.
pub fn rpni(sample: &InformedSample) -> Result<Dfa, LearnError> {
    rpni_with_stats(sample).map(|(d, _)| d)
}

pub fn rpni_with_stats(sample: &InformedSample) -> Result<(Dfa, LearnStats), LearnError> {
    let a = sample.alphabet().len();
    let mut trie = Trie::new(a);
    for (words, label) in [
        (sample.positives(), Label::Accept),
        (sample.negatives(), Label::Reject),
    ] {
        for w in words {
            let node = trie.insert(w, None).expect("no outputs to disagree");
            if !trie.mark(node, label) {
                return Err(LearnError::Conflict {
                    word: sample.render(w),
                });
            }
        }
    }
    let pta = trie.len();
    let mut merger = trie.into_merger();
    merger.run();
    let folded = merger.fold();
    let dfa = trim_dead(&folded, sample.alphabet());
    let stats = LearnStats {
        prefix_tree_states: pta,
        merges: merger.merges,
        states: dfa.state_count(),
    };
    Ok((dfa, stats))
}

/// Builds the DFA, dropping states that cannot reach an accepting state.
/// They behave exactly like the implicit rejecting sink.
fn trim_dead(folded: &merge::Folded, alphabet: &[String]) -> Dfa {
    let accepting: Vec<bool> = folded.labels.iter().map(|l| *l != Label::Reject).collect();
    let mut live = accepting.clone();
    let mut changed = true;
    while changed {
        changed = false;
        for &(from, _, to, _) in &folded.edges {
            if live[to] && !live[from] {
                live[from] = true;
                changed = true;
            }
        }
    }
    live[0] = true;
    // Edges come in BFS order from the start, so first appearance is BFS order.
    let mut index = vec![usize::MAX; folded.states];
    index[0] = 0;
    let mut count = 1;
    for &(_, _, to, _) in &folded.edges {
        if live[to] && index[to] == usize::MAX {
            index[to] = count;
            count += 1;
        }
    }
    let mut dfa = Dfa::new(count, 0, alphabet.iter().cloned()).expect("start state exists");
    for s in 0..folded.states {
        if index[s] != usize::MAX {
            dfa.set_accepting(index[s], accepting[s]).expect("state in range");
        }
    }
    for &(from, sym, to, _) in &folded.edges {
        if index[from] != usize::MAX && index[to] != usize::MAX {
            dfa.add_transition_id(index[from], sym, index[to])
                .expect("folded edges are deterministic");
        }
    }
    dfa
}

/// Learns a Mealy machine reproducing every training output sequence.
pub fn rpni_mealy(sample: &IoSample) -> Result<MealyMachine, LearnError> {
    rpni_mealy_with_stats(sample).map(|(m, _)| m)
}

pub fn rpni_mealy_with_stats(sample: &IoSample) -> Result<(MealyMachine, LearnStats), LearnError> {
    let mut trie = Trie::new(sample.inputs().len());
    let mut owners: Vec<(&Vec<u32>, &Vec<u32>)> = Vec::new();
    for (word, out) in sample.pairs() {
        if let Err(pos) = trie.insert(word, Some(out)) {
            // Find the earlier word that fixed the disagreeing edge.
            let prefix = &word[..=pos];
            let first = owners
                .iter()
                .find(|(w, o)| w.starts_with(prefix) && o[pos] != out[pos])
                .map(|(w, _)| sample.source(w).to_string())
                .unwrap_or_default();
            return Err(LearnError::OutputConflict {
                word: sample.render(prefix),
                first,
                second: sample.source(word).to_string(),
            });
        }
        owners.push((word, out));
    }
    let pta = trie.len();
    let mut merger = trie.into_merger();
    merger.run();
    let folded = merger.fold();

    let mut m = MealyMachine::new(
        folded.states,
        0,
        sample.inputs().iter().cloned(),
        sample.outputs().iter().cloned(),
    )
    .expect("outputs include benign");
    for (from, sym, to, out) in folded.edges {
        m.add_transition_id(from, sym, to, out as usize)
            .expect("folded edges are deterministic");
    }
    let stats = LearnStats {
        prefix_tree_states: pta,
        merges: merger.merges,
        states: folded.states,
    };
    Ok((m, stats))
}
