//! Learning signatures from labeled trace corpora.
//!
//! Attack traces are cut after their first attack session before training,
//! so the learners see where the behavior happened rather than the benign
//! sessions that follow it.

use std::collections::BTreeMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::automata::{Dfa, MealyMachine};
use crate::pltl::{Operator, TraceLabel};
use crate::rpni::{prep_dfa_sample, prep_mm_sample, rpni, rpni_mealy, AttackSample, NegativeLabeling};
use crate::synth::{synthesize_ranked_with, Candidate, ExternalSolver, SynthesisProblem};
use crate::traces::{CorpusAlphabet, TraceSkeleton};

fn attack_words(attack: &[TraceSkeleton]) -> Vec<Vec<String>> {
    attack.iter().map(TraceSkeleton::symbols_through_first_attack).collect()
}

fn benign_words(benign: &[TraceSkeleton]) -> Vec<Vec<String>> {
    benign.iter().map(TraceSkeleton::symbols).collect()
}

/// Prefixes of benign traces are accepted, attack traces rejected.
pub fn learn_dfa(benign: &[TraceSkeleton], attack: &[TraceSkeleton]) -> Result<Dfa, HarnessError> {
    let sample = prep_dfa_sample(&benign_words(benign), &attack_words(attack))?;
    Ok(rpni(&sample)?)
}

/// One machine for every attack present; attack traces are grouped by
/// their label and each group gets its own vulnerability output on the
/// last step of its first attack session.
pub fn learn_mm(benign: &[TraceSkeleton], attack: &[TraceSkeleton]) -> Result<MealyMachine, HarnessError> {
    let mut groups: BTreeMap<&str, Vec<&TraceSkeleton>> = BTreeMap::new();
    for (i, t) in attack.iter().enumerate() {
        match &t.label {
            Some(TraceLabel::Attack(name)) => groups.entry(name).or_default().push(t),
            _ => {
                return Err(HarnessError::Invalid(format!(
                    "attack trace {i} has no attack label"
                )))
            }
        }
    }
    if groups.is_empty() {
        return Err(HarnessError::Invalid("no attack traces".into()));
    }
    let positives = benign_words(benign);
    let samples: Vec<AttackSample> = groups
        .into_iter()
        .enumerate()
        .map(|(i, (name, ts))| AttackSample {
            name: name.to_string(),
            // benign words only need to be added once
            positives: if i == 0 { positives.clone() } else { Vec::new() },
            negatives: ts.iter().map(|t| t.symbols_through_first_attack()).collect(),
        })
        .collect();
    let sample = prep_mm_sample(&samples, NegativeLabeling::FinalStep)?;
    Ok(rpni_mealy(&sample)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub max_size: usize,
    pub candidates: usize,
    /// Fraction of each class held out for ranking.
    pub holdout: f64,
    pub seed: u64,
    /// Wall-clock budget for the whole search, in seconds.
    pub timeout_secs: Option<f64>,
    /// `None` for the full operator menu.
    pub operators: Option<Vec<Operator>>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_size: SynthesisProblem::DEFAULT_MAX_SIZE,
            candidates: 5,
            holdout: 0.2,
            seed: 0,
            timeout_secs: Some(SynthesisProblem::DEFAULT_TIMEOUT.as_secs_f64()),
            operators: None,
        }
    }
}

/// Sample over the propositions that are true somewhere in the traces.
/// The alphabet is the corpus one when given, so that the resulting
/// formula keeps its proposition names under the full corpus alphabet.
pub fn pltl_problem(
    benign: &[TraceSkeleton],
    attack: &[TraceSkeleton],
    corpus: Option<&CorpusAlphabet>,
    cfg: &SynthConfig,
) -> Result<SynthesisProblem, HarnessError> {
    let cut: Vec<TraceSkeleton> = attack.iter().map(TraceSkeleton::through_first_attack).collect();
    let all = benign.iter().chain(&cut);
    let full = match corpus {
        Some(c) => c.clone(),
        None => CorpusAlphabet::from_skeletons(benign.iter().chain(&cut)),
    };
    let alphabet = full.restrict_to(all).alphabet()?;
    let encode = |ts: &[TraceSkeleton]| -> Result<Vec<_>, HarnessError> {
        ts.iter()
            .map(|t| {
                let mut tr = crate::pltl::Trace::new(alphabet.len());
                for e in t.events() {
                    tr.push(e.to_state_lenient(&alphabet))?;
                }
                tr.label = t.label.clone();
                Ok(tr)
            })
            .collect()
    };
    let mut p = SynthesisProblem::new(alphabet.clone(), encode(benign)?, encode(&cut)?)
        .with_max_size(cfg.max_size)
        .with_timeout(cfg.timeout_secs.map(Duration::from_secs_f64));
    if let Some(ops) = &cfg.operators {
        p = p.with_operators(ops);
    }
    Ok(p)
}

/// Ranked candidate formulas, best first, written with proposition names.
pub fn synthesize_signature(
    benign: &[TraceSkeleton],
    attack: &[TraceSkeleton],
    corpus: Option<&CorpusAlphabet>,
    cfg: &SynthConfig,
    external: Option<&ExternalSolver>,
) -> Result<Vec<Candidate>, HarnessError> {
    let p = pltl_problem(benign, attack, corpus, cfg)?;
    Ok(synthesize_ranked_with(&p, cfg.candidates, cfg.holdout, cfg.seed, external)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::RunMode;
    use crate::traces::{gen_benign, gen_malicious, GenConfig, VariantCatalog};

    fn corpus(attack: &str, n: usize, seed: u64) -> (Vec<TraceSkeleton>, Vec<TraceSkeleton>) {
        let cat = VariantCatalog::builtin();
        let layer = cat.attack(attack).unwrap().layer;
        let pool = cat.benign_pool(layer);
        (
            gen_benign(pool, &GenConfig::new(3, n, seed)).unwrap(),
            gen_malicious(pool, &cat, attack, &GenConfig::new(3, n, seed + 1)).unwrap(),
        )
    }

    #[test]
    fn dfa_is_consistent_with_training() {
        let (b, a) = corpus("numb", 40, 3);
        let d = learn_dfa(&b, &a).unwrap();
        for t in &b {
            let v = d.run(&t.symbols(), RunMode::StopFirst).unwrap();
            assert!(v.first_violation.is_none());
        }
        for t in &a {
            let w = t.symbols_through_first_attack();
            let ids: Vec<usize> = w.iter().map(|s| d.symbol_id(s).unwrap()).collect();
            assert!(!d.accepts(&ids));
        }
    }

    #[test]
    fn mealy_names_each_attack() {
        let (b, mut a) = corpus("numb", 20, 5);
        let (_, a2) = corpus("attach_reject", 20, 9);
        a.extend(a2);
        let m = learn_mm(&b, &a).unwrap();
        assert_eq!(m.outputs(), ["benign", "vulnerability_attach_reject", "vulnerability_numb"]);
        for t in &a {
            let w = t.symbols_through_first_attack();
            let v = m.run(&w, RunMode::ReportAll).unwrap();
            let want = format!("vulnerability_{}", t.label.as_ref().unwrap().attack_name().unwrap());
            assert_eq!(v.outcomes.last().unwrap().to_string(), format!("violation({want})"));
        }
    }

    #[test]
    fn synthesizes_small_rrc_signature() {
        let (b, a) = corpus("paging_imsi", 10, 2);
        let cfg = SynthConfig {
            max_size: 6,
            candidates: 2,
            ..SynthConfig::default()
        };
        let cat = VariantCatalog::builtin();
        let c = synthesize_signature(&b, &a, Some(&cat.corpus_alphabet()), &cfg, None).unwrap();
        assert!(!c.is_empty());
        assert!(c[0].size <= 6);
    }
}
