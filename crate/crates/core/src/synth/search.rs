use std::collections::HashSet;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cnf::Lit;
use super::encode::Encoding;
use super::external::ExternalSolver;
use super::solver::{SolveResult, Solver};
use super::{satisfies, SatSemantics, SynthError, SynthesisProblem};
use crate::harness::Confusion;
use crate::pltl::{Formula, Trace};

/// Encoding with the sample constraints added.
pub fn encode(problem: &SynthesisProblem, size: usize) -> Result<Encoding, SynthError> {
    let mut e = Encoding::new(problem, size)?;
    e.add_consistency();
    Ok(e)
}

/// Smallest consistent formula, or `BoundExceeded` past `max_size`.
pub fn synthesize_min(problem: &SynthesisProblem) -> Result<Formula, SynthError> {
    synthesize_candidates(problem, 1).map(|mut c| c.remove(0))
}

/// `And`/`Or` operands sorted, so commuted duplicates compare equal.
pub fn canonical(f: &Formula) -> Formula {
    match f {
        Formula::And(a, b) | Formula::Or(a, b) => {
            let (a, b) = (canonical(a), canonical(b));
            let (a, b) = if a <= b { (a, b) } else { (b, a) };
            if matches!(f, Formula::And(..)) {
                Formula::and(a, b)
            } else {
                Formula::or(a, b)
            }
        }
        Formula::True | Formula::False | Formula::Prop(_) => f.clone(),
        Formula::Not(a) => Formula::not(canonical(a)),
        Formula::Yesterday(a) => Formula::yesterday(canonical(a)),
        Formula::Once(a) => Formula::once(canonical(a)),
        Formula::Historically(a) => Formula::historically(canonical(a)),
        Formula::Since(a, b) => Formula::since(canonical(a), canonical(b)),
    }
}

enum Engine<'a> {
    Embedded(Box<Solver>),
    External {
        solver: &'a ExternalSolver,
        cnf: super::CnfFormula,
    },
}

impl Engine<'_> {
    fn solve(&mut self, deadline: Option<Instant>) -> Result<SolveResult, SynthError> {
        match self {
            Engine::Embedded(s) => Ok(s.solve_until(deadline)),
            Engine::External { solver, cnf } => solver.solve(cnf),
        }
    }

    fn block(&mut self, clause: Vec<Lit>) {
        match self {
            Engine::Embedded(s) => {
                s.add_clause(&clause);
            }
            Engine::External { cnf, .. } => cnf.push(clause),
        }
    }
}

/// Up to `k` consistent formulas, smallest first. Models at one size are
/// enumerated with blocking clauses before moving to the next size;
/// candidates equal up to `And`/`Or` operand order are reported once.
pub fn synthesize_candidates(problem: &SynthesisProblem, k: usize) -> Result<Vec<Formula>, SynthError> {
    synthesize_candidates_with(problem, k, None)
}

pub fn synthesize_candidates_with(
    problem: &SynthesisProblem,
    k: usize,
    external: Option<&ExternalSolver>,
) -> Result<Vec<Formula>, SynthError> {
    problem.validate()?;
    if k == 0 {
        return Err(SynthError::NoCandidates);
    }
    let deadline = problem.timeout.map(|t| Instant::now() + t);
    let mut found = Vec::new();
    let mut seen = HashSet::new();
    for size in 1..=problem.max_size {
        let enc = encode(problem, size)?;
        let mut engine = match external {
            Some(solver) => Engine::External {
                solver,
                cnf: enc.cnf().clone(),
            },
            None => {
                let mut s = Solver::from_cnf(enc.cnf());
                if let Some(v) = enc.root_true_var() {
                    s.set_phase(v, true);
                }
                Engine::Embedded(Box::new(s))
            }
        };
        loop {
            match engine.solve(deadline)? {
                SolveResult::Sat(model) => {
                    let f = enc.decode(&model)?;
                    if !problem.accepts(&f) {
                        return Err(SynthError::Verification(f.to_text(&problem.alphabet)));
                    }
                    if seen.insert(canonical(&f)) {
                        found.push(f);
                        if found.len() == k {
                            return Ok(found);
                        }
                    }
                    engine.block(enc.blocking_clause(&model));
                }
                SolveResult::Unsat => break,
                SolveResult::Unknown => {
                    return if found.is_empty() {
                        Err(SynthError::Timeout)
                    } else {
                        Ok(found)
                    };
                }
            }
        }
    }
    if found.is_empty() {
        Err(SynthError::BoundExceeded {
            max: problem.max_size,
        })
    } else {
        Ok(found)
    }
}

/// Index of the candidate with the best hold-out F1; ties go to the smaller
/// formula, then to the earlier one.
pub fn select_best(
    candidates: &[Formula],
    holdout_pos: &[Trace],
    holdout_neg: &[Trace],
    semantics: SatSemantics,
) -> Result<(usize, f64), SynthError> {
    let scored = score(candidates, holdout_pos, holdout_neg, semantics);
    scored
        .into_iter()
        .enumerate()
        .min_by(|(i, (fa, sa)), (j, (fb, sb))| {
            fb.total_cmp(fa).then(sa.cmp(sb)).then(i.cmp(j))
        })
        .map(|(i, (f1, _))| (i, f1))
        .ok_or(SynthError::NoCandidates)
}

fn score(
    candidates: &[Formula],
    holdout_pos: &[Trace],
    holdout_neg: &[Trace],
    semantics: SatSemantics,
) -> Vec<(f64, usize)> {
    candidates
        .iter()
        .map(|f| {
            let mut c = Confusion::default();
            for t in holdout_pos {
                c.record(false, !satisfies(f, t, semantics));
            }
            for t in holdout_neg {
                c.record(true, !satisfies(f, t, semantics));
            }
            (c.f1(), f.size())
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct HoldoutSplit {
    pub train_pos: Vec<Trace>,
    pub train_neg: Vec<Trace>,
    pub holdout_pos: Vec<Trace>,
    pub holdout_neg: Vec<Trace>,
}

/// Seeded split stratified by class. Each non-empty class keeps at least one
/// training trace; relative order is preserved inside each part.
pub fn split_holdout(pos: &[Trace], neg: &[Trace], fraction: f64, seed: u64) -> HoldoutSplit {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut split = |traces: &[Trace]| {
        let n = traces.len();
        let mut held = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
        held = held.min(n.saturating_sub(1));
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut out_idx: Vec<usize> = order[..held].to_vec();
        out_idx.sort_unstable();
        let held_set: HashSet<usize> = out_idx.iter().copied().collect();
        let train = (0..n).filter(|i| !held_set.contains(i)).map(|i| traces[i].clone()).collect();
        let hold = out_idx.iter().map(|&i| traces[i].clone()).collect();
        (train, hold)
    };
    let (train_pos, holdout_pos) = split(pos);
    let (train_neg, holdout_neg) = split(neg);
    HoldoutSplit {
        train_pos,
        train_neg,
        holdout_pos,
        holdout_neg,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub formula: String,
    pub size: usize,
    pub f1: f64,
}

/// Trains `k` candidates on the non-held-out part and ranks them by hold-out
/// F1 (best first).
pub fn synthesize_ranked(
    problem: &SynthesisProblem,
    k: usize,
    holdout: f64,
    seed: u64,
) -> Result<Vec<Candidate>, SynthError> {
    synthesize_ranked_with(problem, k, holdout, seed, None)
}

pub fn synthesize_ranked_with(
    problem: &SynthesisProblem,
    k: usize,
    holdout: f64,
    seed: u64,
    external: Option<&ExternalSolver>,
) -> Result<Vec<Candidate>, SynthError> {
    problem.validate()?;
    let split = split_holdout(&problem.positives, &problem.negatives, holdout, seed);
    let train = SynthesisProblem {
        positives: split.train_pos.clone(),
        negatives: split.train_neg.clone(),
        ..problem.clone()
    };
    let cands = synthesize_candidates_with(&train, k, external)?;
    let scores = score(&cands, &split.holdout_pos, &split.holdout_neg, problem.semantics);
    let mut ranked: Vec<(usize, Candidate)> = cands
        .iter()
        .zip(scores)
        .enumerate()
        .map(|(i, (f, (f1, size)))| {
            (
                i,
                Candidate {
                    formula: f.to_text(&problem.alphabet),
                    size,
                    f1,
                },
            )
        })
        .collect();
    ranked.sort_by(|(i, a), (j, b)| {
        b.f1.total_cmp(&a.f1)
            .then(a.size.cmp(&b.size))
            .then(i.cmp(j))
    });
    Ok(ranked.into_iter().map(|(_, c)| c).collect())
}
