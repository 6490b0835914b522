//! Random machines against step-by-step reference runs, and learned
//! machines against their training samples.

use phoenix_core::automata::{Dfa, MealyMachine, RunMode, StepOutcome, BENIGN};
use phoenix_core::rpni::{prep_dfa_sample, prep_mm_sample, rpni, rpni_mealy, AttackSample, NegativeLabeling};
use proptest::prelude::*;

const SYMS: [&str; 3] = ["a", "b", "c"];

/// States, start, accepting flags and a partial transition table.
fn dfa() -> impl Strategy<Value = Dfa> {
    (1usize..6).prop_flat_map(|n| {
        (
            0..n,
            prop::collection::vec(any::<bool>(), n),
            prop::collection::vec(prop::option::weighted(0.8, 0..n), n * SYMS.len()),
        )
            .prop_map(move |(start, acc, table)| {
                let mut d = Dfa::new(n, start, SYMS).unwrap();
                for (s, &a) in acc.iter().enumerate() {
                    d.set_accepting(s, a).unwrap();
                }
                for (k, to) in table.iter().enumerate() {
                    if let Some(to) = to {
                        d.add_transition_id(k / SYMS.len(), k % SYMS.len(), *to).unwrap();
                    }
                }
                d
            })
    })
}

fn mealy() -> impl Strategy<Value = MealyMachine> {
    (1usize..6).prop_flat_map(|n| {
        (
            0..n,
            prop::collection::vec(prop::option::weighted(0.8, (0..n, 0usize..3)), n * SYMS.len()),
        )
            .prop_map(move |(start, table)| {
                let mut m = MealyMachine::new(n, start, SYMS, [BENIGN, "vulnerability_x", "vulnerability_y"]).unwrap();
                for (k, t) in table.iter().enumerate() {
                    if let Some((to, out)) = t {
                        m.add_transition_id(k / SYMS.len(), k % SYMS.len(), *to, *out).unwrap();
                    }
                }
                m
            })
    })
}

fn word() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0..SYMS.len(), 0..12)
}

fn names(w: &[usize]) -> Vec<String> {
    w.iter().map(|&i| SYMS[i].to_string()).collect()
}

/// Reference: follow the table from the start, a missing edge is a dead end.
fn naive_accepts(d: &Dfa, w: &[usize]) -> bool {
    let mut s = Some(d.start());
    for &x in w {
        s = s.and_then(|s| d.next(s, x));
    }
    s.is_some_and(|s| d.is_accepting(s))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn dfa_run_matches_reference(d in dfa(), w in word()) {
        let v = d.run_ids(&w, RunMode::ReportAll);
        prop_assert_eq!(v.outcomes.len(), w.len());
        for i in 0..w.len() {
            let ok = naive_accepts(&d, &w[..=i]);
            prop_assert_eq!(v.outcomes[i] == StepOutcome::Continue, ok);
        }
        prop_assert_eq!(d.accepts(&w), naive_accepts(&d, &w));
        let first = d.run_ids(&w, RunMode::StopFirst);
        prop_assert_eq!(first.first_violation, v.first_violation);
        prop_assert_eq!(first.outcomes.len(), v.first_violation.map_or(w.len(), |i| i + 1));
        prop_assert_eq!(d.run(&names(&w), RunMode::ReportAll).unwrap(), v);
    }

    #[test]
    fn dfa_text_round_trip(d in dfa()) {
        let back = Dfa::parse(&d.to_text()).unwrap();
        prop_assert_eq!(back.to_text(), d.to_text());
        for w in [vec![], vec![0, 1, 2], vec![2, 2, 0, 1]] {
            prop_assert_eq!(back.accepts(&w), d.accepts(&w));
        }
    }

    #[test]
    fn mealy_run_matches_reference(m in mealy(), w in word()) {
        let v = m.run_ids(&w, RunMode::ReportAll);
        let mut state = m.start();
        let mut undefined = 0;
        for (i, &x) in w.iter().enumerate() {
            let out = match m.next(state, x) {
                Some((to, out)) => {
                    state = to;
                    out
                }
                None => {
                    undefined += 1;
                    m.benign_id()
                }
            };
            let want = if out == m.benign_id() {
                StepOutcome::Continue
            } else {
                StepOutcome::Violation(Some(m.outputs()[out].clone()))
            };
            prop_assert_eq!(&v.outcomes[i], &want);
        }
        prop_assert_eq!(v.undefined_transitions, undefined);
        let back = MealyMachine::parse(&m.to_text()).unwrap();
        prop_assert_eq!(back.transduce(&w), m.transduce(&w));
    }

    /// Negatives end in `c`, which positives never use, so the sample is
    /// always consistent.
    #[test]
    fn rpni_is_consistent_with_its_sample(
        pos in prop::collection::vec(prop::collection::vec(0usize..2, 0..8), 1..8),
        neg in prop::collection::vec(prop::collection::vec(0usize..3, 0..7), 1..8),
    ) {
        let pos: Vec<Vec<String>> = pos.iter().map(|w| names(w)).collect();
        let neg: Vec<Vec<String>> = neg.iter().map(|w| {
            let mut w = names(w);
            w.push("c".into());
            w
        }).collect();
        let d = rpni(&prep_dfa_sample(&pos, &neg).unwrap()).unwrap();
        for w in &pos {
            for k in 0..=w.len() {
                prop_assert!(d.run(&w[..k], RunMode::StopFirst).unwrap().first_violation.is_none());
            }
        }
        for w in &neg {
            let ids: Option<Vec<usize>> = w.iter().map(|s| d.symbol_id(s)).collect();
            prop_assert!(!d.accepts(&ids.unwrap()));
        }
    }

    #[test]
    fn rpni_mealy_reproduces_its_sample(
        pos in prop::collection::vec(prop::collection::vec(0usize..2, 1..8), 1..6),
        neg_x in prop::collection::vec(prop::collection::vec(0usize..2, 0..6), 1..5),
        neg_y in prop::collection::vec(prop::collection::vec(0usize..2, 0..6), 1..5),
    ) {
        let end = |ws: &[Vec<usize>], last: usize| -> Vec<Vec<String>> {
            ws.iter().map(|w| {
                let mut w = names(w);
                w.push(SYMS[2].to_string());
                w.push(format!("end{last}"));
                w
            }).collect()
        };
        let attacks = [
            AttackSample { name: "x".into(), positives: pos.iter().map(|w| names(w)).collect(), negatives: end(&neg_x, 0) },
            AttackSample { name: "y".into(), positives: Vec::new(), negatives: end(&neg_y, 1) },
        ];
        let sample = prep_mm_sample(&attacks, NegativeLabeling::FinalStep).unwrap();
        let m = rpni_mealy(&sample).unwrap();
        for (w, out) in sample.pairs() {
            let text: Vec<&str> = w.iter().map(|&i| sample.inputs()[i as usize].as_str()).collect();
            let ids: Vec<usize> = text.iter().map(|s| m.input_id(s).unwrap()).collect();
            let got: Vec<&str> = m.transduce(&ids).iter().map(|&o| m.outputs()[o].as_str()).collect();
            let want: Vec<&str> = out.iter().map(|&o| sample.outputs()[o as usize].as_str()).collect();
            prop_assert_eq!(got, want);
        }
    }
}
