#![allow(dead_code)]

use phoenix_core::pltl::{Formula, Operator, PropId, State, Trace};
use rand::Rng;

/// Every formula with exactly `size` nodes over `props` propositions,
/// using the operators in `ops` (propositions are always available).
pub fn formulas_of_size(size: usize, props: usize, ops: &[Operator]) -> Vec<Formula> {
    let mut table: Vec<Vec<Formula>> = vec![Vec::new()];
    for s in 1..=size {
        let mut out = Vec::new();
        if s == 1 {
            out.extend((0..props).map(|p| Formula::Prop(PropId(p))));
        }
        for &op in ops {
            match op.arity() {
                0 if s == 1 => out.push(Formula::from_operator(op, vec![])),
                1 if s >= 2 => {
                    for c in &table[s - 1] {
                        out.push(Formula::from_operator(op, vec![c.clone()]));
                    }
                }
                2 if s >= 3 => {
                    for l in 1..s - 1 {
                        for a in &table[l] {
                            for b in &table[s - 1 - l] {
                                out.push(Formula::from_operator(op, vec![a.clone(), b.clone()]));
                            }
                        }
                    }
                }
                _ => {}
            }
        }
        table.push(out);
    }
    table.swap_remove(size)
}

pub fn formulas_up_to(size: usize, props: usize, ops: &[Operator]) -> Vec<Formula> {
    (1..=size).flat_map(|s| formulas_of_size(s, props, ops)).collect()
}

/// Every trace of length `len` over `props` propositions.
pub fn traces_of_len(len: usize, props: usize) -> Vec<Trace> {
    let bits = len * props;
    (0u64..1 << bits)
        .map(|code| {
            let states = (0..len)
                .map(|i| {
                    let row: Vec<bool> = (0..props).map(|p| code >> (i * props + p) & 1 == 1).collect();
                    State::from_bools(&row)
                })
                .collect();
            Trace::from_states(props, states).unwrap()
        })
        .collect()
}

pub fn random_formula<R: Rng>(rng: &mut R, size: usize, props: usize) -> Formula {
    let leaf = |rng: &mut R| match rng.gen_range(0..props + 2) {
        0 => Formula::True,
        1 => Formula::False,
        k => Formula::Prop(PropId(k - 2)),
    };
    if size <= 1 {
        return leaf(rng);
    }
    if size == 2 || rng.gen_bool(0.4) {
        let c = random_formula(rng, size - 1, props);
        return match rng.gen_range(0..4) {
            0 => Formula::not(c),
            1 => Formula::yesterday(c),
            2 => Formula::once(c),
            _ => Formula::historically(c),
        };
    }
    let l = rng.gen_range(1..size - 1);
    let a = random_formula(rng, l, props);
    let b = random_formula(rng, size - 1 - l, props);
    match rng.gen_range(0..3) {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        _ => Formula::since(a, b),
    }
}

pub fn random_trace<R: Rng>(rng: &mut R, len: usize, props: usize) -> Trace {
    let states = (0..len)
        .map(|_| State::from_bools(&(0..props).map(|_| rng.gen_bool(0.5)).collect::<Vec<_>>()))
        .collect();
    Trace::from_states(props, states).unwrap()
}
