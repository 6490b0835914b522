use std::collections::HashMap;

use super::{Formula, PltlError, PropId, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    True,
    False,
    Prop(usize),
    Not(u32),
    And(u32, u32),
    Or(u32, u32),
    Yesterday(u32),
    Once(u32),
    Historically(u32),
    Since(u32, u32),
}

/// Packed bit vector with one bit per subformula.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Bits(Box<[u64]>);

impl Bits {
    fn new(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)].into_boxed_slice())
    }

    #[inline]
    fn get(&self, i: usize) -> bool {
        self.0[i >> 6] >> (i & 63) & 1 == 1
    }

    #[inline]
    fn set(&mut self, i: usize, v: bool) {
        let w = &mut self.0[i >> 6];
        let mask = 1u64 << (i & 63);
        *w = (*w & !mask) | (u64::from(v) << (i & 63));
    }

    fn clear(&mut self) {
        self.0.iter_mut().for_each(|w| *w = 0);
    }
}

/// Incremental past-time monitor.
///
/// Keeps one truth bit per distinct subformula for the previous and the
/// current position, evaluated children-first, so the memory footprint is
/// fixed once the formula is compiled. Each stream needs its own monitor.
#[derive(Debug, Clone)]
pub struct Monitor {
    nodes: Vec<Node>,
    subformulas: Vec<Formula>,
    width: usize,
    prev: Bits,
    curr: Bits,
    steps: u64,
}

impl Monitor {
    /// Compiles `formula` for states of `width` propositions.
    ///
    /// Panics if the formula mentions a proposition outside `width`; use
    /// [`Monitor::try_new`] for untrusted input.
    pub fn new(formula: &Formula, width: usize) -> Self {
        Self::try_new(formula, width).expect("formula propositions fit the alphabet width")
    }

    pub fn try_new(formula: &Formula, width: usize) -> Result<Self, PltlError> {
        if let Some(p) = formula.max_prop() {
            if p.0 >= width {
                return Err(PltlError::AlphabetMismatch {
                    expected: p.0 + 1,
                    found: width,
                });
            }
        }
        let mut builder = Builder::default();
        builder.visit(formula);
        let n = builder.nodes.len();
        Ok(Monitor {
            nodes: builder.nodes,
            subformulas: builder.subformulas,
            width,
            prev: Bits::new(n),
            curr: Bits::new(n),
            steps: 0,
        })
    }

    /// Distinct subformulas, children before parents; the root is last.
    pub fn subformulas(&self) -> &[Formula] {
        &self.subformulas
    }

    pub fn subformula_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn step_count(&self) -> u64 {
        self.steps
    }

    pub fn width(&self) -> usize {
        self.width
    }

    /// Live truth-value bits: previous plus current bit per subformula.
    pub fn state_bits(&self) -> usize {
        2 * self.nodes.len()
    }

    pub fn reset(&mut self) {
        self.prev.clear();
        self.curr.clear();
        self.steps = 0;
    }

    /// Consumes the next state and reports whether the formula holds there.
    #[inline]
    pub fn step(&mut self, state: &State) -> Result<bool, PltlError> {
        if state.width() != self.width {
            return Err(PltlError::AlphabetMismatch {
                expected: self.width,
                found: state.width(),
            });
        }
        Ok(self.step_unchecked(state))
    }

    /// [`Monitor::step`] without the width check.
    #[inline]
    pub fn step_unchecked(&mut self, state: &State) -> bool {
        let first = self.steps == 0;
        for (k, node) in self.nodes.iter().enumerate() {
            let cur = &self.curr;
            let prev = &self.prev;
            let v = match *node {
                Node::True => true,
                Node::False => false,
                Node::Prop(p) => state.get(PropId(p)),
                Node::Not(a) => !cur.get(a as usize),
                Node::And(a, b) => cur.get(a as usize) && cur.get(b as usize),
                Node::Or(a, b) => cur.get(a as usize) || cur.get(b as usize),
                Node::Yesterday(a) => !first && prev.get(a as usize),
                Node::Once(a) => cur.get(a as usize) || (!first && prev.get(k)),
                Node::Historically(a) => cur.get(a as usize) && (first || prev.get(k)),
                Node::Since(a, b) => {
                    cur.get(b as usize) || (!first && prev.get(k) && cur.get(a as usize))
                }
            };
            self.curr.set(k, v);
        }
        std::mem::swap(&mut self.prev, &mut self.curr);
        self.steps += 1;
        self.prev.get(self.nodes.len() - 1)
    }

    /// Root bit after the latest step (`false` before any step).
    pub fn verdict(&self) -> bool {
        self.steps > 0 && self.prev.get(self.nodes.len() - 1)
    }
}

#[derive(Default)]
struct Builder {
    nodes: Vec<Node>,
    subformulas: Vec<Formula>,
    seen: HashMap<Formula, u32>,
}

impl Builder {
    fn visit(&mut self, f: &Formula) -> u32 {
        if let Some(&idx) = self.seen.get(f) {
            return idx;
        }
        let node = match f {
            Formula::True => Node::True,
            Formula::False => Node::False,
            Formula::Prop(p) => Node::Prop(p.0),
            Formula::Not(a) => Node::Not(self.visit(a)),
            Formula::Yesterday(a) => Node::Yesterday(self.visit(a)),
            Formula::Once(a) => Node::Once(self.visit(a)),
            Formula::Historically(a) => Node::Historically(self.visit(a)),
            Formula::And(a, b) => {
                let a = self.visit(a);
                Node::And(a, self.visit(b))
            }
            Formula::Or(a, b) => {
                let a = self.visit(a);
                Node::Or(a, self.visit(b))
            }
            Formula::Since(a, b) => {
                let a = self.visit(a);
                Node::Since(a, self.visit(b))
            }
        };
        let idx = self.nodes.len() as u32;
        self.nodes.push(node);
        self.subformulas.push(f.clone());
        self.seen.insert(f.clone(), idx);
        idx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pltl::{parse_formula, Alphabet};

    fn p(i: usize) -> Formula {
        Formula::Prop(PropId(i))
    }

    #[test]
    fn init_orders_children_first() {
        let m = Monitor::new(&p(0), 1);
        assert_eq!(m.subformula_count(), 1);
        assert_eq!(m.step_count(), 0);

        let f = Formula::since(Formula::not(p(0)), p(1));
        let m = Monitor::new(&f, 2);
        assert_eq!(
            m.subformulas(),
            &[p(0), Formula::not(p(0)), p(1), f.clone()]
        );
    }

    #[test]
    fn rlf_signature_has_seven_subformulas() {
        let a = Alphabet::new([
            "ueInformationRequest",
            "rrcConnectionRequest",
            "securityModeComplete",
        ])
        .unwrap();
        let f = parse_formula(
            "(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))",
            &a,
        )
        .unwrap();
        let m = Monitor::new(&f, a.len());
        assert_eq!(m.subformula_count(), 7);
        assert_eq!(m.subformula_count(), f.size());
        assert_eq!(m.state_bits(), 14);
    }

    #[test]
    fn shared_subformulas_are_deduplicated() {
        let f = Formula::and(p(0), Formula::yesterday(p(0)));
        let m = Monitor::new(&f, 1);
        assert_eq!(f.size(), 4);
        assert_eq!(m.subformula_count(), 3);
    }

    #[test]
    fn first_steps() {
        let mut m = Monitor::new(&Formula::True, 1);
        assert!(m.step(&State::from_bools(&[false])).unwrap());

        let mut y = Monitor::new(&Formula::yesterday(p(0)), 1);
        assert!(!y.step(&State::from_bools(&[true])).unwrap());
        assert!(y.step(&State::from_bools(&[false])).unwrap());
        assert!(!y.step(&State::from_bools(&[false])).unwrap());
        assert_eq!(y.step_count(), 3);
    }

    #[test]
    fn historically_and_once() {
        let mut h = Monitor::new(&Formula::historically(p(0)), 1);
        let mut o = Monitor::new(&Formula::once(p(0)), 1);
        let seq = [true, true, false, true];
        let hs: Vec<bool> = seq.iter().map(|&v| h.step(&State::from_bools(&[v])).unwrap()).collect();
        let os: Vec<bool> = [false, true, false]
            .iter()
            .map(|&v| o.step(&State::from_bools(&[v])).unwrap())
            .collect();
        assert_eq!(hs, [true, true, false, false]);
        assert_eq!(os, [false, true, true]);
    }

    #[test]
    fn alphabet_mismatch() {
        let mut m = Monitor::new(&p(0), 2);
        assert!(matches!(
            m.step(&State::new(3)),
            Err(PltlError::AlphabetMismatch { expected: 2, found: 3 })
        ));
        assert!(Monitor::try_new(&p(4), 2).is_err());
    }

    #[test]
    fn reset_clears_history() {
        let mut m = Monitor::new(&Formula::once(p(0)), 1);
        assert!(m.step(&State::from_bools(&[true])).unwrap());
        m.reset();
        assert!(!m.step(&State::from_bools(&[false])).unwrap());
    }
}
