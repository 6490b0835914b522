//! Propositional encoding of "some formula with exactly `size` nodes
//! separates the sample".
//!
//! Nodes are numbered in postorder, so the root is the last node, a unary
//! node's child is the node just before it, and so is a binary node's right
//! child. `start[i][k]` says the subtree rooted at `i` begins at node `k`; the
//! left child of binary node `i` is then `start(i-1) - 1`. With those
//! constraints the label sequence alone determines the tree, so every
//! formula has exactly one model restricted to label variables.
//!
//! Truth values are tracked per node and per node of a prefix tree over all
//! sample traces, so common prefixes share variables.

use std::collections::HashMap;

use super::cnf::{CnfFormula, Lit};
use super::{SatSemantics, SynthError, SynthesisProblem};
use crate::pltl::{Formula, Operator, PropId, State, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeLabel {
    Prop(PropId),
    Op(Operator),
}

impl NodeLabel {
    fn arity(self) -> usize {
        match self {
            NodeLabel::Prop(_) => 0,
            NodeLabel::Op(op) => op.arity(),
        }
    }
}

const ROOT: u32 = u32::MAX;

/// Prefix tree over sample traces; each node is one trace position.
struct PrefixTrie {
    parent: Vec<u32>,
    state: Vec<State>,
    index: HashMap<(u32, State), u32>,
}

impl PrefixTrie {
    fn new() -> Self {
        PrefixTrie {
            parent: Vec::new(),
            state: Vec::new(),
            index: HashMap::new(),
        }
    }

    fn insert(&mut self, trace: &Trace) -> Vec<u32> {
        let mut at = ROOT;
        let mut path = Vec::with_capacity(trace.len());
        for s in trace.states() {
            at = match self.index.get(&(at, s.clone())) {
                Some(&n) => n,
                None => {
                    let n = self.parent.len() as u32;
                    self.parent.push(at);
                    self.state.push(s.clone());
                    self.index.insert((at, s.clone()), n);
                    n
                }
            };
            path.push(at);
        }
        path
    }

    fn len(&self) -> usize {
        self.parent.len()
    }
}

pub struct Encoding {
    size: usize,
    labels: Vec<NodeLabel>,
    x: Vec<Vec<Option<u32>>>,
    y: Vec<Vec<u32>>,
    positive_paths: Vec<Vec<u32>>,
    negative_paths: Vec<Vec<u32>>,
    semantics: SatSemantics,
    cnf: CnfFormula,
}

impl Encoding {
    /// Structural and semantic constraints only; the sample is not yet
    /// required to be separated.
    pub fn new(problem: &SynthesisProblem, size: usize) -> Result<Self, SynthError> {
        problem.check_alphabet()?;
        if size == 0 {
            return Err(SynthError::InvalidSize);
        }
        let mut labels = Vec::new();
        // `true` first so that its root variable can be preferred.
        if problem.operators.contains(&Operator::True) {
            labels.push(NodeLabel::Op(Operator::True));
        }
        labels.extend(problem.alphabet.ids().map(NodeLabel::Prop));
        labels.extend(
            Operator::ALL
                .iter()
                .filter(|op| **op != Operator::True && problem.operators.contains(op))
                .map(|&op| NodeLabel::Op(op)),
        );

        let mut trie = PrefixTrie::new();
        let positive_paths: Vec<_> = problem.positives.iter().map(|t| trie.insert(t)).collect();
        let negative_paths: Vec<_> = problem.negatives.iter().map(|t| trie.insert(t)).collect();

        let mut cnf = CnfFormula::new();
        let x: Vec<Vec<Option<u32>>> = (0..size)
            .map(|i| {
                labels
                    .iter()
                    .map(|l| (l.arity() <= i.min(2)).then(|| cnf.new_var()))
                    .collect()
            })
            .collect();
        let start: Vec<Vec<u32>> = (0..size)
            .map(|i| (0..=i).map(|_| cnf.new_var()).collect())
            .collect();
        let binary: Vec<u32> = (0..size).map(|_| cnf.new_var()).collect();
        let left: Vec<Vec<u32>> = (0..size)
            .map(|i| (0..i.saturating_sub(1)).map(|_| cnf.new_var()).collect())
            .collect();
        let t = trie.len();
        let y: Vec<Vec<u32>> = (0..size)
            .map(|_| (0..t).map(|_| cnf.new_var()).collect())
            .collect();
        let left_y: Vec<Vec<u32>> = (0..size)
            .map(|i| {
                if i >= 2 {
                    (0..t).map(|_| cnf.new_var()).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();

        let p = Lit::pos;
        let n = Lit::neg;

        for i in 0..size {
            let xs: Vec<Lit> = x[i].iter().flatten().map(|&v| p(v)).collect();
            cnf.exactly_one(&xs);

            let starts: Vec<Lit> = start[i].iter().map(|&v| p(v)).collect();
            cnf.exactly_one(&starts);

            let mut binary_labels = Vec::new();
            for (k, label) in labels.iter().enumerate() {
                let Some(v) = x[i][k] else { continue };
                match label.arity() {
                    0 => cnf.push([n(v), p(start[i][i])]),
                    1 => {
                        for (&prev, &cur) in start[i - 1].iter().zip(&start[i]).take(i) {
                            cnf.push([n(v), n(prev), p(cur)]);
                        }
                    }
                    _ => {
                        cnf.push([n(v), p(binary[i])]);
                        binary_labels.push(p(v));
                    }
                }
            }
            let mut def = vec![n(binary[i])];
            def.extend(binary_labels);
            cnf.push(def);

            if i >= 2 {
                cnf.push([n(binary[i]), n(start[i - 1][0])]);
                for j in 0..i - 1 {
                    let l = left[i][j];
                    let s = start[i - 1][j + 1];
                    cnf.push([n(l), p(binary[i])]);
                    cnf.push([n(l), p(s)]);
                    cnf.push([n(binary[i]), n(s), p(l)]);
                    for (&child, &cur) in start[j].iter().zip(&start[i]).take(j + 1) {
                        cnf.push([n(l), n(child), p(cur)]);
                    }
                }
            } else {
                cnf.push([n(binary[i])]);
            }
        }
        cnf.push([p(start[size - 1][0])]);

        for i in 0..size {
            if i >= 2 {
                for j in 0..i - 1 {
                    let l = left[i][j];
                    for tau in 0..t {
                        let a = left_y[i][tau];
                        let c = y[j][tau];
                        cnf.push([n(l), n(a), p(c)]);
                        cnf.push([n(l), p(a), n(c)]);
                    }
                }
            }
            for (k, label) in labels.iter().enumerate() {
                let Some(v) = x[i][k] else { continue };
                for tau in 0..t {
                    let yi = y[i][tau];
                    let prev = trie.parent[tau];
                    let yp = (prev != ROOT).then(|| y[i][prev as usize]);
                    match *label {
                        NodeLabel::Prop(q) => {
                            if trie.state[tau].get(q) {
                                cnf.push([n(v), p(yi)]);
                            } else {
                                cnf.push([n(v), n(yi)]);
                            }
                        }
                        NodeLabel::Op(op) => {
                            let c = if i >= 1 { y[i - 1][tau] } else { 0 };
                            encode_op(&mut cnf, op, v, yi, yp, c, prev, &y, &left_y, i, tau);
                        }
                    }
                }
            }
        }

        Ok(Encoding {
            size,
            labels,
            x,
            y,
            positive_paths,
            negative_paths,
            semantics: problem.semantics,
            cnf,
        })
    }

    /// Requires the root to hold on positives and fail on negatives.
    pub fn add_consistency(&mut self) {
        let root = &self.y[self.size - 1];
        for path in &self.positive_paths {
            match self.semantics {
                SatSemantics::Global => {
                    for &tau in path {
                        self.cnf.push([Lit::pos(root[tau as usize])]);
                    }
                }
                SatSemantics::FinalPosition => {
                    if let Some(&tau) = path.last() {
                        self.cnf.push([Lit::pos(root[tau as usize])]);
                    }
                }
            }
        }
        for path in &self.negative_paths {
            let clause: Vec<Lit> = match self.semantics {
                SatSemantics::Global => path.iter().map(|&tau| Lit::neg(root[tau as usize])).collect(),
                SatSemantics::FinalPosition => path
                    .last()
                    .map(|&tau| Lit::neg(root[tau as usize]))
                    .into_iter()
                    .collect(),
            };
            if clause.is_empty() {
                // An empty negative trace can never be violated.
                let v = self.cnf.new_var();
                self.cnf.push([Lit::pos(v)]);
                self.cnf.push([Lit::neg(v)]);
            } else {
                self.cnf.push(clause);
            }
        }
    }

    pub fn cnf(&self) -> &CnfFormula {
        &self.cnf
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Label variable of the root for `true`, if that label is allowed.
    pub(crate) fn root_true_var(&self) -> Option<u32> {
        let k = self
            .labels
            .iter()
            .position(|l| *l == NodeLabel::Op(Operator::True))?;
        self.x[self.size - 1][k]
    }

    /// Forces the label variables to spell `f`.
    pub fn pin_formula(&mut self, f: &Formula) -> Result<(), SynthError> {
        let mut seq = Vec::new();
        postorder(f, &mut seq);
        if seq.len() != self.size {
            return Err(SynthError::InvalidSize);
        }
        for (i, label) in seq.into_iter().enumerate() {
            let k = self
                .labels
                .iter()
                .position(|l| *l == label)
                .ok_or(SynthError::OperatorNotInMenu)?;
            let v = self.x[i][k].ok_or(SynthError::InvalidSize)?;
            self.cnf.push([Lit::pos(v)]);
        }
        Ok(())
    }

    fn node_label(&self, model: &[bool], i: usize) -> Result<NodeLabel, SynthError> {
        let chosen: Vec<usize> = (0..self.labels.len())
            .filter(|&k| self.x[i][k].is_some_and(|v| model[v as usize]))
            .collect();
        match chosen.as_slice() {
            [k] => Ok(self.labels[*k]),
            _ => Err(SynthError::MalformedModel(format!(
                "node {i} has {} labels",
                chosen.len()
            ))),
        }
    }

    /// Rebuilds the formula from label variables.
    pub fn decode(&self, model: &[bool]) -> Result<Formula, SynthError> {
        let mut stack: Vec<Formula> = Vec::new();
        for i in 0..self.size {
            let label = self.node_label(model, i)?;
            let f = match label {
                NodeLabel::Prop(p) => Formula::Prop(p),
                NodeLabel::Op(op) => {
                    let arity = op.arity();
                    if stack.len() < arity {
                        return Err(SynthError::MalformedModel(format!(
                            "node {i} lacks children"
                        )));
                    }
                    let children = stack.split_off(stack.len() - arity);
                    Formula::from_operator(op, children)
                }
            };
            stack.push(f);
        }
        match stack.len() {
            1 => Ok(stack.pop().unwrap()),
            k => Err(SynthError::MalformedModel(format!("{k} disconnected subtrees"))),
        }
    }

    /// Clause excluding this model's formula.
    pub fn blocking_clause(&self, model: &[bool]) -> Vec<Lit> {
        self.x
            .iter()
            .flatten()
            .flatten()
            .filter(|&&v| model[v as usize])
            .map(|&v| Lit::neg(v))
            .collect()
    }

    /// Value of node `i` at position `pos` of positive (`negative = false`)
    /// or negative trace `trace`.
    pub fn truth(&self, model: &[bool], i: usize, negative: bool, trace: usize, pos: usize) -> bool {
        let paths = if negative {
            &self.negative_paths
        } else {
            &self.positive_paths
        };
        model[self.y[i][paths[trace][pos] as usize] as usize]
    }
}

#[allow(clippy::too_many_arguments)]
fn encode_op(
    cnf: &mut CnfFormula,
    op: Operator,
    v: u32,
    yi: u32,
    yp: Option<u32>,
    c: u32,
    prev: u32,
    y: &[Vec<u32>],
    left_y: &[Vec<u32>],
    i: usize,
    tau: usize,
) {
    let p = Lit::pos;
    let n = Lit::neg;
    match op {
        Operator::True => cnf.push([n(v), p(yi)]),
        Operator::False => cnf.push([n(v), n(yi)]),
        Operator::Not => {
            cnf.push([n(v), n(yi), n(c)]);
            cnf.push([n(v), p(yi), p(c)]);
        }
        Operator::Yesterday => match prev {
            ROOT => cnf.push([n(v), n(yi)]),
            pr => {
                let cp = y[i - 1][pr as usize];
                cnf.push([n(v), n(yi), p(cp)]);
                cnf.push([n(v), p(yi), n(cp)]);
            }
        },
        Operator::Once => match yp {
            None => {
                cnf.push([n(v), n(yi), p(c)]);
                cnf.push([n(v), p(yi), n(c)]);
            }
            Some(yp) => {
                cnf.push([n(v), n(yi), p(c), p(yp)]);
                cnf.push([n(v), p(yi), n(c)]);
                cnf.push([n(v), p(yi), n(yp)]);
            }
        },
        Operator::Historically => match yp {
            None => {
                cnf.push([n(v), n(yi), p(c)]);
                cnf.push([n(v), p(yi), n(c)]);
            }
            Some(yp) => {
                cnf.push([n(v), n(yi), p(c)]);
                cnf.push([n(v), n(yi), p(yp)]);
                cnf.push([n(v), p(yi), n(c), n(yp)]);
            }
        },
        Operator::And | Operator::Or | Operator::Since => {
            let a = left_y[i][tau];
            let b = c;
            match op {
                Operator::And => {
                    cnf.push([n(v), n(yi), p(a)]);
                    cnf.push([n(v), n(yi), p(b)]);
                    cnf.push([n(v), p(yi), n(a), n(b)]);
                }
                Operator::Or => {
                    cnf.push([n(v), p(yi), n(a)]);
                    cnf.push([n(v), p(yi), n(b)]);
                    cnf.push([n(v), n(yi), p(a), p(b)]);
                }
                _ => match yp {
                    None => {
                        cnf.push([n(v), n(yi), p(b)]);
                        cnf.push([n(v), p(yi), n(b)]);
                    }
                    Some(yp) => {
                        cnf.push([n(v), n(yi), p(b), p(yp)]);
                        cnf.push([n(v), n(yi), p(b), p(a)]);
                        cnf.push([n(v), p(yi), n(b)]);
                        cnf.push([n(v), p(yi), n(yp), n(a)]);
                    }
                },
            }
        }
    }
}

fn postorder(f: &Formula, out: &mut Vec<NodeLabel>) {
    for c in f.children() {
        postorder(c, out);
    }
    out.push(match f {
        Formula::Prop(p) => NodeLabel::Prop(*p),
        other => NodeLabel::Op(other.operator().expect("non-prop has an operator")),
    });
}
