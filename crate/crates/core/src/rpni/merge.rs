//! Red-blue state merging over a prefix tree, shared by the DFA and Mealy
//! learners. PTA states are numbered breadth-first with children visited in
//! symbol order, so node index doubles as the canonical merge rank.

use std::collections::VecDeque;

use crate::automata::NONE;

const UNKNOWN: u8 = 0;
const ACCEPT: u8 = 1;
const REJECT: u8 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Label {
    Unknown,
    Accept,
    Reject,
}

enum Undo {
    Parent(u32),
    Label(u32, u8),
    Edge(usize, u32, u32),
}

/// Result of a merge run: states in BFS order from the start state.
pub(crate) struct Folded {
    pub states: usize,
    pub labels: Vec<Label>,
    /// `(from, symbol, to, output)`; output is `NONE` in the DFA case.
    pub edges: Vec<(usize, usize, usize, u32)>,
}

pub(crate) struct Merger {
    symbols: usize,
    parent: Vec<u32>,
    label: Vec<u8>,
    target: Vec<u32>,
    output: Vec<u32>,
    log: Vec<Undo>,
    pub merges: usize,
}

/// Prefix tree under construction, before canonical renumbering.
pub(crate) struct Trie {
    symbols: usize,
    target: Vec<u32>,
    output: Vec<u32>,
    label: Vec<u8>,
}

impl Trie {
    pub(crate) fn new(symbols: usize) -> Self {
        Trie {
            symbols,
            target: vec![NONE; symbols],
            output: vec![NONE; symbols],
            label: vec![UNKNOWN],
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.label.len()
    }

    /// Walks `word`, creating nodes as needed. `outputs`, if given, labels the
    /// edges; the first disagreeing position is returned as `Err`.
    pub(crate) fn insert(&mut self, word: &[u32], outputs: Option<&[u32]>) -> Result<u32, usize> {
        let mut node = 0usize;
        for (i, &sym) in word.iter().enumerate() {
            let k = node * self.symbols + sym as usize;
            if self.target[k] == NONE {
                self.target[k] = self.label.len() as u32;
                self.label.push(UNKNOWN);
                self.target.extend(std::iter::repeat_n(NONE, self.symbols));
                self.output.extend(std::iter::repeat_n(NONE, self.symbols));
                if let Some(out) = outputs {
                    self.output[k] = out[i];
                }
            } else if let Some(out) = outputs {
                if self.output[k] != out[i] {
                    return Err(i);
                }
            }
            node = self.target[k] as usize;
        }
        Ok(node as u32)
    }

    /// Sets a node label; `false` if it contradicts an existing one.
    pub(crate) fn mark(&mut self, node: u32, label: Label) -> bool {
        let v = match label {
            Label::Unknown => return true,
            Label::Accept => ACCEPT,
            Label::Reject => REJECT,
        };
        let slot = &mut self.label[node as usize];
        if *slot != UNKNOWN && *slot != v {
            return false;
        }
        *slot = v;
        true
    }

    /// Renumbers nodes breadth-first and wraps them in a merger.
    pub(crate) fn into_merger(self) -> Merger {
        let n = self.len();
        let a = self.symbols;
        let mut order = Vec::with_capacity(n);
        let mut rank = vec![0u32; n];
        let mut queue = VecDeque::from([0usize]);
        while let Some(u) = queue.pop_front() {
            rank[u] = order.len() as u32;
            order.push(u);
            for s in 0..a {
                let t = self.target[u * a + s];
                if t != NONE {
                    queue.push_back(t as usize);
                }
            }
        }
        let mut target = vec![NONE; n * a];
        let mut output = vec![NONE; n * a];
        let mut label = vec![UNKNOWN; n];
        for (new, &old) in order.iter().enumerate() {
            label[new] = self.label[old];
            for s in 0..a {
                let t = self.target[old * a + s];
                if t != NONE {
                    target[new * a + s] = rank[t as usize];
                    output[new * a + s] = self.output[old * a + s];
                }
            }
        }
        Merger {
            symbols: a,
            parent: (0..n as u32).collect(),
            label,
            target,
            output,
            log: Vec::new(),
            merges: 0,
        }
    }
}

impl Merger {
    fn find(&self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            x = self.parent[x as usize];
        }
        x
    }

    fn rollback(&mut self) {
        while let Some(u) = self.log.pop() {
            match u {
                Undo::Parent(x) => self.parent[x as usize] = x,
                Undo::Label(x, old) => self.label[x as usize] = old,
                Undo::Edge(k, t, o) => {
                    self.target[k] = t;
                    self.output[k] = o;
                }
            }
        }
    }

    /// Merges the classes of `a` and `b` and folds to restore determinism.
    /// On conflict every change is undone and `false` returned.
    fn try_merge(&mut self, a: u32, b: u32) -> bool {
        self.log.clear();
        let mut pending = vec![(a, b)];
        while let Some((x, y)) = pending.pop() {
            let (x, y) = (self.find(x), self.find(y));
            if x == y {
                continue;
            }
            let (keep, gone) = if x < y { (x, y) } else { (y, x) };
            self.parent[gone as usize] = keep;
            self.log.push(Undo::Parent(gone));

            let (lk, lg) = (self.label[keep as usize], self.label[gone as usize]);
            if lg != UNKNOWN {
                if lk == UNKNOWN {
                    self.log.push(Undo::Label(keep, lk));
                    self.label[keep as usize] = lg;
                } else if lk != lg {
                    self.rollback();
                    return false;
                }
            }

            for s in 0..self.symbols {
                let kg = gone as usize * self.symbols + s;
                let tg = self.target[kg];
                if tg == NONE {
                    continue;
                }
                let kk = keep as usize * self.symbols + s;
                let tk = self.target[kk];
                if tk == NONE {
                    self.log.push(Undo::Edge(kk, tk, self.output[kk]));
                    self.target[kk] = tg;
                    self.output[kk] = self.output[kg];
                } else {
                    if self.output[kk] != self.output[kg] {
                        self.rollback();
                        return false;
                    }
                    pending.push((tk, tg));
                }
            }
        }
        self.log.clear();
        true
    }

    fn successor(&self, state: u32, sym: usize) -> Option<u32> {
        match self.target[state as usize * self.symbols + sym] {
            NONE => None,
            t => Some(self.find(t)),
        }
    }

    pub(crate) fn run(&mut self) {
        let mut red: Vec<u32> = vec![0];
        loop {
            // Reds are always class representatives; folding may have
            // collapsed two of them.
            red = red.iter().map(|&r| self.find(r)).collect();
            red.sort_unstable();
            red.dedup();
            let mut blue: Option<u32> = None;
            for &r in &red {
                for s in 0..self.symbols {
                    if let Some(q) = self.successor(r, s) {
                        if red.binary_search(&q).is_err() && blue.is_none_or(|b| q < b) {
                            blue = Some(q);
                        }
                    }
                }
            }
            let Some(q) = blue else { break };
            let merged = red.iter().any(|&r| self.try_merge(r, q));
            if merged {
                self.merges += 1;
            } else {
                let pos = red.binary_search(&q).unwrap_err();
                red.insert(pos, q);
            }
        }
    }

    pub(crate) fn fold(&self) -> Folded {
        let mut index = std::collections::HashMap::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::from([self.find(0)]);
        index.insert(self.find(0), 0usize);
        let mut edges = Vec::new();
        while let Some(u) = queue.pop_front() {
            order.push(u);
            let from = index[&u];
            for s in 0..self.symbols {
                if let Some(t) = self.successor(u, s) {
                    let next = index.len();
                    let to = *index.entry(t).or_insert_with(|| {
                        queue.push_back(t);
                        next
                    });
                    edges.push((from, s, to, self.output[u as usize * self.symbols + s]));
                }
            }
        }
        let labels = order
            .iter()
            .map(|&u| match self.label[u as usize] {
                ACCEPT => Label::Accept,
                REJECT => Label::Reject,
                _ => Label::Unknown,
            })
            .collect();
        Folded {
            states: order.len(),
            labels,
            edges,
        }
    }
}
