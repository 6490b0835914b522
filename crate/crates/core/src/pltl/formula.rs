use std::fmt;

use super::{Alphabet, PltlError, PropId};

/// Past-time LTL formula. Propositions refer to an external [`Alphabet`].
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    True,
    False,
    Prop(PropId),
    Not(Box<Formula>),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    Yesterday(Box<Formula>),
    Once(Box<Formula>),
    Historically(Box<Formula>),
    /// `Since(lhs, rhs)`: `rhs` held at some point and `lhs` has held ever since.
    Since(Box<Formula>, Box<Formula>),
}

/// Node kinds, used for operator menus and encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Operator {
    True,
    False,
    Not,
    And,
    Or,
    Yesterday,
    Once,
    Historically,
    Since,
}

impl Operator {
    pub const ALL: [Operator; 9] = [
        Operator::True,
        Operator::False,
        Operator::Not,
        Operator::And,
        Operator::Or,
        Operator::Yesterday,
        Operator::Once,
        Operator::Historically,
        Operator::Since,
    ];

    pub fn arity(self) -> usize {
        match self {
            Operator::True | Operator::False => 0,
            Operator::Not | Operator::Yesterday | Operator::Once | Operator::Historically => 1,
            Operator::And | Operator::Or | Operator::Since => 2,
        }
    }

    /// Inverse of [`Operator::keyword`].
    pub fn from_keyword(word: &str) -> Option<Operator> {
        Operator::ALL.into_iter().find(|op| op.keyword() == word)
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Operator::True => "true",
            Operator::False => "false",
            Operator::Not => "not",
            Operator::And => "and",
            Operator::Or => "or",
            Operator::Yesterday => "Y",
            Operator::Once => "O",
            Operator::Historically => "H",
            Operator::Since => "S",
        }
    }
}

impl Formula {
    pub fn prop(id: PropId) -> Self {
        Formula::Prop(id)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula, b: Formula) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula, b: Formula) -> Self {
        Formula::Or(Box::new(a), Box::new(b))
    }

    /// `a ⇒ b`, desugared to `¬a ∨ b`.
    pub fn implies(a: Formula, b: Formula) -> Self {
        Formula::or(Formula::not(a), b)
    }

    pub fn yesterday(f: Formula) -> Self {
        Formula::Yesterday(Box::new(f))
    }

    pub fn once(f: Formula) -> Self {
        Formula::Once(Box::new(f))
    }

    pub fn historically(f: Formula) -> Self {
        Formula::Historically(Box::new(f))
    }

    pub fn since(lhs: Formula, rhs: Formula) -> Self {
        Formula::Since(Box::new(lhs), Box::new(rhs))
    }

    /// Builds a node from an operator and its children. Panics on arity mismatch.
    pub fn from_operator(op: Operator, mut children: Vec<Formula>) -> Self {
        assert_eq!(children.len(), op.arity(), "arity mismatch for {op:?}");
        let mut next = || Box::new(children.remove(0));
        match op {
            Operator::True => Formula::True,
            Operator::False => Formula::False,
            Operator::Not => Formula::Not(next()),
            Operator::Yesterday => Formula::Yesterday(next()),
            Operator::Once => Formula::Once(next()),
            Operator::Historically => Formula::Historically(next()),
            Operator::And => {
                let a = next();
                Formula::And(a, next())
            }
            Operator::Or => {
                let a = next();
                Formula::Or(a, next())
            }
            Operator::Since => {
                let a = next();
                Formula::Since(a, next())
            }
        }
    }

    /// Operator at the root, or `None` for a proposition.
    pub fn operator(&self) -> Option<Operator> {
        Some(match self {
            Formula::True => Operator::True,
            Formula::False => Operator::False,
            Formula::Prop(_) => return None,
            Formula::Not(_) => Operator::Not,
            Formula::And(..) => Operator::And,
            Formula::Or(..) => Operator::Or,
            Formula::Yesterday(_) => Operator::Yesterday,
            Formula::Once(_) => Operator::Once,
            Formula::Historically(_) => Operator::Historically,
            Formula::Since(..) => Operator::Since,
        })
    }

    pub fn children(&self) -> Vec<&Formula> {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => vec![],
            Formula::Not(a) | Formula::Yesterday(a) | Formula::Once(a) | Formula::Historically(a) => {
                vec![a]
            }
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Since(a, b) => vec![a, b],
        }
    }

    /// Number of AST nodes, counting repeated subtrees once per occurrence.
    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Formula::size).sum::<usize>()
    }

    /// Number of proposition leaves.
    pub fn proposition_count(&self) -> usize {
        match self {
            Formula::Prop(_) => 1,
            other => other
                .children()
                .into_iter()
                .map(Formula::proposition_count)
                .sum(),
        }
    }

    /// Every proposition index mentioned by the formula.
    pub fn propositions(&self) -> Vec<PropId> {
        let mut out = Vec::new();
        self.collect_props(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_props(&self, out: &mut Vec<PropId>) {
        if let Formula::Prop(p) = self {
            out.push(*p);
        }
        for c in self.children() {
            c.collect_props(out);
        }
    }

    pub fn max_prop(&self) -> Option<PropId> {
        self.propositions().last().copied()
    }

    /// Rewrites proposition indices from `from` to the matching names in `to`.
    pub fn remap(&self, from: &Alphabet, to: &Alphabet) -> Result<Formula, PltlError> {
        Ok(match self {
            Formula::Prop(p) => {
                let name = from.name(*p);
                Formula::Prop(
                    to.get(name)
                        .ok_or_else(|| PltlError::UnknownProposition(name.to_string()))?,
                )
            }
            Formula::True => Formula::True,
            Formula::False => Formula::False,
            Formula::Not(a) => Formula::not(a.remap(from, to)?),
            Formula::Yesterday(a) => Formula::yesterday(a.remap(from, to)?),
            Formula::Once(a) => Formula::once(a.remap(from, to)?),
            Formula::Historically(a) => Formula::historically(a.remap(from, to)?),
            Formula::And(a, b) => Formula::and(a.remap(from, to)?, b.remap(from, to)?),
            Formula::Or(a, b) => Formula::or(a.remap(from, to)?, b.remap(from, to)?),
            Formula::Since(a, b) => Formula::since(a.remap(from, to)?, b.remap(from, to)?),
        })
    }

    /// Replaces `Once` and `Historically` by their `Since`-based definitions.
    pub fn desugar_temporal(&self) -> Formula {
        match self {
            Formula::True | Formula::False | Formula::Prop(_) => self.clone(),
            Formula::Not(a) => Formula::not(a.desugar_temporal()),
            Formula::Yesterday(a) => Formula::yesterday(a.desugar_temporal()),
            Formula::Once(a) => Formula::since(Formula::True, a.desugar_temporal()),
            Formula::Historically(a) => Formula::not(Formula::since(
                Formula::True,
                Formula::not(a.desugar_temporal()),
            )),
            Formula::And(a, b) => Formula::and(a.desugar_temporal(), b.desugar_temporal()),
            Formula::Or(a, b) => Formula::or(a.desugar_temporal(), b.desugar_temporal()),
            Formula::Since(a, b) => Formula::since(a.desugar_temporal(), b.desugar_temporal()),
        }
    }

    /// Prefix-syntax rendering that resolves propositions through `alphabet`.
    pub fn display<'a>(&'a self, alphabet: &'a Alphabet) -> FormulaDisplay<'a> {
        FormulaDisplay {
            formula: self,
            alphabet,
        }
    }

    pub fn to_text(&self, alphabet: &Alphabet) -> String {
        self.display(alphabet).to_string()
    }
}

pub struct FormulaDisplay<'a> {
    formula: &'a Formula,
    alphabet: &'a Alphabet,
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_formula(self.formula, self.alphabet, f)
    }
}

fn write_formula(formula: &Formula, alphabet: &Alphabet, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match formula {
        Formula::True => f.write_str("true"),
        Formula::False => f.write_str("false"),
        Formula::Prop(p) => write!(f, "(prop {})", alphabet.name(*p)),
        other => {
            let op = other.operator().expect("non-leaf has an operator");
            write!(f, "({}", op.keyword())?;
            for child in other.children() {
                f.write_str(" ")?;
                write_formula(child, alphabet, f)?;
            }
            f.write_str(")")
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token<'a> {
    Open,
    Close,
    Word(&'a str),
}

fn tokenize(text: &str) -> Vec<(usize, Token<'_>)> {
    let mut tokens = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c == b'(' {
            tokens.push((i, Token::Open));
            i += 1;
        } else if c == b')' {
            tokens.push((i, Token::Close));
            i += 1;
        } else {
            let start = i;
            while i < bytes.len()
                && !bytes[i].is_ascii_whitespace()
                && bytes[i] != b'('
                && bytes[i] != b')'
            {
                i += 1;
            }
            tokens.push((start, Token::Word(&text[start..i])));
        }
    }
    tokens
}

struct Parser<'t, 'a> {
    tokens: Vec<(usize, Token<'t>)>,
    pos: usize,
    end: usize,
    alphabet: AlphabetMode<'a>,
}

enum AlphabetMode<'a> {
    Fixed(&'a Alphabet),
    Open(&'a mut Alphabet),
}

impl<'t> Parser<'t, '_> {
    fn peek(&self) -> Option<&(usize, Token<'t>)> {
        self.tokens.get(self.pos)
    }

    fn offset(&self) -> usize {
        self.peek().map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn next(&mut self) -> Option<(usize, Token<'t>)> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn syntax(&self, position: usize, message: impl Into<String>) -> PltlError {
        PltlError::Syntax {
            position,
            message: message.into(),
        }
    }

    fn formula(&mut self) -> Result<Formula, PltlError> {
        match self.next() {
            Some((_, Token::Word("true"))) => Ok(Formula::True),
            Some((_, Token::Word("false"))) => Ok(Formula::False),
            Some((pos, Token::Word(w))) => Err(self.syntax(pos, format!("unexpected token `{w}`"))),
            Some((pos, Token::Close)) => Err(self.syntax(pos, "unexpected `)`")),
            None => Err(self.syntax(self.end, "unexpected end of input")),
            Some((open, Token::Open)) => {
                let (kw_pos, keyword) = match self.next() {
                    Some((p, Token::Word(w))) => (p, w),
                    Some((p, _)) => return Err(self.syntax(p, "expected an operator keyword")),
                    None => return Err(self.syntax(self.end, "unexpected end of input")),
                };
                if keyword == "prop" {
                    return self.proposition(open);
                }
                let (op, arity) = match keyword {
                    "not" => (Some(Operator::Not), 1),
                    "and" => (Some(Operator::And), 2),
                    "or" => (Some(Operator::Or), 2),
                    "imp" => (None, 2),
                    "Y" => (Some(Operator::Yesterday), 1),
                    "O" => (Some(Operator::Once), 1),
                    "H" => (Some(Operator::Historically), 1),
                    "S" => (Some(Operator::Since), 2),
                    other => {
                        return Err(self.syntax(kw_pos, format!("unknown operator `{other}`")));
                    }
                };
                let mut children = Vec::with_capacity(arity);
                loop {
                    match self.peek() {
                        Some((_, Token::Close)) => {
                            self.pos += 1;
                            break;
                        }
                        None => return Err(self.syntax(self.end, "missing `)`")),
                        _ => children.push(self.formula()?),
                    }
                }
                if children.len() != arity {
                    return Err(PltlError::Arity {
                        position: open,
                        operator: keyword.to_string(),
                        expected: arity,
                        found: children.len(),
                    });
                }
                Ok(match op {
                    Some(op) => Formula::from_operator(op, children),
                    None => {
                        let rhs = children.pop().unwrap();
                        Formula::implies(children.pop().unwrap(), rhs)
                    }
                })
            }
        }
    }

    fn proposition(&mut self, open: usize) -> Result<Formula, PltlError> {
        let name = match self.next() {
            Some((_, Token::Word(w))) => w,
            _ => {
                return Err(PltlError::Arity {
                    position: open,
                    operator: "prop".into(),
                    expected: 1,
                    found: 0,
                })
            }
        };
        match self.next() {
            Some((_, Token::Close)) => {}
            Some(_) => {
                return Err(PltlError::Arity {
                    position: open,
                    operator: "prop".into(),
                    expected: 1,
                    found: 2,
                })
            }
            None => return Err(self.syntax(self.end, "missing `)`")),
        }
        let id = match &mut self.alphabet {
            AlphabetMode::Fixed(a) => a
                .get(name)
                .ok_or_else(|| PltlError::UnknownProposition(name.to_string()))?,
            AlphabetMode::Open(a) => a.intern(name)?,
        };
        Ok(Formula::Prop(id))
    }
}

fn parse_with(text: &str, alphabet: AlphabetMode<'_>) -> Result<Formula, PltlError> {
    let mut parser = Parser {
        tokens: tokenize(text),
        pos: 0,
        end: text.len(),
        alphabet,
    };
    let f = parser.formula()?;
    if parser.pos < parser.tokens.len() {
        let at = parser.offset();
        return Err(parser.syntax(at, "trailing input after formula"));
    }
    Ok(f)
}

/// Parses the prefix formula syntax; every proposition must be in `alphabet`.
pub fn parse_formula(text: &str, alphabet: &Alphabet) -> Result<Formula, PltlError> {
    parse_with(text, AlphabetMode::Fixed(alphabet))
}

/// Parses a formula, collecting its propositions into a fresh alphabet in
/// order of first appearance.
pub fn parse_formula_open(text: &str) -> Result<(Formula, Alphabet), PltlError> {
    let mut alphabet = Alphabet::default();
    let f = parse_with(text, AlphabetMode::Open(&mut alphabet))?;
    Ok((f, alphabet))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ab() -> Alphabet {
        Alphabet::new(["a", "b"]).unwrap()
    }

    #[test]
    fn parses_since() {
        let f = parse_formula("(S (not (prop a)) (prop b))", &ab()).unwrap();
        assert_eq!(
            f,
            Formula::since(Formula::not(Formula::Prop(PropId(0))), Formula::Prop(PropId(1)))
        );
    }

    #[test]
    fn implication_is_desugared() {
        let alphabet = Alphabet::new([
            "ueInformationRequest",
            "rrcConnectionRequest",
            "securityModeComplete",
        ])
        .unwrap();
        let f = parse_formula(
            "(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))",
            &alphabet,
        )
        .unwrap();
        let expected = Formula::or(
            Formula::not(Formula::Prop(PropId(0))),
            Formula::since(Formula::not(Formula::Prop(PropId(1))), Formula::Prop(PropId(2))),
        );
        assert_eq!(f, expected);
        assert_eq!(f.size(), 7);
    }

    #[test]
    fn arity_errors() {
        assert!(matches!(
            parse_formula("(and (prop a))", &ab()),
            Err(PltlError::Arity { expected: 2, found: 1, .. })
        ));
        assert!(matches!(
            parse_formula("(not (prop a) (prop b))", &ab()),
            Err(PltlError::Arity { expected: 1, found: 2, .. })
        ));
        assert!(matches!(
            parse_formula("(prop)", &ab()),
            Err(PltlError::Arity { .. })
        ));
    }

    #[test]
    fn syntax_errors_carry_position() {
        match parse_formula("(and (prop a) (prop b)", &ab()) {
            Err(PltlError::Syntax { position, .. }) => assert_eq!(position, 22),
            other => panic!("unexpected {other:?}"),
        }
        match parse_formula("(xor (prop a) (prop b))", &ab()) {
            Err(PltlError::Syntax { position, .. }) => assert_eq!(position, 1),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_formula("true false", &ab()).is_err());
        assert!(parse_formula("", &ab()).is_err());
    }

    #[test]
    fn unknown_proposition() {
        assert!(matches!(
            parse_formula("(prop c)", &ab()),
            Err(PltlError::UnknownProposition(p)) if p == "c"
        ));
    }

    #[test]
    fn sizes() {
        let p = Formula::Prop(PropId(0));
        assert_eq!(p.size(), 1);
        assert_eq!(Formula::not(p.clone()).size(), 2);
        assert_eq!(Formula::since(p.clone(), Formula::not(p)).size(), 4);
    }

    #[test]
    fn open_parse_collects_alphabet() {
        let (f, alphabet) = parse_formula_open("(or (prop x) (Y (prop y)))").unwrap();
        assert_eq!(alphabet.names(), &["x".to_string(), "y".to_string()]);
        assert_eq!(f.to_text(&alphabet), "(or (prop x) (Y (prop y)))");
    }

    #[test]
    fn formatting_round_trips_whitespace() {
        let text = "(S   (not (prop a))\n\t(O (prop b)) )";
        let f = parse_formula(text, &ab()).unwrap();
        let printed = f.to_text(&ab());
        assert_eq!(printed, "(S (not (prop a)) (O (prop b)))");
        assert_eq!(parse_formula(&printed, &ab()).unwrap(), f);
    }
}
