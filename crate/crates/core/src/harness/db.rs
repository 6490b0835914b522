//! Signature database files.
//!
//! ```text
//! [signature]
//! name=rlf_report
//! layer=RRC
//! kind=pltl
//! severity=high
//! remedy=drop the message
//! body=(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))
//! ```
//!
//! For `dfa` and `mm` entries the body is a path, relative to the database
//! file, of a machine in the automata text format.

use std::collections::{BTreeMap, HashSet};
use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::automata::{Dfa, MealyMachine};
use crate::pltl::{parse_formula, parse_formula_open, Alphabet, Formula, PltlError};
use crate::traces::{CorpusAlphabet, Layer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignatureKind {
    Pltl,
    Dfa,
    Mm,
}

impl SignatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SignatureKind::Pltl => "pltl",
            SignatureKind::Dfa => "dfa",
            SignatureKind::Mm => "mm",
        }
    }
}

impl fmt::Display for SignatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SignatureKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "pltl" => Ok(SignatureKind::Pltl),
            "dfa" => Ok(SignatureKind::Dfa),
            "mm" => Ok(SignatureKind::Mm),
            _ => Err(format!("unknown kind `{s}` (expected pltl, dfa or mm)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Low,
    Medium,
    High,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
        }
    }
}

impl std::str::FromStr for Severity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "low" => Ok(Severity::Low),
            "medium" => Ok(Severity::Medium),
            "high" => Ok(Severity::High),
            _ => Err(format!("unknown severity `{s}` (expected low, medium or high)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureEntry {
    pub name: String,
    pub layer: Layer,
    pub kind: SignatureKind,
    pub severity: Severity,
    #[serde(default)]
    pub remedy: String,
    pub body: String,
}

fn perr(line: usize, message: impl Into<String>) -> HarnessError {
    HarnessError::Parse {
        line,
        message: message.into(),
    }
}

#[derive(Default)]
struct Partial {
    line: usize,
    fields: BTreeMap<&'static str, String>,
}

const KEYS: [&str; 6] = ["name", "layer", "kind", "severity", "remedy", "body"];

impl Partial {
    fn finish(mut self) -> Result<SignatureEntry, HarnessError> {
        let line = self.line;
        let mut take = |k: &str| {
            self.fields
                .remove(k)
                .ok_or_else(|| perr(line, format!("signature block is missing `{k}=`")))
        };
        let name = take("name")?;
        let layer = take("layer")?.parse().map_err(|m| perr(line, m))?;
        let kind = take("kind")?.parse().map_err(|m| perr(line, m))?;
        let severity = take("severity")?.parse().map_err(|m| perr(line, m))?;
        let body = take("body")?;
        let remedy = take("remedy").unwrap_or_default();
        if name.is_empty() {
            return Err(perr(line, "empty signature name"));
        }
        Ok(SignatureEntry {
            name,
            layer,
            kind,
            severity,
            remedy,
            body,
        })
    }
}

/// Reads entries without resolving bodies. Names must be unique.
pub fn parse_db(text: &str) -> Result<Vec<SignatureEntry>, HarnessError> {
    let mut entries: Vec<SignatureEntry> = Vec::new();
    let mut current: Option<Partial> = None;
    let push = |p: Partial, entries: &mut Vec<SignatureEntry>| -> Result<(), HarnessError> {
        let e = p.finish()?;
        if entries.iter().any(|x| x.name == e.name) {
            return Err(HarnessError::DuplicateName(e.name));
        }
        entries.push(e);
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "[signature]" {
            if let Some(p) = current.take() {
                push(p, &mut entries)?;
            }
            current = Some(Partial {
                line: lineno,
                ..Partial::default()
            });
            continue;
        }
        let p = current
            .as_mut()
            .ok_or_else(|| perr(lineno, "expected `[signature]`"))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| perr(lineno, "expected key=value"))?;
        let key = key.trim();
        let key = KEYS
            .iter()
            .find(|k| **k == key)
            .ok_or_else(|| perr(lineno, format!("unknown key `{key}`")))?;
        if p.fields.insert(key, value.trim().to_string()).is_some() {
            return Err(perr(lineno, format!("`{key}` given twice")));
        }
    }
    if let Some(p) = current {
        push(p, &mut entries)?;
    }
    Ok(entries)
}

pub fn write_db(entries: &[SignatureEntry]) -> String {
    let mut out = String::new();
    for (i, e) in entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "[signature]");
        let _ = writeln!(out, "name={}", e.name);
        let _ = writeln!(out, "layer={}", e.layer);
        let _ = writeln!(out, "kind={}", e.kind);
        let _ = writeln!(out, "severity={}", e.severity.as_str());
        if !e.remedy.is_empty() {
            let _ = writeln!(out, "remedy={}", e.remedy);
        }
        let _ = writeln!(out, "body={}", e.body);
    }
    out
}

/// A signature ready to monitor.
#[derive(Debug, Clone)]
pub enum SignatureBody {
    /// Formula over its own alphabet: the corpus alphabet when one was
    /// given, otherwise just the propositions it mentions.
    Pltl { formula: Formula, alphabet: Alphabet },
    Dfa(Dfa),
    Mm(MealyMachine),
}

#[derive(Debug, Clone)]
pub struct CompiledSignature {
    pub entry: SignatureEntry,
    pub body: SignatureBody,
}

/// Parsed database with every body resolved.
#[derive(Debug, Clone, Default)]
pub struct SignatureDb {
    pub signatures: Vec<CompiledSignature>,
    /// Corpus alphabet size, when one was supplied.
    pub alphabet_size: Option<usize>,
}

impl SignatureDb {
    /// Compiles database text; automaton bodies are looked up in `files`
    /// by the path written in the entry.
    pub fn compile(
        text: &str,
        files: &BTreeMap<String, String>,
        alphabet: Option<&CorpusAlphabet>,
    ) -> Result<Self, HarnessError> {
        let entries = parse_db(text)?;
        let corpus = alphabet.map(CorpusAlphabet::alphabet).transpose()?;
        let mut signatures = Vec::with_capacity(entries.len());
        for entry in entries {
            let body = compile_body(&entry, files, corpus.as_ref())?;
            signatures.push(CompiledSignature { entry, body });
        }
        Ok(SignatureDb {
            signatures,
            alphabet_size: corpus.map(|a| a.len()),
        })
    }

    pub fn len(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn entries(&self) -> impl Iterator<Item = &SignatureEntry> + '_ {
        self.signatures.iter().map(|s| &s.entry)
    }
}

fn compile_body(
    entry: &SignatureEntry,
    files: &BTreeMap<String, String>,
    corpus: Option<&Alphabet>,
) -> Result<SignatureBody, HarnessError> {
    let body_err = |m: String| HarnessError::Body {
        name: entry.name.clone(),
        message: m,
    };
    match entry.kind {
        SignatureKind::Pltl => match corpus {
            Some(a) => match parse_formula(&entry.body, a) {
                Ok(formula) => Ok(SignatureBody::Pltl {
                    formula,
                    alphabet: a.clone(),
                }),
                Err(PltlError::UnknownProposition(p)) => Err(HarnessError::AlphabetMismatch {
                    name: entry.name.clone(),
                    message: format!("proposition `{p}` is not in the corpus alphabet"),
                }),
                Err(e) => Err(body_err(e.to_string())),
            },
            None => {
                let (formula, alphabet) =
                    parse_formula_open(&entry.body).map_err(|e| body_err(e.to_string()))?;
                Ok(SignatureBody::Pltl { formula, alphabet })
            }
        },
        SignatureKind::Dfa | SignatureKind::Mm => {
            let text = files.get(&entry.body).ok_or_else(|| HarnessError::MissingFile {
                name: entry.name.clone(),
                path: entry.body.clone(),
            })?;
            if entry.kind == SignatureKind::Dfa {
                Ok(SignatureBody::Dfa(Dfa::parse(text).map_err(|e| body_err(e.to_string()))?))
            } else {
                Ok(SignatureBody::Mm(
                    MealyMachine::parse(text).map_err(|e| body_err(e.to_string()))?,
                ))
            }
        }
    }
}

/// Reads every automaton file a database refers to, keyed by the path as
/// written, resolved against `base`. Missing files are left out so that
/// compiling reports them.
pub fn collect_files(text: &str, base: &Path) -> Result<BTreeMap<String, String>, HarnessError> {
    let mut files = BTreeMap::new();
    let mut seen = HashSet::new();
    for e in parse_db(text)? {
        if e.kind == SignatureKind::Pltl || !seen.insert(e.body.clone()) {
            continue;
        }
        let path: PathBuf = base.join(&e.body);
        if let Ok(content) = std::fs::read_to_string(&path) {
            files.insert(e.body, content);
        }
    }
    Ok(files)
}

/// Loads and compiles a database file.
pub fn load_db(path: &Path, alphabet: Option<&CorpusAlphabet>) -> Result<SignatureDb, HarnessError> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let files = collect_files(&text, base)?;
    SignatureDb::compile(&text, &files, alphabet)
}

#[cfg(test)]
mod tests {
    use super::*;

    const RLF: &str = "(imp (prop ueInformationRequest) (S (not (prop rrcConnectionRequest)) (prop securityModeComplete)))";

    fn block(name: &str, kind: &str, body: &str) -> String {
        format!("[signature]\nname={name}\nlayer=RRC\nkind={kind}\nseverity=high\nremedy=drop it\nbody={body}\n")
    }

    #[test]
    fn single_pltl_entry() {
        let db = SignatureDb::compile(&block("rlf_report", "pltl", RLF), &BTreeMap::new(), None).unwrap();
        assert_eq!(db.len(), 1);
        match &db.signatures[0].body {
            SignatureBody::Pltl { formula, .. } => assert_eq!(formula.size(), 7),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn duplicate_names_rejected() {
        let text = block("a", "pltl", "true") + &block("a", "pltl", "false");
        assert_eq!(parse_db(&text), Err(HarnessError::DuplicateName("a".into())));
    }

    #[test]
    fn mixed_kinds() {
        let text = block("p", "pltl", RLF) + &block("d", "dfa", "d.dfa") + &block("m", "mm", "m.mm");
        let mut files = BTreeMap::new();
        files.insert("d.dfa".into(), "states: 1\nstart: 0\naccepting: 0\nalphabet: a\ntrans: 0 a 0\n".into());
        files.insert(
            "m.mm".into(),
            "states: 1\nstart: 0\nalphabet: a\noutputs: benign\ntrans: 0 a 0 benign\n".into(),
        );
        let db = SignatureDb::compile(&text, &files, None).unwrap();
        assert!(matches!(db.signatures[0].body, SignatureBody::Pltl { .. }));
        assert!(matches!(db.signatures[1].body, SignatureBody::Dfa(_)));
        assert!(matches!(db.signatures[2].body, SignatureBody::Mm(_)));
        files.remove("m.mm");
        assert!(matches!(
            SignatureDb::compile(&text, &files, None),
            Err(HarnessError::MissingFile { .. })
        ));
    }

    #[test]
    fn bad_bodies_and_syntax() {
        assert!(matches!(
            SignatureDb::compile(&block("a", "pltl", "(and (prop a))"), &BTreeMap::new(), None),
            Err(HarnessError::Body { .. })
        ));
        assert!(matches!(parse_db("name=a\n"), Err(HarnessError::Parse { line: 1, .. })));
        assert!(matches!(
            parse_db("[signature]\nname=a\nkind=pltl\n"),
            Err(HarnessError::Parse { .. })
        ));
        assert!(parse_db("[signature]\ncolour=red\n").is_err());
        let corpus = CorpusAlphabet::new(vec!["a".into()], vec![]).unwrap();
        assert!(matches!(
            SignatureDb::compile(&block("x", "pltl", "(prop b)"), &BTreeMap::new(), Some(&corpus)),
            Err(HarnessError::AlphabetMismatch { .. })
        ));
    }

    #[test]
    fn round_trip() {
        let text = block("a", "pltl", RLF) + "\n" + &block("b", "dfa", "b.dfa");
        let entries = parse_db(&text).unwrap();
        assert_eq!(parse_db(&write_db(&entries)).unwrap(), entries);
        assert_eq!(write_db(&entries), text);
    }
}
