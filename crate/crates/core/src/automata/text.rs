//! Shared line-oriented reader for the automaton text formats.

use super::AutomataError;

/// One `key: values` line, with its 1-based line number.
pub(crate) struct Line<'a> {
    pub number: usize,
    pub key: &'a str,
    pub values: Vec<&'a str>,
}

pub(crate) fn lines(text: &str) -> Result<Vec<Line<'_>>, AutomataError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, rest) = line.split_once(':').ok_or_else(|| AutomataError::Parse {
            line: i + 1,
            message: format!("expected `key: values`, got `{line}`"),
        })?;
        out.push(Line {
            number: i + 1,
            key: key.trim(),
            values: rest.split_whitespace().collect(),
        });
    }
    Ok(out)
}

pub(crate) fn err(line: usize, message: impl Into<String>) -> AutomataError {
    AutomataError::Parse {
        line,
        message: message.into(),
    }
}

pub(crate) fn single_usize(line: &Line<'_>) -> Result<usize, AutomataError> {
    match line.values.as_slice() {
        [v] => v
            .parse()
            .map_err(|_| err(line.number, format!("`{v}` is not a number"))),
        _ => Err(err(line.number, format!("`{}` takes one value", line.key))),
    }
}

pub(crate) fn parse_usize(line: usize, v: &str) -> Result<usize, AutomataError> {
    v.parse()
        .map_err(|_| err(line, format!("`{v}` is not a number")))
}
