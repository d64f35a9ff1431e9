//! Readers for observation sequences.
//!
//! The plain format is UTF-8 text with one decimal per line; blank lines and
//! everything after a `#` are ignored.

use crate::error::{Error, Result};

pub fn parse_sequence(text: &str) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let value: f64 = content.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("expected a decimal number, found {content:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Data(format!(
                "line {}: value {content} is not finite",
                i + 1
            )));
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(Error::Data("the input holds no observations".into()));
    }
    Ok(out)
}

/// Which CSV column holds the observations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    /// 1-based position.
    Index(usize),
}

impl ColumnSelector {
    /// A positive integer selects by position, anything else by header name.
    pub fn parse(s: &str) -> Self {
        match s.trim().parse::<usize>() {
            Ok(i) if i >= 1 => ColumnSelector::Index(i),
            _ => ColumnSelector::Name(s.trim().to_string()),
        }
    }
}

/// Read one column of a headed CSV file.
pub fn parse_csv_column(text: &str, column: &ColumnSelector) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let idx = match column {
        ColumnSelector::Name(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Usage(format!("no column named {name:?}")))?,
        ColumnSelector::Index(i) => {
            if *i > headers.len() {
                return Err(Error::Usage(format!(
                    "column {i} requested but the header has {} columns",
                    headers.len()
                )));
            }
            i - 1
        }
    };
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = record.get(idx).ok_or_else(|| Error::Parse {
            line,
            message: format!("row has no column {}", idx + 1),
        })?;
        if field.is_empty() {
            continue;
        }
        let value: f64 = field.parse().map_err(|_| Error::Parse {
            line,
            message: format!("expected a decimal number, found {field:?}"),
        })?;
        if !value.is_finite() {
            return Err(Error::Data(format!(
                "line {line}: value {field} is not finite"
            )));
        }
        out.push(value);
    }
    if out.is_empty() {
        return Err(Error::Data(
            "the selected column holds no observations".into(),
        ));
    }
    Ok(out)
}
