//! `label[,lives]` sequence files.

use std::fmt;

/// One parsed line.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Item {
    pub label: f64,
    pub lives: Option<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

impl std::error::Error for ParseError {}

/// Parses one record per line; blank lines and `#` comments are skipped.
pub fn parse_items(text: &str) -> Result<Vec<Item>, ParseError> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| ParseError { line: i + 1, message };
        let mut fields = line.split(',').map(str::trim);
        let label_s = fields.next().unwrap_or("");
        let label: f64 = label_s.parse().map_err(|_| err(format!("bad label {label_s:?}")))?;
        if !label.is_finite() {
            return Err(err(format!("label {label_s:?} is not finite")));
        }
        let lives = match fields.next() {
            None => None,
            Some(s) => {
                let k: u32 = s.parse().map_err(|_| err(format!("bad lives {s:?}")))?;
                if k == 0 {
                    return Err(err("lives must be at least 1".into()));
                }
                Some(k)
            }
        };
        if fields.next().is_some() {
            return Err(err("expected `label[,lives]`".into()));
        }
        out.push(Item { label, lives });
    }
    Ok(out)
}
