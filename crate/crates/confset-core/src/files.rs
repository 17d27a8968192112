//! On-disk formats: signal/observation vectors as plain text (one decimal
//! float per line, UTF-8, LF) and candidate families as JSON
//! {"n": int, "sets": [[int,...], ...]} with 1-based indices.

use crate::error::{Error, Result};
use crate::seqmodel::CandidateFamily;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub fn read_signal(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path)?;
    parse_signal(&text)
}

pub fn parse_signal(text: &str) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        let v: f64 = trimmed.parse().map_err(|_| Error::Parse {
            line: idx + 1,
            msg: format!("expected a decimal float, got {trimmed:?}"),
        })?;
        if !v.is_finite() {
            return Err(Error::Parse {
                line: idx + 1,
                msg: format!("non-finite value {trimmed:?}"),
            });
        }
        values.push(v);
    }
    if values.is_empty() {
        return Err(Error::invalid("signal file contains no values"));
    }
    Ok(values)
}

pub fn write_signal(path: &Path, values: &[f64]) -> Result<()> {
    let mut text = String::new();
    for v in values {
        text.push_str(&format!("{v}\n"));
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct FamilyFile {
    n: usize,
    sets: Vec<Vec<usize>>,
}

pub fn read_family(path: &Path) -> Result<CandidateFamily> {
    let text = std::fs::read_to_string(path)?;
    let raw: FamilyFile = serde_json::from_str(&text)?;
    CandidateFamily::explicit(raw.n, raw.sets)
}

pub fn write_family(path: &Path, family: &CandidateFamily) -> Result<()> {
    let raw = FamilyFile {
        n: family.n(),
        sets: family.materialize(),
    };
    let mut text = serde_json::to_string_pretty(&raw)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}
