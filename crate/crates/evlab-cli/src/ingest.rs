//! CSV and JSONL data ingestion with line-numbered diagnostics.
//!
//! Both formats carry one observation per row: a numeric field `x` and an
//! optional integer `batch`. Rows are grouped by batch in order of first
//! appearance; without a batch column everything lands in one group.

use std::path::Path;

use crate::CliError;

/// Input syntax, inferred from the file extension.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Jsonl,
}

impl Format {
    pub fn infer(path: &Path) -> Result<Self, CliError> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Ok(Format::Csv),
            Some("jsonl") | Some("ndjson") => Ok(Format::Jsonl),
            other => Err(CliError::Config(format!(
                "cannot infer input format from extension {other:?} of {} (expected .csv, .jsonl, or .ndjson)",
                path.display()
            ))),
        }
    }
}

/// Ordered observation groups: `(batch label, values)` in order of first
/// appearance. A missing batch column yields a single `None` group.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub groups: Vec<(Option<i64>, Vec<f64>)>,
}

impl Ingested {
    /// All values in appearance order, batches flattened.
    pub fn flat(&self) -> Vec<f64> {
        self.groups.iter().flat_map(|(_, v)| v.iter().copied()).collect()
    }

    fn from_rows(rows: Vec<(Option<i64>, f64)>) -> Result<Self, CliError> {
        if rows.is_empty() {
            return Err(CliError::Data("no observations in input".into()));
        }
        let mut groups: Vec<(Option<i64>, Vec<f64>)> = Vec::new();
        for (batch, x) in rows {
            match groups.iter_mut().find(|(b, _)| *b == batch) {
                Some((_, vs)) => vs.push(x),
                None => groups.push((batch, vec![x])),
            }
        }
        Ok(Ingested { groups })
    }
}

pub fn ingest(path: &Path) -> Result<Ingested, CliError> {
    let format = Format::infer(path)?;
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
    match format {
        Format::Csv => parse_csv(&text),
        Format::Jsonl => parse_jsonl(&text),
    }
}

fn parse_value(line: usize, s: &str) -> Result<f64, CliError> {
    let x: f64 = s
        .trim()
        .parse()
        .map_err(|_| CliError::Data(format!("line {line}: '{s}' is not a number")))?;
    if x.is_nan() {
        return Err(CliError::Data(format!("line {line}: x is NaN")));
    }
    Ok(x)
}

/// Parses CSV text with a header row naming a numeric `x` column and an
/// optional integer `batch` column. Line numbers in errors are 1-based
/// physical lines (header is line 1).
pub fn parse_csv(text: &str) -> Result<Ingested, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::Data("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    let x_idx = cols
        .iter()
        .position(|c| *c == "x")
        .ok_or_else(|| CliError::Data("line 1: header has no 'x' column".into()))?;
    let batch_idx = cols.iter().position(|c| *c == "batch");

    let mut rows = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != cols.len() {
            return Err(CliError::Data(format!(
                "line {lineno}: expected {} fields, found {}",
                cols.len(),
                fields.len()
            )));
        }
        let x = parse_value(lineno, fields[x_idx])?;
        let batch = match batch_idx {
            Some(j) => Some(fields[j].parse::<i64>().map_err(|_| {
                CliError::Data(format!(
                    "line {lineno}: batch '{}' is not an integer",
                    fields[j]
                ))
            })?),
            None => None,
        };
        rows.push((batch, x));
    }
    Ingested::from_rows(rows)
}

/// Parses JSONL text: one object per line with numeric `x` and optional
/// integer `batch`.
pub fn parse_jsonl(text: &str) -> Result<Ingested, CliError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let lineno = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::Data(format!("line {lineno}: invalid JSON: {e}")))?;
        let obj = value
            .as_object()
            .ok_or_else(|| CliError::Data(format!("line {lineno}: not a JSON object")))?;
        let x = obj
            .get("x")
            .and_then(|v| v.as_f64())
            .ok_or_else(|| CliError::Data(format!("line {lineno}: missing numeric field 'x'")))?;
        if x.is_nan() {
            return Err(CliError::Data(format!("line {lineno}: x is NaN")));
        }
        let batch = match obj.get("batch") {
            None | Some(serde_json::Value::Null) => None,
            Some(v) => Some(v.as_i64().ok_or_else(|| {
                CliError::Data(format!("line {lineno}: batch is not an integer"))
            })?),
        };
        rows.push((batch, x));
    }
    Ingested::from_rows(rows)
}

/// Converts observations that must be exactly 0.0 or 1.0 into bits.
pub fn to_bits(data: &[f64]) -> evlab::Result<Vec<u8>> {
    data.iter()
        .enumerate()
        .map(|(i, &x)| {
            if x == 0.0 {
                Ok(0u8)
            } else if x == 1.0 {
                Ok(1u8)
            } else {
                Err(evlab::EvError::DataOutOfRange { index: i, value: x })
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_single_column() {
        let got = parse_csv("x\n0\n1\n0\n1\n1\n").unwrap();
        assert_eq!(got.groups, vec![(None, vec![0.0, 1.0, 0.0, 1.0, 1.0])]);
        assert_eq!(got.flat(), vec![0.0, 1.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn jsonl_three_lines() {
        let got = parse_jsonl("{\"x\":0.2}\n{\"x\":0.5}\n{\"x\":0.9}\n").unwrap();
        assert_eq!(got.flat(), vec![0.2, 0.5, 0.9]);
    }

    #[test]
    fn csv_batches_group_in_order() {
        let got = parse_csv("x,batch\n0.1,1\n0.2,1\n0.3,2\n").unwrap();
        assert_eq!(
            got.groups,
            vec![(Some(1), vec![0.1, 0.2]), (Some(2), vec![0.3])]
        );
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = parse_csv("x\n0\nfoo\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("line 3")), "{err}");
        let err = parse_csv("y\n0\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("'x'")));
        let err = parse_csv("x,batch\n0,1.5\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("line 2")));
        let err = parse_jsonl("{\"x\":1}\n{\"x\":\"a\"}\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("line 2")));
        let err = parse_jsonl("not json\n").unwrap_err();
        assert!(matches!(err, CliError::Data(ref m) if m.contains("line 1")));
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(parse_csv("").is_err());
        assert!(parse_csv("x\n").is_err());
        assert!(parse_jsonl("").is_err());
    }

    #[test]
    fn bit_conversion() {
        assert_eq!(to_bits(&[0.0, 1.0, 0.0]).unwrap(), vec![0, 1, 0]);
        assert!(to_bits(&[0.5]).is_err());
    }
}
