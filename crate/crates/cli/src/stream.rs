//! Text stream files: optional `# key=value` header lines followed by
//! `i j delta` records with 0-based indices.

use std::path::Path;

use schatten_core::schatten::MatrixUpdate;
use schatten_core::Error;

use crate::CliError;

/// Header keys that declare the matrix dimension, in order of preference.
const DIM_KEYS: [&str; 2] = ["dim", "n"];

#[derive(Debug, Clone, PartialEq)]
pub struct StreamFile {
    /// Header pairs in file order.
    pub header: Vec<(String, String)>,
    pub dim: usize,
    pub records: Vec<MatrixUpdate>,
}

fn parse_error(line: usize, message: impl Into<String>) -> CliError {
    CliError::Core(Error::Parse { line, message: message.into() })
}

impl StreamFile {
    /// Parses stream text. Without a declared dimension the matrix is sized
    /// by the largest index seen.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut header = Vec::new();
        let mut records = Vec::new();
        let mut declared: Option<(usize, usize)> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(comment) = line.strip_prefix('#') {
                if let Some((k, v)) = comment.trim().split_once('=') {
                    let (k, v) = (k.trim().to_string(), v.trim().to_string());
                    if DIM_KEYS.contains(&k.as_str()) && declared.is_none() {
                        let d = v.parse::<usize>().map_err(|_| parse_error(line_no, format!("{k}={v} is not a dimension")))?;
                        declared = Some((d, line_no));
                    }
                    header.push((k, v));
                }
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(parse_error(line_no, format!("expected 'i j delta', found {} fields", fields.len())));
            }
            let index = |s: &str, what: &str| {
                s.parse::<usize>().map_err(|_| parse_error(line_no, format!("{what} index '{s}' is not a nonnegative integer")))
            };
            let (row, col) = (index(fields[0], "row")?, index(fields[1], "column")?);
            let delta = fields[2]
                .parse::<f64>()
                .ok()
                .filter(|d| d.is_finite())
                .ok_or_else(|| parse_error(line_no, format!("delta '{}' is not a finite number", fields[2])))?;
            if let Some((d, _)) = declared {
                if row >= d || col >= d {
                    return Err(parse_error(line_no, format!("index ({row}, {col}) outside the declared {d}x{d} matrix")));
                }
            }
            records.push(MatrixUpdate::new(row, col, delta));
        }
        let dim = match declared {
            Some((0, line)) => return Err(parse_error(line, "dimension must be positive")),
            Some((d, _)) => d,
            None => records.iter().map(|u| u.row.max(u.col) + 1).max().ok_or_else(|| parse_error(0, "no records and no dimension"))?,
        };
        Ok(Self { header, dim, records })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
        Self::parse(&text)
    }

    pub fn header_value(&self, key: &str) -> Option<&str> {
        self.header.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }
}
