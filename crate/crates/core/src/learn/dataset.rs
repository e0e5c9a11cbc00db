use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

/// `N × d` binary data matrix, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    n: usize,
    d: usize,
    values: Vec<u8>,
    variable_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn from_rows(rows: Vec<Vec<u8>>) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(Error::EmptyDataset);
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::Parse {
                line: 1,
                message: "rows must contain at least one value".into(),
            });
        }
        let mut values = Vec::with_capacity(n * d);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != d {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected {d} values, found {}", row.len()),
                });
            }
            if let Some(v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("value {v} is not binary"),
                });
            }
            values.extend(row);
        }
        Ok(Self {
            n,
            d,
            values,
            variable_names: None,
        })
    }

    /// Parses comma-separated 0/1 rows, one instance per line. Blank lines
    /// are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut rows = Vec::new();
        let mut width = None;
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let lineno = i + 1;
            let row = line
                .split(',')
                .map(|t| match t.trim() {
                    "0" => Ok(0u8),
                    "1" => Ok(1u8),
                    other => Err(Error::Parse {
                        line: lineno,
                        message: format!("expected 0 or 1, found `{other}`"),
                    }),
                })
                .collect::<Result<Vec<u8>>>()?;
            match width {
                None => width = Some(row.len()),
                Some(w) if w != row.len() => {
                    return Err(Error::Parse {
                        line: lineno,
                        message: format!("expected {w} values, found {}", row.len()),
                    })
                }
                _ => {}
            }
            rows.push(row);
        }
        Self::from_rows(rows)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.n * self.d * 2);
        for row in self.rows() {
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                out.push(if *v == 1 { '1' } else { '0' });
            }
            out.push('\n');
        }
        out
    }

    pub fn with_variable_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                found: names.len(),
            });
        }
        self.variable_names = Some(names);
        Ok(self)
    }

    pub fn variable_names(&self) -> Option<&[String]> {
        self.variable_names.as_deref()
    }

    pub fn num_rows(&self) -> usize {
        self.n
    }

    pub fn num_variables(&self) -> usize {
        self.d
    }

    pub fn row(&self, i: usize) -> &[u8] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[u8]> {
        self.values.chunks_exact(self.d)
    }

    pub fn get(&self, i: usize, j: usize) -> u8 {
        self.values[i * self.d + j]
    }

    pub fn distinct_rows(&self) -> HashSet<&[u8]> {
        self.rows().collect()
    }
}
