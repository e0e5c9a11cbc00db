//! Evidence indicators.
//!
//! Every binary variable `X_k` is fed to a model as a pair `(x_k, x̄_k)`. A
//! complete state uses `(1, 0)` or `(0, 1)`, a marginalized variable uses
//! `(1, 1)`, and arbitrary non-negative pairs are allowed for algebraic
//! manipulations such as counting induced trees.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// One indicator pair `(x_k, x̄_k)` per variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    pairs: Vec<[f64; 2]>,
}

impl Assignment {
    pub fn new(pairs: Vec<[f64; 2]>) -> Result<Self> {
        for (k, p) in pairs.iter().enumerate() {
            if !(p[0].is_finite() && p[1].is_finite()) || p[0] < 0.0 || p[1] < 0.0 {
                return Err(Error::InvalidAssignment(format!(
                    "pair {k} = ({}, {}) must be finite and non-negative",
                    p[0], p[1]
                )));
            }
        }
        Ok(Self { pairs })
    }

    /// Complete state from 0/1 values.
    pub fn from_state(state: &[u8]) -> Self {
        let pairs = state
            .iter()
            .map(|&v| if v != 0 { [1.0, 0.0] } else { [0.0, 1.0] })
            .collect();
        Self { pairs }
    }

    /// All pairs `(1, 1)`: the partition-function input.
    pub fn all_ones(d: usize) -> Self {
        Self {
            pairs: vec![[1.0, 1.0]; d],
        }
    }

    pub fn from_evidence(evidence: &Evidence) -> Self {
        let pairs = evidence
            .values
            .iter()
            .map(|v| match v {
                Some(true) => [1.0, 0.0],
                Some(false) => [0.0, 1.0],
                None => [1.0, 1.0],
            })
            .collect();
        Self { pairs }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn pair(&self, k: usize) -> [f64; 2] {
        self.pairs[k]
    }

    pub fn pairs(&self) -> &[[f64; 2]] {
        &self.pairs
    }

    pub fn set_pair(&mut self, k: usize, pair: [f64; 2]) -> Result<()> {
        if !(pair[0].is_finite() && pair[1].is_finite()) || pair[0] < 0.0 || pair[1] < 0.0 {
            return Err(Error::InvalidAssignment(format!(
                "pair ({}, {}) must be finite and non-negative",
                pair[0], pair[1]
            )));
        }
        self.pairs[k] = pair;
        Ok(())
    }
}

/// Partial observation of the variables; `None` means unobserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evidence {
    values: Vec<Option<bool>>,
}

impl Evidence {
    pub fn empty(d: usize) -> Self {
        Self {
            values: vec![None; d],
        }
    }

    pub fn from_state(state: &[u8]) -> Self {
        Self {
            values: state.iter().map(|&v| Some(v != 0)).collect(),
        }
    }

    pub fn from_values(values: Vec<Option<bool>>) -> Self {
        Self { values }
    }

    /// Observe variable `k` (0-based).
    pub fn with(mut self, k: usize, value: bool) -> Self {
        self.values[k] = Some(value);
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, k: usize) -> Option<bool> {
        self.values[k]
    }

    pub fn values(&self) -> &[Option<bool>] {
        &self.values
    }

    /// Parses `x1=1,x3=0` style queries with 1-based variable names.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let mut evidence = Self::empty(d);
        for (i, item) in s.split(',').map(str::trim).filter(|t| !t.is_empty()).enumerate() {
            let err = |message: String| Error::Parse { line: i + 1, message };
            let (name, value) = item
                .split_once('=')
                .ok_or_else(|| err(format!("expected `xK=V`, found `{item}`")))?;
            let index = name
                .trim()
                .trim_start_matches(['x', 'X'])
                .parse::<usize>()
                .map_err(|_| err(format!("bad variable name `{name}`")))?;
            if index == 0 || index > d {
                return Err(err(format!("variable x{index} outside x1..x{d}")));
            }
            let value = match value.trim() {
                "1" => true,
                "0" => false,
                other => return Err(err(format!("value must be 0 or 1, found `{other}`"))),
            };
            evidence.values[index - 1] = Some(value);
        }
        Ok(evidence)
    }
}

/// A complete binary state, displayed and parsed as `1,0,1`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct State(pub Vec<u8>);

impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(str::trim)
            .map(|t| match t {
                "0" => Ok(0),
                "1" => Ok(1),
                other => Err(Error::Parse {
                    line: 1,
                    message: format!("state entries must be 0 or 1, found `{other}`"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(State)
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Writes the complete state with linear index `index` into `out`; bit `k`
/// of the index is the value of variable `k`, so the first variable toggles
/// fastest.
pub fn state_from_index(index: u64, d: usize, out: &mut [u8]) {
    for (k, slot) in out.iter_mut().enumerate().take(d) {
        *slot = ((index >> k) & 1) as u8;
    }
}
