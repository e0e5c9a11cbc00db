//! Comparing an SPN with its tensor-train counterpart.

mod profile;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use profile::{probability_profile, profile_csv, profile_svg, ProfileRow, ProfileSets, SetSummary, SetTag};

use crate::error::{Error, Result};
use crate::model::Model;
use crate::spn::SpnGraph;
use crate::tt::TensorTrain;

pub const DEFAULT_TV_LIMIT: usize = 20;
const CHUNK: u64 = 1 << 12;

/// Distance between two distributions over `{0,1}^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Distance {
    /// `½ Σ |P − Q|`.
    pub tv: f64,
    /// `Σ |P − Q|`.
    pub l1: f64,
}

/// Total variation between the normalized distributions of two models,
/// enumerating all `2^d` states in fixed-size chunks.
pub fn tv_distance(p: &dyn Model, q: &dyn Model, limit: usize) -> Result<Distance> {
    let d = p.num_variables();
    if q.num_variables() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: q.num_variables(),
        });
    }
    if d > limit || d >= 63 {
        return Err(Error::LimitExceeded {
            what: "total variation enumeration",
            d,
            limit,
        });
    }
    let (zp, zq) = (positive_partition(p)?, positive_partition(q)?);
    let total = 1u64 << d;
    let chunks: Vec<u64> = (0..total.div_ceil(CHUNK)).collect();
    let partial: Vec<f64> = chunks
        .par_iter()
        .map(|&c| {
            let mut state = vec![0u8; d];
            let mut acc = 0.0;
            for j in c * CHUNK..((c + 1) * CHUNK).min(total) {
                for (k, v) in state.iter_mut().enumerate() {
                    *v = ((j >> k) & 1) as u8;
                }
                let a = p.value_at_state(&state)? / zp;
                let b = q.value_at_state(&state)? / zq;
                acc += (a - b).abs();
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let l1: f64 = partial.iter().sum();
    Ok(Distance {
        tv: (0.5 * l1).min(1.0),
        l1,
    })
}

fn positive_partition(m: &dyn Model) -> Result<f64> {
    let z = m.partition()?;
    if z > 0.0 && z.is_finite() {
        Ok(z)
    } else {
        Err(Error::ZeroPartition)
    }
}

/// Sum-edge weights plus two parameters per Bernoulli leaf.
pub fn spn_parameter_count(spn: &SpnGraph) -> usize {
    let stats = spn.stats();
    stats.weights + 2 * stats.leaves
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Absent when `d` exceeds the enumeration limit.
    pub tv_distance: Option<f64>,
    pub l1_distance: Option<f64>,
    pub spn_params: usize,
    pub tspn_params_total: usize,
    pub tspn_params_nonzero: usize,
    /// `spn_params / tspn_params_nonzero`.
    pub reduction_factor: f64,
    pub summaries: Vec<SetSummary>,
    pub profile_rows: Vec<ProfileRow>,
}

pub fn report(spn: &SpnGraph, tt: &TensorTrain, sets: &ProfileSets, limit: usize) -> Result<EvalReport> {
    let d = spn.num_variables();
    let distance = if d <= limit {
        Some(tv_distance(spn, tt, limit)?)
    } else {
        None
    };
    let rows = probability_profile(spn, tt, sets)?;
    let params = tt.parameter_count();
    let spn_params = spn_parameter_count(spn);
    Ok(EvalReport {
        tv_distance: distance.map(|x| x.tv),
        l1_distance: distance.map(|x| x.l1),
        spn_params,
        tspn_params_total: params.total,
        tspn_params_nonzero: params.nonzero,
        reduction_factor: spn_params as f64 / params.nonzero as f64,
        summaries: SetSummary::from_rows(&rows),
        profile_rows: rows,
    })
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Median of a non-empty slice (mean of the middle pair for even length).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}
