//! Per-state probability profiles over four state collections.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::median;
use crate::convert::generate_non_samples;
use crate::error::{Error, Result};
use crate::learn::Dataset;
use crate::model::Model;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SetTag {
    TrainSample,
    TestSample,
    TrainNonSample,
    TestNonSample,
}

impl SetTag {
    pub const ALL: [SetTag; 4] = [
        SetTag::TrainSample,
        SetTag::TestSample,
        SetTag::TrainNonSample,
        SetTag::TestNonSample,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SetTag::TrainSample => "train-sample",
            SetTag::TestSample => "test-sample",
            SetTag::TrainNonSample => "train-non-sample",
            SetTag::TestNonSample => "test-non-sample",
        }
    }

    fn color(self) -> &'static str {
        match self {
            SetTag::TrainSample => "#1f77b4",
            SetTag::TestSample => "#2ca02c",
            SetTag::TrainNonSample => "#ff7f0e",
            SetTag::TestNonSample => "#d62728",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ProfileSets {
    pub train_samples: Vec<Vec<u8>>,
    pub test_samples: Vec<Vec<u8>>,
    pub train_non_samples: Vec<Vec<u8>>,
    pub test_non_samples: Vec<Vec<u8>>,
}

impl ProfileSets {
    /// The four collections for a train/test split: the rows themselves,
    /// training non-samples drawn exactly as the converter draws them for
    /// the same seed and ratio, and an equal number of test non-samples
    /// (absent from both splits) from a separate random stream.
    pub fn from_split(train: &Dataset, test: &Dataset, non_sample_ratio: f64, seed: u64) -> Result<Self> {
        if train.num_variables() != test.num_variables() {
            return Err(Error::DimensionMismatch {
                expected: train.num_variables(),
                found: test.num_variables(),
            });
        }
        if !(non_sample_ratio.is_finite() && non_sample_ratio >= 0.0) {
            return Err(Error::InvalidConfig("non_sample_ratio must be a finite value ≥ 0".into()));
        }
        let count = (non_sample_ratio * train.num_rows() as f64).ceil() as usize;
        let train_non_samples = generate_non_samples(train, count, &mut ChaCha8Rng::seed_from_u64(seed))?;
        let both = Dataset::from_rows(train.rows().chain(test.rows()).map(<[u8]>::to_vec).collect())?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        let test_non_samples = generate_non_samples(&both, test.num_rows(), &mut rng)?;
        Ok(Self {
            train_samples: train.rows().map(<[u8]>::to_vec).collect(),
            test_samples: test.rows().map(<[u8]>::to_vec).collect(),
            train_non_samples,
            test_non_samples,
        })
    }

    pub fn get(&self, tag: SetTag) -> &[Vec<u8>] {
        match tag {
            SetTag::TrainSample => &self.train_samples,
            SetTag::TestSample => &self.test_samples,
            SetTag::TrainNonSample => &self.train_non_samples,
            SetTag::TestNonSample => &self.test_non_samples,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub set: SetTag,
    pub index: usize,
    pub spn_prob: f64,
    pub tspn_prob: f64,
}

/// Normalized probabilities of every state under both models, in set order
/// then input order.
pub fn probability_profile(spn: &dyn Model, tt: &dyn Model, sets: &ProfileSets) -> Result<Vec<ProfileRow>> {
    let d = spn.num_variables();
    if tt.num_variables() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: tt.num_variables(),
        });
    }
    let total: usize = SetTag::ALL.iter().map(|&t| sets.get(t).len()).sum();
    if total == 0 {
        return Ok(Vec::new());
    }
    let (zs, zt) = (spn.partition()?, tt.partition()?);
    if !(zs > 0.0 && zt > 0.0) {
        return Err(Error::ZeroPartition);
    }
    let mut rows = Vec::with_capacity(total);
    for tag in SetTag::ALL {
        for (index, state) in sets.get(tag).iter().enumerate() {
            if state.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: state.len(),
                });
            }
            rows.push(ProfileRow {
                set: tag,
                index,
                spn_prob: spn.value_at_state(state)? / zs,
                tspn_prob: tt.value_at_state(state)? / zt,
            });
        }
    }
    Ok(rows)
}

/// `set,index,spn_prob,tspn_prob` with shortest round-trip float formatting.
pub fn profile_csv(rows: &[ProfileRow]) -> String {
    let mut out = String::from("set,index,spn_prob,tspn_prob\n");
    for r in rows {
        writeln!(out, "{},{},{:e},{:e}", r.set.as_str(), r.index, r.spn_prob, r.tspn_prob).unwrap();
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetSummary {
    pub set: SetTag,
    pub count: usize,
    pub median_spn_prob: Option<f64>,
    pub median_tspn_prob: Option<f64>,
    pub median_abs_diff: Option<f64>,
}

impl SetSummary {
    pub fn from_rows(rows: &[ProfileRow]) -> Vec<SetSummary> {
        SetTag::ALL
            .iter()
            .map(|&tag| {
                let sel: Vec<&ProfileRow> = rows.iter().filter(|r| r.set == tag).collect();
                let col = |f: &dyn Fn(&ProfileRow) -> f64| median(&sel.iter().map(|r| f(r)).collect::<Vec<_>>());
                SetSummary {
                    set: tag,
                    count: sel.len(),
                    median_spn_prob: col(&|r| r.spn_prob),
                    median_tspn_prob: col(&|r| r.tspn_prob),
                    median_abs_diff: col(&|r| (r.spn_prob - r.tspn_prob).abs()),
                }
            })
            .collect()
    }
}

/// Two stacked scatter panels (SPN above, tSPN below) of log10 probability
/// against position in the profile.
pub fn profile_svg(rows: &[ProfileRow]) -> String {
    const W: f64 = 720.0;
    const PANEL: f64 = 260.0;
    const MARGIN: f64 = 50.0;
    let positive = rows
        .iter()
        .flat_map(|r| [r.spn_prob, r.tspn_prob])
        .filter(|&p| p > 0.0);
    let lo = positive.clone().fold(f64::INFINITY, f64::min).log10().floor();
    let hi = positive.fold(f64::NEG_INFINITY, f64::max).log10().ceil();
    let (lo, hi) = if lo.is_finite() && hi > lo { (lo, hi) } else { (-1.0, 0.0) };
    let n = rows.len().max(2) as f64;

    let mut svg = String::new();
    let height = 2.0 * PANEL + 3.0 * MARGIN;
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{height}" font-family="sans-serif" font-size="11">"#
    )
    .unwrap();
    for (p, title) in ["SPN", "tSPN"].iter().enumerate() {
        let top = MARGIN + p as f64 * (PANEL + MARGIN);
        let plot_w = W - 2.0 * MARGIN;
        writeln!(
            svg,
            r#"<rect x="{MARGIN}" y="{top}" width="{plot_w}" height="{PANEL}" fill="none" stroke="black"/>"#
        )
        .unwrap();
        writeln!(svg, r#"<text x="{MARGIN}" y="{}">{title} probability (log10)</text>"#, top - 6.0).unwrap();
        for e in [lo, hi] {
            let y = top + PANEL * (hi - e) / (hi - lo);
            writeln!(svg, r#"<text x="4" y="{:.1}">{e}</text>"#, y + 4.0).unwrap();
        }
        for (j, r) in rows.iter().enumerate() {
            let prob = if p == 0 { r.spn_prob } else { r.tspn_prob };
            let v = if prob > 0.0 { prob.log10().max(lo) } else { lo };
            let x = MARGIN + plot_w * j as f64 / (n - 1.0);
            let y = top + PANEL * (hi - v) / (hi - lo);
            writeln!(svg, r#"<circle cx="{x:.1}" cy="{y:.1}" r="1.5" fill="{}"/>"#, r.set.color()).unwrap();
        }
    }
    for (i, tag) in SetTag::ALL.iter().enumerate() {
        let x = MARGIN + 170.0 * i as f64;
        let y = height - 12.0;
        writeln!(
            svg,
            r#"<circle cx="{x}" cy="{}" r="4" fill="{}"/><text x="{}" y="{y}">{}</text>"#,
            y - 4.0,
            tag.color(),
            x + 8.0,
            tag.as_str()
        )
        .unwrap();
    }
    svg.push_str("</svg>\n");
    svg
}
