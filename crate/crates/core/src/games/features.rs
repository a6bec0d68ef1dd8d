//! Dataset-level feature extraction for the shadow-dataset attacker.
//!
//! Reference ranges (histogram edges, category lists) are fixed once per
//! experiment from the population, *before* any shadow dataset exists, so
//! binning never leaks per-dataset information.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{FeatureSetKind, GameError};
use crate::table::{ColumnKind, Schema, Table};

/// Per-experiment feature reference frame.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReferenceRanges {
    pub schema: Arc<Schema>,
    /// `(min, max)` per column; `None` for categorical columns.
    pub numeric: Vec<Option<(f64, f64)>>,
    /// Equal-width histogram bins per numeric column.
    pub histogram_bins: usize,
}

impl ReferenceRanges {
    pub fn from_table(population: &Table, histogram_bins: usize) -> ReferenceRanges {
        assert!(histogram_bins >= 1);
        let numeric = (0..population.schema().arity())
            .map(|c| match population.schema().columns()[c].kind {
                ColumnKind::Categorical => None,
                ColumnKind::Numeric => {
                    let values = population.numeric_column(c);
                    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    Some((min, max))
                }
            })
            .collect();
        ReferenceRanges {
            schema: population.schema_arc(),
            numeric,
            histogram_bins,
        }
    }

    /// Length of the feature vector a given kind produces under this frame.
    pub fn feature_len(&self, kind: FeatureSetKind) -> usize {
        let m = self.schema.arity();
        match kind {
            FeatureSetKind::Histograms => self
                .schema
                .columns()
                .iter()
                .map(|c| match c.kind {
                    ColumnKind::Numeric => self.histogram_bins,
                    ColumnKind::Categorical => c.categories.len(),
                })
                .sum(),
            FeatureSetKind::PairwiseCorrelations => m * (m - 1) / 2,
            FeatureSetKind::SummaryStats => self
                .schema
                .columns()
                .iter()
                .map(|c| match c.kind {
                    ColumnKind::Numeric => 3,
                    ColumnKind::Categorical => 3,
                })
                .sum(),
        }
    }
}

/// Extracted features plus the number of values that fell outside the
/// reference range and were clamped to an edge bin.
#[derive(Clone, Debug)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub clamped: usize,
}

/// Summarize a published table under a fixed reference frame.
pub fn extract_features(
    t: &Table,
    kind: FeatureSetKind,
    ranges: &ReferenceRanges,
) -> Result<FeatureVector, GameError> {
    if t.schema() != ranges.schema.as_ref() {
        return Err(GameError::SchemaMismatch);
    }
    let mut clamped = 0usize;
    let values = match kind {
        FeatureSetKind::Histograms => {
            let mut out = Vec::with_capacity(ranges.feature_len(kind));
            for (c, spec) in t.schema().columns().iter().enumerate() {
                match spec.kind {
                    ColumnKind::Categorical => {
                        out.extend(t.category_counts(c).iter().map(|&n| n as f64));
                    }
                    ColumnKind::Numeric => {
                        let (min, max) = ranges.numeric[c].expect("numeric range");
                        let bins = ranges.histogram_bins;
                        let width = (max - min) / bins as f64;
                        let mut counts = vec![0.0f64; bins];
                        for v in t.numeric_column(c) {
                            let bin = if width <= 0.0 {
                                0
                            } else if v < min {
                                clamped += 1;
                                0
                            } else if v > max {
                                clamped += 1;
                                bins - 1
                            } else {
                                (((v - min) / width) as usize).min(bins - 1)
                            };
                            counts[bin] += 1.0;
                        }
                        out.extend(counts);
                    }
                }
            }
            out
        }
        FeatureSetKind::PairwiseCorrelations => {
            let m = t.schema().arity();
            let encoded: Vec<Vec<f64>> = (0..m)
                .map(|c| match t.schema().columns()[c].kind {
                    ColumnKind::Numeric => t.numeric_column(c),
                    ColumnKind::Categorical => {
                        t.rows().iter().map(|r| r[c].as_cat() as f64).collect()
                    }
                })
                .collect();
            let mut out = Vec::with_capacity(m * (m - 1) / 2);
            for i in 0..m {
                for j in (i + 1)..m {
                    out.push(pearson(&encoded[i], &encoded[j]));
                }
            }
            out
        }
        FeatureSetKind::SummaryStats => {
            let mut out = Vec::with_capacity(ranges.feature_len(kind));
            for (c, spec) in t.schema().columns().iter().enumerate() {
                match spec.kind {
                    ColumnKind::Numeric => {
                        let values = t.numeric_column(c);
                        out.push(mean(&values));
                        out.push(median(&values));
                        out.push(variance(&values));
                    }
                    ColumnKind::Categorical => {
                        let counts = t.category_counts(c);
                        let distinct = counts.iter().filter(|&&n| n > 0).count();
                        let most = extreme_index(&counts, true);
                        let least = extreme_index(&counts, false);
                        out.push(distinct as f64);
                        out.push(most as f64);
                        out.push(least as f64);
                    }
                }
            }
            out
        }
    };
    Ok(FeatureVector { values, clamped })
}

fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

fn variance(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let m = mean(values);
    values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / values.len() as f64
}

/// Pearson correlation; zero when either side has no spread.
fn pearson(a: &[f64], b: &[f64]) -> f64 {
    if a.len() < 2 {
        return 0.0;
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        return 0.0;
    }
    cov / (va.sqrt() * vb.sqrt())
}

/// Index of the most (or least) frequent category; ties to the lowest index.
fn extreme_index(counts: &[u64], most: bool) -> usize {
    let mut best = 0;
    for (i, &n) in counts.iter().enumerate().skip(1) {
        let better = if most {
            n > counts[best]
        } else {
            n < counts[best]
        };
        if better {
            best = i;
        }
    }
    best
}
