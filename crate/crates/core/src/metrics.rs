//! Utility scoring for published datasets: Kolmogorov-Smirnov complement for
//! numeric columns, total-variation-distance complement for categoricals, an
//! unweighted aggregate across columns, and machine-learning utility via
//! train-on-published / test-on-real classification.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::{accuracy, fit_forest, predict, ForestConfig, ForestError};
use crate::table::{ColumnKind, Table};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("empty input")]
    EmptyInput,
    #[error("schemas do not match")]
    SchemaMismatch,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error(transparent)]
    Forest(#[from] ForestError),
}

/// `1 − sup_x |F_n(x) − G_m(x)|` over the two empirical CDFs.
///
/// The sup is taken by a merge walk over the union of sample points with ties
/// consumed in full before the gap is read, which handles tied values
/// exactly. 1.0 means the samples are distributionally identical.
pub fn ks_complement(real: &[f64], synth: &[f64]) -> Result<f64, MetricsError> {
    Ok(1.0 - ks_statistic(real, synth)?)
}

/// The two-sample Kolmogorov-Smirnov statistic itself.
pub fn ks_statistic(real: &[f64], synth: &[f64]) -> Result<f64, MetricsError> {
    if real.is_empty() || synth.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut a = real.to_vec();
    let mut b = synth.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut sup: f64 = 0.0;
    while i < a.len() || j < b.len() {
        let x = match (a.get(i), b.get(j)) {
            (Some(&x), Some(&y)) => x.min(y),
            (Some(&x), None) => x,
            (None, Some(&y)) => y,
            (None, None) => unreachable!(),
        };
        while i < a.len() && a[i] == x {
            i += 1;
        }
        while j < b.len() && b[j] == x {
            j += 1;
        }
        sup = sup.max((i as f64 / na - j as f64 / nb).abs());
    }
    Ok(sup)
}

/// `1 − ½ Σ_c |p_R(c) − p_S(c)|` over the union of categories; categories
/// absent from one side count zero. 1.0 means identical distributions.
pub fn tvd_complement<K: Ord + Clone>(
    real: &BTreeMap<K, u64>,
    synth: &BTreeMap<K, u64>,
) -> Result<f64, MetricsError> {
    let total_r: u64 = real.values().sum();
    let total_s: u64 = synth.values().sum();
    if total_r == 0 || total_s == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut keys: Vec<K> = real.keys().cloned().collect();
    keys.extend(synth.keys().cloned());
    keys.sort();
    keys.dedup();
    let tvd = keys
        .iter()
        .map(|k| {
            let p = real.get(k).copied().unwrap_or(0) as f64 / total_r as f64;
            let q = synth.get(k).copied().unwrap_or(0) as f64 / total_s as f64;
            (p - q).abs()
        })
        .sum::<f64>()
        / 2.0;
    Ok(1.0 - tvd)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    KsComplement,
    TvdComplement,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnScore {
    pub column: String,
    pub metric: MetricKind,
    pub score: f64,
}

/// Column-wise statistical resemblance of a published table to its seed.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StatReport {
    pub per_column: Vec<ColumnScore>,
    /// Unweighted mean of the per-column scores.
    pub aggregate: f64,
}

/// Statistical plus machine-learning utility for one published dataset.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UtilityReport {
    pub per_column: Vec<ColumnScore>,
    pub aggregate_stat: f64,
    pub ml_accuracy: f64,
}

impl UtilityReport {
    pub fn new(stat: StatReport, ml_accuracy: f64) -> UtilityReport {
        UtilityReport {
            per_column: stat.per_column,
            aggregate_stat: stat.aggregate,
            ml_accuracy,
        }
    }

    /// CSV rows `column,metric,score` plus a summary line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("column,metric,score\n");
        for c in &self.per_column {
            let metric = match c.metric {
                MetricKind::KsComplement => "ks_complement",
                MetricKind::TvdComplement => "tvd_complement",
            };
            let _ = writeln!(out, "{},{},{}", c.column, metric, c.score);
        }
        let _ = writeln!(out, "aggregate_stat,,{}", self.aggregate_stat);
        let _ = writeln!(out, "ml_accuracy,,{}", self.ml_accuracy);
        out
    }
}

/// Compare each published column's distribution with its seed counterpart:
/// KS complement for numerics, TVD complement for categoricals, aggregated as
/// an unweighted mean.
pub fn statistical_utility(seed: &Table, published: &Table) -> Result<StatReport, MetricsError> {
    if seed.schema() != published.schema() {
        return Err(MetricsError::SchemaMismatch);
    }
    let mut per_column = Vec::with_capacity(seed.schema().arity());
    for (c, spec) in seed.schema().columns().iter().enumerate() {
        let (metric, score) = match spec.kind {
            ColumnKind::Numeric => (
                MetricKind::KsComplement,
                ks_complement(&seed.numeric_column(c), &published.numeric_column(c))?,
            ),
            ColumnKind::Categorical => {
                let to_map = |t: &Table| -> BTreeMap<usize, u64> {
                    t.category_counts(c)
                        .into_iter()
                        .enumerate()
                        .filter(|&(_, n)| n > 0)
                        .collect()
                };
                (
                    MetricKind::TvdComplement,
                    tvd_complement(&to_map(seed), &to_map(published))?,
                )
            }
        };
        per_column.push(ColumnScore {
            column: spec.name.clone(),
            metric,
            score,
        });
    }
    let aggregate = per_column.iter().map(|c| c.score).sum::<f64>() / per_column.len() as f64;
    Ok(StatReport {
        per_column,
        aggregate,
    })
}

/// Train a forest on the published table, score accuracy on the real test
/// set. An empty published table is a distinguishable outcome, not a crash.
pub fn ml_utility(
    published: &Table,
    real_test: &Table,
    cfg: &ForestConfig,
) -> Result<f64, MetricsError> {
    if published.is_empty() {
        return Err(MetricsError::EmptyTrainingSet);
    }
    if published.schema() != real_test.schema() {
        return Err(MetricsError::SchemaMismatch);
    }
    let model = fit_forest(published, cfg)?;
    Ok(accuracy(&predict(&model, real_test)?)?)
}
