//! Distribution-identity precondition check.
//!
//! The differential-privacy lower bound on membership advantage assumes the
//! member and non-member datasets come from identical distributions. This
//! diagnostic compares the pooled member-seed and non-member-seed values
//! column by column (KS statistic for numerics, TVD for categoricals) and
//! raises a flag when any column diverges past the configured threshold —
//! meaning the bound comparison is inapplicable to the run.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::GameError;
use crate::metrics::{ks_statistic, tvd_complement};
use crate::table::{ColumnKind, Table};

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiagnosticConfig {
    /// Per-column divergence above this raises the flag.
    pub threshold: f64,
}

impl Default for DiagnosticConfig {
    fn default() -> DiagnosticConfig {
        DiagnosticConfig { threshold: 0.2 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ColumnDivergence {
    pub column: String,
    pub divergence: f64,
    pub flagged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiagnosticReport {
    pub per_column: Vec<ColumnDivergence>,
    pub threshold: f64,
    /// True when any column diverges past the threshold.
    pub flag: bool,
}

/// Compare the pooled member seeds against the pooled non-member seeds.
pub fn precondition_diagnostic(
    member_seeds: &[Table],
    non_member_seeds: &[Table],
    cfg: &DiagnosticConfig,
) -> Result<DiagnosticReport, GameError> {
    if member_seeds.is_empty() || non_member_seeds.is_empty() {
        return Err(GameError::EmptyPool);
    }
    let schema = member_seeds[0].schema();
    let all = member_seeds.iter().chain(non_member_seeds);
    if all.clone().any(|t| t.schema() != schema) {
        return Err(GameError::SchemaMismatch);
    }

    let mut per_column = Vec::with_capacity(schema.arity());
    for (c, spec) in schema.columns().iter().enumerate() {
        let divergence = match spec.kind {
            ColumnKind::Numeric => {
                let pool = |ts: &[Table]| -> Vec<f64> {
                    ts.iter().flat_map(|t| t.numeric_column(c)).collect()
                };
                ks_statistic(&pool(member_seeds), &pool(non_member_seeds))
                    .map_err(|_| GameError::EmptyPool)?
            }
            ColumnKind::Categorical => {
                let pool = |ts: &[Table]| -> BTreeMap<usize, u64> {
                    let mut counts: BTreeMap<usize, u64> = BTreeMap::new();
                    for t in ts {
                        for (idx, n) in t.category_counts(c).into_iter().enumerate() {
                            if n > 0 {
                                *counts.entry(idx).or_default() += n;
                            }
                        }
                    }
                    counts
                };
                1.0 - tvd_complement(&pool(member_seeds), &pool(non_member_seeds))
                    .map_err(|_| GameError::EmptyPool)?
            }
        };
        per_column.push(ColumnDivergence {
            column: spec.name.clone(),
            divergence,
            flagged: divergence > cfg.threshold,
        });
    }
    let flag = per_column.iter().any(|c| c.flagged);
    Ok(DiagnosticReport {
        per_column,
        threshold: cfg.threshold,
        flag,
    })
}
