//! Suppression-based k-anonymization in the NHS-England style, plus a
//! k-anonymity verification oracle.
//!
//! The sanitizer never generalizes: numeric columns are capped at a quantile,
//! rows carrying rare categorical values are deleted, and whole equivalence
//! classes (rows sharing an exact quasi-identifier signature) smaller than
//! `k` are deleted.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{cap_numeric, Cell, ColumnKind, Table, TableError};

#[derive(Debug, Error)]
pub enum AnonError {
    #[error("schema has no quasi-identifier columns")]
    NoQidColumns,
    #[error("all rows were suppressed")]
    EmptyResult(SanitizeLog),
    #[error(transparent)]
    Table(#[from] TableError),
}

/// Knobs for [`nhs_sanitize`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnonymizationConfig {
    pub k: usize,
    /// Numeric capping quantile, applied before any suppression.
    pub cap_quantile: f64,
    /// A categorical value occurring fewer than this many times table-wide
    /// marks its rows for deletion. Defaults to `k`.
    pub rare_category_min_count: usize,
}

impl AnonymizationConfig {
    pub fn new(k: usize) -> AnonymizationConfig {
        assert!(k >= 1);
        AnonymizationConfig {
            k,
            cap_quantile: 0.95,
            rare_category_min_count: k,
        }
    }
}

/// Rows sharing one exact QID signature.
#[derive(Clone, Debug)]
pub struct EquivalenceClass {
    pub qid_signature: Vec<Cell>,
    pub member_indices: Vec<usize>,
}

/// Per-stage suppression accounting.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct SanitizeLog {
    pub rows_in: usize,
    pub rows_out: usize,
    pub stages: Vec<StageRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub rows_removed: usize,
    pub reason: String,
}

impl SanitizeLog {
    fn push(&mut self, stage: &str, removed: usize, reason: String) {
        self.stages.push(StageRecord {
            stage: stage.to_string(),
            rows_removed: removed,
            reason,
        });
    }
}

impl fmt::Display for SanitizeLog {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "rows in: {}", self.rows_in)?;
        for s in &self.stages {
            writeln!(
                f,
                "stage {}: removed {} ({})",
                s.stage, s.rows_removed, s.reason
            )?;
        }
        write!(f, "rows out: {}", self.rows_out)
    }
}

/// Group row indices by exact QID signature, in signature order.
pub fn equivalence_classes(t: &Table) -> Result<Vec<EquivalenceClass>, AnonError> {
    let qids = t.schema().qid_indices();
    if qids.is_empty() {
        return Err(AnonError::NoQidColumns);
    }
    let mut groups: BTreeMap<Vec<u64>, Vec<usize>> = BTreeMap::new();
    for (i, row) in t.rows().iter().enumerate() {
        let key: Vec<u64> = qids.iter().map(|&c| row[c].key()).collect();
        groups.entry(key).or_default().push(i);
    }
    Ok(groups
        .into_values()
        .map(|member_indices| EquivalenceClass {
            qid_signature: qids.iter().map(|&c| t.row(member_indices[0])[c]).collect(),
            member_indices,
        })
        .collect())
}

/// Cap, drop rare-category rows, then drop undersized equivalence classes.
///
/// Surviving rows are unmodified apart from numeric capping. An output that
/// would be empty is reported as [`AnonError::EmptyResult`] carrying the log.
pub fn nhs_sanitize(
    t: &Table,
    cfg: &AnonymizationConfig,
) -> Result<(Table, SanitizeLog), AnonError> {
    if t.schema().qid_indices().is_empty() {
        return Err(AnonError::NoQidColumns);
    }
    let mut log = SanitizeLog {
        rows_in: t.len(),
        ..Default::default()
    };

    let capped = cap_numeric(t, cfg.cap_quantile)?;
    log.push(
        "cap",
        0,
        format!("numeric values capped at the {} quantile", cfg.cap_quantile),
    );

    // Rare-category counts are taken once, on the capped table, before any
    // row is suppressed.
    let categorical: Vec<usize> = (0..capped.schema().arity())
        .filter(|&c| capped.schema().columns()[c].kind == ColumnKind::Categorical)
        .collect();
    let counts: Vec<Vec<u64>> = categorical
        .iter()
        .map(|&c| capped.category_counts(c))
        .collect();
    let keep: Vec<usize> = (0..capped.len())
        .filter(|&i| {
            categorical.iter().zip(&counts).all(|(&c, col_counts)| {
                col_counts[capped.row(i)[c].as_cat()] >= cfg.rare_category_min_count as u64
            })
        })
        .collect();
    let removed = capped.len() - keep.len();
    log.push(
        "rare-categories",
        removed,
        format!(
            "rows holding a categorical value seen fewer than {} times",
            cfg.rare_category_min_count
        ),
    );
    let filtered = capped.select(&keep);

    let classes = equivalence_classes(&filtered)?;
    let mut survivors: Vec<usize> = classes
        .iter()
        .filter(|g| g.member_indices.len() >= cfg.k)
        .flat_map(|g| g.member_indices.iter().copied())
        .collect();
    survivors.sort_unstable();
    log.push(
        "class-suppression",
        filtered.len() - survivors.len(),
        format!("rows in equivalence classes smaller than k = {}", cfg.k),
    );
    let out = filtered.select(&survivors);
    log.rows_out = out.len();

    if out.is_empty() && !t.is_empty() {
        return Err(AnonError::EmptyResult(log));
    }
    Ok((out, log))
}

/// A k-anonymity violation: an undersized class, with its rendered signature.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub signature: Vec<String>,
    pub size: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KAnonymityCheck {
    pub satisfied: bool,
    pub violations: Vec<Violation>,
}

/// True iff every equivalence class over the QID columns has size ≥ k.
/// The empty table satisfies vacuously.
pub fn verify_k_anonymity(t: &Table, k: usize) -> Result<KAnonymityCheck, AnonError> {
    let qids = t.schema().qid_indices();
    if qids.is_empty() {
        return Err(AnonError::NoQidColumns);
    }
    let violations: Vec<Violation> = equivalence_classes(t)?
        .into_iter()
        .filter(|g| g.member_indices.len() < k)
        .map(|g| Violation {
            signature: g
                .qid_signature
                .iter()
                .zip(&qids)
                .map(|(cell, &c)| t.render_cell(c, cell))
                .collect(),
            size: g.member_indices.len(),
        })
        .collect();
    Ok(KAnonymityCheck {
        satisfied: violations.is_empty(),
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::{ColumnSpec, RoleSet, Schema};
    use std::sync::Arc;

    fn schema() -> Arc<Schema> {
        Arc::new(
            Schema::new(vec![
                ColumnSpec::categorical("qid", RoleSet::QID, &["g1", "g2", "g3"]),
                ColumnSpec::numeric("v", RoleSet::NONE),
                ColumnSpec::categorical("label", RoleSet::TARGET, &["a", "b"]),
            ])
            .unwrap(),
        )
    }

    fn table(groups: &[(usize, usize)]) -> Table {
        // groups: (qid index, count)
        let mut rows = Vec::new();
        for &(g, count) in groups {
            for i in 0..count {
                rows.push(vec![Cell::Cat(g), Cell::Num(i as f64), Cell::Cat(i % 2)]);
            }
        }
        Table::new(schema(), rows).unwrap()
    }

    /// Brute-force oracle: group rows by their QID cells, keep groups of
    /// size ≥ k. Independent of the production grouping path.
    fn surviving_by_brute_force(t: &Table, k: usize) -> usize {
        let qids = t.schema().qid_indices();
        let mut survivors = 0;
        for row in t.rows() {
            let same = t
                .rows()
                .iter()
                .filter(|other| qids.iter().all(|&c| other[c] == row[c]))
                .count();
            if same >= k {
                survivors += 1;
            }
        }
        survivors
    }

    #[test]
    fn suppresses_small_classes() {
        let t = table(&[(0, 5), (1, 3)]);
        let cfg = AnonymizationConfig {
            k: 5,
            cap_quantile: 0.95,
            rare_category_min_count: 1,
        };
        let (out, log) = nhs_sanitize(&t, &cfg).unwrap();
        assert_eq!(out.len(), surviving_by_brute_force(&t, 5));
        assert_eq!(out.len(), 5);
        assert_eq!(log.stages.last().unwrap().rows_removed, 3);
    }

    #[test]
    fn k1_only_caps() {
        let t = table(&[(0, 2), (1, 1), (2, 1)]);
        let cfg = AnonymizationConfig {
            k: 1,
            cap_quantile: 0.95,
            rare_category_min_count: 1,
        };
        let (out, _) = nhs_sanitize(&t, &cfg).unwrap();
        assert_eq!(out.len(), t.len());
    }

    #[test]
    fn all_unique_rows_give_empty_result() {
        let t = table(&[(0, 1), (1, 1), (2, 1)]);
        let cfg = AnonymizationConfig {
            k: 2,
            cap_quantile: 0.95,
            rare_category_min_count: 1,
        };
        match nhs_sanitize(&t, &cfg) {
            Err(AnonError::EmptyResult(log)) => assert_eq!(log.rows_out, 0),
            other => panic!("expected EmptyResult, got {other:?}"),
        }
    }

    #[test]
    fn rare_category_rows_are_removed() {
        // label `b` occurs once: with min count 2, that row must go before
        // class suppression even though its class is large enough.
        let mut rows = vec![vec![Cell::Cat(0), Cell::Num(0.0), Cell::Cat(0)]; 5];
        rows.push(vec![Cell::Cat(0), Cell::Num(1.0), Cell::Cat(1)]);
        let t = Table::new(schema(), rows).unwrap();
        let cfg = AnonymizationConfig {
            k: 2,
            cap_quantile: 1.0,
            rare_category_min_count: 2,
        };
        let (out, log) = nhs_sanitize(&t, &cfg).unwrap();
        assert_eq!(out.len(), 5);
        assert_eq!(log.stages[1].rows_removed, 1);
    }

    #[test]
    fn sanitized_output_verifies() {
        let t = table(&[(0, 12), (1, 7), (2, 2)]);
        let cfg = AnonymizationConfig::new(10);
        let (out, _) = nhs_sanitize(&t, &cfg).unwrap();
        assert!(verify_k_anonymity(&out, 10).unwrap().satisfied);
    }

    #[test]
    fn verify_reports_violations() {
        let t = table(&[(0, 4), (1, 4)]);
        let check = verify_k_anonymity(&t, 5).unwrap();
        assert!(!check.satisfied);
        assert_eq!(check.violations.len(), 2);
        assert!(check.violations.iter().all(|v| v.size == 4));
        assert_eq!(check.violations[0].signature.len(), 1);
    }

    #[test]
    fn empty_table_is_vacuously_anonymous() {
        let t = Table::empty(schema());
        assert!(verify_k_anonymity(&t, 10).unwrap().satisfied);
    }

    #[test]
    fn requires_qid_columns() {
        let schema = Arc::new(
            Schema::new(vec![
                ColumnSpec::numeric("v", RoleSet::NONE),
                ColumnSpec::categorical("label", RoleSet::TARGET, &["a"]),
            ])
            .unwrap(),
        );
        let t = Table::empty(schema);
        assert!(matches!(
            verify_k_anonymity(&t, 2),
            Err(AnonError::NoQidColumns)
        ));
        assert!(matches!(
            nhs_sanitize(&t, &AnonymizationConfig::new(2)),
            Err(AnonError::NoQidColumns)
        ));
    }

    #[test]
    fn log_renders_a_stage_report() {
        let t = table(&[(0, 6), (1, 2)]);
        let cfg = AnonymizationConfig {
            k: 3,
            cap_quantile: 0.95,
            rare_category_min_count: 1,
        };
        let (_, log) = nhs_sanitize(&t, &cfg).unwrap();
        let report = log.to_string();
        assert!(report.contains("rows in: 8"));
        assert!(report.contains("stage cap"));
        assert!(report.contains("stage class-suppression: removed 2"));
        assert!(report.contains("rows out: 6"));
    }

    #[test]
    fn survivors_only_differ_by_capping() {
        let t = table(&[(0, 8)]);
        let cfg = AnonymizationConfig {
            k: 2,
            cap_quantile: 0.5,
            rare_category_min_count: 1,
        };
        let (out, _) = nhs_sanitize(&t, &cfg).unwrap();
        let capped = cap_numeric(&t, 0.5).unwrap();
        assert_eq!(out.rows(), capped.rows());
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use crate::table::{ColumnSpec, RoleSet, Schema};
    use proptest::prelude::*;
    use std::sync::Arc;

    fn arb_table() -> impl Strategy<Value = Table> {
        let schema = Arc::new(
            Schema::new(vec![
                ColumnSpec::categorical("q1", RoleSet::QID, &["a", "b", "c"]),
                ColumnSpec::categorical("q2", RoleSet::QID, &["x", "y"]),
                ColumnSpec::numeric("v", RoleSet::NONE),
                ColumnSpec::categorical("label", RoleSet::TARGET, &["t0", "t1"]),
            ])
            .unwrap(),
        );
        (1usize..60)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(0usize..3, n),
                    proptest::collection::vec(0usize..2, n),
                    proptest::collection::vec(-100f64..100.0, n),
                    proptest::collection::vec(0usize..2, n),
                )
            })
            .prop_map(move |(q1, q2, v, l)| {
                let rows = (0..q1.len())
                    .map(|i| {
                        vec![
                            Cell::Cat(q1[i]),
                            Cell::Cat(q2[i]),
                            Cell::Num(v[i]),
                            Cell::Cat(l[i]),
                        ]
                    })
                    .collect();
                Table::new(Arc::clone(&schema), rows).unwrap()
            })
    }

    proptest! {
        #[test]
        fn sanitize_output_is_k_anonymous(t in arb_table(), k in 1usize..8) {
            let cfg = AnonymizationConfig { k, cap_quantile: 0.95, rare_category_min_count: k };
            match nhs_sanitize(&t, &cfg) {
                Ok((out, log)) => {
                    prop_assert!(verify_k_anonymity(&out, k).unwrap().satisfied);
                    prop_assert_eq!(log.rows_out, out.len());
                }
                Err(AnonError::EmptyResult(_)) => {}
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }

        #[test]
        fn suppression_is_monotone_in_k(t in arb_table()) {
            let mut previous = usize::MAX;
            for k in [1usize, 2, 4, 8] {
                let cfg = AnonymizationConfig { k, cap_quantile: 0.95, rare_category_min_count: 2 };
                let survivors = match nhs_sanitize(&t, &cfg) {
                    Ok((out, _)) => out.len(),
                    Err(AnonError::EmptyResult(_)) => 0,
                    Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
                };
                prop_assert!(survivors <= previous);
                previous = survivors;
            }
        }

        #[test]
        fn sanitize_is_deterministic(t in arb_table(), k in 1usize..6) {
            let cfg = AnonymizationConfig::new(k);
            let a = nhs_sanitize(&t, &cfg);
            let b = nhs_sanitize(&t, &cfg);
            match (a, b) {
                (Ok((ta, _)), Ok((tb, _))) => prop_assert_eq!(ta, tb),
                (Err(AnonError::EmptyResult(_)), Err(AnonError::EmptyResult(_))) => {}
                _ => return Err(TestCaseError::fail("divergent outcomes")),
            }
        }
    }
}
