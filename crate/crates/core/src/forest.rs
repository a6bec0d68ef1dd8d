//! From-scratch random forest on the tabular model: CART trees over bootstrap
//! resamples, Gini splits, per-node feature subsampling, and class-probability
//! prediction vectors. Serves both as the ML-utility probe and as the victim
//! model for the membership-inference games.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::table::{Cell, ColumnKind, Schema, Table};

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("empty split: class counts sum to zero")]
    EmptySplit,
    #[error("empty training set")]
    EmptyTrainingSet,
    #[error("input schema does not match the training schema")]
    SchemaMismatch,
    #[error("prediction vectors are missing true labels")]
    MissingLabels,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitCriterion {
    #[default]
    Gini,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSubsample {
    /// ⌈√m⌉ candidate features per split.
    #[default]
    SqrtM,
    All,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub criterion: SplitCriterion,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
    /// Numeric split thresholds evaluated per feature per node are capped at
    /// this many midpoints (uniform stride over the sorted candidates).
    pub max_split_candidates: usize,
}

impl Default for ForestConfig {
    fn default() -> ForestConfig {
        ForestConfig {
            n_trees: 100,
            criterion: SplitCriterion::Gini,
            max_depth: None,
            min_samples_split: 2,
            feature_subsample: FeatureSubsample::SqrtM,
            seed: 0,
            max_split_candidates: 64,
        }
    }
}

impl ForestConfig {
    pub fn with_seed(mut self, seed: u64) -> ForestConfig {
        self.seed = seed;
        self
    }

    pub fn with_trees(mut self, n_trees: usize) -> ForestConfig {
        self.n_trees = n_trees;
        self
    }
}

/// Gini impurity `1 − Σ (cᵢ/N)²`.
pub fn gini(counts: &[u64]) -> Result<f64, ForestError> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(ForestError::EmptySplit);
    }
    let total = total as f64;
    Ok(1.0
        - counts
            .iter()
            .map(|&c| (c as f64 / total).powi(2))
            .sum::<f64>())
}

/// Per-record class probabilities with the argmax class (lowest index on
/// ties) and the true label when the input carried one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionVector {
    pub probabilities: Vec<f64>,
    pub predicted: usize,
    pub true_label: Option<usize>,
}

impl PredictionVector {
    pub fn max_probability(&self) -> f64 {
        self.probabilities[self.predicted]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitTest {
    /// Go left when the numeric value is ≤ the threshold.
    NumericLe(f64),
    /// Go left when the categorical value equals the category (one-vs-rest).
    CategoryEq(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Split {
        feature: usize,
        test: SplitTest,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: Vec<u64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    fn leaf_counts<'a>(&'a self, row: &[Cell]) -> &'a [u64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return counts,
                Node::Split {
                    feature,
                    test,
                    left,
                    right,
                } => {
                    let go_left = match test {
                        SplitTest::NumericLe(thr) => row[*feature].as_num() <= *thr,
                        SplitTest::CategoryEq(cat) => row[*feature].as_cat() == *cat,
                    };
                    at = if go_left { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub schema: Arc<Schema>,
    pub target: usize,
    pub features: Vec<usize>,
    pub n_classes: usize,
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<ForestModel, serde_json::Error> {
        serde_json::from_str(text)
    }
}

struct TreeBuilder<'a> {
    table: &'a Table,
    target: usize,
    features: &'a [usize],
    n_classes: usize,
    cfg: &'a ForestConfig,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    fn class_counts(&self, rows: &[usize]) -> Vec<u64> {
        let mut counts = vec![0u64; self.n_classes];
        for &r in rows {
            counts[self.table.row(r)[self.target].as_cat()] += 1;
        }
        counts
    }

    fn build(&mut self, rows: Vec<usize>, depth: usize, rng: &mut impl Rng) -> usize {
        let counts = self.class_counts(&rows);
        let parent_gini = gini(&counts).expect("non-empty node");
        let depth_capped = self.cfg.max_depth.is_some_and(|d| depth >= d);
        if parent_gini == 0.0 || rows.len() < self.cfg.min_samples_split || depth_capped {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() - 1;
        }

        let candidates = self.candidate_features(rng);
        let mut best: Option<(f64, SplitTest, usize)> = None;
        for &feature in &candidates {
            let found = match self.table.schema().columns()[feature].kind {
                ColumnKind::Numeric => self.best_numeric_split(&rows, feature),
                ColumnKind::Categorical => self.best_categorical_split(&rows, feature),
            };
            if let Some((impurity, test)) = found {
                if best.as_ref().is_none_or(|(b, _, _)| impurity < *b - 1e-12) {
                    best = Some((impurity, test, feature));
                }
            }
        }

        let Some((impurity, test, feature)) = best else {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() - 1;
        };
        if parent_gini - impurity <= 1e-12 {
            self.nodes.push(Node::Leaf { counts });
            return self.nodes.len() - 1;
        }

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.into_iter().partition(|&r| match &test {
                SplitTest::NumericLe(thr) => self.table.row(r)[feature].as_num() <= *thr,
                SplitTest::CategoryEq(cat) => self.table.row(r)[feature].as_cat() == *cat,
            });

        let at = self.nodes.len();
        // placeholder, patched after children are built
        self.nodes.push(Node::Leaf { counts: vec![] });
        let left = self.build(left_rows, depth + 1, rng);
        let right = self.build(right_rows, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature,
            test,
            left,
            right,
        };
        at
    }

    /// Candidate features for a split, drawn without replacement and sorted
    /// so enumeration order (and therefore tie-breaking) is stable.
    fn candidate_features(&self, rng: &mut impl Rng) -> Vec<usize> {
        let k = match self.cfg.feature_subsample {
            FeatureSubsample::All => self.features.len(),
            FeatureSubsample::SqrtM => (self.features.len() as f64).sqrt().ceil() as usize,
        };
        let mut pool = self.features.to_vec();
        for i in 0..k.min(pool.len()) {
            let j = rng.random_range(i..pool.len());
            pool.swap(i, j);
        }
        pool.truncate(k.min(self.features.len()));
        pool.sort_unstable();
        pool
    }

    /// Weighted-Gini sweep over midpoint thresholds of the sorted distinct
    /// values, capped at `max_split_candidates` thresholds.
    fn best_numeric_split(&self, rows: &[usize], feature: usize) -> Option<(f64, SplitTest)> {
        let mut pairs: Vec<(f64, usize)> = rows
            .iter()
            .map(|&r| {
                (
                    self.table.row(r)[feature].as_num(),
                    self.table.row(r)[self.target].as_cat(),
                )
            })
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let boundaries: Vec<usize> = (0..pairs.len() - 1)
            .filter(|&i| pairs[i].0 != pairs[i + 1].0)
            .collect();
        if boundaries.is_empty() {
            return None;
        }
        let cap = self.cfg.max_split_candidates.max(1);
        let chosen: Vec<usize> = if boundaries.len() <= cap {
            boundaries
        } else {
            (0..cap)
                .map(|i| boundaries[i * (boundaries.len() - 1) / (cap - 1).max(1)])
                .collect()
        };

        let total = pairs.len() as f64;
        let mut left_counts = vec![0u64; self.n_classes];
        let mut right_counts = self.class_counts(rows);
        let mut cursor = 0;
        let mut best: Option<(f64, SplitTest)> = None;
        for &b in &chosen {
            while cursor <= b {
                left_counts[pairs[cursor].1] += 1;
                right_counts[pairs[cursor].1] -= 1;
                cursor += 1;
            }
            let n_left = (b + 1) as f64;
            let n_right = total - n_left;
            let impurity = (n_left * gini(&left_counts).unwrap()
                + n_right * gini(&right_counts).unwrap())
                / total;
            if best.as_ref().is_none_or(|(bi, _)| impurity < *bi - 1e-12) {
                let threshold = (pairs[b].0 + pairs[b + 1].0) / 2.0;
                best = Some((impurity, SplitTest::NumericLe(threshold)));
            }
        }
        best
    }

    fn best_categorical_split(&self, rows: &[usize], feature: usize) -> Option<(f64, SplitTest)> {
        let domain = self.table.schema().columns()[feature].categories.len();
        let total = rows.len() as f64;
        let all = self.class_counts(rows);
        let mut best: Option<(f64, SplitTest)> = None;
        for cat in 0..domain {
            let mut left = vec![0u64; self.n_classes];
            for &r in rows {
                if self.table.row(r)[feature].as_cat() == cat {
                    left[self.table.row(r)[self.target].as_cat()] += 1;
                }
            }
            let n_left: u64 = left.iter().sum();
            if n_left == 0 || n_left == rows.len() as u64 {
                continue;
            }
            let right: Vec<u64> = all.iter().zip(&left).map(|(a, l)| a - l).collect();
            let impurity = (n_left as f64 * gini(&left).unwrap()
                + (total - n_left as f64) * gini(&right).unwrap())
                / total;
            if best.as_ref().is_none_or(|(b, _)| impurity < *b - 1e-12) {
                best = Some((impurity, SplitTest::CategoryEq(cat)));
            }
        }
        best
    }
}

/// Fit `n_trees` CART trees on bootstrap resamples of the training table.
pub fn fit_forest(train: &Table, cfg: &ForestConfig) -> Result<ForestModel, ForestError> {
    if train.is_empty() {
        return Err(ForestError::EmptyTrainingSet);
    }
    let target = train.schema().target_index();
    let features: Vec<usize> = (0..train.schema().arity())
        .filter(|&c| c != target)
        .collect();
    let n_classes = train.schema().columns()[target].categories.len();
    let n = train.len();

    let trees = (0..cfg.n_trees)
        .map(|t| {
            let mut rng = seed::rng(seed::derive_indexed(cfg.seed, "tree", t as u64));
            let bootstrap: Vec<usize> = (0..n).map(|_| rng.random_range(0..n)).collect();
            let mut builder = TreeBuilder {
                table: train,
                target,
                features: &features,
                n_classes,
                cfg,
                nodes: Vec::new(),
            };
            builder.build(bootstrap, 0, &mut rng);
            Tree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(ForestModel {
        schema: train.schema_arc(),
        target,
        features,
        n_classes,
        trees,
    })
}

/// Per-row class probabilities: the average of per-tree leaf frequencies.
pub fn predict(model: &ForestModel, t: &Table) -> Result<Vec<PredictionVector>, ForestError> {
    if t.schema() != model.schema.as_ref() {
        return Err(ForestError::SchemaMismatch);
    }
    let preds = t
        .rows()
        .iter()
        .map(|row| {
            let mut probs = vec![0.0f64; model.n_classes];
            for tree in &model.trees {
                let counts = tree.leaf_counts(row);
                let total: u64 = counts.iter().sum();
                for (p, &c) in probs.iter_mut().zip(counts) {
                    *p += c as f64 / total as f64;
                }
            }
            for p in probs.iter_mut() {
                *p /= model.trees.len() as f64;
            }
            let predicted = argmax(&probs);
            PredictionVector {
                probabilities: probs,
                predicted,
                true_label: Some(row[model.target].as_cat()),
            }
        })
        .collect();
    Ok(preds)
}

/// Lowest index wins ties.
fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// Fraction of predictions matching their true label.
pub fn accuracy(preds: &[PredictionVector]) -> Result<f64, ForestError> {
    if preds.is_empty() || preds.iter().any(|p| p.true_label.is_none()) {
        return Err(ForestError::MissingLabels);
    }
    let hits = preds
        .iter()
        .filter(|p| Some(p.predicted) == p.true_label)
        .count();
    Ok(hits as f64 / preds.len() as f64)
}


#[cfg(test)]
mod properties {
    use super::*;
    use crate::table::{ColumnSpec, RoleSet};
    use proptest::prelude::*;

    fn arb_table() -> impl Strategy<Value = Table> {
        let schema = Arc::new(
            Schema::new(vec![
                ColumnSpec::numeric("x", RoleSet::NONE),
                ColumnSpec::categorical("c", RoleSet::NONE, &["c0", "c1", "c2"]),
                ColumnSpec::categorical("y", RoleSet::TARGET, &["a", "b"]),
            ])
            .unwrap(),
        );
        (4usize..40)
            .prop_flat_map(|n| {
                (
                    proptest::collection::vec(-10f64..10.0, n),
                    proptest::collection::vec(0usize..3, n),
                    proptest::collection::vec(0usize..2, n),
                )
            })
            .prop_map(move |(x, c, y)| {
                let rows = (0..x.len())
                    .map(|i| vec![Cell::Num(x[i]), Cell::Cat(c[i]), Cell::Cat(y[i])])
                    .collect();
                Table::new(Arc::clone(&schema), rows).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn probabilities_are_normalized_and_argmax_stable(t in arb_table(), seed in any::<u64>()) {
            let model = fit_forest(&t, &ForestConfig::default().with_trees(15).with_seed(seed)).unwrap();
            for p in predict(&model, &t).unwrap() {
                let sum: f64 = p.probabilities.iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-9);
                prop_assert!(p.probabilities.iter().all(|&v| v >= 0.0));
                prop_assert_eq!(p.predicted, super::argmax(&p.probabilities));
            }
        }

        #[test]
        fn training_accuracy_beats_majority_class(t in arb_table(), seed in any::<u64>()) {
            let model = fit_forest(&t, &ForestConfig::default().with_trees(25).with_seed(seed)).unwrap();
            let acc = accuracy(&predict(&model, &t).unwrap()).unwrap();
            let counts = t.category_counts(2);
            let majority = *counts.iter().max().unwrap() as f64 / t.len() as f64;
            prop_assert!(acc >= majority - 1e-9, "forest {} vs majority {}", acc, majority);
        }
    }
}
