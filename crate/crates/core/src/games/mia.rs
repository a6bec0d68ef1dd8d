//! Prediction-vector membership inference against a trained classifier.
//!
//! The victim model answers for both its member records and a disjoint
//! non-member sample; the labeled prediction vectors are split into folds,
//! an attack model is trained on all but one fold and scored on the held-out
//! fold, and the rates are averaged across folds. The victim thereby acts as
//! its own shadow model.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{AttackOutcome, GameError};
use crate::forest::{predict, ForestModel, PredictionVector};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MiaAttackKind {
    /// Member iff the max class probability clears a threshold learned on
    /// the training folds.
    Threshold,
    /// Logistic regression on (sorted probabilities, correctness indicator,
    /// per-label loss).
    LogisticOnVector,
}

/// Run the k-fold prediction-vector attack. `r_train` and `r_non_train` must
/// be disjoint row sets.
pub fn mia_prediction_vector_attack(
    victim: &ForestModel,
    r_train: &Table,
    r_non_train: &Table,
    folds: usize,
    kind: MiaAttackKind,
) -> Result<AttackOutcome, GameError> {
    if folds < 2 || r_train.len() < folds || r_non_train.len() < folds {
        return Err(GameError::FoldTooSmall {
            vectors: r_train.len().min(r_non_train.len()),
            folds,
        });
    }
    let train_keys: BTreeSet<Vec<u64>> = r_train
        .rows()
        .iter()
        .map(|r| r.iter().map(|c| c.key()).collect())
        .collect();
    if r_non_train.rows().iter().any(|r| {
        let key: Vec<u64> = r.iter().map(|c| c.key()).collect();
        train_keys.contains(&key)
    }) {
        return Err(GameError::DisjointnessViolation);
    }

    let pred_in = predict(victim, r_train)?;
    let pred_out = predict(victim, r_non_train)?;

    let mut fold_outcomes = Vec::with_capacity(folds);
    for fold in 0..folds {
        // round-robin assignment partitions every vector exactly once
        let split = |preds: &[PredictionVector]| -> (Vec<PredictionVector>, Vec<PredictionVector>) {
            let mut train = Vec::new();
            let mut test = Vec::new();
            for (i, p) in preds.iter().enumerate() {
                if i % folds == fold {
                    test.push(p.clone());
                } else {
                    train.push(p.clone());
                }
            }
            (train, test)
        };
        let (in_train, in_test) = split(&pred_in);
        let (out_train, out_test) = split(&pred_out);

        let outcome = match kind {
            MiaAttackKind::Threshold => threshold_fold(&in_train, &out_train, &in_test, &out_test),
            MiaAttackKind::LogisticOnVector => {
                logistic_fold(&in_train, &out_train, &in_test, &out_test)
            }
        };
        fold_outcomes.push(outcome);
    }
    Ok(AttackOutcome::average(&fold_outcomes))
}

fn count_outcome(
    member_guess: impl Fn(&PredictionVector) -> bool,
    in_test: &[PredictionVector],
    out_test: &[PredictionVector],
) -> AttackOutcome {
    let tp = in_test.iter().filter(|p| member_guess(p)).count();
    let fn_ = in_test.len() - tp;
    let fp = out_test.iter().filter(|p| member_guess(p)).count();
    let tn = out_test.len() - fp;
    AttackOutcome::from_counts(tp, fp, tn, fn_)
}

/// Pick the confidence threshold maximizing advantage on the training folds;
/// exact ties resolve toward the lower threshold (more recall).
fn threshold_fold(
    in_train: &[PredictionVector],
    out_train: &[PredictionVector],
    in_test: &[PredictionVector],
    out_test: &[PredictionVector],
) -> AttackOutcome {
    let mut grid: Vec<f64> = in_train
        .iter()
        .chain(out_train)
        .map(PredictionVector::max_probability)
        .collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();

    let mut best_threshold = 0.0;
    let mut best_advantage = f64::NEG_INFINITY;
    for &candidate in &grid {
        let tpr = rate_at(in_train, candidate);
        let fpr = rate_at(out_train, candidate);
        let advantage = tpr - fpr;
        if advantage > best_advantage + 1e-12 {
            best_advantage = advantage;
            best_threshold = candidate;
        }
    }
    count_outcome(|p| p.max_probability() >= best_threshold, in_test, out_test)
}

fn rate_at(preds: &[PredictionVector], threshold: f64) -> f64 {
    preds
        .iter()
        .filter(|p| p.max_probability() >= threshold)
        .count() as f64
        / preds.len() as f64
}

/// Attack features for the logistic variant: probabilities sorted descending,
/// a correctness indicator, and the per-label loss −ln p(true label).
fn attack_features(p: &PredictionVector) -> Vec<f64> {
    let mut probs = p.probabilities.clone();
    probs.sort_by(|a, b| b.total_cmp(a));
    let label = p.true_label.expect("labeled prediction vectors");
    let correct = f64::from(Some(p.predicted) == p.true_label);
    let loss = -(p.probabilities[label].max(1e-12)).ln();
    probs.push(correct);
    probs.push(loss);
    probs
}

fn logistic_fold(
    in_train: &[PredictionVector],
    out_train: &[PredictionVector],
    in_test: &[PredictionVector],
    out_test: &[PredictionVector],
) -> AttackOutcome {
    let xs: Vec<Vec<f64>> = in_train
        .iter()
        .chain(out_train)
        .map(attack_features)
        .collect();
    let ys: Vec<f64> = std::iter::repeat_n(1.0, in_train.len())
        .chain(std::iter::repeat_n(0.0, out_train.len()))
        .collect();

    let dim = xs[0].len();
    let n = xs.len() as f64;
    // standardize on the training folds
    let mut mean = vec![0.0f64; dim];
    for x in &xs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut std = vec![0.0f64; dim];
    for x in &xs {
        for ((s, m), v) in std.iter_mut().zip(&mean).zip(x) {
            *s += (v - m).powi(2) / n;
        }
    }
    for s in std.iter_mut() {
        *s = s.sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    let norm = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(&mean)
            .zip(&std)
            .map(|((v, m), s)| (v - m) / s)
            .collect()
    };
    let xs: Vec<Vec<f64>> = xs.iter().map(|x| norm(x)).collect();

    // full-batch gradient descent from zero weights; deterministic
    let mut w = vec![0.0f64; dim];
    let mut b = 0.0f64;
    let lr = 0.5;
    for _ in 0..300 {
        let mut gw = vec![0.0f64; dim];
        let mut gb = 0.0f64;
        for (x, &y) in xs.iter().zip(&ys) {
            let z = x.iter().zip(&w).map(|(xi, wi)| xi * wi).sum::<f64>() + b;
            let p = 1.0 / (1.0 + (-z).exp());
            let err = p - y;
            for (g, xi) in gw.iter_mut().zip(x) {
                *g += err * xi / n;
            }
            gb += err / n;
        }
        for (wi, g) in w.iter_mut().zip(&gw) {
            *wi -= lr * (g + 1e-4 * *wi);
        }
        b -= lr * gb;
    }

    let member = |p: &PredictionVector| -> bool {
        let x = norm(&attack_features(p));
        let z = x.iter().zip(&w).map(|(xi, wi)| xi * wi).sum::<f64>() + b;
        z >= 0.0
    };
    count_outcome(member, in_test, out_test)
}
