//! Membership-inference harnesses and their accounting.
//!
//! Two attacks are implemented: the outlier-targeted shadow-dataset game
//! ([`sdr`]) with both its original evaluation and the modified evaluation
//! that plants a non-member outlier, and a prediction-vector
//! cross-validation attack against the downstream classifier ([`mia`]).
//! [`diagnostic`] checks the identical-distributions precondition that the
//! differential-privacy bound on attacker advantage relies on.

pub mod diagnostic;
pub mod features;
pub mod mia;
pub mod sdr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::forest::ForestError;
use crate::publish::PublishError;
use crate::table::{Record, TableError};

#[derive(Debug, Error)]
pub enum GameError {
    #[error("schemas do not match")]
    SchemaMismatch,
    #[error("population too small: need {needed} rows, have {available}")]
    InsufficientPopulation { needed: usize, available: usize },
    #[error("member and non-member tables share rows")]
    DisjointnessViolation,
    #[error("{vectors} prediction vectors cannot fill {folds} folds")]
    FoldTooSmall { vectors: usize, folds: usize },
    #[error("empty seed pool")]
    EmptyPool,
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Publish(#[from] PublishError),
}

/// Which summary of a published dataset the attacker sees.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSetKind {
    Histograms,
    PairwiseCorrelations,
    SummaryStats,
}

/// Aggregate result of one membership-inference run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackOutcome {
    pub tpr: f64,
    pub fpr: f64,
    /// `TPR − FPR`.
    pub advantage: f64,
    /// `TP / (TP + FP)`; zero when the attacker never says "member".
    pub precision: f64,
    /// `1 − advantage`.
    pub privacy_gain: f64,
    pub n_trials: usize,
}

impl AttackOutcome {
    pub fn from_counts(tp: usize, fp: usize, tn: usize, fn_: usize) -> AttackOutcome {
        let rate = |num: usize, den: usize| {
            if den == 0 {
                0.0
            } else {
                num as f64 / den as f64
            }
        };
        let tpr = rate(tp, tp + fn_);
        let fpr = rate(fp, fp + tn);
        AttackOutcome {
            tpr,
            fpr,
            advantage: tpr - fpr,
            precision: rate(tp, tp + fp),
            privacy_gain: 1.0 - (tpr - fpr),
            n_trials: tp + fp + tn + fn_,
        }
    }

    /// Mean of per-fold rates; advantage and privacy gain recomputed from the
    /// averaged rates.
    pub fn average(outcomes: &[AttackOutcome]) -> AttackOutcome {
        assert!(!outcomes.is_empty());
        let n = outcomes.len() as f64;
        let tpr = outcomes.iter().map(|o| o.tpr).sum::<f64>() / n;
        let fpr = outcomes.iter().map(|o| o.fpr).sum::<f64>() / n;
        AttackOutcome {
            tpr,
            fpr,
            advantage: tpr - fpr,
            precision: outcomes.iter().map(|o| o.precision).sum::<f64>() / n,
            privacy_gain: 1.0 - (tpr - fpr),
            n_trials: outcomes.iter().map(|o| o.n_trials).sum(),
        }
    }
}

/// One game trial, serializable for audit logs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GameTranscript {
    pub trial: usize,
    pub secret_bit: u8,
    pub public_bit: u8,
    pub target: Record,
    pub non_target: Option<Record>,
    pub guess: u8,
    pub seed: u64,
}
