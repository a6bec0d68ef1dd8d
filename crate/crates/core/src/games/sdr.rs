//! The outlier-targeted membership game.
//!
//! An attacker is trained per target record on shadow datasets: `trials`
//! member cases (seed sample plus the target, run through the publisher) and
//! `trials` non-member cases (seed sample alone, same pipeline), summarized
//! by one feature set. Evaluation plays the challenge game: a secret bit
//! decides whether the target or — in the modified evaluation — a non-target
//! outlier is planted in the seed; a public bit decides whether the attacker
//! sees the raw seed or its published form. The legacy evaluation plants
//! nothing on non-member trials, which is exactly the asymmetry the modified
//! game exists to remove.

use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::features::{extract_features, FeatureVector, ReferenceRanges};
use super::{AttackOutcome, FeatureSetKind, GameError, GameTranscript};
use crate::forest::{fit_forest, predict, ForestConfig, ForestModel};
use crate::publish::Publisher;
use crate::seed;
use crate::table::{sample, Cell, ColumnSpec, RoleSet, SamplePlan, Schema, Table};

/// Anything that can answer the membership challenge from dataset features.
pub trait MembershipGuesser {
    fn guess(&mut self, features: &FeatureVector) -> bool;
}

/// Guesses by a fair coin; the advantage-zero calibration baseline.
pub struct CoinGuesser {
    rng: ChaCha8Rng,
}

impl CoinGuesser {
    pub fn new(seed: u64) -> CoinGuesser {
        CoinGuesser {
            rng: seed::rng(seed),
        }
    }
}

impl MembershipGuesser for CoinGuesser {
    fn guess(&mut self, _features: &FeatureVector) -> bool {
        self.rng.random::<bool>()
    }
}

/// Always answers the same bit; TPR = FPR by construction.
pub struct ConstantGuesser(pub bool);

impl MembershipGuesser for ConstantGuesser {
    fn guess(&mut self, _features: &FeatureVector) -> bool {
        self.0
    }
}

/// A trained membership classifier for one target record.
pub struct SdrAttacker {
    pub kind: FeatureSetKind,
    pub ranges: ReferenceRanges,
    pub training_accuracy: f64,
    /// Member and non-member shadow counts; balanced by construction.
    pub training_labels: (usize, usize),
    forest: ForestModel,
    feature_schema: Arc<Schema>,
}

impl SdrAttacker {
    fn features_to_row(&self, features: &FeatureVector, label: usize) -> Vec<Cell> {
        let mut row: Vec<Cell> = features.values.iter().map(|&v| Cell::Num(v)).collect();
        row.push(Cell::Cat(label));
        row
    }
}

impl MembershipGuesser for SdrAttacker {
    fn guess(&mut self, features: &FeatureVector) -> bool {
        let row = self.features_to_row(features, 0);
        let t = Table::new(Arc::clone(&self.feature_schema), vec![row]).expect("feature row");
        let preds = predict(&self.forest, &t).expect("feature schema matches");
        preds[0].probabilities[1] >= 0.5
    }
}

/// How one game configuration runs.
#[derive(Clone, Debug)]
pub struct SdrGameConfig {
    /// Evaluation trials; split evenly between member and non-member cases.
    pub trials: usize,
    /// Rows per shadow/challenge dataset, including the planted record.
    pub shadow_size: usize,
    pub mode: GameMode,
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GameMode {
    /// Non-member trials present the bare seed sample.
    Legacy,
    /// Non-member trials plant the non-target outlier.
    Modified,
}

fn feature_schema(dim: usize) -> Arc<Schema> {
    let mut columns: Vec<ColumnSpec> = (0..dim)
        .map(|i| ColumnSpec::numeric(&format!("f{i}"), RoleSet::NONE))
        .collect();
    columns.push(ColumnSpec::categorical(
        "member",
        RoleSet::TARGET,
        &["out", "in"],
    ));
    Arc::new(Schema::new(columns).expect("feature schema"))
}

/// Train the per-target attack classifier on balanced shadow datasets.
///
/// Member shadows sample `shadow_size − 1` population rows and plant the
/// target; non-member shadows sample `shadow_size` rows. Both run through the
/// publisher before feature extraction, so member and non-member cases have
/// identical cardinality and pipeline. The population must not contain the
/// target record.
#[allow(clippy::too_many_arguments)]
pub fn train_sdr_attacker(
    population: &Table,
    target: &[Cell],
    publisher: &dyn Publisher,
    kind: FeatureSetKind,
    ranges: &ReferenceRanges,
    trials: usize,
    shadow_size: usize,
    seed_value: u64,
) -> Result<SdrAttacker, GameError> {
    if population.len() < shadow_size {
        return Err(GameError::InsufficientPopulation {
            needed: shadow_size,
            available: population.len(),
        });
    }
    debug_assert!(
        !population.rows().iter().any(|r| r.as_slice() == target),
        "target must not sit in the shadow sample pool"
    );

    let dim = ranges.feature_len(kind);
    let schema = feature_schema(dim);
    let mut rows = Vec::with_capacity(2 * trials);
    for i in 0..trials {
        let member_seed = seed::derive_indexed(seed_value, "shadow-member", i as u64);
        let (raw, _) = sample(
            population,
            &SamplePlan::uniform(member_seed, shadow_size - 1),
        )?;
        let with_target = raw.with_extra_row(target)?;
        let published = publisher.publish(
            &with_target,
            shadow_size,
            seed::derive(member_seed, "publish"),
        )?;
        let f = extract_features(&published, kind, ranges)?;
        let mut row: Vec<Cell> = f.values.iter().map(|&v| Cell::Num(v)).collect();
        row.push(Cell::Cat(1));
        rows.push(row);

        let non_seed = seed::derive_indexed(seed_value, "shadow-nonmember", i as u64);
        let (raw, _) = sample(population, &SamplePlan::uniform(non_seed, shadow_size))?;
        let published = publisher.publish(&raw, shadow_size, seed::derive(non_seed, "publish"))?;
        let f = extract_features(&published, kind, ranges)?;
        let mut row: Vec<Cell> = f.values.iter().map(|&v| Cell::Num(v)).collect();
        row.push(Cell::Cat(0));
        rows.push(row);
    }

    let train = Table::new(Arc::clone(&schema), rows)?;
    let counts = train.category_counts(schema.target_index());
    let cfg = ForestConfig::default()
        .with_trees(50)
        .with_seed(seed::derive(seed_value, "attacker-forest"));
    let forest = fit_forest(&train, &cfg)?;
    let training_accuracy = crate::forest::accuracy(&predict(&forest, &train)?)?;
    Ok(SdrAttacker {
        kind,
        ranges: ranges.clone(),
        training_accuracy,
        training_labels: (counts[1] as usize, counts[0] as usize),
        forest,
        feature_schema: schema,
    })
}

/// Play the challenge game and score the guesser.
///
/// Secret bits are exactly balanced across trials (shuffled by seed), so
/// precision is computed over equal member and non-member case counts.
#[allow(clippy::too_many_arguments)]
pub fn evaluate_sdr_game(
    guesser: &mut dyn MembershipGuesser,
    kind: FeatureSetKind,
    ranges: &ReferenceRanges,
    population: &Table,
    target: &[Cell],
    non_target: Option<&[Cell]>,
    publisher: &dyn Publisher,
    cfg: &SdrGameConfig,
) -> Result<(AttackOutcome, Vec<GameTranscript>), GameError> {
    if cfg.mode == GameMode::Modified {
        let nt = non_target.expect("modified evaluation needs a non-target outlier");
        assert!(
            nt != target,
            "non-target outlier must differ from the target"
        );
    }
    if population.len() < cfg.shadow_size {
        return Err(GameError::InsufficientPopulation {
            needed: cfg.shadow_size,
            available: population.len(),
        });
    }

    let mut secret_bits: Vec<u8> = (0..cfg.trials).map(|i| (i % 2 == 0) as u8).collect();
    let mut rng = seed::rng(seed::derive(cfg.seed, "secret-bits"));
    for i in 0..secret_bits.len() {
        let j = rng.random_range(i..secret_bits.len());
        secret_bits.swap(i, j);
    }

    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let mut transcripts = Vec::with_capacity(cfg.trials);
    for (i, &s_t) in secret_bits.iter().enumerate() {
        let trial_seed = seed::derive_indexed(cfg.seed, "trial", i as u64);
        let (raw, _) = sample(
            population,
            &SamplePlan::uniform(trial_seed, cfg.shadow_size - 1),
        )?;
        let challenge = if s_t == 1 {
            raw.with_extra_row(target)?
        } else {
            match (cfg.mode, non_target) {
                (GameMode::Modified, Some(nt)) => raw.with_extra_row(nt)?,
                _ => raw,
            }
        };
        let public_bit =
            u8::from(seed::rng(seed::derive(trial_seed, "public-bit")).random::<bool>());
        let presented = if public_bit == 0 {
            challenge
        } else {
            publisher.publish(
                &challenge,
                cfg.shadow_size,
                seed::derive(trial_seed, "publish"),
            )?
        };
        let features = extract_features(&presented, kind, ranges)?;
        let guess = u8::from(guesser.guess(&features));
        match (s_t, guess) {
            (1, 1) => tp += 1,
            (1, 0) => fn_ += 1,
            (0, 1) => fp += 1,
            (0, 0) => tn += 1,
            _ => unreachable!(),
        }
        transcripts.push(GameTranscript {
            trial: i,
            secret_bit: s_t,
            public_bit,
            target: target.to_vec(),
            non_target: non_target.map(<[Cell]>::to_vec),
            guess,
            seed: trial_seed,
        });
    }
    Ok((AttackOutcome::from_counts(tp, fp, tn, fn_), transcripts))
}

/// How many targets were detected with at least the given precision and a
/// positive advantage.
pub fn count_detected_outliers(outcomes: &[AttackOutcome], precision_floor: f64) -> usize {
    assert!(
        precision_floor > 0.5 && precision_floor <= 1.0,
        "precision floor must lie in (0.5, 1]"
    );
    outcomes
        .iter()
        .filter(|o| o.precision >= precision_floor && o.advantage > 0.0)
        .count()
}
