//! Experiment orchestration: expand the configured sweeps into cells, run
//! each cell's publish → score → attack pipeline over seeded trials, and emit
//! the results table, per-trial transcript log, and trade-off plot data.
//!
//! Each cell derives its own seed stream from `hash(master_seed, cell id)`,
//! so cells can run on any number of workers — and new cells can be added —
//! without perturbing any other cell's randomness. Outputs are merged in
//! config order and reproduce byte-identically for a fixed master seed.

pub mod config;
pub mod tradeoff;

pub use config::{ExperimentConfig, MethodName, PublishMethod, SweepCell};
pub use tradeoff::{
    build_tradeoff, dominates_at, emit_tradeoff, interpolate_advantage, points_from_rows,
    TradeoffPoint, TradeoffSeries, UtilityKind,
};

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::anon::AnonError;
use crate::forest::{accuracy, fit_forest, predict, ForestConfig, ForestError};
use crate::games::diagnostic::{precondition_diagnostic, ColumnDivergence, DiagnosticConfig};
use crate::games::features::ReferenceRanges;
use crate::games::mia::mia_prediction_vector_attack;
use crate::games::sdr::{
    count_detected_outliers, evaluate_sdr_game, train_sdr_attacker, GameMode, SdrGameConfig,
};
use crate::games::{AttackOutcome, GameError};
use crate::metrics::{statistical_utility, MetricsError};
use crate::publish::{PublishError, Publisher, SanitizePublisher, SynthPublisher};
use crate::seed;
use crate::synth::SynthError;
use crate::table::{
    cap_numeric, find_outliers, ingest_csv, row_key, sample, Record, SamplePlan, Table, TableError,
};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment config: {0}")]
    InvalidConfig(String),
    #[error("no results to emit")]
    EmptyResults,
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Anon(#[from] AnonError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Publish(#[from] PublishError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One aggregated results row per sweep cell.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResultRow {
    pub method: String,
    pub parameter: String,
    pub stat_utility: f64,
    pub ml_accuracy: f64,
    /// Mean prediction-vector MIA advantage across trials.
    pub attacker_advantage: f64,
    pub privacy_gain: f64,
    pub outlier_count_p60: usize,
    pub outlier_count_p80: usize,
    pub precondition_flag: bool,
    pub n_runs: usize,
    /// Std-dev of the stat utility across runs (the CSV's dispersion column).
    pub dispersion: f64,
    pub master_seed: u64,
    /// Companion dispersions, carried in the bundle and trade-off JSON.
    pub ml_dispersion: f64,
    pub advantage_dispersion: f64,
}

/// Structured transcript entries, one JSON object per line in the log.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Trial {
        cell: String,
        trial: usize,
        seed: u64,
        published_rows: usize,
        stat_utility: f64,
        ml_accuracy: f64,
        tpr: f64,
        fpr: f64,
        advantage: f64,
        precision: f64,
    },
    SdrOutlier {
        cell: String,
        outlier: usize,
        mode: String,
        outcome: AttackOutcome,
    },
    Diagnostic {
        cell: String,
        flag: bool,
        per_column: Vec<ColumnDivergence>,
    },
    CellError {
        cell: String,
        message: String,
    },
}

#[derive(Clone, Debug)]
pub struct ResultsBundle {
    pub rows: Vec<ResultRow>,
    pub log: Vec<LogRecord>,
    /// (cell id, message) for cells that failed; the rest of the bundle is
    /// still valid.
    pub errors: Vec<(String, String)>,
    pub master_seed: u64,
}

impl ResultsBundle {
    pub fn results_csv(&self) -> String {
        let mut out = String::from(
            "method,parameter,stat_utility,ml_accuracy,attacker_advantage,privacy_gain,\
             outlier_count_p60,outlier_count_p80,precondition_flag,n_runs,dispersion,master_seed\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                r.method,
                r.parameter,
                r.stat_utility,
                r.ml_accuracy,
                r.attacker_advantage,
                r.privacy_gain,
                r.outlier_count_p60,
                r.outlier_count_p80,
                r.precondition_flag,
                r.n_runs,
                r.dispersion,
                r.master_seed
            );
        }
        out
    }

    pub fn transcript_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.log {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(record).expect("log serializes")
            );
        }
        out
    }

    pub fn tradeoff_json(&self) -> Result<String, ExperimentError> {
        Ok(tradeoff::to_json(&build_tradeoff(&points_from_rows(
            &self.rows,
        ))?))
    }

    /// Write `results.csv`, `transcript.jsonl`, `tradeoff.json`, and (when
    /// any cell failed) `errors.txt` under `dir`.
    pub fn write_to_dir(&self, dir: &Path) -> Result<(), ExperimentError> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("results.csv"), self.results_csv())?;
        std::fs::write(dir.join("transcript.jsonl"), self.transcript_jsonl())?;
        if !self.rows.is_empty() {
            std::fs::write(dir.join("tradeoff.json"), self.tradeoff_json()?)?;
        }
        if !self.errors.is_empty() {
            let mut out = String::new();
            for (cell, message) in &self.errors {
                let _ = writeln!(out, "{cell}: {message}");
            }
            std::fs::write(dir.join("errors.txt"), out)?;
        }
        Ok(())
    }
}

/// Everything prepared once per experiment, shared read-only by the cells.
struct Workbench {
    /// Capped population; the sampling index space.
    population: Table,
    /// Capped population minus the outlier catalog rows; shadow pool.
    attack_population: Table,
    test: Table,
    /// Capped outlier records, catalog order.
    outlier_rows: Vec<Record>,
    /// Feature reference frame, fixed before any shadow dataset exists.
    ranges: ReferenceRanges,
    /// Test ∪ outlier indices; seed samples must avoid them.
    exclusions: BTreeSet<usize>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Workbench, ExperimentError> {
    let raw = ingest_csv(&cfg.data.csv, &cfg.data.schema)?;
    prepare_with(cfg, raw)
}

fn prepare_with(cfg: &ExperimentConfig, raw: Table) -> Result<Workbench, ExperimentError> {
    let raw = if cfg.sampling.population_size > 0 && cfg.sampling.population_size < raw.len() {
        let plan = SamplePlan::uniform(
            seed::derive(cfg.master_seed, "population"),
            cfg.sampling.population_size,
        );
        sample(&raw, &plan)?.0
    } else {
        raw
    };
    let needed = cfg.sampling.seed_size + cfg.sampling.test_size + cfg.sampling.outliers;
    if raw.len() < needed {
        return Err(ExperimentError::InvalidConfig(format!(
            "population of {} rows cannot supply seed_size + test_size + outliers = {}",
            raw.len(),
            needed
        )));
    }

    let catalog = find_outliers(&raw, cfg.sampling.outliers)?;
    let capped = cap_numeric(&raw, cfg.sampling.cap_quantile)?;
    let outlier_indices: BTreeSet<usize> = catalog.entries.iter().map(|&(i, _)| i).collect();
    let outlier_rows: Vec<Record> = catalog
        .entries
        .iter()
        .map(|&(i, _)| capped.row(i).to_vec())
        .collect();

    let test_plan = SamplePlan::uniform(
        seed::derive(cfg.master_seed, "test"),
        cfg.sampling.test_size,
    )
    .excluding(outlier_indices.iter().copied());
    let (test, test_indices) = sample(&capped, &test_plan)?;

    let keep: Vec<usize> = (0..capped.len())
        .filter(|i| !outlier_indices.contains(i))
        .collect();
    let attack_population = capped.select(&keep);
    let ranges = ReferenceRanges::from_table(&capped, cfg.attack.feature_bins);

    let mut exclusions = outlier_indices;
    exclusions.extend(test_indices);
    Ok(Workbench {
        population: capped,
        attack_population,
        test,
        outlier_rows,
        ranges,
        exclusions,
    })
}

fn publisher_for(publish: &PublishMethod) -> Box<dyn Publisher> {
    match publish {
        PublishMethod::Nhs(a) => Box::new(SanitizePublisher { cfg: a.clone() }),
        PublishMethod::Synth(g) => Box::new(SynthPublisher { cfg: g.clone() }),
    }
}

struct CellOutput {
    row: ResultRow,
    log: Vec<LogRecord>,
}

struct TrialResult {
    stat_utility: f64,
    ml_accuracy: f64,
    outcome: AttackOutcome,
    published_rows: usize,
}

/// One trial: sample a seed dataset, publish, score both utilities, and run
/// the prediction-vector attack against the published-data victim.
fn run_trial(
    cfg: &ExperimentConfig,
    bench: &Workbench,
    cell: &SweepCell,
    publisher: &dyn Publisher,
    trial_seed: u64,
) -> Result<TrialResult, ExperimentError> {
    let plan = SamplePlan::uniform(seed::derive(trial_seed, "sample"), cfg.sampling.seed_size)
        .excluding(bench.exclusions.iter().copied());
    let (seed_table, seed_indices) = sample(&bench.population, &plan)?;
    assert!(
        seed_indices.iter().all(|i| !bench.exclusions.contains(i)),
        "seed pool must stay disjoint from the test set and outlier records"
    );

    let published = publisher.publish(
        &seed_table,
        cfg.sampling.seed_size,
        seed::derive(trial_seed, "publish"),
    )?;
    let stat = statistical_utility(&seed_table, &published)?;

    if published.is_empty() {
        return Err(MetricsError::EmptyTrainingSet.into());
    }
    let victim_cfg = ForestConfig::default().with_seed(seed::derive(trial_seed, "victim"));
    let victim = fit_forest(&published, &victim_cfg)?;
    let ml = accuracy(&predict(&victim, &bench.test)?)?;

    // members per the game definition: the generator's seed records for
    // synthetic methods, the sanitized records themselves for suppression
    let members = match &cell.publish {
        PublishMethod::Nhs(_) => &published,
        PublishMethod::Synth(_) => &seed_table,
    };
    // the challenge sets must be record-disjoint; capping can make distinct
    // records collide on content, so non-members are drawn from the test rows
    // that do not content-match any member row
    let member_keys: BTreeSet<Vec<u64>> = members.rows().iter().map(|r| row_key(r)).collect();
    let candidates: Vec<usize> = (0..bench.test.len())
        .filter(|&i| !member_keys.contains(&row_key(bench.test.row(i))))
        .collect();
    let non_member_pool = bench.test.select(&candidates);
    let balanced = members.len().min(non_member_pool.len());
    let members = members.select(&(0..balanced).collect::<Vec<_>>());
    let (non_members, _) = sample(
        &non_member_pool,
        &SamplePlan::uniform(seed::derive(trial_seed, "non-members"), balanced),
    )?;
    let outcome = mia_prediction_vector_attack(
        &victim,
        &members,
        &non_members,
        cfg.attack.folds,
        cfg.attack.mia_kind,
    )?;
    Ok(TrialResult {
        stat_utility: stat.aggregate,
        ml_accuracy: ml,
        outcome,
        published_rows: published.len(),
    })
}

fn run_cell(
    cfg: &ExperimentConfig,
    bench: &Workbench,
    cell: &SweepCell,
) -> Result<CellOutput, ExperimentError> {
    let cell_seed = seed::derive(cfg.master_seed, &cell.id());
    let publisher = publisher_for(&cell.publish);
    let mut log = Vec::new();

    let mut stat_values = Vec::with_capacity(cfg.sampling.trials);
    let mut ml_values = Vec::with_capacity(cfg.sampling.trials);
    let mut advantage_values = Vec::with_capacity(cfg.sampling.trials);
    for trial in 0..cfg.sampling.trials {
        let trial_seed = seed::derive_indexed(cell_seed, "trial", trial as u64);
        let result = run_trial(cfg, bench, cell, publisher.as_ref(), trial_seed)?;
        stat_values.push(result.stat_utility);
        ml_values.push(result.ml_accuracy);
        advantage_values.push(result.outcome.advantage);
        log.push(LogRecord::Trial {
            cell: cell.id(),
            trial,
            seed: trial_seed,
            published_rows: result.published_rows,
            stat_utility: result.stat_utility,
            ml_accuracy: result.ml_accuracy,
            tpr: result.outcome.tpr,
            fpr: result.outcome.fpr,
            advantage: result.outcome.advantage,
            precision: result.outcome.precision,
        });
    }

    let mut sdr_outcomes = Vec::new();
    let mut precondition_flag = false;
    if cfg.attack.sdr_enabled && bench.outlier_rows.len() >= 2 {
        for (i, target) in bench.outlier_rows.iter().enumerate() {
            let non_target = &bench.outlier_rows[(i + 1) % bench.outlier_rows.len()];
            // one attacker per configured feature set; the target's strongest
            // attacker (highest advantage) counts toward detection
            let mut best: Option<AttackOutcome> = None;
            for (k, &kind) in cfg.attack.feature_kinds.iter().enumerate() {
                let sdr_seed = seed::derive_indexed(
                    cell_seed,
                    "sdr",
                    (i * cfg.attack.feature_kinds.len() + k) as u64,
                );
                let mut attacker = train_sdr_attacker(
                    &bench.attack_population,
                    target,
                    publisher.as_ref(),
                    kind,
                    &bench.ranges,
                    cfg.attack.sdr_train_shadows,
                    cfg.attack.sdr_shadow_size,
                    seed::derive(sdr_seed, "train"),
                )?;
                let game_cfg = SdrGameConfig {
                    trials: cfg.attack.sdr_eval_trials,
                    shadow_size: cfg.attack.sdr_shadow_size,
                    mode: GameMode::Modified,
                    seed: seed::derive(sdr_seed, "eval"),
                };
                let (outcome, _) = evaluate_sdr_game(
                    &mut attacker,
                    kind,
                    &bench.ranges,
                    &bench.attack_population,
                    target,
                    Some(non_target),
                    publisher.as_ref(),
                    &game_cfg,
                )?;
                log.push(LogRecord::SdrOutlier {
                    cell: cell.id(),
                    outlier: i,
                    mode: format!("modified/{kind:?}"),
                    outcome,
                });
                if best.is_none_or(|b| outcome.advantage > b.advantage) {
                    best = Some(outcome);
                }
            }
            sdr_outcomes.push(best.expect("at least one feature kind"));
        }

        // distribution-identity precondition on the first target's seed pools
        let target = &bench.outlier_rows[0];
        let diag_seed = seed::derive(cell_seed, "diagnostic");
        let mut member_pools = Vec::with_capacity(cfg.attack.diagnostic_pools);
        let mut non_member_pools = Vec::with_capacity(cfg.attack.diagnostic_pools);
        for j in 0..cfg.attack.diagnostic_pools {
            let m_plan = SamplePlan::uniform(
                seed::derive_indexed(diag_seed, "member", j as u64),
                cfg.attack.sdr_shadow_size - 1,
            );
            member_pools.push(
                sample(&bench.attack_population, &m_plan)?
                    .0
                    .with_extra_row(target)?,
            );
            let n_plan = SamplePlan::uniform(
                seed::derive_indexed(diag_seed, "non-member", j as u64),
                cfg.attack.sdr_shadow_size,
            );
            non_member_pools.push(sample(&bench.attack_population, &n_plan)?.0);
        }
        let report = precondition_diagnostic(
            &member_pools,
            &non_member_pools,
            &DiagnosticConfig {
                threshold: cfg.attack.diagnostic_threshold,
            },
        )?;
        precondition_flag = report.flag;
        log.push(LogRecord::Diagnostic {
            cell: cell.id(),
            flag: report.flag,
            per_column: report.per_column,
        });
    }

    let floors = &cfg.attack.precision_floors;
    let floor60 = floors.first().copied().unwrap_or(0.6);
    let floor80 = floors.get(1).copied().unwrap_or(floor60);
    let advantage = mean(&advantage_values);
    let row = ResultRow {
        method: cell.method.clone(),
        parameter: cell.parameter.clone(),
        stat_utility: mean(&stat_values),
        ml_accuracy: mean(&ml_values),
        attacker_advantage: advantage,
        privacy_gain: 1.0 - advantage,
        outlier_count_p60: count_detected_outliers(&sdr_outcomes, floor60),
        outlier_count_p80: count_detected_outliers(&sdr_outcomes, floor80),
        precondition_flag,
        n_runs: cfg.sampling.trials,
        dispersion: std_dev(&stat_values),
        master_seed: cfg.master_seed,
        ml_dispersion: std_dev(&ml_values),
        advantage_dispersion: std_dev(&advantage_values),
    };
    Ok(CellOutput { row, log })
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation; zero below two observations.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    (values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64).sqrt()
}

/// Run the whole configured experiment. One cell's failure is recorded in the
/// error manifest without aborting the others.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ResultsBundle, ExperimentError> {
    cfg.validate()?;
    run_on_bench(cfg, prepare(cfg)?)
}

/// As [`run_experiment`], but over an already-loaded corpus instead of the
/// config's data paths.
pub fn run_experiment_with_table(
    cfg: &ExperimentConfig,
    corpus: Table,
) -> Result<ResultsBundle, ExperimentError> {
    cfg.validate()?;
    run_on_bench(cfg, prepare_with(cfg, corpus)?)
}

fn run_on_bench(
    cfg: &ExperimentConfig,
    bench: Workbench,
) -> Result<ResultsBundle, ExperimentError> {
    let cells = cfg.cells();

    let slots: Vec<Mutex<Option<Result<CellOutput, String>>>> =
        cells.iter().map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let workers = cfg.workers.clamp(1, cells.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= cells.len() {
                    break;
                }
                let out = run_cell(cfg, &bench, &cells[i]).map_err(|e| e.to_string());
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });

    // single-writer merge in deterministic cell order
    let mut rows = Vec::with_capacity(cells.len());
    let mut log = Vec::new();
    let mut errors = Vec::new();
    for (cell, slot) in cells.iter().zip(slots) {
        match slot.into_inner().expect("slot lock").expect("cell ran") {
            Ok(output) => {
                rows.push(output.row);
                log.extend(output.log);
            }
            Err(message) => {
                log.push(LogRecord::CellError {
                    cell: cell.id(),
                    message: message.clone(),
                });
                errors.push((cell.id(), message));
            }
        }
    }
    Ok(ResultsBundle {
        rows,
        log,
        errors,
        master_seed: cfg.master_seed,
    })
}

/// Parse a `results.csv` back into rows (companion dispersions, which the
/// fixed CSV schema does not carry, come back as zero).
pub fn parse_results_csv(text: &str) -> Result<Vec<ResultRow>, ExperimentError> {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        let field = |i: usize| -> Result<&str, ExperimentError> {
            record.get(i).ok_or_else(|| {
                ExperimentError::InvalidConfig(format!("results row too short: {record:?}"))
            })
        };
        let parse_f64 = |i: usize| -> Result<f64, ExperimentError> {
            field(i)?
                .parse()
                .map_err(|_| ExperimentError::InvalidConfig(format!("bad float in column {i}")))
        };
        let parse_usize = |i: usize| -> Result<usize, ExperimentError> {
            field(i)?
                .parse()
                .map_err(|_| ExperimentError::InvalidConfig(format!("bad integer in column {i}")))
        };
        rows.push(ResultRow {
            method: field(0)?.to_string(),
            parameter: field(1)?.to_string(),
            stat_utility: parse_f64(2)?,
            ml_accuracy: parse_f64(3)?,
            attacker_advantage: parse_f64(4)?,
            privacy_gain: parse_f64(5)?,
            outlier_count_p60: parse_usize(6)?,
            outlier_count_p80: parse_usize(7)?,
            precondition_flag: field(8)? == "true",
            n_runs: parse_usize(9)?,
            dispersion: parse_f64(10)?,
            master_seed: field(11)?
                .parse()
                .map_err(|_| ExperimentError::InvalidConfig("bad master seed".into()))?,
            ml_dispersion: 0.0,
            advantage_dispersion: 0.0,
        });
    }
    Ok(rows)
}

/// Which privacy game the `attack` subcommand runs in isolation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AttackGame {
    /// Original evaluation: nothing planted on non-member trials.
    Sdr,
    /// Modified evaluation: the non-target outlier is planted.
    SdrModified,
    /// Prediction-vector cross-validation attack.
    Mia,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackRow {
    pub method: String,
    pub parameter: String,
    /// Catalog index of the target for the outlier games; trial index for MIA.
    pub unit: usize,
    pub outcome: AttackOutcome,
}

/// One challenge-game trial, tagged with its sweep cell, for the audit log.
#[derive(Clone, Debug, Serialize)]
pub struct AttackTranscriptRecord {
    pub method: String,
    pub parameter: String,
    pub target: usize,
    #[serde(flatten)]
    pub transcript: crate::games::GameTranscript,
}

#[derive(Clone, Debug)]
pub struct AttackBundle {
    pub game: String,
    pub rows: Vec<AttackRow>,
    /// Per-trial transcripts for the outlier games; empty for MIA (its unit
    /// of audit is the per-trial outcome row itself).
    pub transcripts: Vec<AttackTranscriptRecord>,
}

impl AttackBundle {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "method,parameter,unit,tpr,fpr,advantage,precision,privacy_gain,n_trials\n",
        );
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.method,
                r.parameter,
                r.unit,
                r.outcome.tpr,
                r.outcome.fpr,
                r.outcome.advantage,
                r.outcome.precision,
                r.outcome.privacy_gain,
                r.outcome.n_trials
            );
        }
        out
    }

    /// One JSON object per game trial.
    pub fn transcripts_jsonl(&self) -> String {
        let mut out = String::new();
        for record in &self.transcripts {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(record).expect("serializes")
            );
        }
        out
    }
}

/// Run only the requested privacy game over the configured sweep.
pub fn run_attacks(
    cfg: &ExperimentConfig,
    game: AttackGame,
) -> Result<AttackBundle, ExperimentError> {
    cfg.validate()?;
    run_attacks_on_bench(cfg, prepare(cfg)?, game)
}

/// As [`run_attacks`], but over an already-loaded corpus.
pub fn run_attacks_with_table(
    cfg: &ExperimentConfig,
    corpus: Table,
    game: AttackGame,
) -> Result<AttackBundle, ExperimentError> {
    cfg.validate()?;
    run_attacks_on_bench(cfg, prepare_with(cfg, corpus)?, game)
}

fn run_attacks_on_bench(
    cfg: &ExperimentConfig,
    bench: Workbench,
    game: AttackGame,
) -> Result<AttackBundle, ExperimentError> {
    let mut rows = Vec::new();
    let mut transcripts = Vec::new();
    for cell in cfg.cells() {
        let cell_seed = seed::derive(cfg.master_seed, &cell.id());
        let publisher = publisher_for(&cell.publish);
        match game {
            AttackGame::Mia => {
                for trial in 0..cfg.sampling.trials {
                    let trial_seed = seed::derive_indexed(cell_seed, "trial", trial as u64);
                    let result = run_trial(cfg, &bench, &cell, publisher.as_ref(), trial_seed)?;
                    rows.push(AttackRow {
                        method: cell.method.clone(),
                        parameter: cell.parameter.clone(),
                        unit: trial,
                        outcome: result.outcome,
                    });
                }
            }
            AttackGame::Sdr | AttackGame::SdrModified => {
                let mode = if game == AttackGame::Sdr {
                    GameMode::Legacy
                } else {
                    GameMode::Modified
                };
                for (i, target) in bench.outlier_rows.iter().enumerate() {
                    let non_target = &bench.outlier_rows[(i + 1) % bench.outlier_rows.len()];
                    for (k, &kind) in cfg.attack.feature_kinds.iter().enumerate() {
                        let sdr_seed = seed::derive_indexed(
                            cell_seed,
                            "sdr",
                            (i * cfg.attack.feature_kinds.len() + k) as u64,
                        );
                        let mut attacker = train_sdr_attacker(
                            &bench.attack_population,
                            target,
                            publisher.as_ref(),
                            kind,
                            &bench.ranges,
                            cfg.attack.sdr_train_shadows,
                            cfg.attack.sdr_shadow_size,
                            seed::derive(sdr_seed, "train"),
                        )?;
                        let game_cfg = SdrGameConfig {
                            trials: cfg.attack.sdr_eval_trials,
                            shadow_size: cfg.attack.sdr_shadow_size,
                            mode,
                            seed: seed::derive(sdr_seed, "eval"),
                        };
                        let (outcome, game_transcripts) = evaluate_sdr_game(
                            &mut attacker,
                            kind,
                            &bench.ranges,
                            &bench.attack_population,
                            target,
                            (mode == GameMode::Modified).then_some(non_target.as_slice()),
                            publisher.as_ref(),
                            &game_cfg,
                        )?;
                        rows.push(AttackRow {
                            method: cell.method.clone(),
                            parameter: cell.parameter.clone(),
                            unit: i,
                            outcome,
                        });
                        transcripts.extend(game_transcripts.into_iter().map(|transcript| {
                            AttackTranscriptRecord {
                                method: cell.method.clone(),
                                parameter: cell.parameter.clone(),
                                target: i,
                                transcript,
                            }
                        }));
                    }
                }
            }
        }
    }
    let game = match game {
        AttackGame::Sdr => "sdr",
        AttackGame::SdrModified => "sdr-modified",
        AttackGame::Mia => "mia",
    };
    Ok(AttackBundle {
        game: game.to_string(),
        rows,
        transcripts,
    })
}
