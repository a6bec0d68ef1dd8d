//! End-to-end runner behavior: cardinality, determinism, transcript
//! cross-checks, partial failure, and the bundled data files.

use std::path::PathBuf;

use anonbench_core::corpus;
use anonbench_core::experiment::{
    parse_results_csv, run_experiment_with_table, ExperimentConfig, LogRecord,
};
use anonbench_core::table::{ingest_csv, to_canonical_csv};

fn desk_paths() -> (PathBuf, PathBuf) {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..");
    (
        root.join("data/desk.csv"),
        root.join("data/desk.schema.toml"),
    )
}

fn small_config(sweeps: &str) -> ExperimentConfig {
    let text = format!(
        r#"
master_seed = 11
workers = 2

[data]
csv = "unused.csv"
schema = "unused.schema.toml"

[sampling]
seed_size = 120
test_size = 200
trials = 2
outliers = 2
cap_quantile = 0.95

[attack]
folds = 4
sdr_train_shadows = 8
sdr_eval_trials = 10
sdr_shadow_size = 60

{sweeps}
"#
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn bundled_data_files_match_the_generator() {
    let (csv_path, schema_path) = desk_paths();
    let on_disk = ingest_csv(&csv_path, &schema_path).expect("bundled corpus ingests");
    let regenerated = corpus::desk_table();
    assert_eq!(on_disk.schema(), regenerated.schema());
    assert_eq!(
        on_disk, regenerated,
        "data/desk.csv drifted from corpus::desk_table()"
    );
    // and the file bytes are exactly the canonical rendering
    let bytes = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(bytes, to_canonical_csv(&regenerated));
}

#[test]
fn single_cell_sweep_yields_single_row() {
    let cfg = small_config("[[sweep]]\nmethod = \"indhist\"\nbins = [4]");
    let bundle = run_experiment_with_table(&cfg, corpus::generate(1200, 5)).unwrap();
    assert!(bundle.errors.is_empty(), "{:?}", bundle.errors);
    assert_eq!(bundle.rows.len(), 1);
    assert_eq!(bundle.rows[0].method, "indhist");
    assert_eq!(bundle.rows[0].parameter, "bin=4");
    let csv = bundle.results_csv();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("method,parameter,stat_utility,"));
}

#[test]
fn same_master_seed_reproduces_outputs_byte_identically() {
    let cfg = small_config(
        "[[sweep]]\nmethod = \"nhs\"\nk = [3]\n\n[[sweep]]\nmethod = \"baynet\"\nbins = [4]",
    );
    let corpus_table = corpus::generate(1200, 5);
    let a = run_experiment_with_table(&cfg, corpus_table.clone()).unwrap();
    let b = run_experiment_with_table(&cfg, corpus_table.clone()).unwrap();
    assert_eq!(a.results_csv(), b.results_csv());
    assert_eq!(a.transcript_jsonl(), b.transcript_jsonl());
    assert_eq!(a.tradeoff_json().unwrap(), b.tradeoff_json().unwrap());

    let mut other_seed = cfg.clone();
    other_seed.master_seed = 12;
    let c = run_experiment_with_table(&other_seed, corpus_table).unwrap();
    assert_ne!(a.results_csv(), c.results_csv());
}

#[test]
fn worker_count_does_not_change_outputs() {
    let mut cfg = small_config(
        "[[sweep]]\nmethod = \"indhist\"\nbins = [3, 6]\n\n[[sweep]]\nmethod = \"nhs\"\nk = [2]",
    );
    let corpus_table = corpus::generate(1200, 5);
    cfg.workers = 1;
    let serial = run_experiment_with_table(&cfg, corpus_table.clone()).unwrap();
    cfg.workers = 4;
    let parallel = run_experiment_with_table(&cfg, corpus_table).unwrap();
    assert_eq!(serial.results_csv(), parallel.results_csv());
    assert_eq!(serial.transcript_jsonl(), parallel.transcript_jsonl());
}

#[test]
fn aggregates_equal_transcript_means() {
    let cfg = small_config("[[sweep]]\nmethod = \"baynet\"\nbins = [5]");
    let bundle = run_experiment_with_table(&cfg, corpus::generate(1200, 5)).unwrap();
    let row = &bundle.rows[0];
    let mut stats = Vec::new();
    let mut mls = Vec::new();
    let mut advantages = Vec::new();
    for record in &bundle.log {
        if let LogRecord::Trial {
            stat_utility,
            ml_accuracy,
            advantage,
            ..
        } = record
        {
            stats.push(*stat_utility);
            mls.push(*ml_accuracy);
            advantages.push(*advantage);
        }
    }
    assert_eq!(stats.len(), row.n_runs);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!((row.stat_utility - mean(&stats)).abs() < 1e-12);
    assert!((row.ml_accuracy - mean(&mls)).abs() < 1e-12);
    assert!((row.attacker_advantage - mean(&advantages)).abs() < 1e-12);
    assert!((row.privacy_gain - (1.0 - row.attacker_advantage)).abs() < 1e-12);
}

#[test]
fn failing_cell_is_quarantined_in_the_error_manifest() {
    // k beyond any class size suppresses everything in that cell only
    let cfg = small_config(
        "[[sweep]]\nmethod = \"nhs\"\nk = [2, 5000]\n\n[[sweep]]\nmethod = \"indhist\"\nbins = [4]",
    );
    let bundle = run_experiment_with_table(&cfg, corpus::generate(1200, 5)).unwrap();
    assert_eq!(bundle.rows.len(), 2, "{:?}", bundle.errors);
    assert_eq!(bundle.errors.len(), 1);
    assert_eq!(bundle.errors[0].0, "nhs/k=5000");
    assert!(bundle
        .log
        .iter()
        .any(|r| matches!(r, LogRecord::CellError { cell, .. } if cell == "nhs/k=5000")));
}

#[test]
fn results_csv_parses_back() {
    let cfg = small_config("[[sweep]]\nmethod = \"indhist\"\nbins = [4]");
    let bundle = run_experiment_with_table(&cfg, corpus::generate(1200, 5)).unwrap();
    let parsed = parse_results_csv(&bundle.results_csv()).unwrap();
    assert_eq!(parsed.len(), bundle.rows.len());
    assert_eq!(parsed[0].method, bundle.rows[0].method);
    assert_eq!(parsed[0].stat_utility, bundle.rows[0].stat_utility);
    assert_eq!(parsed[0].master_seed, bundle.rows[0].master_seed);
}
