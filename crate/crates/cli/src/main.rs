//! Command-line front end: run configured experiments, re-emit trade-off
//! plot data from a results table, verify k-anonymity of a CSV, run a single
//! privacy game, or materialize the bundled desk corpus.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use anonbench_core::anon::verify_k_anonymity;
use anonbench_core::corpus;
use anonbench_core::experiment::{
    emit_tradeoff, parse_results_csv, points_from_rows, run_attacks, run_experiment, AttackGame,
    ExperimentConfig,
};
use anonbench_core::table::{ingest_csv, write_csv, write_schema};

#[derive(Parser)]
#[command(
    name = "anonbench",
    version,
    about = "Privacy-utility benchmark for tabular data publishing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full experiment described by a config file.
    Run {
        config: PathBuf,
        /// Override the config's master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config's worker count.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Rebuild trade-off plot data from an existing results.csv.
    Tradeoff {
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check whether a CSV satisfies k-anonymity over its QID columns.
    VerifyKanon {
        csv: PathBuf,
        schema: PathBuf,
        #[arg(short, long)]
        k: usize,
    },
    /// Run one privacy game over the configured sweep.
    Attack {
        config: PathBuf,
        #[arg(long, value_enum)]
        game: Game,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Write the bundled desk corpus (CSV + schema sidecar).
    GenCorpus {
        #[arg(long, default_value_t = corpus::DESK_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = corpus::DESK_SEED)]
        seed: u64,
        #[arg(long, default_value = "data")]
        out_dir: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Game {
    Sdr,
    SdrModified,
    Mia,
}

fn load_config(path: &Path, seed: Option<u64>, workers: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_path(path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.master_seed = seed;
    }
    if let Some(workers) = workers {
        cfg.workers = workers.max(1);
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Run {
            config,
            seed,
            workers,
            out_dir,
        } => {
            let cfg = load_config(&config, seed, workers)?;
            let bundle = run_experiment(&cfg)?;
            bundle.write_to_dir(&out_dir)?;
            println!(
                "wrote {} result rows to {} (master seed {})",
                bundle.rows.len(),
                out_dir.display(),
                bundle.master_seed
            );
            for (cell, message) in &bundle.errors {
                eprintln!("cell {cell} failed: {message}");
            }
            if !bundle.errors.is_empty() {
                eprintln!("{} cell(s) failed; see errors.txt", bundle.errors.len());
            }
            Ok(())
        }
        Command::Tradeoff { results, out } => {
            let text = std::fs::read_to_string(&results)
                .with_context(|| format!("reading {}", results.display()))?;
            let rows = parse_results_csv(&text)?;
            let points = points_from_rows(&rows);
            emit_tradeoff(&points, &out)?;
            println!(
                "wrote trade-off data for {} points to {}",
                points.len(),
                out.display()
            );
            Ok(())
        }
        Command::VerifyKanon { csv, schema, k } => {
            let table = ingest_csv(&csv, &schema)?;
            let check = verify_k_anonymity(&table, k)?;
            if check.satisfied {
                println!(
                    "{}: satisfies {k}-anonymity ({} rows)",
                    csv.display(),
                    table.len()
                );
                Ok(())
            } else {
                println!(
                    "{}: violates {k}-anonymity with {} undersized class(es)",
                    csv.display(),
                    check.violations.len()
                );
                for v in check.violations.iter().take(20) {
                    println!("  [{}] size {}", v.signature.join(", "), v.size);
                }
                if check.violations.len() > 20 {
                    println!("  ... and {} more", check.violations.len() - 20);
                }
                bail!("k-anonymity check failed");
            }
        }
        Command::Attack {
            config,
            game,
            seed,
            workers,
            out_dir,
        } => {
            let cfg = load_config(&config, seed, workers)?;
            let game = match game {
                Game::Sdr => AttackGame::Sdr,
                Game::SdrModified => AttackGame::SdrModified,
                Game::Mia => AttackGame::Mia,
            };
            let bundle = run_attacks(&cfg, game)?;
            std::fs::create_dir_all(&out_dir)?;
            let path = out_dir.join(format!("attack-{}.csv", bundle.game));
            std::fs::write(&path, bundle.to_csv())?;
            if !bundle.transcripts.is_empty() {
                let log_path = out_dir.join(format!("attack-{}-transcripts.jsonl", bundle.game));
                std::fs::write(&log_path, bundle.transcripts_jsonl())?;
            }
            println!(
                "wrote {} attack rows to {}",
                bundle.rows.len(),
                path.display()
            );
            Ok(())
        }
        Command::GenCorpus {
            rows,
            seed,
            out_dir,
        } => {
            let table = corpus::generate(rows, seed);
            std::fs::create_dir_all(&out_dir)?;
            let csv_path = out_dir.join("desk.csv");
            let schema_path = out_dir.join("desk.schema.toml");
            write_csv(&table, &csv_path)?;
            write_schema(table.schema(), &schema_path)?;
            println!(
                "wrote {} rows to {} and schema to {}",
                table.len(),
                csv_path.display(),
                schema_path.display()
            );
            Ok(())
        }
    }
}
