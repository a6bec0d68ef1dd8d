//! Experiment configuration: a TOML file with the dataset paths, sampling
//! plan, attack settings, and the method sweeps. Field-by-field schema in the
//! repository README.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::anon::AnonymizationConfig;
use crate::games::mia::MiaAttackKind;
use crate::games::FeatureSetKind;
use crate::synth::GeneratorConfig;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub data: DataConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub attack: AttackConfig,
    #[serde(rename = "sweep")]
    pub sweeps: Vec<SweepConfig>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DataConfig {
    pub csv: PathBuf,
    pub schema: PathBuf,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SamplingConfig {
    /// 0 means the whole corpus.
    pub population_size: usize,
    /// Rows per seed dataset handed to each publisher.
    pub seed_size: usize,
    /// Rows in the held-out real test set.
    pub test_size: usize,
    /// Dataset samples (runs) per sweep cell.
    pub trials: usize,
    /// Outlier catalog size for the targeted game.
    pub outliers: usize,
    pub cap_quantile: f64,
}

impl Default for SamplingConfig {
    fn default() -> SamplingConfig {
        SamplingConfig {
            population_size: 0,
            seed_size: 1000,
            test_size: 1000,
            trials: 5,
            outliers: 5,
            cap_quantile: 0.95,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    /// Feature sets the outlier-game attacker is trained with; each target's
    /// strongest attacker counts toward detection.
    pub feature_kinds: Vec<FeatureSetKind>,
    pub mia_kind: MiaAttackKind,
    /// Cross-validation folds for the prediction-vector attack.
    pub folds: usize,
    pub precision_floors: Vec<f64>,
    /// Run the per-outlier shadow-dataset game (dominates runtime).
    pub sdr_enabled: bool,
    /// Member/non-member shadow dataset pairs per attacker.
    pub sdr_train_shadows: usize,
    pub sdr_eval_trials: usize,
    /// Rows per shadow/challenge dataset.
    pub sdr_shadow_size: usize,
    /// Histogram bins per numeric column for attacker features.
    pub feature_bins: usize,
    pub diagnostic_threshold: f64,
    /// Seed pools per side for the precondition diagnostic.
    pub diagnostic_pools: usize,
}

impl Default for AttackConfig {
    fn default() -> AttackConfig {
        AttackConfig {
            feature_kinds: vec![FeatureSetKind::Histograms],
            mia_kind: MiaAttackKind::Threshold,
            folds: 5,
            precision_floors: vec![0.6, 0.8],
            sdr_enabled: true,
            sdr_train_shadows: 50,
            sdr_eval_trials: 100,
            sdr_shadow_size: 200,
            feature_bins: 10,
            diagnostic_threshold: 0.2,
            diagnostic_pools: 10,
        }
    }
}

fn default_workers() -> usize {
    1
}

/// One sweep entry: a method family and its parameter list(s).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepConfig {
    pub method: MethodName,
    #[serde(default)]
    pub k: Vec<usize>,
    #[serde(default)]
    pub bins: Vec<usize>,
    #[serde(default)]
    pub epsilon: Vec<f64>,
    #[serde(default = "default_max_parents")]
    pub max_parents: usize,
    /// Rare-category threshold for `nhs`; defaults to each swept `k`.
    pub rare_category_min_count: Option<usize>,
}

fn default_max_parents() -> usize {
    2
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Nhs,
    IndHist,
    BayNet,
    PrivBayes,
}

/// A publishing method instance: one sweep cell's worth of configuration.
#[derive(Clone, Debug)]
pub enum PublishMethod {
    Nhs(AnonymizationConfig),
    Synth(GeneratorConfig),
}

/// One (method, parameter) cell of the sweep grid.
#[derive(Clone, Debug)]
pub struct SweepCell {
    pub method: String,
    pub parameter: String,
    pub publish: PublishMethod,
}

impl SweepCell {
    pub fn id(&self) -> String {
        format!("{}/{}", self.method, self.parameter)
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load from a file; relative data paths resolve against the config
    /// file's directory.
    pub fn from_path(path: &Path) -> Result<ExperimentConfig, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        if let Some(dir) = path.parent() {
            for p in [&mut cfg.data.csv, &mut cfg.data.schema] {
                if p.is_relative() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        if self.sweeps.is_empty() {
            return Err(ExperimentError::InvalidConfig("no sweep entries".into()));
        }
        if self.sampling.trials == 0 || self.sampling.seed_size == 0 || self.sampling.test_size == 0
        {
            return Err(ExperimentError::InvalidConfig(
                "trials, seed_size, and test_size must be positive".into(),
            ));
        }
        if self.attack.folds < 2 {
            return Err(ExperimentError::InvalidConfig("folds must be >= 2".into()));
        }
        if self.attack.feature_kinds.is_empty() {
            return Err(ExperimentError::InvalidConfig(
                "feature_kinds must be non-empty".into(),
            ));
        }
        if self
            .attack
            .precision_floors
            .iter()
            .any(|&f| f <= 0.5 || f > 1.0)
        {
            return Err(ExperimentError::InvalidConfig(
                "precision floors must lie in (0.5, 1]".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.sampling.cap_quantile) || self.sampling.cap_quantile == 0.0 {
            return Err(ExperimentError::InvalidConfig(
                "cap_quantile must lie in (0, 1]".into(),
            ));
        }
        for sweep in &self.sweeps {
            let empty = match sweep.method {
                MethodName::Nhs => sweep.k.is_empty(),
                MethodName::PrivBayes => sweep.bins.is_empty() || sweep.epsilon.is_empty(),
                MethodName::IndHist | MethodName::BayNet => sweep.bins.is_empty(),
            };
            if empty {
                return Err(ExperimentError::InvalidConfig(format!(
                    "sweep entry for {:?} has an empty parameter list",
                    sweep.method
                )));
            }
        }
        Ok(())
    }

    /// Expand the sweep entries into the cell grid, in config order.
    pub fn cells(&self) -> Vec<SweepCell> {
        let mut cells = Vec::new();
        for sweep in &self.sweeps {
            match sweep.method {
                MethodName::Nhs => {
                    for &k in &sweep.k {
                        let cfg = AnonymizationConfig {
                            k,
                            cap_quantile: self.sampling.cap_quantile,
                            rare_category_min_count: sweep.rare_category_min_count.unwrap_or(k),
                        };
                        cells.push(SweepCell {
                            method: "nhs".into(),
                            parameter: format!("k={k}"),
                            publish: PublishMethod::Nhs(cfg),
                        });
                    }
                }
                MethodName::IndHist | MethodName::BayNet => {
                    let (method, make): (&str, fn(usize) -> GeneratorConfig) =
                        if sweep.method == MethodName::IndHist {
                            ("indhist", GeneratorConfig::ind_hist)
                        } else {
                            ("baynet", GeneratorConfig::baynet)
                        };
                    for &bins in &sweep.bins {
                        let mut cfg = make(bins);
                        cfg.max_parents = sweep.max_parents;
                        cells.push(SweepCell {
                            method: method.into(),
                            parameter: format!("bin={bins}"),
                            publish: PublishMethod::Synth(cfg),
                        });
                    }
                }
                MethodName::PrivBayes => {
                    for &bins in &sweep.bins {
                        for &epsilon in &sweep.epsilon {
                            let mut cfg = GeneratorConfig::privbayes(bins, epsilon);
                            cfg.max_parents = sweep.max_parents;
                            let parameter = if sweep.bins.len() > 1 {
                                format!("bin={bins},eps={epsilon}")
                            } else {
                                format!("eps={epsilon}")
                            };
                            cells.push(SweepCell {
                                method: "privbayes".into(),
                                parameter,
                                publish: PublishMethod::Synth(cfg),
                            });
                        }
                    }
                }
            }
        }
        cells
    }
}
