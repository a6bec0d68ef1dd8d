//! One interface over every data publishing method the benchmark compares.
//!
//! The privacy games and the runner consume published *tables* only — never
//! generator internals — so differentially private methods keep their
//! robustness to post-processing by construction.

use thiserror::Error;

use crate::anon::{nhs_sanitize, AnonError, AnonymizationConfig};
use crate::seed;
use crate::synth::{fit, sample_synthetic, GeneratorConfig, SynthError};
use crate::table::Table;

#[derive(Debug, Error)]
pub enum PublishError {
    #[error(transparent)]
    Anon(#[from] AnonError),
    #[error(transparent)]
    Synth(#[from] SynthError),
}

/// A data publishing method: turns a seed table into a published table.
pub trait Publisher: Send + Sync {
    /// Publish from `seed_table`. `n_out` is the requested output size for
    /// generative methods; suppression-based methods ignore it and emit what
    /// survives. `seed` drives all randomness for the call.
    fn publish(&self, seed_table: &Table, n_out: usize, seed: u64) -> Result<Table, PublishError>;

    fn label(&self) -> String;
}

/// Fit the configured generator on the seed and sample `n_out` rows.
pub struct SynthPublisher {
    pub cfg: GeneratorConfig,
}

impl Publisher for SynthPublisher {
    fn publish(&self, seed_table: &Table, n_out: usize, seed: u64) -> Result<Table, PublishError> {
        let cfg = self.cfg.clone().with_seed(seed::derive(seed, "fit"));
        let model = fit(seed_table, &cfg)?;
        Ok(sample_synthetic(
            &model,
            n_out,
            seed::derive(seed, "sample"),
        ))
    }

    fn label(&self) -> String {
        format!("{:?}", self.cfg.method).to_lowercase()
    }
}

/// NHS-style suppression. Full suppression publishes an empty table rather
/// than failing: downstream consumers treat emptiness as the signal it is.
pub struct SanitizePublisher {
    pub cfg: AnonymizationConfig,
}

impl Publisher for SanitizePublisher {
    fn publish(
        &self,
        seed_table: &Table,
        _n_out: usize,
        _seed: u64,
    ) -> Result<Table, PublishError> {
        match nhs_sanitize(seed_table, &self.cfg) {
            Ok((t, _)) => Ok(t),
            Err(AnonError::EmptyResult(_)) => Ok(Table::empty(seed_table.schema_arc())),
            Err(e) => Err(e.into()),
        }
    }

    fn label(&self) -> String {
        "nhs".to_string()
    }
}

/// Publishes the seed table unchanged. Maximum utility, zero protection; the
/// upper calibration anchor for attack tests.
pub struct IdentityPublisher;

impl Publisher for IdentityPublisher {
    fn publish(
        &self,
        seed_table: &Table,
        _n_out: usize,
        _seed: u64,
    ) -> Result<Table, PublishError> {
        Ok(seed_table.clone())
    }

    fn label(&self) -> String {
        "identity".to_string()
    }
}

/// Publishes a fixed table regardless of the seed. Carries no membership
/// signal at all; the lower calibration anchor.
pub struct FixedPublisher {
    pub table: Table,
}

impl Publisher for FixedPublisher {
    fn publish(
        &self,
        _seed_table: &Table,
        _n_out: usize,
        _seed: u64,
    ) -> Result<Table, PublishError> {
        Ok(self.table.clone())
    }

    fn label(&self) -> String {
        "fixed".to_string()
    }
}
