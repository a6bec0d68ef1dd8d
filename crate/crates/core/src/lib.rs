//! Benchmark harness for the privacy-utility trade-off of tabular data
//! publishing techniques.
//!
//! The crate compares suppression-based *k*-anonymization against statistical
//! synthetic-data generators (independent histograms, Bayesian networks, and
//! differentially private Bayesian networks) on a common footing:
//!
//! * **Utility** — per-column Kolmogorov-Smirnov / total-variation-distance
//!   complements plus train-on-published/test-on-real classification accuracy
//!   ([`metrics`]).
//! * **Privacy** — two membership-inference harnesses: an outlier-targeted
//!   shadow-dataset game with a non-member-outlier evaluation mode, and a
//!   prediction-vector cross-validation attack against the downstream
//!   classifier ([`games`]).
//!
//! [`experiment`] orchestrates parameter sweeps over both families and emits
//! a results table plus trade-off plot data; [`corpus`] provides the bundled
//! desk-scale dataset the integration suite runs against.

pub mod anon;
pub mod corpus;
pub mod experiment;
pub mod forest;
pub mod games;
pub mod metrics;
pub mod publish;
pub mod seed;
pub mod synth;
pub mod table;
