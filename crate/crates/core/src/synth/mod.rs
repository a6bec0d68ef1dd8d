//! Statistical synthetic-data generators behind one model type: independent
//! histograms, Bayesian networks fitted by greedy mutual-information search,
//! and a differentially private variant that buys its structure through the
//! exponential mechanism and its conditional tables through Laplace-noised
//! counts.

pub mod dp;

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::table::{Cell, ColumnKind, Record, Schema, Table, TableError};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("empty input table")]
    EmptyTable,
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Table(#[from] TableError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthMethod {
    IndHist,
    BayNet,
    PrivBayes,
}

/// Parameters for one generator instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub method: SynthMethod,
    /// Discretization granularity for numeric columns.
    pub bins: usize,
    /// Total privacy budget; meaningful for PrivBayes only.
    pub epsilon: f64,
    pub max_parents: usize,
    pub seed: u64,
}

impl GeneratorConfig {
    pub fn ind_hist(bins: usize) -> GeneratorConfig {
        GeneratorConfig {
            method: SynthMethod::IndHist,
            bins,
            epsilon: 0.0,
            max_parents: 1,
            seed: 0,
        }
    }

    pub fn baynet(bins: usize) -> GeneratorConfig {
        GeneratorConfig {
            method: SynthMethod::BayNet,
            bins,
            epsilon: 0.0,
            max_parents: 2,
            seed: 0,
        }
    }

    pub fn privbayes(bins: usize, epsilon: f64) -> GeneratorConfig {
        GeneratorConfig {
            method: SynthMethod::PrivBayes,
            bins,
            epsilon,
            max_parents: 2,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> GeneratorConfig {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.bins < 2 {
            return Err(SynthError::InvalidConfig(format!(
                "bins must be >= 2, got {}",
                self.bins
            )));
        }
        if self.max_parents < 1 {
            return Err(SynthError::InvalidConfig("max_parents must be >= 1".into()));
        }
        if self.method == SynthMethod::PrivBayes && self.epsilon <= 0.0 {
            return Err(SynthError::InvalidConfig(format!(
                "PrivBayes needs epsilon > 0, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }

    /// Parameter rendering used in sweep labels and result rows.
    pub fn parameter_label(&self) -> String {
        match self.method {
            SynthMethod::PrivBayes => format!("eps={}", self.epsilon),
            _ => format!("bin={}", self.bins),
        }
    }
}

/// A table re-expressed over finite per-column code domains: numeric columns
/// are equal-width binned over their own [min, max], categoricals pass
/// through as category indices.
#[derive(Clone, Debug)]
pub struct DiscretizedTable {
    pub codes: Vec<Vec<usize>>,
    pub domains: Vec<usize>,
    /// Bin edges per column (`bins + 1` points for numeric, empty for
    /// categorical); kept for inverse sampling.
    pub edges: Vec<Vec<f64>>,
    /// Numeric columns with min == max: a single bin, flagged but usable.
    pub degenerate: Vec<usize>,
}

pub fn discretize(t: &Table, bins: usize) -> Result<DiscretizedTable, SynthError> {
    assert!(bins >= 2, "bins must be >= 2");
    if t.is_empty() {
        return Err(SynthError::EmptyTable);
    }
    let m = t.schema().arity();
    let mut domains = vec![0usize; m];
    let mut edges = vec![Vec::new(); m];
    let mut degenerate = Vec::new();
    let mut codes = vec![vec![0usize; m]; t.len()];

    for c in 0..m {
        match t.schema().columns()[c].kind {
            ColumnKind::Categorical => {
                domains[c] = t.schema().columns()[c].categories.len();
                for (r, row) in t.rows().iter().enumerate() {
                    codes[r][c] = row[c].as_cat();
                }
            }
            ColumnKind::Numeric => {
                let values = t.numeric_column(c);
                let min = values.iter().copied().fold(f64::INFINITY, f64::min);
                let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if min == max {
                    degenerate.push(c);
                    domains[c] = 1;
                    edges[c] = vec![min, max];
                    continue;
                }
                let width = (max - min) / bins as f64;
                let mut e: Vec<f64> = (0..=bins).map(|i| min + i as f64 * width).collect();
                e[bins] = max;
                edges[c] = e;
                domains[c] = bins;
                for (r, v) in values.iter().enumerate() {
                    codes[r][c] = (((v - min) / width) as usize).min(bins - 1);
                }
            }
        }
    }
    Ok(DiscretizedTable {
        codes,
        domains,
        edges,
        degenerate,
    })
}

/// Empirical mutual information `I(a; b)` in nats, `b` taken jointly.
/// Tiny negative totals from float cancellation clamp to zero.
pub fn mutual_information(d: &DiscretizedTable, a: usize, b: &[usize]) -> Result<f64, SynthError> {
    assert!(
        !b.is_empty() && !b.contains(&a),
        "b must be non-empty and exclude a"
    );
    if d.codes.is_empty() {
        return Err(SynthError::EmptyTable);
    }
    let n = d.codes.len() as f64;
    let mut joint: BTreeMap<(usize, Vec<usize>), f64> = BTreeMap::new();
    let mut marg_a: BTreeMap<usize, f64> = BTreeMap::new();
    let mut marg_b: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for row in &d.codes {
        let bv: Vec<usize> = b.iter().map(|&c| row[c]).collect();
        *joint.entry((row[a], bv.clone())).or_default() += 1.0;
        *marg_a.entry(row[a]).or_default() += 1.0;
        *marg_b.entry(bv).or_default() += 1.0;
    }
    let mut info = 0.0;
    for ((va, vb), count) in &joint {
        let p_xy = count / n;
        let p_x = marg_a[va] / n;
        let p_y = marg_b[vb] / n;
        info += p_xy * (p_xy / (p_x * p_y)).ln();
    }
    if info < 0.0 {
        debug_assert!(
            info > -1e-12,
            "mutual information below numeric floor: {info}"
        );
        info = 0.0;
    }
    Ok(info)
}

/// Empirical entropy of one column, in nats.
pub fn entropy(d: &DiscretizedTable, a: usize) -> f64 {
    let n = d.codes.len() as f64;
    let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
    for row in &d.codes {
        *counts.entry(row[a]).or_default() += 1.0;
    }
    -counts.values().map(|c| (c / n) * (c / n).ln()).sum::<f64>()
}

/// Conditional distribution of one node given each combination of its
/// parents' codes (mixed-radix row-major combination index).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub parent_domains: Vec<usize>,
    /// `dist[parent_combo][value]`, each row summing to 1.
    pub dist: Vec<Vec<f64>>,
}

/// A fitted generator. Parents always precede their children in `order`, so
/// the graph is acyclic by construction and ancestral sampling is a single
/// forward pass.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesNetModel {
    pub schema: Arc<Schema>,
    /// Column indices in sampling order.
    pub order: Vec<usize>,
    /// Parent column indices per position in `order`.
    pub parents: Vec<Vec<usize>>,
    /// Conditional tables per position in `order`.
    pub tables: Vec<ConditionalTable>,
    /// Code-domain size per column index.
    pub domains: Vec<usize>,
    /// Bin edges per column index (empty for categorical columns).
    pub edges: Vec<Vec<f64>>,
}

impl BayesNetModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<BayesNetModel, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Sequential-composition ledger for one PrivBayes fit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DpAccount {
    pub epsilon_total: f64,
    pub epsilon_structure: f64,
    pub epsilon_parameters: f64,
}

/// PrivBayes fit output: the model, its budget ledger, and whether the noise
/// drowned every count (all clamped to zero), leaving effectively uniform
/// tables.
#[derive(Clone, Debug)]
pub struct PrivBayesFit {
    pub model: BayesNetModel,
    pub account: DpAccount,
    pub budget_exhausted: bool,
}

fn combo_index(codes: &[usize], parents: &[usize], domains: &[usize]) -> usize {
    let mut idx = 0;
    for &p in parents {
        idx = idx * domains[p] + codes[p];
    }
    idx
}

fn raw_counts(d: &DiscretizedTable, node: usize, parents: &[usize]) -> Vec<Vec<f64>> {
    let combos: usize = parents.iter().map(|&p| d.domains[p]).product();
    let mut counts = vec![vec![0.0f64; d.domains[node]]; combos];
    for row in &d.codes {
        counts[combo_index(row, parents, &d.domains)][row[node]] += 1.0;
    }
    counts
}

fn normalize_with_smoothing(counts: &mut [Vec<f64>]) {
    for row in counts.iter_mut() {
        let total: f64 = row.iter().sum::<f64>() + row.len() as f64;
        for v in row.iter_mut() {
            *v = (*v + 1.0) / total;
        }
    }
}

/// One structure-search candidate: attach `node` under `parents`.
struct Candidate {
    node: usize,
    parents: Vec<usize>,
}

/// All (node, parent-set) candidates for the next placement, in a stable
/// order: node ascending, then parent-set size ascending, then lexicographic.
fn candidates(placed: &[usize], unplaced: &[usize], max_parents: usize) -> Vec<Candidate> {
    let mut sorted_placed = placed.to_vec();
    sorted_placed.sort_unstable();
    let mut out = Vec::new();
    for &node in unplaced {
        for size in 1..=max_parents.min(sorted_placed.len()) {
            let mut subset = vec![0usize; size];
            emit_combinations(&sorted_placed, size, 0, &mut subset, 0, &mut |combo| {
                out.push(Candidate {
                    node,
                    parents: combo.to_vec(),
                });
            });
        }
    }
    out
}

fn emit_combinations(
    pool: &[usize],
    size: usize,
    start: usize,
    scratch: &mut Vec<usize>,
    depth: usize,
    emit: &mut impl FnMut(&[usize]),
) {
    if depth == size {
        emit(scratch);
        return;
    }
    for i in start..=pool.len() - (size - depth) {
        scratch[depth] = pool[i];
        emit_combinations(pool, size, i + 1, scratch, depth + 1, emit);
    }
}

/// First node: maximal entropy, ties to the lowest column index.
fn first_node(d: &DiscretizedTable, m: usize) -> usize {
    let mut best = 0;
    let mut best_h = f64::NEG_INFINITY;
    for c in 0..m {
        let h = entropy(d, c);
        if h > best_h {
            best_h = h;
            best = c;
        }
    }
    best
}

/// Greedy structure: each step attaches the (node, parent-set) pair with the
/// highest mutual information. Ties keep the earliest candidate, i.e. the
/// lowest column index.
fn greedy_structure(
    d: &DiscretizedTable,
    m: usize,
    max_parents: usize,
) -> Result<(Vec<usize>, Vec<Vec<usize>>), SynthError> {
    let mut order = vec![first_node(d, m)];
    let mut parents: Vec<Vec<usize>> = vec![vec![]];
    while order.len() < m {
        let unplaced: Vec<usize> = (0..m).filter(|c| !order.contains(c)).collect();
        let cands = candidates(&order, &unplaced, max_parents);
        let mut best = 0;
        let mut best_score = f64::NEG_INFINITY;
        for (i, cand) in cands.iter().enumerate() {
            let score = mutual_information(d, cand.node, &cand.parents)?;
            if score > best_score {
                best_score = score;
                best = i;
            }
        }
        order.push(cands[best].node);
        parents.push(cands[best].parents.clone());
    }
    Ok((order, parents))
}

/// Fit a non-private Bayesian network: greedy mutual-information structure,
/// empirical conditional tables with add-one smoothing.
pub fn fit_baynet(t: &Table, cfg: &GeneratorConfig) -> Result<BayesNetModel, SynthError> {
    cfg.validate()?;
    let d = discretize(t, cfg.bins)?;
    let m = t.schema().arity();
    let (order, parents) = greedy_structure(&d, m, cfg.max_parents)?;
    let tables = order
        .iter()
        .zip(&parents)
        .map(|(&node, ps)| {
            let mut counts = raw_counts(&d, node, ps);
            normalize_with_smoothing(&mut counts);
            ConditionalTable {
                parent_domains: ps.iter().map(|&p| d.domains[p]).collect(),
                dist: counts,
            }
        })
        .collect();
    Ok(BayesNetModel {
        schema: t.schema_arc(),
        order,
        parents,
        tables,
        domains: d.domains,
        edges: d.edges,
    })
}

/// Fit independent per-column histograms: the same discretization, no
/// structure, raw empirical marginals.
pub fn fit_indhist(t: &Table, cfg: &GeneratorConfig) -> Result<BayesNetModel, SynthError> {
    cfg.validate()?;
    let d = discretize(t, cfg.bins)?;
    let m = t.schema().arity();
    let n = d.codes.len() as f64;
    let tables = (0..m)
        .map(|c| {
            let counts = raw_counts(&d, c, &[]);
            ConditionalTable {
                parent_domains: vec![],
                dist: counts
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| v / n).collect())
                    .collect(),
            }
        })
        .collect();
    Ok(BayesNetModel {
        schema: t.schema_arc(),
        order: (0..m).collect(),
        parents: vec![vec![]; m],
        tables,
        domains: d.domains,
        edges: d.edges,
    })
}

/// Fit PrivBayes: the greedy placement choices go through the exponential
/// mechanism (score = mutual information, structure budget split equally over
/// the m−1 choices), and conditional tables are built from Laplace-noised
/// counts (negatives clamped, add-one smoothing, normalized).
pub fn fit_privbayes(t: &Table, cfg: &GeneratorConfig) -> Result<PrivBayesFit, SynthError> {
    cfg.validate()?;
    if cfg.method != SynthMethod::PrivBayes {
        return Err(SynthError::InvalidConfig("method must be PrivBayes".into()));
    }
    let d = discretize(t, cfg.bins)?;
    let m = t.schema().arity();
    let epsilon_structure = cfg.epsilon / 2.0;
    let epsilon_parameters = cfg.epsilon - epsilon_structure;
    let mut rng = seed::rng(seed::derive(cfg.seed, "privbayes"));

    let mut order = vec![first_node(&d, m)];
    let mut parents: Vec<Vec<usize>> = vec![vec![]];
    if m > 1 {
        let eps_step = epsilon_structure / (m - 1) as f64;
        let sensitivity = dp::mi_sensitivity(t.len());
        while order.len() < m {
            let unplaced: Vec<usize> = (0..m).filter(|c| !order.contains(c)).collect();
            let cands = candidates(&order, &unplaced, cfg.max_parents);
            let scores = cands
                .iter()
                .map(|cand| mutual_information(&d, cand.node, &cand.parents))
                .collect::<Result<Vec<f64>, _>>()?;
            let pick = dp::exponential_mechanism(&mut rng, &scores, eps_step, sensitivity);
            order.push(cands[pick].node);
            parents.push(cands[pick].parents.clone());
        }
    }

    // One record touches one cell per node table; the scale spreads the
    // parameter budget across the tables.
    let count_sensitivity = 1.0;
    let scale = 2.0 * (m - 1).max(1) as f64 * count_sensitivity / epsilon_parameters;
    let mut any_signal = false;
    let tables: Vec<ConditionalTable> = order
        .iter()
        .zip(&parents)
        .map(|(&node, ps)| {
            let mut counts = raw_counts(&d, node, ps);
            for row in counts.iter_mut() {
                for v in row.iter_mut() {
                    *v = (*v + dp::laplace(&mut rng, scale)).max(0.0);
                    if *v > 0.0 {
                        any_signal = true;
                    }
                }
            }
            normalize_with_smoothing(&mut counts);
            ConditionalTable {
                parent_domains: ps.iter().map(|&p| d.domains[p]).collect(),
                dist: counts,
            }
        })
        .collect();

    Ok(PrivBayesFit {
        model: BayesNetModel {
            schema: t.schema_arc(),
            order,
            parents,
            tables,
            domains: d.domains,
            edges: d.edges,
        },
        account: DpAccount {
            epsilon_total: cfg.epsilon,
            epsilon_structure,
            epsilon_parameters,
        },
        budget_exhausted: !any_signal,
    })
}

/// Dispatch on the configured method; used by publishers that only need
/// "fit something samplable".
pub fn fit(t: &Table, cfg: &GeneratorConfig) -> Result<BayesNetModel, SynthError> {
    match cfg.method {
        SynthMethod::IndHist => fit_indhist(t, cfg),
        SynthMethod::BayNet => fit_baynet(t, cfg),
        SynthMethod::PrivBayes => Ok(fit_privbayes(t, cfg)?.model),
    }
}

/// Ancestral sampling: draw each node in order conditioned on its sampled
/// parents; numeric codes are inverse-mapped to a uniform draw within the
/// bin's edges.
pub fn sample_synthetic(model: &BayesNetModel, n_out: usize, seed: u64) -> Table {
    let mut rng = seed::rng(seed);
    let m = model.schema.arity();
    let mut rows: Vec<Record> = Vec::with_capacity(n_out);
    let mut codes = vec![0usize; m];
    for _ in 0..n_out {
        for (pos, &node) in model.order.iter().enumerate() {
            let combo = combo_index(&codes, &model.parents[pos], &model.domains);
            codes[node] = sample_discrete(&mut rng, &model.tables[pos].dist[combo]);
        }
        let row: Record = (0..m)
            .map(|c| match model.schema.columns()[c].kind {
                ColumnKind::Categorical => Cell::Cat(codes[c]),
                ColumnKind::Numeric => {
                    let lo = model.edges[c][codes[c]];
                    let hi = model.edges[c][codes[c] + 1];
                    Cell::Num(lo + rng.random::<f64>() * (hi - lo))
                }
            })
            .collect();
        rows.push(row);
    }
    Table::new(Arc::clone(&model.schema), rows).expect("sampled rows conform to schema")
}

fn sample_discrete<R: Rng>(rng: &mut R, dist: &[f64]) -> usize {
    let total: f64 = dist.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in dist.iter().enumerate() {
        if u < *p {
            return i;
        }
        u -= p;
    }
    dist.len() - 1
}

#[cfg(test)]
mod tests;
