//! Typed tabular data model: schemas with column roles, immutable tables,
//! seeded sampling, quantiles, percentile capping, and outlier scoring.

mod io;

pub use io::{ingest_csv, read_schema, to_canonical_csv, write_csv, write_schema};

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;

/// Errors raised by the tabular substrate.
#[derive(Debug, Error)]
pub enum TableError {
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("schema must have exactly one target column, found {0}")]
    TargetCount(usize),
    #[error("column `{0}` cannot be a target: classification targets must be categorical")]
    NumericTarget(String),
    #[error("column `{0}` cannot be outlier-scored: scores are defined on numeric columns")]
    CategoricalOutlierScored(String),
    #[error("invalid category list for column `{0}`")]
    BadCategories(String),
    #[error("row {row}: expected {expected} cells, found {found}")]
    ArityMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("column `{column}`: unknown category `{value}`")]
    UnknownCategory { column: String, value: String },
    #[error("column `{column}`: malformed numeric value `{value}`")]
    MalformedNumeric { column: String, value: String },
    #[error("header mismatch: expected column `{expected}`, found `{found}`")]
    MissingColumn { expected: String, found: String },
    #[error("cell does not match column kind of `{0}`")]
    KindMismatch(String),
    #[error("empty input")]
    EmptyInput,
    #[error("requested {requested} rows but only {available} are available")]
    InsufficientRows { requested: usize, available: usize },
    #[error("invalid sample plan: {0}")]
    InvalidPlan(String),
    #[error("no column carries the outlier-scored role")]
    NoScoredColumns,
    #[error("column `{0}` is degenerate (zero spread)")]
    DegenerateColumn(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("schema file: {0}")]
    SchemaFile(String),
}

/// Column payload kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

/// Roles a column can play in the benchmark pipelines.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSet {
    #[serde(default, skip_serializing_if = "is_false")]
    pub qid: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub target: bool,
    #[serde(default, skip_serializing_if = "is_false")]
    pub outlier_scored: bool,
}

fn is_false(b: &bool) -> bool {
    !b
}

impl RoleSet {
    pub const NONE: RoleSet = RoleSet {
        qid: false,
        target: false,
        outlier_scored: false,
    };
    pub const QID: RoleSet = RoleSet {
        qid: true,
        target: false,
        outlier_scored: false,
    };
    pub const TARGET: RoleSet = RoleSet {
        qid: false,
        target: true,
        outlier_scored: false,
    };
    pub const OUTLIER_SCORED: RoleSet = RoleSet {
        qid: false,
        target: false,
        outlier_scored: true,
    };
}

/// One column: name, kind, roles, and the closed category list for
/// categorical columns (cell values are indices into it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default)]
    pub roles: RoleSet,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub categories: Vec<String>,
}

impl ColumnSpec {
    pub fn numeric(name: &str, roles: RoleSet) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Numeric,
            roles,
            categories: vec![],
        }
    }

    pub fn categorical(name: &str, roles: RoleSet, categories: &[&str]) -> Self {
        ColumnSpec {
            name: name.to_string(),
            kind: ColumnKind::Categorical,
            roles,
            categories: categories.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn category_index(&self, label: &str) -> Option<usize> {
        self.categories.iter().position(|c| c == label)
    }
}

/// Ordered, validated column list.
///
/// Construction enforces: unique names, exactly one (categorical) target,
/// outlier-scored roles only on numeric columns, and closed non-empty
/// category lists on categorical columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSchema", into = "RawSchema")]
pub struct Schema {
    columns: Vec<ColumnSpec>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawSchema {
    columns: Vec<ColumnSpec>,
}

impl TryFrom<RawSchema> for Schema {
    type Error = TableError;
    fn try_from(raw: RawSchema) -> Result<Self, TableError> {
        Schema::new(raw.columns)
    }
}

impl From<Schema> for RawSchema {
    fn from(s: Schema) -> RawSchema {
        RawSchema { columns: s.columns }
    }
}

impl Schema {
    pub fn new(columns: Vec<ColumnSpec>) -> Result<Schema, TableError> {
        let mut seen = BTreeSet::new();
        for c in &columns {
            if !seen.insert(c.name.clone()) {
                return Err(TableError::DuplicateColumn(c.name.clone()));
            }
            match c.kind {
                ColumnKind::Numeric => {
                    if c.roles.target {
                        return Err(TableError::NumericTarget(c.name.clone()));
                    }
                    if !c.categories.is_empty() {
                        return Err(TableError::BadCategories(c.name.clone()));
                    }
                }
                ColumnKind::Categorical => {
                    if c.roles.outlier_scored {
                        return Err(TableError::CategoricalOutlierScored(c.name.clone()));
                    }
                    if c.categories.is_empty() {
                        return Err(TableError::BadCategories(c.name.clone()));
                    }
                    let distinct: BTreeSet<_> = c.categories.iter().collect();
                    if distinct.len() != c.categories.len() {
                        return Err(TableError::BadCategories(c.name.clone()));
                    }
                }
            }
        }
        let targets = columns.iter().filter(|c| c.roles.target).count();
        if targets != 1 {
            return Err(TableError::TargetCount(targets));
        }
        Ok(Schema { columns })
    }

    pub fn columns(&self) -> &[ColumnSpec] {
        &self.columns
    }

    /// Attribute count, `m`.
    pub fn arity(&self) -> usize {
        self.columns.len()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub fn target_index(&self) -> usize {
        self.columns
            .iter()
            .position(|c| c.roles.target)
            .expect("schema invariant")
    }

    pub fn qid_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].roles.qid)
            .collect()
    }

    pub fn outlier_scored_indices(&self) -> Vec<usize> {
        (0..self.columns.len())
            .filter(|&i| self.columns[i].roles.outlier_scored)
            .collect()
    }
}

/// One cell: a float for numeric columns, a category index for categorical
/// columns. Values are finite by construction, so `PartialEq` is total here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Cell {
    Num(f64),
    Cat(usize),
}

impl Cell {
    pub fn as_num(&self) -> f64 {
        match self {
            Cell::Num(v) => *v,
            Cell::Cat(_) => panic!("categorical cell read as numeric"),
        }
    }

    pub fn as_cat(&self) -> usize {
        match self {
            Cell::Cat(i) => *i,
            Cell::Num(_) => panic!("numeric cell read as categorical"),
        }
    }

    /// A totally ordered key usable for grouping and hashing.
    pub fn key(&self) -> u64 {
        match self {
            Cell::Num(v) => v.to_bits(),
            Cell::Cat(i) => *i as u64,
        }
    }
}

/// A fixed-arity row.
pub type Record = Vec<Cell>;

/// A totally ordered content key for a row, usable for grouping and
/// disjointness checks.
pub fn row_key(row: &[Cell]) -> Vec<u64> {
    row.iter().map(Cell::key).collect()
}

/// Immutable typed table. Safe to share across threads; all mutation happens
/// by constructing a new table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    schema: Arc<Schema>,
    rows: Vec<Record>,
}

impl Table {
    pub fn new(schema: Arc<Schema>, rows: Vec<Record>) -> Result<Table, TableError> {
        let m = schema.arity();
        for (r, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(TableError::ArityMismatch {
                    row: r,
                    expected: m,
                    found: row.len(),
                });
            }
            for (cell, spec) in row.iter().zip(schema.columns()) {
                match (cell, spec.kind) {
                    (Cell::Num(v), ColumnKind::Numeric) => {
                        if !v.is_finite() {
                            return Err(TableError::MalformedNumeric {
                                column: spec.name.clone(),
                                value: v.to_string(),
                            });
                        }
                    }
                    (Cell::Cat(i), ColumnKind::Categorical) => {
                        if *i >= spec.categories.len() {
                            return Err(TableError::UnknownCategory {
                                column: spec.name.clone(),
                                value: format!("#{i}"),
                            });
                        }
                    }
                    _ => return Err(TableError::KindMismatch(spec.name.clone())),
                }
            }
        }
        Ok(Table { schema, rows })
    }

    pub fn empty(schema: Arc<Schema>) -> Table {
        Table {
            schema,
            rows: vec![],
        }
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn schema_arc(&self) -> Arc<Schema> {
        Arc::clone(&self.schema)
    }

    /// Row count, `n`.
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Record] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> &[Cell] {
        &self.rows[i]
    }

    /// All values of a numeric column.
    pub fn numeric_column(&self, col: usize) -> Vec<f64> {
        debug_assert_eq!(self.schema.columns()[col].kind, ColumnKind::Numeric);
        self.rows.iter().map(|r| r[col].as_num()).collect()
    }

    /// Occurrence counts per category index of a categorical column.
    pub fn category_counts(&self, col: usize) -> Vec<u64> {
        let spec = &self.schema.columns()[col];
        debug_assert_eq!(spec.kind, ColumnKind::Categorical);
        let mut counts = vec![0u64; spec.categories.len()];
        for r in &self.rows {
            counts[r[col].as_cat()] += 1;
        }
        counts
    }

    /// New table holding the given rows of `self`, in the given order.
    pub fn select(&self, indices: &[usize]) -> Table {
        Table {
            schema: Arc::clone(&self.schema),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    /// New table with one extra row appended.
    pub fn with_extra_row(&self, row: &[Cell]) -> Result<Table, TableError> {
        let mut rows = self.rows.clone();
        rows.push(row.to_vec());
        Table::new(Arc::clone(&self.schema), rows)
    }

    /// Render a cell for human-readable output (labels for categoricals,
    /// shortest round-trip decimals for numerics).
    pub fn render_cell(&self, col: usize, cell: &Cell) -> String {
        match cell {
            Cell::Num(v) => format!("{v}"),
            Cell::Cat(i) => self.schema.columns()[col].categories[*i].clone(),
        }
    }
}

/// Linear-interpolation quantile at rank `h = (n-1)q` of the sorted values.
pub fn quantile(values: &[f64], q: f64) -> Result<f64, TableError> {
    assert!(
        (0.0..=1.0).contains(&q),
        "quantile fraction out of range: {q}"
    );
    if values.is_empty() {
        return Err(TableError::EmptyInput);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    Ok(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

/// Clamp every numeric cell to its column's `q`-quantile. Categorical cells
/// and row count are untouched.
pub fn cap_numeric(t: &Table, q: f64) -> Result<Table, TableError> {
    assert!(q > 0.0 && q <= 1.0, "cap quantile out of range: {q}");
    let numeric: Vec<usize> = (0..t.schema().arity())
        .filter(|&c| t.schema().columns()[c].kind == ColumnKind::Numeric)
        .collect();
    if numeric.is_empty() {
        return Ok(t.clone());
    }
    let mut caps: BTreeMap<usize, f64> = BTreeMap::new();
    for &c in &numeric {
        caps.insert(c, quantile(&t.numeric_column(c), q)?);
    }
    let rows = t
        .rows()
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .map(|(c, cell)| match cell {
                    Cell::Num(v) => Cell::Num(v.min(caps[&c])),
                    other => *other,
                })
                .collect()
        })
        .collect();
    Table::new(t.schema_arc(), rows)
}

/// How to draw a sample from a table.
#[derive(Clone, Debug)]
pub struct SamplePlan {
    pub seed: u64,
    pub size: usize,
    /// Stratify on this categorical column, preserving class proportions
    /// within one row per class (largest-remainder rounding).
    pub stratify_on: Option<String>,
    /// Row indices that must not be drawn.
    pub disjoint_from: Option<BTreeSet<usize>>,
}

impl SamplePlan {
    pub fn uniform(seed: u64, size: usize) -> SamplePlan {
        SamplePlan {
            seed,
            size,
            stratify_on: None,
            disjoint_from: None,
        }
    }

    pub fn excluding(mut self, indices: impl IntoIterator<Item = usize>) -> SamplePlan {
        self.disjoint_from = Some(indices.into_iter().collect());
        self
    }

    pub fn stratified(mut self, column: &str) -> SamplePlan {
        self.stratify_on = Some(column.to_string());
        self
    }
}

/// Sample without replacement per the plan. Returns the sampled table and the
/// source row indices in draw order. Deterministic given the plan's seed.
pub fn sample(t: &Table, plan: &SamplePlan) -> Result<(Table, Vec<usize>), TableError> {
    let excluded = plan.disjoint_from.clone().unwrap_or_default();
    let available: Vec<usize> = (0..t.len()).filter(|i| !excluded.contains(i)).collect();
    if plan.size > available.len() {
        return Err(TableError::InsufficientRows {
            requested: plan.size,
            available: available.len(),
        });
    }
    let picked = match &plan.stratify_on {
        None => draw(&available, plan.size, plan.seed),
        Some(column) => {
            let col = t
                .schema()
                .column_index(column)
                .ok_or_else(|| TableError::InvalidPlan(format!("unknown column `{column}`")))?;
            if t.schema().columns()[col].kind != ColumnKind::Categorical {
                return Err(TableError::InvalidPlan(format!(
                    "stratification column `{column}` is not categorical"
                )));
            }
            let n_cats = t.schema().columns()[col].categories.len();
            let mut strata: Vec<Vec<usize>> = vec![vec![]; n_cats];
            for &i in &available {
                strata[t.row(i)[col].as_cat()].push(i);
            }
            let quotas = largest_remainder(
                &strata.iter().map(|s| s.len()).collect::<Vec<_>>(),
                plan.size,
            );
            let mut picked = Vec::with_capacity(plan.size);
            for (c, stratum) in strata.iter().enumerate() {
                let sub = seed::derive_indexed(plan.seed, "stratum", c as u64);
                picked.extend(draw(stratum, quotas[c], sub));
            }
            picked
        }
    };
    Ok((t.select(&picked), picked))
}

/// Partial Fisher-Yates draw of `size` items from `pool`.
fn draw(pool: &[usize], size: usize, seed: u64) -> Vec<usize> {
    let mut rng = seed::rng(seed);
    let mut pool = pool.to_vec();
    for i in 0..size {
        let j = rng.random_range(i..pool.len());
        pool.swap(i, j);
    }
    pool.truncate(size);
    pool
}

/// Proportional allocation of `total` over strata by largest remainder.
/// Fractional ties go to the lower stratum index.
fn largest_remainder(sizes: &[usize], total: usize) -> Vec<usize> {
    let n: usize = sizes.iter().sum();
    debug_assert!(total <= n);
    if n == 0 {
        return vec![0; sizes.len()];
    }
    let mut quotas: Vec<usize> = Vec::with_capacity(sizes.len());
    let mut remainders: Vec<(usize, f64)> = Vec::with_capacity(sizes.len());
    for (c, &s) in sizes.iter().enumerate() {
        let exact = total as f64 * s as f64 / n as f64;
        quotas.push(exact.floor() as usize);
        remainders.push((c, exact - exact.floor()));
    }
    let mut leftover = total - quotas.iter().sum::<usize>();
    remainders.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    for (c, _) in remainders {
        if leftover == 0 {
            break;
        }
        if quotas[c] < sizes[c] {
            quotas[c] += 1;
            leftover -= 1;
        }
    }
    quotas
}

/// Rows ranked by summed per-column z-score over the outlier-scored columns.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OutlierCatalog {
    /// `(row index, score)`, descending by score.
    pub entries: Vec<(usize, f64)>,
    pub scored_columns: Vec<String>,
}

/// Score every row as the sum over outlier-scored columns of
/// `(v - mean) / stddev` (population stddev) and return the `top_n` rows,
/// highest score first.
pub fn find_outliers(t: &Table, top_n: usize) -> Result<OutlierCatalog, TableError> {
    let scored = t.schema().outlier_scored_indices();
    if scored.is_empty() {
        return Err(TableError::NoScoredColumns);
    }
    if t.is_empty() {
        return Err(TableError::EmptyInput);
    }
    let mut scores = vec![0.0f64; t.len()];
    for &c in &scored {
        let values = t.numeric_column(c);
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let std = var.sqrt();
        if std == 0.0 {
            return Err(TableError::DegenerateColumn(
                t.schema().columns()[c].name.clone(),
            ));
        }
        for (i, v) in values.iter().enumerate() {
            scores[i] += (v - mean) / std;
        }
    }
    let mut entries: Vec<(usize, f64)> = scores.into_iter().enumerate().collect();
    entries.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    entries.truncate(top_n);
    Ok(OutlierCatalog {
        entries,
        scored_columns: scored
            .iter()
            .map(|&c| t.schema().columns()[c].name.clone())
            .collect(),
    })
}
