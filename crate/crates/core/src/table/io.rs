//! CSV ingestion and canonical serialization, plus the schema sidecar format.
//!
//! Input is RFC-4180 CSV with a header row that must match the schema column
//! names exactly and in order. Canonical output renders numerics with Rust's
//! shortest round-trip decimal formatting and categoricals by label, so
//! ingest-then-serialize is byte-stable.

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Cell, ColumnKind, ColumnSpec, RoleSet, Schema, Table, TableError};

/// Parse a CSV file against a schema sidecar.
pub fn ingest_csv(path: &Path, schema_path: &Path) -> Result<Table, TableError> {
    let schema = read_schema(schema_path)?;
    ingest_csv_with_schema(path, Arc::new(schema))
}

/// Parse a CSV file against an already-loaded schema.
pub fn ingest_csv_with_schema(path: &Path, schema: Arc<Schema>) -> Result<Table, TableError> {
    let text = std::fs::read_to_string(path)?;
    parse_csv(&text, schema)
}

pub(crate) fn parse_csv(text: &str, schema: Arc<Schema>) -> Result<Table, TableError> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let m = schema.arity();
    for i in 0..m.max(headers.len()) {
        let expected = schema
            .columns()
            .get(i)
            .map(|c| c.name.as_str())
            .unwrap_or("<none>");
        let found = headers.get(i).unwrap_or("<none>");
        if expected != found {
            return Err(TableError::MissingColumn {
                expected: expected.to_string(),
                found: found.to_string(),
            });
        }
    }

    let mut rows = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != m {
            return Err(TableError::ArityMismatch {
                row: r,
                expected: m,
                found: record.len(),
            });
        }
        let mut row = Vec::with_capacity(m);
        for (spec, raw) in schema.columns().iter().zip(record.iter()) {
            row.push(parse_cell(spec, raw)?);
        }
        rows.push(row);
    }
    Table::new(schema, rows)
}

fn parse_cell(spec: &ColumnSpec, raw: &str) -> Result<Cell, TableError> {
    match spec.kind {
        ColumnKind::Numeric => {
            let v: f64 = raw.parse().map_err(|_| TableError::MalformedNumeric {
                column: spec.name.clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(TableError::MalformedNumeric {
                    column: spec.name.clone(),
                    value: raw.to_string(),
                });
            }
            Ok(Cell::Num(v))
        }
        ColumnKind::Categorical => {
            spec.category_index(raw)
                .map(Cell::Cat)
                .ok_or_else(|| TableError::UnknownCategory {
                    column: spec.name.clone(),
                    value: raw.to_string(),
                })
        }
    }
}

/// Render a table in canonical CSV form.
pub fn to_canonical_csv(t: &Table) -> String {
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    w.write_record(t.schema().columns().iter().map(|c| c.name.as_str()))
        .expect("vec write");
    for row in t.rows() {
        let fields: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, cell)| t.render_cell(c, cell))
            .collect();
        w.write_record(&fields).expect("vec write");
    }
    String::from_utf8(w.into_inner().expect("vec write")).expect("utf8")
}

pub fn write_csv(t: &Table, path: &Path) -> Result<(), TableError> {
    std::fs::write(path, to_canonical_csv(t))?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct SchemaFile {
    column: Vec<ColumnEntry>,
}

#[derive(Serialize, Deserialize)]
struct ColumnEntry {
    name: String,
    kind: String,
    #[serde(default)]
    roles: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    categories: Vec<String>,
}

/// Read the schema sidecar: one `[[column]]` entry per column with `name`,
/// `kind` (`numeric`|`categorical`), `roles` (`qid`|`target`|`outlier_scored`)
/// and, for categoricals, the closed `categories` list.
pub fn read_schema(path: &Path) -> Result<Schema, TableError> {
    let text = std::fs::read_to_string(path)?;
    parse_schema(&text)
}

pub(crate) fn parse_schema(text: &str) -> Result<Schema, TableError> {
    let file: SchemaFile =
        toml::from_str(text).map_err(|e| TableError::SchemaFile(e.to_string()))?;
    let mut columns = Vec::with_capacity(file.column.len());
    for entry in file.column {
        let kind = match entry.kind.as_str() {
            "numeric" => ColumnKind::Numeric,
            "categorical" => ColumnKind::Categorical,
            other => {
                return Err(TableError::SchemaFile(format!(
                    "column `{}`: unknown kind `{other}`",
                    entry.name
                )))
            }
        };
        let mut roles = RoleSet::NONE;
        for role in &entry.roles {
            match role.as_str() {
                "qid" => roles.qid = true,
                "target" => roles.target = true,
                "outlier_scored" => roles.outlier_scored = true,
                other => {
                    return Err(TableError::SchemaFile(format!(
                        "column `{}`: unknown role `{other}`",
                        entry.name
                    )))
                }
            }
        }
        columns.push(ColumnSpec {
            name: entry.name,
            kind,
            roles,
            categories: entry.categories,
        });
    }
    Schema::new(columns)
}

pub fn write_schema(schema: &Schema, path: &Path) -> Result<(), TableError> {
    std::fs::write(path, schema_to_toml(schema))?;
    Ok(())
}

pub(crate) fn schema_to_toml(schema: &Schema) -> String {
    let file = SchemaFile {
        column: schema
            .columns()
            .iter()
            .map(|c| {
                let mut roles = Vec::new();
                if c.roles.qid {
                    roles.push("qid".to_string());
                }
                if c.roles.target {
                    roles.push("target".to_string());
                }
                if c.roles.outlier_scored {
                    roles.push("outlier_scored".to_string());
                }
                ColumnEntry {
                    name: c.name.clone(),
                    kind: match c.kind {
                        ColumnKind::Numeric => "numeric".to_string(),
                        ColumnKind::Categorical => "categorical".to_string(),
                    },
                    roles,
                    categories: c.categories.clone(),
                }
            })
            .collect(),
    };
    toml::to_string(&file).expect("schema serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(super) const SCHEMA_TOML: &str = r#"
[[column]]
name = "x"
kind = "numeric"
roles = []

[[column]]
name = "label"
kind = "categorical"
roles = ["target"]
categories = ["a", "b"]
"#;

    fn schema() -> Arc<Schema> {
        Arc::new(parse_schema(SCHEMA_TOML).unwrap())
    }

    #[test]
    fn ingests_matching_csv() {
        let t = parse_csv("x,label\n1.5,a\n2,b\n3.25,a\n", schema()).unwrap();
        assert_eq!(t.len(), 3);
        assert_eq!(t.schema().arity(), 2);
        assert_eq!(t.row(1), &[Cell::Num(2.0), Cell::Cat(1)]);
    }

    #[test]
    fn rejects_unknown_category() {
        let err = parse_csv("x,label\n1,Z\n", schema()).unwrap_err();
        assert!(matches!(err, TableError::UnknownCategory { value, .. } if value == "Z"));
    }

    #[test]
    fn rejects_short_row() {
        let err = parse_csv("x,label\n1\n", schema()).unwrap_err();
        assert!(matches!(
            err,
            TableError::ArityMismatch {
                expected: 2,
                found: 1,
                ..
            }
        ));
    }

    #[test]
    fn rejects_header_mismatch_and_bad_numbers() {
        let err = parse_csv("x,wrong\n1,a\n", schema()).unwrap_err();
        assert!(matches!(err, TableError::MissingColumn { .. }));
        let err = parse_csv("x,label\noops,a\n", schema()).unwrap_err();
        assert!(matches!(err, TableError::MalformedNumeric { .. }));
        let err = parse_csv("x,label\nNaN,a\n", schema()).unwrap_err();
        assert!(matches!(err, TableError::MalformedNumeric { .. }));
    }

    #[test]
    fn missing_cells_are_rejected() {
        let err = parse_csv("x,label\n,a\n", schema()).unwrap_err();
        assert!(matches!(err, TableError::MalformedNumeric { .. }));
    }

    #[test]
    fn schema_roundtrips_through_toml() {
        let s = schema();
        let text = schema_to_toml(&s);
        assert_eq!(parse_schema(&text).unwrap(), *s);
    }

    #[test]
    fn canonical_csv_roundtrips_byte_identically() {
        let canonical = "x,label\n1.5,a\n-0.25,b\n1e300,a\n";
        let t = parse_csv(canonical, schema()).unwrap();
        let out = to_canonical_csv(&t);
        let t2 = parse_csv(&out, schema()).unwrap();
        assert_eq!(to_canonical_csv(&t2), out);
        assert_eq!(t, t2);
    }
}

#[cfg(test)]
mod properties {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn write_ingest_write_is_stable(
            xs in proptest::collection::vec(proptest::num::f64::NORMAL, 0..30),
            ls in proptest::collection::vec(0usize..2, 0..30),
        ) {
            let n = xs.len().min(ls.len());
            let schema = Arc::new(parse_schema(super::tests::SCHEMA_TOML).unwrap());
            let rows = (0..n).map(|i| vec![Cell::Num(xs[i]), Cell::Cat(ls[i])]).collect();
            let t = Table::new(Arc::clone(&schema), rows).unwrap();
            let once = to_canonical_csv(&t);
            let back = parse_csv(&once, schema).unwrap();
            prop_assert_eq!(to_canonical_csv(&back), once);
            prop_assert_eq!(back, t);
        }
    }
}
