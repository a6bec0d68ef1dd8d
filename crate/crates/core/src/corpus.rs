//! Bundled desk-scale corpus: a deterministic census-like mixed-type table
//! sized for laptop runs of the full pipeline.
//!
//! The generator plants real structure for the methods to find — income
//! depends on education, hours, and age band; the charges pair is heavy-tailed
//! and income-linked with a sprinkling of extreme outliers — so utility
//! metrics, the classifier, and the outlier games all have signal to work
//! with. The checked-in `data/desk.csv` is exactly
//! `generate(5000, DESK_SEED)`, guarded by a regeneration test.

use std::sync::Arc;

use rand::Rng;

use crate::seed;
use crate::table::{Cell, ColumnSpec, RoleSet, Schema, Table};

/// Seed behind the checked-in desk corpus files.
pub const DESK_SEED: u64 = 20240917;

/// The corpus size the bundled data files use.
pub const DESK_ROWS: usize = 5000;

pub const SEX: &[&str] = &["Female", "Male"];
pub const REGION: &[&str] = &["North", "South", "East", "West"];
pub const AGE_BAND: &[&str] = &["18-29", "30-39", "40-49", "50-59", "60-69", "70+"];
pub const EDUCATION: &[&str] = &["Primary", "Secondary", "Bachelor", "Advanced", "Doctorate"];
pub const INCOME: &[&str] = &["Low", "High"];

pub fn schema() -> Arc<Schema> {
    Arc::new(
        Schema::new(vec![
            ColumnSpec::numeric("age", RoleSet::NONE),
            ColumnSpec::categorical("sex", RoleSet::QID, SEX),
            ColumnSpec::categorical("region", RoleSet::QID, REGION),
            ColumnSpec::categorical("age_band", RoleSet::QID, AGE_BAND),
            ColumnSpec::categorical("education", RoleSet::NONE, EDUCATION),
            ColumnSpec::numeric("hours_per_week", RoleSet::NONE),
            ColumnSpec::numeric("charges", RoleSet::OUTLIER_SCORED),
            ColumnSpec::numeric("charges_extra", RoleSet::OUTLIER_SCORED),
            ColumnSpec::categorical("income", RoleSet::TARGET, INCOME),
        ])
        .unwrap(),
    )
}

fn pick(rng: &mut impl Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut u = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if u < *w {
            return i;
        }
        u -= w;
    }
    weights.len() - 1
}

fn age_band_of(age: f64) -> usize {
    match age as u32 {
        0..=29 => 0,
        30..=39 => 1,
        40..=49 => 2,
        50..=59 => 3,
        60..=69 => 4,
        _ => 5,
    }
}

/// Generate `n` rows deterministically from `seed`.
pub fn generate(n: usize, seed: u64) -> Table {
    let schema = schema();
    let mut rng = seed::rng(seed);
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let age = (18.0 + rng.random::<f64>().powf(1.3) * 62.0).floor();
        let band = age_band_of(age);
        let sex = pick(&mut rng, &[0.52, 0.48]);
        let region = pick(&mut rng, &[0.38, 0.30, 0.22, 0.10]);
        let education = pick(&mut rng, &[0.22, 0.43, 0.24, 0.095, 0.015]);
        let hours = (20.0 + rng.random::<f64>() * 25.0 + education as f64 * 4.0).round();

        // income odds rise with education and hours, dip at the age extremes
        let z = -1.9 + 0.85 * education as f64 + 0.06 * (hours - 35.0)
            - 0.35 * f64::from(band == 0 || band == 5)
            + 0.25 * f64::from(region == 0);
        let p_high = 1.0 / (1.0 + (-z).exp());
        let income = usize::from(rng.random::<f64>() < p_high);

        // heavy-tailed charges, linked to age and income
        let base = 40.0 + 2.2 * (age - 18.0) + 35.0 * income as f64;
        let tail = (rng.random::<f64>().max(1e-9).ln() * -18.0).min(260.0);
        let mut charges = base + tail + rng.random::<f64>() * 12.0;
        let mut charges_extra = 0.55 * charges + 18.0 * rng.random::<f64>() + 8.0;
        // a thin population of genuine outliers for the catalog to find
        if i % 997 == 0 {
            charges *= 14.0;
            charges_extra *= 11.0;
        }

        rows.push(vec![
            Cell::Num(age),
            Cell::Cat(sex),
            Cell::Cat(region),
            Cell::Cat(band),
            Cell::Cat(education),
            Cell::Num(hours),
            Cell::Num((charges * 100.0).round() / 100.0),
            Cell::Num((charges_extra * 100.0).round() / 100.0),
            Cell::Cat(income),
        ]);
    }
    Table::new(schema, rows).unwrap()
}

/// The table behind `data/desk.csv`.
pub fn desk_table() -> Table {
    generate(DESK_ROWS, DESK_SEED)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::table::find_outliers;

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(generate(200, 7), generate(200, 7));
        assert_ne!(generate(200, 7), generate(200, 8));
    }

    #[test]
    fn age_band_column_is_consistent_with_age() {
        let t = generate(500, 3);
        let band_idx = t.schema().column_index("age_band").unwrap();
        for row in t.rows() {
            assert_eq!(row[band_idx].as_cat(), age_band_of(row[0].as_num()));
        }
    }

    #[test]
    fn target_has_both_classes_in_reasonable_balance() {
        let t = desk_table();
        let counts = t.category_counts(t.schema().target_index());
        let p = counts[1] as f64 / t.len() as f64;
        assert!((0.2..=0.8).contains(&p), "high-income share {p}");
    }

    #[test]
    fn planted_outliers_top_the_catalog() {
        let t = desk_table();
        let catalog = find_outliers(&t, 5).unwrap();
        let charges_idx = t.schema().column_index("charges").unwrap();
        let p99 = {
            let mut v = t.numeric_column(charges_idx);
            v.sort_by(f64::total_cmp);
            v[(v.len() as f64 * 0.99) as usize]
        };
        for &(row, score) in &catalog.entries {
            assert!(score > 3.0);
            assert!(t.row(row)[charges_idx].as_num() > p99);
        }
    }

    #[test]
    fn qid_classes_span_a_suppression_gradient() {
        // a 500-row seed must have classes straddling the k = 5..20 sweep so
        // the utility trend has room to move
        let t = generate(500, 11);
        let classes = crate::anon::equivalence_classes(&t).unwrap();
        let sizes: Vec<usize> = classes.iter().map(|c| c.member_indices.len()).collect();
        assert!(sizes.iter().any(|&s| s < 5));
        assert!(sizes.iter().any(|&s| s >= 20));
    }
}
