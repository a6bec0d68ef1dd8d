//! Trade-off plot data: one series per (method, utility kind) with points
//! ordered by parameter, plus a dominance query over interpolated advantage.

use serde::{Deserialize, Serialize};

use super::{ExperimentError, ResultRow};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    Stat,
    Ml,
}

/// One plotted point: a (method, parameter) cell under one utility kind.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub method: String,
    pub parameter: String,
    pub utility: f64,
    pub utility_kind: UtilityKind,
    /// Attacker advantage; lower is more private.
    pub privacy: f64,
    pub n_runs: usize,
    /// Std-dev of the utility across runs.
    pub dispersion: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeoffSeries {
    pub method: String,
    pub utility_kind: UtilityKind,
    pub points: Vec<TradeoffPoint>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TradeoffDoc {
    pub axes: Axes,
    pub series: Vec<TradeoffSeries>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Axes {
    pub utility: String,
    pub privacy: String,
}

/// Two points per result row: one per utility kind.
pub fn points_from_rows(rows: &[ResultRow]) -> Vec<TradeoffPoint> {
    let mut points = Vec::with_capacity(rows.len() * 2);
    for row in rows {
        points.push(TradeoffPoint {
            method: row.method.clone(),
            parameter: row.parameter.clone(),
            utility: row.stat_utility,
            utility_kind: UtilityKind::Stat,
            privacy: row.attacker_advantage,
            n_runs: row.n_runs,
            dispersion: row.dispersion,
        });
        points.push(TradeoffPoint {
            method: row.method.clone(),
            parameter: row.parameter.clone(),
            utility: row.ml_accuracy,
            utility_kind: UtilityKind::Ml,
            privacy: row.attacker_advantage,
            n_runs: row.n_runs,
            dispersion: row.ml_dispersion,
        });
    }
    points
}

/// Group points into series (one per method and utility kind, preserving
/// point order) and render the plot-data document.
pub fn build_tradeoff(points: &[TradeoffPoint]) -> Result<TradeoffDoc, ExperimentError> {
    if points.is_empty() {
        return Err(ExperimentError::EmptyResults);
    }
    let mut series: Vec<TradeoffSeries> = Vec::new();
    for p in points {
        match series
            .iter_mut()
            .find(|s| s.method == p.method && s.utility_kind == p.utility_kind)
        {
            Some(s) => s.points.push(p.clone()),
            None => series.push(TradeoffSeries {
                method: p.method.clone(),
                utility_kind: p.utility_kind,
                points: vec![p.clone()],
            }),
        }
    }
    Ok(TradeoffDoc {
        axes: Axes {
            utility: "per-series utility_kind (stat aggregate or ml accuracy)".into(),
            privacy: "attacker_advantage".into(),
        },
        series,
    })
}

pub fn emit_tradeoff(
    points: &[TradeoffPoint],
    path: &std::path::Path,
) -> Result<(), ExperimentError> {
    let doc = build_tradeoff(points)?;
    std::fs::write(path, to_json(&doc))?;
    Ok(())
}

pub fn to_json(doc: &TradeoffDoc) -> String {
    serde_json::to_string_pretty(doc).expect("tradeoff serializes")
}

/// Piecewise-linear interpolation of a series' advantage at a utility level.
/// `None` outside the series' utility hull.
pub fn interpolate_advantage(series: &TradeoffSeries, utility: f64) -> Option<f64> {
    let mut points: Vec<(f64, f64)> = series
        .points
        .iter()
        .map(|p| (p.utility, p.privacy))
        .collect();
    points.sort_by(|a, b| a.0.total_cmp(&b.0));
    let (lo, hi) = (points.first()?.0, points.last()?.0);
    if utility < lo || utility > hi {
        return None;
    }
    for pair in points.windows(2) {
        let (u0, a0) = pair[0];
        let (u1, a1) = pair[1];
        if utility >= u0 && utility <= u1 {
            if u1 == u0 {
                return Some(a0);
            }
            return Some(a0 + (utility - u0) / (u1 - u0) * (a1 - a0));
        }
    }
    Some(points.last()?.1)
}

/// `Some(true)` when `a`'s interpolated advantage at the utility level is no
/// worse (no larger) than `b`'s; `None` when either series does not reach it.
pub fn dominates_at(a: &TradeoffSeries, b: &TradeoffSeries, utility: f64) -> Option<bool> {
    Some(interpolate_advantage(a, utility)? <= interpolate_advantage(b, utility)?)
}
