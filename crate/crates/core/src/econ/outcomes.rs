//! Presence-derived outcomes: enforcement per hour, extreme-neighborhood
//! comparisons and disparities by hour of shift.

use std::collections::BTreeMap;

use serde::Serialize;

use super::stats::{mean, quantile};
use super::table::{fit_model, shift_hour_column, AnalysisTable, ModelSpec, RELATIVE_SHARES};
use crate::error::Result;
use crate::presence::{arsinh, Transform, SHIFT_HOUR_BUCKETS};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionOutcome {
    pub bg_id: String,
    pub arsinh_hours: f64,
    pub arsinh_actions: f64,
    /// `arsinh(actions / hours)`; absent when `hours == 0`.
    pub arsinh_ratio: Option<f64>,
}

/// Outcome triple for every block group present in both maps. Rows with
/// zero hours keep their level outcomes and lose only the ratio.
pub fn arrests_per_hour(hours: &BTreeMap<String, f64>, actions: &BTreeMap<String, f64>) -> Vec<ActionOutcome> {
    hours
        .iter()
        .filter_map(|(id, &h)| {
            let a = *actions.get(id)?;
            Some(ActionOutcome {
                bg_id: id.clone(),
                arsinh_hours: arsinh(h),
                arsinh_actions: arsinh(a),
                arsinh_ratio: (h > 0.0).then(|| arsinh(a / h)),
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtremeComparison {
    pub city_id: String,
    /// Mean hours where the Black share exceeds the city's 95th percentile.
    pub blackest_mean_hours: Option<f64>,
    pub n_blackest: usize,
    pub whitest_mean_hours: Option<f64>,
    pub n_whitest: usize,
}

/// Mean hours in block groups above the `q` quantile of the Black and of the
/// White share, per city.
pub fn extreme_comparison(table: &AnalysisTable, q: f64) -> Vec<ExtremeComparison> {
    let top = |city: &str, col: &str| -> (Option<f64>, usize) {
        let rows: Vec<(f64, f64)> = table
            .rows
            .iter()
            .filter(|r| r.city_id == city)
            .filter_map(|r| Some((r.get(col)?, r.get("hours")?)))
            .collect();
        let shares: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let Some(cut) = quantile(&shares, q) else {
            return (None, 0);
        };
        let mut sel: Vec<f64> = rows.iter().filter(|r| r.0 > cut).map(|r| r.1).collect();
        if sel.is_empty() {
            // ties at the maximum
            sel = rows.iter().filter(|r| r.0 >= cut).map(|r| r.1).collect();
        }
        (mean(&sel), sel.len())
    };
    table
        .cities()
        .into_iter()
        .map(|c| {
            let (b, nb) = top(&c, "pct_black");
            let (w, nw) = top(&c, "pct_white");
            ExtremeComparison {
                city_id: c,
                blackest_mean_hours: b,
                n_blackest: nb,
                whitest_mean_hours: w,
                n_whitest: nw,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftHourRow {
    pub hour: usize,
    pub term: String,
    pub coefficient: f64,
    pub se: f64,
    pub p: f64,
}

/// Regresses arsinh presence in each hour of shift on the centered relative
/// shares (optionally with city fixed effects).
pub fn shift_hour_profile(table: &AnalysisTable, city_fe: bool) -> Result<Vec<ShiftHourRow>> {
    let mut out = Vec::new();
    for h in 1..=SHIFT_HOUR_BUCKETS {
        let col = shift_hour_column(h);
        let mut spec = ModelSpec::new(&format!("shift_hour_{h:02}"), &col, Transform::Arsinh, &RELATIVE_SHARES);
        spec.mean_center = RELATIVE_SHARES.map(String::from).to_vec();
        if city_fe {
            spec.fixed_effects = Some("city_id".into());
        }
        let r = fit_model(table, &spec)?;
        for t in r.terms.iter().filter(|t| RELATIVE_SHARES.contains(&t.term.as_str())) {
            out.push(ShiftHourRow {
                hour: h,
                term: t.term.clone(),
                coefficient: t.coefficient,
                se: t.se,
                p: t.p,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_rules() {
        let hours: BTreeMap<String, f64> = [("a", 10.0), ("b", 0.0), ("c", 3.0)].map(|(k, v)| (k.to_string(), v)).into();
        let acts: BTreeMap<String, f64> = [("a", 20.0), ("b", 5.0), ("c", 0.0)].map(|(k, v)| (k.to_string(), v)).into();
        let out = arrests_per_hour(&hours, &acts);
        assert!((out[0].arsinh_ratio.unwrap() - 1.4436).abs() < 1e-4);
        assert_eq!(out[1].arsinh_ratio, None);
        assert!((out[1].arsinh_actions - arsinh(5.0)).abs() < 1e-15);
        assert_eq!(out[2].arsinh_ratio, Some(0.0));
    }
}
