//! City-level face-validity checks of the detected officer population.

use std::collections::BTreeMap;

use serde::Serialize;

use super::ols::{ols, SeType};
use super::outcomes::{extreme_comparison, ExtremeComparison};
use super::stats::{binned_scatter, pearson, BinnedScatter};
use super::table::AnalysisTable;
use crate::corpus::{CityRecord, Zone};
use crate::geo::GeoPoint;
use crate::officers::RaceShares;
use crate::presence::arsinh;

/// A detected officer device.
#[derive(Debug, Clone, PartialEq)]
pub struct OfficerRecord {
    pub device_id: String,
    pub city_id: String,
    /// Center of a home cell (first available half).
    pub home: Option<GeoPoint>,
    pub race: Option<RaceShares>,
}

#[derive(Debug, Clone, Default)]
pub struct ValidationInputs<'a> {
    pub table: Option<&'a AnalysisTable>,
    pub cities: Option<&'a [CityRecord]>,
    pub officers: &'a [OfficerRecord],
    pub zones: Option<&'a [Zone]>,
    pub zone_counts: Option<&'a BTreeMap<String, f64>>,
    /// Action columns of the analysis table to compare with presence.
    pub action_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CityValidation {
    pub city_id: String,
    pub detected_officers: usize,
    pub sworn_officers: Option<f64>,
    pub population: Option<f64>,
    pub detected_per_10k: Option<f64>,
    pub sworn_per_10k: Option<f64>,
    pub city_pct_black: Option<f64>,
    pub smartphone_pct_black: Option<f64>,
    pub police_pct_black: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompositionFit {
    pub group: String,
    pub n_obs: usize,
    pub intercept: f64,
    pub smartphone_coef: f64,
    pub smartphone_se: f64,
    pub city_coef: f64,
    pub city_se: f64,
    pub r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZoneResidence {
    pub n_zones: usize,
    /// Correlation of arsinh detected residents with arsinh reported ones.
    pub rho: Option<f64>,
    pub binned: BinnedScatter,
    /// `(zone_id, detected, reported)`.
    pub counts: Vec<(String, f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ActionCheck {
    pub action: String,
    pub binned: BinnedScatter,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub cities: Vec<CityValidation>,
    pub count_rho: Option<f64>,
    pub per_capita_rho: Option<f64>,
    /// Detected officers per capita against the city's Black share.
    pub per_capita_vs_black_rho: Option<f64>,
    pub composition: Vec<CompositionFit>,
    pub zone_residence: Option<ZoneResidence>,
    pub actions: Vec<ActionCheck>,
    pub extremes: Vec<ExtremeComparison>,
    /// Checks skipped and why.
    pub notes: Vec<String>,
}

fn paired(rows: &[CityValidation], f: impl Fn(&CityValidation) -> Option<(f64, f64)>) -> Option<f64> {
    let (x, y): (Vec<f64>, Vec<f64>) = rows.iter().filter_map(f).unzip();
    pearson(&x, &y)
}

pub fn city_validation_suite(inp: &ValidationInputs) -> ValidationReport {
    let mut notes = Vec::new();
    let mut by_city: BTreeMap<&str, Vec<&OfficerRecord>> = BTreeMap::new();
    for o in inp.officers {
        by_city.entry(o.city_id.as_str()).or_default().push(o);
    }
    let city_rec: BTreeMap<&str, &CityRecord> = inp
        .cities
        .unwrap_or_default()
        .iter()
        .map(|c| (c.city_id.as_str(), c))
        .collect();
    let mut ids: Vec<&str> = by_city.keys().copied().chain(city_rec.keys().copied()).collect();
    ids.sort();
    ids.dedup();
    let per_10k = |n: f64, pop: Option<f64>| pop.filter(|p| *p > 0.0).map(|p| n / p * 1e4);
    let cities: Vec<CityValidation> = ids
        .iter()
        .map(|&id| {
            let officers = by_city.get(id).map(Vec::as_slice).unwrap_or_default();
            let rec = city_rec.get(id);
            let attr = |k: &str| rec.and_then(|r| r.attr(k));
            let races: Vec<RaceShares> = officers.iter().filter_map(|o| o.race).collect();
            let population = attr("population");
            let sworn = attr("sworn_officers");
            CityValidation {
                city_id: id.to_string(),
                detected_officers: officers.len(),
                sworn_officers: sworn,
                population,
                detected_per_10k: per_10k(officers.len() as f64, population),
                sworn_per_10k: sworn.and_then(|s| per_10k(s, population)),
                city_pct_black: attr("pct_black"),
                smartphone_pct_black: RaceShares::mean(&races).map(|r| r.black),
                police_pct_black: attr("police_pct_black"),
            }
        })
        .collect();
    if inp.cities.is_none() {
        notes.push("city table missing: count, per-capita and composition checks skipped".into());
    }
    let count_rho = paired(&cities, |c| Some((c.detected_officers as f64, c.sworn_officers?)));
    let per_capita_rho = paired(&cities, |c| Some((c.detected_per_10k?, c.sworn_per_10k?)));
    let per_capita_vs_black_rho = paired(&cities, |c| Some((c.detected_per_10k?, c.city_pct_black?)));
    if inp.cities.is_some() && count_rho.is_none() {
        notes.push("count correlation undefined (fewer than two cities or no variation)".into());
    }

    let mut composition = Vec::new();
    if inp.cities.is_some() {
        let rows: Vec<(f64, f64, f64)> = cities
            .iter()
            .filter_map(|c| Some((c.police_pct_black?, c.smartphone_pct_black?, c.city_pct_black?)))
            .collect();
        let y: Vec<f64> = rows.iter().map(|r| r.0).collect();
        let x: Vec<Vec<f64>> = rows.iter().map(|r| vec![1.0, r.1, r.2]).collect();
        let names = ["(intercept)", "smartphone_pct_black", "city_pct_black"].map(String::from);
        match ols(&y, &x, &names, None, SeType::Hc1) {
            Ok(f) => composition.push(CompositionFit {
                group: "black".into(),
                n_obs: f.n_obs,
                intercept: f.coef[0],
                smartphone_coef: f.coef[1],
                smartphone_se: f.se[1],
                city_coef: f.coef[2],
                city_se: f.se[2],
                r_squared: f.r_squared,
            }),
            Err(e) => notes.push(format!("composition regression skipped: {e}")),
        }
    }

    let zone_residence = match (inp.zones, inp.zone_counts) {
        (Some(zones), Some(reported)) => {
            let mut detected: BTreeMap<&str, f64> = zones.iter().map(|z| (z.zone_id.as_str(), 0.0)).collect();
            for o in inp.officers {
                if let Some(h) = o.home {
                    if let Some(z) = zones.iter().find(|z| z.ring.contains(h)) {
                        *detected.get_mut(z.zone_id.as_str()).expect("listed") += 1.0;
                    }
                }
            }
            let counts: Vec<(String, f64, f64)> = detected
                .iter()
                .filter_map(|(z, d)| Some((z.to_string(), *d, *reported.get(*z)?)))
                .collect();
            let x: Vec<f64> = counts.iter().map(|c| arsinh(c.1)).collect();
            let y: Vec<f64> = counts.iter().map(|c| arsinh(c.2)).collect();
            Some(ZoneResidence {
                n_zones: counts.len(),
                rho: pearson(&x, &y),
                binned: binned_scatter(&x, &y, 20),
                counts,
            })
        }
        _ => {
            notes.push("zone geometry or zone counts missing: residence check skipped".into());
            None
        }
    };

    let mut actions = Vec::new();
    let mut extremes = Vec::new();
    match inp.table {
        Some(t) => {
            for col in &inp.action_columns {
                let (x, y): (Vec<f64>, Vec<f64>) = t
                    .rows
                    .iter()
                    .filter_map(|r| Some((arsinh(r.get("hours")?), arsinh(r.get(col)?))))
                    .unzip();
                if x.is_empty() {
                    notes.push(format!("action column {col} missing: skipped"));
                    continue;
                }
                actions.push(ActionCheck {
                    action: col.clone(),
                    binned: binned_scatter(&x, &y, 20),
                });
            }
            extremes = extreme_comparison(t, 0.95);
        }
        None => notes.push("no block-group table: action and extreme-quantile checks skipped".into()),
    }

    ValidationReport {
        cities,
        count_rho,
        per_capita_rho,
        per_capita_vs_black_rho,
        composition,
        zone_residence,
        actions,
        extremes,
        notes,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: &str, sworn: f64) -> CityRecord {
        CityRecord {
            city_id: id.into(),
            attributes: [("sworn_officers".to_string(), Some(sworn)), ("population".to_string(), Some(1e5))].into(),
        }
    }

    #[test]
    fn equal_counts_correlate_perfectly() {
        let cities = [rec("a", 1.0), rec("b", 2.0), rec("c", 3.0)];
        let officers: Vec<OfficerRecord> = [("a", 1), ("b", 2), ("c", 3)]
            .iter()
            .flat_map(|(c, n)| {
                (0..*n).map(move |i| OfficerRecord {
                    device_id: format!("{c}{i}"),
                    city_id: c.to_string(),
                    home: None,
                    race: None,
                })
            })
            .collect();
        let r = city_validation_suite(&ValidationInputs {
            cities: Some(&cities),
            officers: &officers,
            ..Default::default()
        });
        assert!((r.count_rho.unwrap() - 1.0).abs() < 1e-12);
        assert!(r.notes.iter().any(|n| n.contains("residence check skipped")));
    }
}
