//! Block-group analysis table and model specifications.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::ols::{ols, OlsFit, SeType};
use super::stats::stars;
use crate::corpus::{AttributeRow, BlockGroup, CityRecord};
use crate::error::{Error, Result};
use crate::presence::{arsinh, Transform, SHIFT_HOUR_BUCKETS};

pub const RACE_GROUPS: [&str; 3] = ["black", "hispanic", "asian"];
pub const RELATIVE_SHARES: [&str; 3] = ["rel_black", "rel_hispanic", "rel_asian"];
pub const SOCIO_BLOCK: [&str; 4] = ["log_population", "pct_college", "median_income_k", "census_return_rate"];
pub const CRIME_BLOCK: [&str; 2] = ["dist_nearest_homicide_km", "homicide_count"];

/// Covariates of the conditional specifications.
pub fn controls() -> Vec<String> {
    [
        "log_population",
        "pct_college",
        "median_income_k",
        "census_return_rate",
        "dist_nearest_homicide_km",
        "homicide_count",
    ]
    .map(String::from)
    .to_vec()
}

/// Officer presence of one block group.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BgPresence {
    pub hours: f64,
    pub by_shift_hour: [f64; SHIFT_HOUR_BUCKETS],
}

pub fn shift_hour_column(h: usize) -> String {
    format!("hour_{h:02}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub bg_id: String,
    pub city_id: String,
    /// Missing values are absent.
    pub values: BTreeMap<String, f64>,
}

impl Row {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.get(name).copied()
    }
}

/// One row per block group with raw covariates, relative shares, city-level
/// department ratios, presence and any extra per-BG columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalysisTable {
    pub rows: Vec<Row>,
    pub warnings: Vec<String>,
}

/// `pct_<group>` of the block group over the city share from the city
/// table. Undefined (absent) when either share is missing or the city share
/// is not positive.
pub fn relative_share(bg_share: Option<f64>, city_share: Option<f64>) -> Option<f64> {
    match (bg_share, city_share) {
        (Some(b), Some(c)) if c > 0.0 => Some(b / c),
        _ => None,
    }
}

impl AnalysisTable {
    /// Block groups without a presence entry get zero hours.
    pub fn build(
        blockgroups: &[BlockGroup],
        cities: &[CityRecord],
        presence: &BTreeMap<String, BgPresence>,
        extra: &BTreeMap<String, AttributeRow>,
    ) -> AnalysisTable {
        let city: BTreeMap<&str, &CityRecord> = cities.iter().map(|c| (c.city_id.as_str(), c)).collect();
        let mut warnings = Vec::new();
        let mut flagged: BTreeSet<(String, &str)> = BTreeSet::new();
        let mut rows = Vec::with_capacity(blockgroups.len());
        let mut sorted: Vec<&BlockGroup> = blockgroups.iter().collect();
        sorted.sort_by(|a, b| a.bg_id.cmp(&b.bg_id));
        for b in sorted {
            let mut v: BTreeMap<String, f64> = b
                .attributes
                .iter()
                .filter_map(|(k, x)| x.map(|x| (k.clone(), x)))
                .collect();
            if let Some(p) = b.attr("population").filter(|p| *p > 0.0) {
                v.insert("log_population".into(), p.ln());
            }
            let c = city.get(b.city_id.as_str());
            if c.is_none() && flagged.insert((b.city_id.clone(), "city")) {
                warnings.push(format!("city {} missing from the city table; relative shares undefined", b.city_id));
            }
            for g in RACE_GROUPS {
                let col = format!("pct_{g}");
                let cs = c.and_then(|c| c.attr(&col));
                if c.is_some() && !cs.is_some_and(|s| s > 0.0) && flagged.insert((b.city_id.clone(), g)) {
                    warnings.push(format!("city {}: {col} is missing or zero; rel_{g} undefined", b.city_id));
                }
                if let Some(r) = relative_share(b.attr(&col), cs) {
                    v.insert(format!("rel_{g}"), r);
                }
            }
            if let Some(c) = c {
                let city_black = c.attr("pct_black");
                for (src, dst) in [
                    ("police_pct_black", "police_rel_black"),
                    ("supervisor_pct_black", "supervisor_rel_black"),
                ] {
                    if let Some(r) = relative_share(c.attr(src), city_black) {
                        v.insert(dst.into(), r);
                    }
                }
            }
            let pres = presence.get(&b.bg_id).copied().unwrap_or_default();
            v.insert("hours".into(), pres.hours);
            v.insert("arsinh_hours".into(), arsinh(pres.hours));
            for (h, x) in pres.by_shift_hour.iter().enumerate() {
                v.insert(shift_hour_column(h + 1), *x);
            }
            if let Some(row) = extra.get(&b.bg_id) {
                for (k, x) in row {
                    if let Some(x) = x {
                        v.insert(k.clone(), *x);
                    }
                }
            }
            rows.push(Row {
                bg_id: b.bg_id.clone(),
                city_id: b.city_id.clone(),
                values: v,
            });
        }
        AnalysisTable { rows, warnings }
    }

    pub fn cities(&self) -> Vec<String> {
        let s: BTreeSet<&str> = self.rows.iter().map(|r| r.city_id.as_str()).collect();
        s.into_iter().map(String::from).collect()
    }

    pub fn column(&self, name: &str) -> Vec<Option<f64>> {
        self.rows.iter().map(|r| r.get(name)).collect()
    }

    pub fn filter(&self, keep: impl Fn(&Row) -> bool) -> AnalysisTable {
        AnalysisTable {
            rows: self.rows.iter().filter(|r| keep(r)).cloned().collect(),
            warnings: self.warnings.clone(),
        }
    }
}

/// Rows a model may use.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleFilter {
    /// Keep only these cities (all when empty).
    pub cities: Vec<String>,
    pub exclude_bgs: Vec<String>,
    /// Keep rows where this column is strictly positive.
    pub positive: Option<String>,
}

impl SampleFilter {
    fn keep(&self, r: &Row) -> bool {
        (self.cities.is_empty() || self.cities.contains(&r.city_id))
            && !self.exclude_bgs.contains(&r.bg_id)
            && self.positive.as_ref().is_none_or(|c| r.get(c).is_some_and(|v| v > 0.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: String,
    pub outcome: String,
    #[serde(default)]
    pub transform: Transform,
    pub regressors: Vec<String>,
    /// Variables centered on the estimation-sample mean before use.
    #[serde(default)]
    pub mean_center: Vec<String>,
    /// Products of two inputs, each centered first when listed in
    /// `mean_center`. Inputs need not appear in `regressors`.
    #[serde(default)]
    pub interactions: Vec<(String, String)>,
    /// Grouping column absorbed by within-demeaning; `"city_id"` for city
    /// fixed effects.
    #[serde(default)]
    pub fixed_effects: Option<String>,
    #[serde(default)]
    pub se_type: SeType,
    #[serde(default)]
    pub sample_filter: SampleFilter,
}

pub fn interaction_name(a: &str, b: &str) -> String {
    format!("{a}_x_{b}")
}

pub const INTERCEPT: &str = "(intercept)";

impl ModelSpec {
    pub fn new(name: &str, outcome: &str, transform: Transform, regressors: &[&str]) -> ModelSpec {
        ModelSpec {
            name: name.into(),
            outcome: outcome.into(),
            transform,
            regressors: regressors.iter().map(|s| s.to_string()).collect(),
            mean_center: Vec::new(),
            interactions: Vec::new(),
            fixed_effects: None,
            se_type: SeType::Hc1,
            sample_filter: SampleFilter::default(),
        }
    }

    /// Column `col` (1 through 6) of the main exposure-disparity table.
    pub fn table1(col: u8) -> Result<ModelSpec> {
        let race = RELATIVE_SHARES.map(String::from).to_vec();
        let mut regs = race.clone();
        let mut center = race.clone();
        let mut inter = Vec::new();
        let mut fe = None;
        let police = "police_rel_black".to_string();
        let sup = "supervisor_rel_black".to_string();
        let black = "rel_black".to_string();
        match col {
            1 => {}
            2 => regs.extend(controls()),
            3 => {
                regs.extend(controls());
                fe = Some("city_id".to_string());
            }
            4 => {
                regs.push(police.clone());
                regs.extend(controls());
                center.push(police.clone());
                inter.push((black.clone(), police));
            }
            5 => {
                regs.push(police.clone());
                regs.push(sup.clone());
                regs.extend(controls());
                center.extend([police.clone(), sup.clone()]);
                inter.push((black.clone(), police));
                inter.push((black, sup));
            }
            6 => {
                // department levels are constant within city and absorbed
                regs.extend(controls());
                center.extend([police.clone(), sup.clone()]);
                inter.push((black.clone(), police));
                inter.push((black, sup));
                fe = Some("city_id".to_string());
            }
            _ => return Err(Error::Config(format!("table column {col} does not exist (1-6)"))),
        }
        Ok(ModelSpec {
            name: format!("table1_col{col}"),
            outcome: "hours".into(),
            transform: Transform::Arsinh,
            regressors: regs,
            mean_center: center,
            interactions: inter,
            fixed_effects: fe,
            se_type: SeType::Hc1,
            sample_filter: SampleFilter::default(),
        })
    }

    /// Every input column the model reads.
    pub fn inputs(&self) -> Vec<String> {
        let mut v = vec![self.outcome.clone()];
        v.extend(self.regressors.iter().cloned());
        for (a, b) in &self.interactions {
            v.push(a.clone());
            v.push(b.clone());
        }
        let mut seen = BTreeSet::new();
        v.retain(|x| seen.insert(x.clone()));
        v
    }

    /// Term names in design order.
    pub fn terms(&self) -> Vec<String> {
        let mut t = Vec::new();
        if self.fixed_effects.is_none() {
            t.push(INTERCEPT.to_string());
        }
        t.extend(self.regressors.iter().cloned());
        t.extend(self.interactions.iter().map(|(a, b)| interaction_name(a, b)));
        t
    }
}

/// Estimation design after listwise deletion, centering and interactions.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    pub y: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub groups: Option<Vec<String>>,
    pub bg_ids: Vec<String>,
    /// Sample means of centered variables.
    pub centers: BTreeMap<String, f64>,
    /// Mean of the outcome in levels, before any transform.
    pub outcome_mean_levels: f64,
}

pub fn build_design(table: &AnalysisTable, spec: &ModelSpec) -> Result<Design> {
    let inputs = spec.inputs();
    if let Some(row) = table.rows.first() {
        let known: BTreeSet<&str> = table
            .rows
            .iter()
            .flat_map(|r| r.values.keys().map(String::as_str))
            .collect();
        for c in &inputs {
            if !known.contains(c.as_str()) {
                return Err(Error::UnknownVariable(format!("{c} (model {})", spec.name)));
            }
        }
        if let Some(fe) = &spec.fixed_effects {
            if fe != "city_id" && row.get(fe).is_none() && !known.contains(fe.as_str()) {
                return Err(Error::UnknownVariable(format!("fixed effect {fe} (model {})", spec.name)));
            }
        }
    }
    let sample: Vec<&Row> = table
        .rows
        .iter()
        .filter(|r| spec.sample_filter.keep(r))
        .filter(|r| inputs.iter().all(|c| r.get(c).is_some_and(f64::is_finite)))
        .filter(|r| match &spec.fixed_effects {
            Some(fe) if fe != "city_id" => r.get(fe).is_some(),
            _ => true,
        })
        .collect();
    let n = sample.len();
    let mut centers = BTreeMap::new();
    for c in &spec.mean_center {
        if n > 0 && inputs.contains(c) {
            let m = sample.iter().map(|r| r.get(c).expect("listwise")).sum::<f64>() / n as f64;
            centers.insert(c.clone(), m);
        }
    }
    let val = |r: &Row, c: &str| r.get(c).expect("listwise") - centers.get(c).copied().unwrap_or(0.0);
    let names = spec.terms();
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for r in &sample {
        let mut row = Vec::with_capacity(names.len());
        if spec.fixed_effects.is_none() {
            row.push(1.0);
        }
        for c in &spec.regressors {
            row.push(val(r, c));
        }
        for (a, b) in &spec.interactions {
            row.push(val(r, a) * val(r, b));
        }
        x.push(row);
        y.push(spec.transform.apply(r.get(&spec.outcome).expect("listwise")));
    }
    let groups = spec.fixed_effects.as_ref().map(|fe| {
        sample
            .iter()
            .map(|r| {
                if fe == "city_id" {
                    r.city_id.clone()
                } else {
                    format!("{}", r.get(fe).expect("filtered"))
                }
            })
            .collect()
    });
    let outcome_mean_levels = if n > 0 {
        sample.iter().map(|r| r.get(&spec.outcome).expect("listwise")).sum::<f64>() / n as f64
    } else {
        f64::NAN
    };
    Ok(Design {
        y,
        x,
        names,
        groups,
        bg_ids: sample.iter().map(|r| r.bg_id.clone()).collect(),
        centers,
        outcome_mean_levels,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Term {
    pub term: String,
    pub coefficient: f64,
    pub se: f64,
    pub p: f64,
    pub stars: &'static str,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionResult {
    pub model: String,
    pub terms: Vec<Term>,
    pub r_squared: f64,
    pub n_obs: usize,
    pub fixed_effects: Option<String>,
    pub outcome_mean_levels: f64,
    pub fit: OlsFit,
}

impl RegressionResult {
    pub fn term(&self, name: &str) -> Option<&Term> {
        self.terms.iter().find(|t| t.term == name)
    }
}

pub fn fit_model(table: &AnalysisTable, spec: &ModelSpec) -> Result<RegressionResult> {
    let d = build_design(table, spec)?;
    let groups = d.groups.as_ref().map(|g| super::ols::group_codes(g).0);
    let fit = ols(&d.y, &d.x, &d.names, groups.as_deref(), spec.se_type)?;
    let terms = fit
        .names
        .iter()
        .enumerate()
        .map(|(i, name)| Term {
            term: name.clone(),
            coefficient: fit.coef[i],
            se: fit.se[i],
            p: fit.p[i],
            stars: stars(fit.p[i]),
        })
        .collect();
    Ok(RegressionResult {
        model: spec.name.clone(),
        terms,
        r_squared: fit.r_squared,
        n_obs: fit.n_obs,
        fixed_effects: spec.fixed_effects.clone(),
        outcome_mean_levels: d.outcome_mean_levels,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::{GeoPoint, Ring};

    fn bg(id: &str, city: &str, pct_black: f64, pop: f64) -> BlockGroup {
        let p = |a: f64, b: f64| GeoPoint::new(a, b).unwrap();
        BlockGroup {
            bg_id: id.into(),
            city_id: city.into(),
            polygon: Ring::new(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)]).unwrap(),
            attributes: [
                ("pct_black".to_string(), Some(pct_black)),
                ("population".to_string(), Some(pop)),
            ]
            .into(),
        }
    }

    fn city(id: &str, pct_black: f64) -> CityRecord {
        CityRecord {
            city_id: id.into(),
            attributes: [("pct_black".to_string(), Some(pct_black))].into(),
        }
    }

    #[test]
    fn relative_share_definition() {
        assert_eq!(relative_share(Some(0.4), Some(0.2)), Some(2.0));
        assert_eq!(relative_share(Some(0.2), Some(0.2)), Some(1.0));
        assert_eq!(relative_share(Some(0.2), Some(0.0)), None);
    }

    #[test]
    fn table_uses_city_table_denominator() {
        let t = AnalysisTable::build(
            &[bg("a", "c", 0.4, 100.0), bg("b", "z", 0.1, 0.0)],
            &[city("c", 0.2), city("z", 0.0)],
            &BTreeMap::new(),
            &BTreeMap::new(),
        );
        assert_eq!(t.rows[0].get("rel_black"), Some(2.0));
        assert_eq!(t.rows[0].get("hours"), Some(0.0));
        assert!((t.rows[0].get("log_population").unwrap() - 100f64.ln()).abs() < 1e-12);
        assert_eq!(t.rows[1].get("rel_black"), None);
        assert_eq!(t.rows[1].get("log_population"), None);
        assert!(t.warnings.iter().any(|w| w.contains("rel_black undefined")));
    }

    #[test]
    fn presets_have_expected_shape() {
        let c2 = ModelSpec::table1(2).unwrap();
        assert_eq!(c2.terms().len(), 1 + 3 + 6);
        let c6 = ModelSpec::table1(6).unwrap();
        assert!(!c6.terms().contains(&"police_rel_black".to_string()));
        assert!(c6.terms().contains(&interaction_name("rel_black", "police_rel_black")));
        assert!(!c6.terms().contains(&INTERCEPT.to_string()));
        assert!(ModelSpec::table1(7).is_err());
    }

    #[test]
    fn unknown_variable_reported() {
        let t = AnalysisTable::build(&[bg("a", "c", 0.4, 100.0)], &[city("c", 0.2)], &BTreeMap::new(), &BTreeMap::new());
        let spec = ModelSpec::new("m", "hours", Transform::None, &["nonexistent"]);
        assert!(matches!(fit_model(&t, &spec), Err(Error::UnknownVariable(_))));
    }
}
