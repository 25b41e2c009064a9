use std::collections::BTreeMap;

use chrono::{Datelike, Duration, NaiveDate};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Full description of a synthetic corpus. The seed fixes every byte of the
/// output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthSpec {
    pub rng_seed: u64,
    pub start: NaiveDate,
    pub days: u32,
    pub cities: Vec<CitySpec>,
    pub shift: ShiftSchedule,
    pub ping_gap: GapModel,
    /// Per-axis standard deviation of the Gaussian position error.
    pub gps_noise_m: f64,
    pub patrol_policy: PatrolPolicy,
    pub demographics: DemographicModel,
    pub actions: ActionRates,
    /// Side length, in block groups, of the square residence zones.
    pub zone_size: u32,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            rng_seed: 7,
            start: NaiveDate::from_ymd_opt(2017, 3, 1).expect("valid date"),
            days: 30,
            cities: vec![CitySpec::default()],
            shift: ShiftSchedule::default(),
            ping_gap: GapModel::default(),
            gps_noise_m: 25.0,
            patrol_policy: PatrolPolicy::default(),
            demographics: DemographicModel::default(),
            actions: ActionRates::default(),
            zone_size: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CitySpec {
    pub city_id: String,
    pub timezone: String,
    /// South-west corner of the block-group grid.
    pub origin_lat: f64,
    pub origin_lon: f64,
    pub rows: u32,
    pub cols: u32,
    /// Block-group edge length in meters.
    pub cell_m: f64,
    pub n_stations: u32,
    pub n_officers: u32,
    pub n_civilians: u32,
}

impl Default for CitySpec {
    fn default() -> Self {
        CitySpec {
            city_id: "metro".into(),
            timezone: "America/Chicago".into(),
            origin_lat: 41.80,
            origin_lon: -87.70,
            rows: 10,
            cols: 10,
            cell_m: 800.0,
            n_stations: 3,
            n_officers: 50,
            n_civilians: 150,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftSchedule {
    /// Local start hours; each officer is assigned one.
    pub start_hours: Vec<f64>,
    pub length_mean_h: f64,
    pub length_sd_h: f64,
    pub length_min_h: f64,
    pub length_max_h: f64,
    /// Range of the roll-call stay at the station, in minutes. The closing
    /// station stay uses the same range.
    pub station_stay_min: (f64, f64),
    /// Range of one patrol stay, in minutes.
    pub patrol_stay_min: (f64, f64),
    pub workdays_per_week: u32,
    pub travel_mph: f64,
}

impl Default for ShiftSchedule {
    fn default() -> Self {
        ShiftSchedule {
            start_hours: vec![7.0, 15.0, 23.0],
            length_mean_h: 8.5,
            length_sd_h: 0.5,
            length_min_h: 6.0,
            length_max_h: 11.0,
            station_stay_min: (30.0, 45.0),
            patrol_stay_min: (20.0, 40.0),
            workdays_per_week: 5,
            travel_mph: 27.0,
        }
    }
}

/// Gaps between pings: `shift_s + LogNormal(mu, sigma)` with `mu` chosen so
/// the mode of the whole distribution is `mode_s`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GapModel {
    pub mode_s: f64,
    pub shift_s: f64,
    pub sigma: f64,
}

impl Default for GapModel {
    fn default() -> Self {
        GapModel {
            mode_s: 600.0,
            shift_s: 30.0,
            sigma: 0.5,
        }
    }
}

impl GapModel {
    pub fn mu(&self) -> f64 {
        (self.mode_s - self.shift_s).ln() + self.sigma * self.sigma
    }
}

/// How patrol stays are spread over block groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PatrolPolicy {
    Uniform,
    /// Independent log-normal intensity per block group.
    Lognormal { sigma: f64 },
    /// Weight `1 + coef * rel_black` (floored at zero).
    RaceWeighted { coef: f64 },
    /// Explicit weights by `bg_id`; unlisted block groups get zero.
    Weights { weights: BTreeMap<String, f64> },
}

impl Default for PatrolPolicy {
    fn default() -> Self {
        PatrolPolicy::Lognormal { sigma: 0.75 }
    }
}

/// Independent per-block-group draws of the census covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemographicModel {
    /// Probability a block group is majority Black.
    pub black_majority_share: f64,
    pub population: (f64, f64),
    /// Share of officer homes placed in majority-Black block groups.
    pub officer_home_black_share: f64,
}

impl Default for DemographicModel {
    fn default() -> Self {
        DemographicModel {
            black_majority_share: 0.35,
            population: (600.0, 2500.0),
            officer_home_black_share: 0.4,
        }
    }
}

/// Poisson rates of recorded enforcement actions per patrol hour.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ActionRates {
    pub stops_per_hour: f64,
    pub arrests_per_hour: f64,
}

impl Default for ActionRates {
    fn default() -> Self {
        ActionRates {
            stops_per_hour: 0.4,
            arrests_per_hour: 0.05,
        }
    }
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::InfeasibleSpec(msg.into())
}

fn check_range(name: &str, (lo, hi): (f64, f64)) -> Result<()> {
    if lo.is_finite() && hi.is_finite() && 0.0 <= lo && lo <= hi {
        Ok(())
    } else {
        Err(infeasible(format!("{name} range ({lo}, {hi}) must satisfy 0 <= lo <= hi")))
    }
}

impl SynthSpec {
    pub fn end(&self) -> NaiveDate {
        self.start + Duration::days(self.days as i64)
    }

    pub fn validate(&self) -> Result<()> {
        if self.days == 0 {
            return Err(infeasible("days must be at least 1"));
        }
        if self.cities.is_empty() {
            return Err(infeasible("at least one city is required"));
        }
        let mut seen = std::collections::BTreeSet::new();
        let mut any_officers = false;
        for c in &self.cities {
            if !seen.insert(&c.city_id) || c.city_id.is_empty() {
                return Err(infeasible(format!("city ids must be unique and non-empty: {:?}", c.city_id)));
            }
            if c.rows == 0 || c.cols == 0 {
                return Err(infeasible(format!("{}: grid must have at least one block group", c.city_id)));
            }
            if !(c.cell_m.is_finite() && c.cell_m >= 400.0) {
                return Err(infeasible(format!(
                    "{}: cell_m {} too small to hold a station footprint and a home",
                    c.city_id, c.cell_m
                )));
            }
            if c.n_officers > 0 && c.n_stations == 0 {
                return Err(infeasible(format!("{}: officers need at least one station", c.city_id)));
            }
            if c.n_stations > c.rows * c.cols {
                return Err(infeasible(format!(
                    "{}: {} stations do not fit in {} block groups",
                    c.city_id,
                    c.n_stations,
                    c.rows * c.cols
                )));
            }
            any_officers |= c.n_officers > 0;
        }
        let s = &self.shift;
        if s.start_hours.is_empty() || s.start_hours.iter().any(|h| !(0.0..24.0).contains(h)) {
            return Err(infeasible("shift start hours must be non-empty and within [0, 24)"));
        }
        if !(0.0 < s.length_min_h && s.length_min_h <= s.length_mean_h && s.length_mean_h <= s.length_max_h) {
            return Err(infeasible("shift lengths must satisfy 0 < min <= mean <= max"));
        }
        if s.length_max_h + 2.0 >= 24.0 {
            return Err(infeasible(format!(
                "shift length up to {} h leaves no room for home visits inside the 24 h bracket",
                s.length_max_h
            )));
        }
        check_range("station_stay_min", s.station_stay_min)?;
        check_range("patrol_stay_min", s.patrol_stay_min)?;
        if s.patrol_stay_min.1 <= 0.0 {
            return Err(infeasible("patrol stays must have positive length"));
        }
        if 2.0 * s.station_stay_min.1 / 60.0 + 0.5 > s.length_min_h {
            return Err(infeasible("station stays leave no time for patrol in the shortest shift"));
        }
        if !(5..=7).contains(&s.workdays_per_week) {
            return Err(infeasible("workdays_per_week must be 5, 6 or 7 to reach 5 station days a month"));
        }
        if !(s.travel_mph.is_finite() && s.travel_mph > 0.0) {
            return Err(infeasible("travel_mph must be positive"));
        }
        let g = &self.ping_gap;
        if !(g.shift_s >= 1.0 && g.mode_s > g.shift_s && g.sigma > 0.0 && g.sigma.is_finite()) {
            return Err(infeasible("ping gaps need shift_s >= 1, mode_s > shift_s and sigma > 0"));
        }
        if !(self.gps_noise_m.is_finite() && self.gps_noise_m >= 0.0) {
            return Err(infeasible("gps_noise_m must be a non-negative number"));
        }
        match &self.patrol_policy {
            PatrolPolicy::Lognormal { sigma } if !(sigma.is_finite() && *sigma >= 0.0) => {
                return Err(infeasible("lognormal sigma must be non-negative"))
            }
            PatrolPolicy::RaceWeighted { coef } if !coef.is_finite() => {
                return Err(infeasible("race-weight coefficient must be finite"))
            }
            PatrolPolicy::Weights { weights } if weights.values().any(|w| !(w.is_finite() && *w >= 0.0)) => {
                return Err(infeasible("patrol weights must be finite and non-negative"))
            }
            _ => {}
        }
        let d = &self.demographics;
        if !(0.0..=1.0).contains(&d.black_majority_share) || !(0.0..=1.0).contains(&d.officer_home_black_share) {
            return Err(infeasible("demographic shares must lie in [0, 1]"));
        }
        check_range("population", d.population)?;
        if ![self.actions.stops_per_hour, self.actions.arrests_per_hour]
            .iter()
            .all(|r| r.is_finite() && *r >= 0.0)
        {
            return Err(infeasible("action rates must be non-negative"));
        }
        if self.zone_size == 0 {
            return Err(infeasible("zone_size must be at least 1"));
        }
        if any_officers {
            // officers need five station days in every month the window touches
            let mut day = self.start;
            let end = self.end();
            while day < end {
                let month_end = NaiveDate::from_ymd_opt(
                    if day.month() == 12 { day.year() + 1 } else { day.year() },
                    if day.month() == 12 { 1 } else { day.month() + 1 },
                    1,
                )
                .expect("valid date");
                let portion = (month_end.min(end) - day).num_days();
                if portion < 7 {
                    return Err(infeasible(format!(
                        "the window covers only {portion} day(s) of {}-{:02}; officers cannot reach 5 station days",
                        day.year(),
                        day.month()
                    )));
                }
                day = month_end;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        SynthSpec::default().validate().unwrap();
    }

    #[test]
    fn shift_longer_than_bracket_is_fatal() {
        let mut s = SynthSpec::default();
        s.shift.length_max_h = 23.0;
        let err = s.validate().unwrap_err().to_string();
        assert!(err.contains("24 h bracket"), "{err}");
    }

    #[test]
    fn short_month_portion_is_fatal() {
        let mut s = SynthSpec::default();
        s.start = "2017-02-01".parse().unwrap();
        s.days = 30;
        assert!(s.validate().is_err());
        s.cities[0].n_officers = 0;
        s.validate().unwrap();
    }

    #[test]
    fn gap_mode_is_pinned() {
        let g = GapModel::default();
        // lognormal mode is exp(mu - sigma^2)
        let mode = g.shift_s + (g.mu() - g.sigma * g.sigma).exp();
        assert!((mode - 600.0).abs() < 1e-9);
    }
}
