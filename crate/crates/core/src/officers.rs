//! Officer identification: station-day qualification per device-month, home
//! cell inference per half of the study window, and race-share imputation
//! from the home block group.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::corpus::{BlockGroupIndex, Half, Month, Ping, StationIndex, StudyWindow};
use crate::geo::Geohash7;

/// Distinct station days in a month needed to flag a police employee.
pub const STATION_DAYS_MIN: u32 = 5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonthQualification {
    pub device_id: String,
    pub month: Month,
    /// Distinct local days with a ping inside a station of `city_id`.
    pub station_days: u32,
    pub qualified: bool,
    /// City whose stations account for the most station days this month.
    pub city_id: String,
}

/// One record per month with any station ping. Days are counted in the
/// station city's calendar; the month's city is the one with the most
/// station days (ties to the smallest id).
pub fn qualify_months(
    device_id: &str,
    stream: &[Ping],
    stations: &StationIndex,
    window: &StudyWindow,
    station_days_min: u32,
) -> Vec<MonthQualification> {
    let mut days: BTreeMap<Month, BTreeMap<&str, BTreeSet<NaiveDate>>> = BTreeMap::new();
    for p in stream {
        let Some(station) = stations.locate(p.location) else {
            continue;
        };
        let date = window.local_date(p.ts, &station.city_id);
        let month = Month::of(date);
        if window.half_of(month).is_none() {
            continue;
        }
        days.entry(month)
            .or_default()
            .entry(station.city_id.as_str())
            .or_default()
            .insert(date);
    }
    days.into_iter()
        .map(|(month, by_city)| {
            let (city, n) = by_city.iter().fold(("", 0u32), |best, (city, d)| {
                let n = d.len() as u32;
                if n > best.1 {
                    (city, n)
                } else {
                    best
                }
            });
            MonthQualification {
                device_id: device_id.to_string(),
                month,
                station_days: n,
                qualified: n >= station_days_min,
                city_id: city.to_string(),
            }
        })
        .collect()
}

/// City with the most qualified months (ties to the smallest id).
pub fn device_city(quals: &[MonthQualification]) -> Option<String> {
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    for q in quals.iter().filter(|q| q.qualified) {
        *counts.entry(q.city_id.as_str()).or_default() += 1;
    }
    counts
        .into_iter()
        .fold(None, |best: Option<(&str, usize)>, (c, n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((c, n)),
        })
        .map(|(c, _)| c.to_string())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HomeLocation {
    pub device_id: String,
    pub half: Half,
    pub home_cell: Geohash7,
    /// Pings in the modal cell.
    pub support: u32,
}

/// Home cells for both halves of the window; a half with no usable pings
/// has no home.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Homes {
    pub h1: Option<HomeLocation>,
    pub h2: Option<HomeLocation>,
}

impl Homes {
    pub fn get(&self, half: Half) -> Option<&HomeLocation> {
        match half {
            Half::H1 => self.h1.as_ref(),
            Half::H2 => self.h2.as_ref(),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = &HomeLocation> {
        self.h1.iter().chain(self.h2.iter())
    }
}

/// Modal Geohash-7 of the pings outside every station footprint, separately
/// per half. Months are read on the clock of `city_id` (UTC when `None`).
/// Ties go to the lexicographically smallest cell.
pub fn infer_home(
    device_id: &str,
    stream: &[Ping],
    stations: &StationIndex,
    window: &StudyWindow,
    city_id: Option<&str>,
) -> Homes {
    let city = city_id.unwrap_or("");
    let mut tally: BTreeMap<Half, BTreeMap<Geohash7, u32>> = BTreeMap::new();
    for p in stream {
        if stations.is_inside_any(p.location) {
            continue;
        }
        let month = Month::of(window.local_date(p.ts, city));
        let Some(half) = window.half_of(month) else {
            continue;
        };
        *tally
            .entry(half)
            .or_default()
            .entry(Geohash7::encode(p.location))
            .or_default() += 1;
    }
    let modal = |half: Half| {
        let cells = tally.get(&half)?;
        let (cell, support) = cells.iter().fold(None, |best: Option<(&Geohash7, u32)>, (c, &n)| match best {
            Some((_, bn)) if bn >= n => best,
            _ => Some((c, n)),
        })?;
        Some(HomeLocation {
            device_id: device_id.to_string(),
            half,
            home_cell: *cell,
            support,
        })
    };
    Homes {
        h1: modal(Half::H1),
        h2: modal(Half::H2),
    }
}

/// Race/ethnicity share vector of a block group. Categories overlap in
/// census data, so components need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RaceShares {
    pub white: f64,
    pub black: f64,
    pub hispanic: f64,
    pub asian: f64,
}

impl RaceShares {
    pub fn sum(&self) -> f64 {
        self.white + self.black + self.hispanic + self.asian
    }

    pub fn get(&self, group: &str) -> Option<f64> {
        match group {
            "white" => Some(self.white),
            "black" => Some(self.black),
            "hispanic" => Some(self.hispanic),
            "asian" => Some(self.asian),
            _ => None,
        }
    }

    pub fn mean(items: &[RaceShares]) -> Option<RaceShares> {
        if items.is_empty() {
            return None;
        }
        let n = items.len() as f64;
        let mut m = RaceShares::default();
        for v in items {
            m.white += v.white;
            m.black += v.black;
            m.hispanic += v.hispanic;
            m.asian += v.asian;
        }
        m.white /= n;
        m.black /= n;
        m.hispanic /= n;
        m.asian /= n;
        Some(m)
    }
}

/// Share vector of the block group containing the home cell's center.
/// `None` when the center lies outside every block group or the block group
/// lacks a share.
pub fn impute_device_race(home: &HomeLocation, blockgroups: &BlockGroupIndex) -> Option<RaceShares> {
    let bg = blockgroups.get(blockgroups.locate(home.home_cell.center())?);
    Some(RaceShares {
        white: bg.attr("pct_white")?,
        black: bg.attr("pct_black")?,
        hispanic: bg.attr("pct_hispanic")?,
        asian: bg.attr("pct_asian")?,
    })
}

/// Expected-value race vector of a device: mean over its resolvable homes.
pub fn device_race(homes: &Homes, blockgroups: &BlockGroupIndex) -> Option<RaceShares> {
    let vs: Vec<RaceShares> = homes.iter().filter_map(|h| impute_device_race(h, blockgroups)).collect();
    RaceShares::mean(&vs)
}

/// Department composition as the mean of member device vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Composition {
    pub shares: Option<RaceShares>,
    pub n_devices: usize,
    /// Devices whose homes resolve to no block group.
    pub n_excluded: usize,
}

pub fn department_composition(vectors: &[Option<RaceShares>]) -> Composition {
    let found: Vec<RaceShares> = vectors.iter().flatten().copied().collect();
    Composition {
        shares: RaceShares::mean(&found),
        n_devices: found.len(),
        n_excluded: vectors.len() - found.len(),
    }
}
