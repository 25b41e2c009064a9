//! Patrol shift reconstruction.
//!
//! Each ping of a qualified device is classified as `Home` (inside the home
//! Geohash-7 of its half), `Station` (inside any station footprint) or
//! `Other`. Consecutive home pings bracket an excursion; an excursion is a
//! shift when it visits a station, patrols outside the stations, and visits
//! a station again before the next home ping. The shift runs from the first
//! to the last station ping of the excursion.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::corpus::{Month, Ping, StationIndex, StudyWindow};
use crate::geo::Geohash7;
use crate::officers::{device_city, Homes, MonthQualification};

const HOUR: f64 = 3600.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShiftConfig {
    /// Minimum station-to-station span.
    pub min_shift_h: f64,
    /// Optional maximum span (robustness variants such as 8-12 h shifts).
    pub max_shift_h: Option<f64>,
    /// Maximum time between the bracketing home visits.
    pub bracket_max_h: f64,
    /// Require the opening and closing station to be the same building.
    pub require_same_station: bool,
}

impl Default for ShiftConfig {
    fn default() -> Self {
        ShiftConfig {
            min_shift_h: 4.0,
            max_shift_h: None,
            bracket_max_h: 24.0,
            require_same_station: false,
        }
    }
}

/// One reconstructed patrol episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Shift {
    pub device_id: String,
    /// First station ping of the excursion.
    pub start_ts: i64,
    /// Last station ping of the excursion.
    pub end_ts: i64,
    /// Pings strictly between `start_ts` and `end_ts` outside every station.
    pub patrol_pings: Vec<Ping>,
    pub bracket_home_before: i64,
    pub bracket_home_after: i64,
    pub station_in: String,
    pub station_out: String,
    /// City of the opening station.
    pub city_id: String,
}

impl Shift {
    pub fn duration_h(&self) -> f64 {
        (self.end_ts - self.start_ts) as f64 / HOUR
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Place {
    Home,
    Station(usize),
    Other,
}

/// Scans one device stream (time-sorted) for completed
/// home → station → patrol → station → home patterns.
///
/// Only shifts starting in a qualified month of the device are emitted, and
/// only where a home exists for the half containing the bracketing pings.
pub fn detect_shifts(
    device_id: &str,
    stream: &[Ping],
    homes: &Homes,
    stations: &StationIndex,
    quals: &[MonthQualification],
    window: &StudyWindow,
    cfg: &ShiftConfig,
) -> Vec<Shift> {
    let qualified: BTreeSet<Month> = quals.iter().filter(|q| q.qualified).map(|q| q.month).collect();
    if qualified.is_empty() || (homes.h1.is_none() && homes.h2.is_none()) {
        return Vec::new();
    }
    let city = device_city(quals).unwrap_or_default();
    let all_stations = stations.stations();
    let station_pos: HashMap<&str, usize> = all_stations
        .iter()
        .enumerate()
        .map(|(i, s)| (s.station_id.as_str(), i))
        .collect();

    let places: Vec<Place> = stream
        .iter()
        .map(|p| {
            if let Some(s) = stations.locate(p.location) {
                return Place::Station(station_pos[s.station_id.as_str()]);
            }
            let month = Month::of(window.local_date(p.ts, &city));
            let home = window.half_of(month).and_then(|h| homes.get(h));
            match home {
                Some(h) if h.home_cell == Geohash7::encode(p.location) => Place::Home,
                _ => Place::Other,
            }
        })
        .collect();

    let home_idx: Vec<usize> = places
        .iter()
        .enumerate()
        .filter(|(_, pl)| **pl == Place::Home)
        .map(|(i, _)| i)
        .collect();

    let mut shifts = Vec::new();
    for pair in home_idx.windows(2) {
        let (ha, hb) = (pair[0], pair[1]);
        if hb - ha < 2 {
            continue;
        }
        let inner = ha + 1..hb;
        let first = inner.clone().find(|&i| matches!(places[i], Place::Station(_)));
        let last = inner.rev().find(|&i| matches!(places[i], Place::Station(_)));
        let (Some(first), Some(last)) = (first, last) else {
            continue;
        };
        if first == last {
            continue;
        }
        let patrol: Vec<Ping> = (first + 1..last)
            .filter(|&i| places[i] == Place::Other)
            .map(|i| stream[i].clone())
            .collect();
        if patrol.is_empty() {
            continue;
        }
        let (start_ts, end_ts) = (stream[first].ts, stream[last].ts);
        let span = (end_ts - start_ts) as f64;
        if span < cfg.min_shift_h * HOUR {
            continue;
        }
        if cfg.max_shift_h.is_some_and(|m| span > m * HOUR) {
            continue;
        }
        if (stream[hb].ts - stream[ha].ts) as f64 > cfg.bracket_max_h * HOUR {
            continue;
        }
        let (Place::Station(si), Place::Station(so)) = (places[first], places[last]) else {
            unreachable!("bracketing pings are station pings");
        };
        if cfg.require_same_station && si != so {
            continue;
        }
        let station_in = &all_stations[si];
        let start_month = Month::of(window.local_date(start_ts, &station_in.city_id));
        if !qualified.contains(&start_month) {
            continue;
        }
        shifts.push(Shift {
            device_id: device_id.to_string(),
            start_ts,
            end_ts,
            patrol_pings: patrol,
            bracket_home_before: stream[ha].ts,
            bracket_home_after: stream[hb].ts,
            station_in: station_in.station_id.clone(),
            station_out: all_stations[so].station_id.clone(),
            city_id: station_in.city_id.clone(),
        });
    }
    shifts
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShiftSummary {
    pub n_shifts: usize,
    /// Devices with at least one shift.
    pub n_devices: usize,
    pub mean_h: f64,
    pub median_h: f64,
    /// Shifts per device-month that has at least one shift.
    pub shifts_per_device_month: f64,
}

/// Summary over a shift set; `None` for an empty set.
pub fn shift_statistics(shifts: &[Shift], window: &StudyWindow) -> Option<ShiftSummary> {
    if shifts.is_empty() {
        return None;
    }
    let mut lengths: Vec<f64> = shifts.iter().map(Shift::duration_h).collect();
    lengths.sort_by(f64::total_cmp);
    let n = lengths.len();
    let median_h = if n % 2 == 1 {
        lengths[n / 2]
    } else {
        (lengths[n / 2 - 1] + lengths[n / 2]) / 2.0
    };
    let total_s: i64 = shifts.iter().map(|s| s.end_ts - s.start_ts).sum();
    let devices: BTreeSet<&str> = shifts.iter().map(|s| s.device_id.as_str()).collect();
    let device_months: BTreeSet<(&str, Month)> = shifts
        .iter()
        .map(|s| (s.device_id.as_str(), Month::of(window.local_date(s.start_ts, &s.city_id))))
        .collect();
    Some(ShiftSummary {
        n_shifts: n,
        n_devices: devices.len(),
        mean_h: total_s as f64 / HOUR / n as f64,
        median_h,
        shifts_per_device_month: n as f64 / device_months.len() as f64,
    })
}
