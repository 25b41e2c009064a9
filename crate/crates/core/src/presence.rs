//! Officer-hours per block group from shift patrol pings.
//!
//! Dwell is kept in integer half-seconds so that every sum in this module is
//! exact and independent of accumulation order.

use std::collections::BTreeMap;

use chrono::{Datelike, Timelike, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{local_datetime, BlockGroupIndex, CalendarMode, Ping, StudyWindow};
use crate::error::{Error, Result};
use crate::geo::haversine_m;
use crate::geo::METERS_PER_MILE;
use crate::shifts::Shift;

/// Number of hour-of-shift buckets; the last one collects hour 12 and later.
pub const SHIFT_HOUR_BUCKETS: usize = 12;

/// Ping dwell time in half-seconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Default, Hash, Serialize, Deserialize)]
pub struct Dwell(pub i64);

impl Dwell {
    pub const UNITS_PER_SECOND: i64 = 2;
    pub const UNITS_PER_HOUR: i64 = 7200;

    pub fn seconds(self) -> f64 {
        self.0 as f64 / Self::UNITS_PER_SECOND as f64
    }

    pub fn hours(self) -> f64 {
        self.0 as f64 / Self::UNITS_PER_HOUR as f64
    }
}

impl std::ops::Add for Dwell {
    type Output = Dwell;
    fn add(self, rhs: Dwell) -> Dwell {
        Dwell(self.0 + rhs.0)
    }
}

impl std::ops::AddAssign for Dwell {
    fn add_assign(&mut self, rhs: Dwell) {
        self.0 += rhs.0;
    }
}

impl std::iter::Sum for Dwell {
    fn sum<I: Iterator<Item = Dwell>>(iter: I) -> Dwell {
        Dwell(iter.map(|d| d.0).sum())
    }
}

/// Half the gap between each ping's neighbors; endpoints take half the gap
/// to their single neighbor and a lone ping gets zero. The total equals
/// `last - first` exactly.
pub fn assign_dwell(ts: &[i64]) -> Vec<Dwell> {
    let n = ts.len();
    if n < 2 {
        return vec![Dwell(0); n];
    }
    (0..n)
        .map(|i| {
            let lo = ts[i.saturating_sub(1)];
            let hi = ts[(i + 1).min(n - 1)];
            // half-second units: (hi - lo) / 2 seconds == (hi - lo) units
            Dwell(hi - lo)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresenceConfig {
    /// Pings faster than this relative to the previous retained ping are
    /// dropped. `None` disables the filter.
    pub speed_cap_mph: Option<f64>,
    /// Drop dwell credited to pings between 09:00 and 17:00 Monday-Friday.
    pub exclude_weekday_9to5: bool,
    /// Clock used for the weekday rule.
    pub weekday_clock: CalendarMode,
}

impl Default for PresenceConfig {
    fn default() -> Self {
        PresenceConfig::main_text()
    }
}

impl PresenceConfig {
    /// 50 mph speed cap, all hours.
    pub fn main_text() -> Self {
        PresenceConfig {
            speed_cap_mph: Some(50.0),
            exclude_weekday_9to5: false,
            weekday_clock: CalendarMode::CityLocal,
        }
    }

    /// 25 mph speed cap used by the appendix robustness tables.
    pub fn appendix_tables() -> Self {
        PresenceConfig {
            speed_cap_mph: Some(25.0),
            ..Self::main_text()
        }
    }

    /// Non-working-hours variant.
    pub fn non_working_hours() -> Self {
        PresenceConfig {
            exclude_weekday_9to5: true,
            ..Self::main_text()
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.speed_cap_mph {
            Some(v) if !(v.is_finite() && v > 0.0) => {
                Err(Error::Config(format!("speed_cap_mph must be positive, got {v}")))
            }
            _ => Ok(()),
        }
    }
}

/// Officer presence in one block group.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresenceCell {
    pub bg_id: String,
    pub dwell: Dwell,
    pub hours: f64,
    /// Distinct shifts with at least one counted ping here.
    pub shift_count: u32,
    /// Hours by hour of shift, 1..=11 and 12+.
    pub hours_by_shift_hour: [f64; SHIFT_HOUR_BUCKETS],
    pub dwell_by_shift_hour: [Dwell; SHIFT_HOUR_BUCKETS],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PresenceResult {
    /// Block groups with any counted dwell, sorted by id.
    pub cells: Vec<PresenceCell>,
    pub unassigned: Dwell,
    pub unassigned_pings: u64,
    pub counted_pings: u64,
    pub speed_excluded_pings: u64,
    pub time_excluded_pings: u64,
    /// Dwell over speed-filtered sequences before the weekday rule.
    pub filtered_dwell: Dwell,
    /// Sum of counted dwell (block groups plus unassigned).
    pub counted_dwell: Dwell,
}

/// Patrol pings kept by the speed filter. Speed is measured against the
/// previous retained ping; a ping at the same instant as that ping is kept
/// only if it has not moved.
pub fn speed_filter(pings: &[Ping], cap_mph: Option<f64>) -> (Vec<&Ping>, u64) {
    let mut kept: Vec<&Ping> = Vec::with_capacity(pings.len());
    let mut dropped = 0;
    for p in pings {
        let ok = match (cap_mph, kept.last()) {
            (Some(cap), Some(prev)) => {
                let dt = p.ts - prev.ts;
                let meters = haversine_m(prev.location, p.location);
                if dt <= 0 {
                    meters == 0.0
                } else {
                    meters / dt as f64 * 3600.0 / METERS_PER_MILE <= cap
                }
            }
            _ => true,
        };
        if ok {
            kept.push(p);
        } else {
            dropped += 1;
        }
    }
    (kept, dropped)
}

fn hour_of_shift(ts: i64, start: i64) -> usize {
    // ceil((t - start) / 1h), bucketed into 1..=12
    let secs = (ts - start).max(1);
    let h = (secs + 3599) / 3600;
    (h as usize).clamp(1, SHIFT_HOUR_BUCKETS)
}

fn is_weekday_working_hour(ts: i64, shift: &Shift, window: &StudyWindow, clock: CalendarMode) -> bool {
    let tz = match clock {
        CalendarMode::CityLocal => window.city_tz(&shift.city_id),
        CalendarMode::Utc => chrono_tz::Tz::UTC,
    };
    let t = local_datetime(ts, tz);
    let weekday = !matches!(t.weekday(), Weekday::Sat | Weekday::Sun);
    weekday && (9..17).contains(&t.hour())
}

#[derive(Default, Clone)]
struct Acc {
    dwell: Dwell,
    by_hour: [Dwell; SHIFT_HOUR_BUCKETS],
    shifts: u32,
}

#[derive(Default)]
struct Partial {
    cells: BTreeMap<usize, Acc>,
    unassigned: Dwell,
    unassigned_pings: u64,
    counted_pings: u64,
    speed_excluded: u64,
    time_excluded: u64,
    filtered: Dwell,
}

impl Partial {
    fn merge(mut self, other: Partial) -> Partial {
        for (k, a) in other.cells {
            let e = self.cells.entry(k).or_default();
            e.dwell += a.dwell;
            e.shifts += a.shifts;
            for (x, y) in e.by_hour.iter_mut().zip(a.by_hour) {
                *x += y;
            }
        }
        self.unassigned += other.unassigned;
        self.unassigned_pings += other.unassigned_pings;
        self.counted_pings += other.counted_pings;
        self.speed_excluded += other.speed_excluded;
        self.time_excluded += other.time_excluded;
        self.filtered += other.filtered;
        self
    }
}

fn shift_partial(shift: &Shift, bgs: &BlockGroupIndex, window: &StudyWindow, cfg: &PresenceConfig) -> Partial {
    let mut part = Partial::default();
    let (kept, dropped) = speed_filter(&shift.patrol_pings, cfg.speed_cap_mph);
    part.speed_excluded = dropped;
    let ts: Vec<i64> = kept.iter().map(|p| p.ts).collect();
    let dwell = assign_dwell(&ts);
    part.filtered = dwell.iter().copied().sum();
    for (p, d) in kept.iter().zip(dwell) {
        if cfg.exclude_weekday_9to5 && is_weekday_working_hour(p.ts, shift, window, cfg.weekday_clock) {
            part.time_excluded += 1;
            continue;
        }
        part.counted_pings += 1;
        match bgs.locate(p.location) {
            Some(i) => {
                let acc = part.cells.entry(i).or_default();
                acc.dwell += d;
                acc.by_hour[hour_of_shift(p.ts, shift.start_ts) - 1] += d;
                acc.shifts = 1;
            }
            None => {
                part.unassigned += d;
                part.unassigned_pings += 1;
            }
        }
    }
    part
}

/// Accumulates filtered patrol dwell into block groups. Per-shift partials
/// are computed in parallel and merged with integer addition, so the result
/// does not depend on the number of workers.
pub fn aggregate_presence(
    shifts: &[Shift],
    bgs: &BlockGroupIndex,
    window: &StudyWindow,
    cfg: &PresenceConfig,
) -> Result<PresenceResult> {
    cfg.validate()?;
    let total = shifts
        .par_iter()
        .map(|s| shift_partial(s, bgs, window, cfg))
        .reduce(Partial::default, Partial::merge);
    let cells: Vec<PresenceCell> = total
        .cells
        .into_iter()
        .map(|(i, acc)| PresenceCell {
            bg_id: bgs.get(i).bg_id.clone(),
            dwell: acc.dwell,
            hours: acc.dwell.hours(),
            shift_count: acc.shifts,
            hours_by_shift_hour: acc.by_hour.map(Dwell::hours),
            dwell_by_shift_hour: acc.by_hour,
        })
        .collect();
    let counted_dwell = cells.iter().map(|c| c.dwell).sum::<Dwell>() + total.unassigned;
    Ok(PresenceResult {
        cells,
        unassigned: total.unassigned,
        unassigned_pings: total.unassigned_pings,
        counted_pings: total.counted_pings,
        speed_excluded_pings: total.speed_excluded,
        time_excluded_pings: total.time_excluded,
        filtered_dwell: total.filtered,
        counted_dwell,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    #[default]
    None,
    Arsinh,
}

impl Transform {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Transform::None => x,
            Transform::Arsinh => arsinh(x),
        }
    }
}

/// Inverse hyperbolic sine, `ln(x + sqrt(x^2 + 1))`.
pub fn arsinh(x: f64) -> f64 {
    x.asinh()
}

/// Outcome per block group, including zero-presence block groups.
pub fn presence_vector(cells: &[PresenceCell], bgs: &BlockGroupIndex, transform: Transform) -> BTreeMap<String, f64> {
    let hours: BTreeMap<&str, f64> = cells.iter().map(|c| (c.bg_id.as_str(), c.hours)).collect();
    bgs.blockgroups()
        .iter()
        .map(|b| {
            let h = hours.get(b.bg_id.as_str()).copied().unwrap_or(0.0);
            (b.bg_id.clone(), transform.apply(h))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{BlockGroup, WindowConfig};
    use crate::geo::{GeoPoint, Ring};
    use std::sync::Arc;

    const MIN: i64 = 60;

    #[test]
    fn dwell_examples() {
        let d = assign_dwell(&[0, 10 * MIN, 20 * MIN]);
        assert_eq!(d.iter().map(|x| x.seconds()).collect::<Vec<_>>(), vec![300.0, 600.0, 300.0]);
        let d = assign_dwell(&[0, 10 * MIN, 40 * MIN]);
        assert_eq!(d.iter().map(|x| x.seconds()).collect::<Vec<_>>(), vec![300.0, 1200.0, 900.0]);
        assert_eq!(d.iter().copied().sum::<Dwell>().seconds(), 2400.0);
        assert_eq!(assign_dwell(&[5]), vec![Dwell(0)]);
        assert!(assign_dwell(&[]).is_empty());
    }

    #[test]
    fn odd_gaps_stay_exact() {
        let d = assign_dwell(&[0, 7, 8]);
        assert_eq!(d, vec![Dwell(7), Dwell(8), Dwell(1)]);
        assert_eq!(d.iter().copied().sum::<Dwell>(), Dwell(16));
    }

    #[test]
    fn arsinh_values() {
        assert_eq!(arsinh(0.0), 0.0);
        assert!((arsinh(1.0) - 0.881_373_587_019_543).abs() < 1e-6);
        assert!((arsinh(26.685) - 3.9775).abs() < 1e-4);
    }

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn bgs() -> BlockGroupIndex {
        let sq = |id: &str, lon: f64| BlockGroup {
            bg_id: id.into(),
            city_id: "c".into(),
            polygon: Ring::new(vec![pt(41.0, lon), pt(41.0, lon + 0.1), pt(41.1, lon + 0.1), pt(41.1, lon)]).unwrap(),
            attributes: Default::default(),
        };
        BlockGroupIndex::new(vec![sq("a", -87.2), sq("b", -87.1)])
    }

    fn window() -> StudyWindow {
        StudyWindow::new(&WindowConfig {
            start: "2017-02-01".parse().unwrap(),
            end: "2017-12-01".parse().unwrap(),
            timezone_by_city: Default::default(),
            calendar: CalendarMode::Utc,
        })
        .unwrap()
    }

    fn shift(pings: Vec<(i64, GeoPoint)>) -> Shift {
        let start = pings[0].0 - 10 * MIN;
        let end = pings.last().unwrap().0 + 10 * MIN;
        Shift {
            device_id: "d".into(),
            start_ts: start,
            end_ts: end,
            patrol_pings: pings
                .into_iter()
                .map(|(ts, location)| Ping {
                    device_id: Arc::from("d"),
                    ts,
                    location,
                })
                .collect(),
            bracket_home_before: start - 3600,
            bracket_home_after: end + 3600,
            station_in: "s".into(),
            station_out: "s".into(),
            city_id: "c".into(),
        }
    }

    const T0: i64 = 1_488_326_400;

    #[test]
    fn single_bg_shift_conserves_hours() {
        let p = pt(41.05, -87.15);
        let s = shift((0..=48).map(|k| (T0 + k * 10 * MIN, p)).collect());
        let r = aggregate_presence(&[s], &bgs(), &window(), &PresenceConfig::main_text()).unwrap();
        assert_eq!(r.cells.len(), 1);
        assert_eq!(r.cells[0].bg_id, "a");
        assert_eq!(r.cells[0].hours, 8.0);
        assert_eq!(r.cells[0].shift_count, 1);
        assert_eq!(r.cells[0].dwell_by_shift_hour.iter().copied().sum::<Dwell>().hours(), 8.0);
        assert_eq!(r.unassigned, Dwell(0));
    }

    #[test]
    fn fast_ping_excluded() {
        let a = pt(41.05, -87.15);
        let b = a.offset_m(2000.0, 0.0);
        let s = shift(vec![(T0, a), (T0 + 60, b), (T0 + 600, a)]);
        let r = aggregate_presence(std::slice::from_ref(&s), &bgs(), &window(), &PresenceConfig::main_text()).unwrap();
        assert_eq!(r.speed_excluded_pings, 1);
        assert_eq!(r.counted_pings, 2);
        assert_eq!(r.counted_dwell, Dwell(600 * 2));
        let none = PresenceConfig {
            speed_cap_mph: None,
            ..PresenceConfig::main_text()
        };
        let r = aggregate_presence(&[s], &bgs(), &window(), &none).unwrap();
        assert_eq!(r.speed_excluded_pings, 0);
    }

    #[test]
    fn outside_pings_go_unassigned() {
        let s = shift(vec![(T0, pt(41.05, -87.15)), (T0 + 600, pt(45.0, -80.0)), (T0 + 1200, pt(41.05, -87.05))]);
        let cfg = PresenceConfig {
            speed_cap_mph: None,
            ..Default::default()
        };
        let r = aggregate_presence(&[s], &bgs(), &window(), &cfg).unwrap();
        assert_eq!(r.unassigned_pings, 1);
        assert_eq!(r.unassigned, Dwell(1200));
        assert_eq!(r.cells.len(), 2);
        assert_eq!(r.counted_dwell, r.filtered_dwell);
    }

    #[test]
    fn weekday_rule_drops_office_hours() {
        // 2017-03-01 is a Wednesday; pings every 30 min from 06:00 to 20:00 UTC
        let p = pt(41.05, -87.15);
        let s = shift((12..=40).map(|k| (T0 + k * 30 * MIN, p)).collect());
        let cfg = PresenceConfig {
            exclude_weekday_9to5: true,
            weekday_clock: CalendarMode::Utc,
            ..Default::default()
        };
        let r = aggregate_presence(&[s], &bgs(), &window(), &cfg).unwrap();
        // 09:00..16:30 inclusive = 16 pings
        assert_eq!(r.time_excluded_pings, 16);
        assert!(r.counted_dwell < r.filtered_dwell);
    }

    #[test]
    fn hour_buckets() {
        assert_eq!(hour_of_shift(10, 0), 1);
        assert_eq!(hour_of_shift(3600, 0), 1);
        assert_eq!(hour_of_shift(3601, 0), 2);
        assert_eq!(hour_of_shift(20 * 3600, 0), 12);
    }

    #[test]
    fn zero_presence_kept_in_vector() {
        let v = presence_vector(&[], &bgs(), Transform::Arsinh);
        assert_eq!(v.len(), 2);
        assert!(v.values().all(|&x| x == 0.0));
    }

    #[test]
    fn invalid_cap_rejected() {
        let cfg = PresenceConfig {
            speed_cap_mph: Some(0.0),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }
}
