#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use patrolscope::corpus::{BlockGroup, BlockGroupIndex, CalendarMode, Ping, Station, StationIndex, StudyWindow, WindowConfig};
use patrolscope::geo::{ConvexPolygon, GeoPoint, Ring};

pub const CITY: &str = "c";
/// 2017-03-01T00:00:00Z
pub const T0: i64 = 1_488_326_400;
pub const HOUR: i64 = 3600;
pub const DAY: i64 = 86_400;

pub fn origin() -> GeoPoint {
    GeoPoint::new(41.80, -87.70).unwrap()
}

/// March 2017 on the UTC calendar.
pub fn march_window() -> StudyWindow {
    StudyWindow::new(&WindowConfig {
        start: "2017-03-01".parse().unwrap(),
        end: "2017-04-01".parse().unwrap(),
        timezone_by_city: [(CITY.to_string(), "UTC".to_string())].into(),
        calendar: CalendarMode::Utc,
    })
    .unwrap()
}

/// `rows x cols` square block groups of `cell_m` meters starting at the
/// origin, ids `bg_RR_CC`.
pub fn grid(rows: u32, cols: u32, cell_m: f64) -> BlockGroupIndex {
    let o = origin();
    let mut v = Vec::new();
    for r in 0..rows {
        for c in 0..cols {
            let p = |dr: u32, dc: u32| o.offset_m((r + dr) as f64 * cell_m, (c + dc) as f64 * cell_m);
            v.push(BlockGroup {
                bg_id: format!("bg_{r:02}_{c:02}"),
                city_id: CITY.into(),
                polygon: Ring::new(vec![p(0, 0), p(0, 1), p(1, 1), p(1, 0)]).unwrap(),
                attributes: BTreeMap::new(),
            });
        }
    }
    BlockGroupIndex::new(v)
}

/// One 150 m square station centered at the origin.
pub fn one_station() -> StationIndex {
    let o = origin();
    let corners = [(-75.0, -75.0), (-75.0, 75.0), (75.0, 75.0), (75.0, -75.0)]
        .map(|(n, e)| o.offset_m(n, e))
        .to_vec();
    StationIndex::new(vec![Station {
        station_id: "st0".into(),
        city_id: CITY.into(),
        footprint: ConvexPolygon::new(corners).unwrap(),
    }])
}

pub fn ping(device: &Arc<str>, ts: i64, p: GeoPoint) -> Ping {
    Ping {
        device_id: device.clone(),
        ts,
        location: p,
    }
}

/// Files of two output directories that differ, ignoring the run report.
pub fn differing_files(a: &Path, b: &Path) -> Vec<String> {
    let fa = patrolscope::pipeline::reproducible_files(a).unwrap();
    let fb = patrolscope::pipeline::reproducible_files(b).unwrap();
    let mut diff: Vec<String> = Vec::new();
    if fa != fb {
        diff.push(format!("file lists differ: {fa:?} vs {fb:?}"));
    }
    for f in &fa {
        if std::fs::read(a.join(f)).ok() != std::fs::read(b.join(f)).ok() {
            diff.push(f.display().to_string());
        }
    }
    diff
}

/// `term -> (coefficient, se, p)` from a coefficient CSV.
pub fn read_coefficients(path: &Path) -> BTreeMap<String, (f64, f64, f64)> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path).unwrap();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            (
                rec[0].to_string(),
                (rec[1].parse().unwrap(), rec[2].parse().unwrap(), rec[3].parse().unwrap()),
            )
        })
        .collect()
}
