//! Stage artifacts: plain CSV files with a `# config_hash=... version=...`
//! first line, read back by later stages.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use crate::corpus::{Month, Ping};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Geohash7};
use crate::officers::{HomeLocation, Homes, MonthQualification, RaceShares};
use crate::presence::{Dwell, PresenceCell, SHIFT_HOUR_BUCKETS};
use crate::shifts::Shift;

pub const INGEST_REPORT: &str = "ingest_report.json";
pub const REJECTS: &str = "rejects.csv";
pub const QUALIFICATIONS: &str = "qualifications.csv";
pub const OFFICERS: &str = "officers.csv";
pub const HOMES: &str = "homes.csv";
pub const OFFICER_RACE: &str = "officer_race.csv";
pub const SHIFTS: &str = "shifts.csv";
pub const PATROL_PINGS: &str = "patrol_pings.csv";
pub const PRESENCE: &str = "presence.csv";
pub const REGRESSION_TABLE: &str = "regression_table.txt";
pub const DECOMPOSITION: &str = "decomposition.csv";
pub const ELASTICITIES: &str = "elasticities.csv";
pub const SHIFT_HOUR_PROFILE: &str = "shift_hour_profile.csv";
pub const VALIDATION: &str = "validation.json";
pub const SYNTH_SCORES: &str = "synth_scores.json";
pub const SYNTH_DIR: &str = "synth";
pub const RUN_REPORT: &str = "run_report.json";
pub const FAILED: &str = "FAILED";

pub fn regression_file(model: &str) -> String {
    format!("regression_{model}.csv")
}

/// Provenance line shared by every numeric artifact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Header {
    pub config_hash: String,
    pub version: &'static str,
}

impl Header {
    pub fn new(config_hash: String) -> Header {
        Header {
            config_hash,
            version: env!("CARGO_PKG_VERSION"),
        }
    }

    pub fn line(&self) -> String {
        format!("config_hash={} version={}", self.config_hash, self.version)
    }
}

/// Writes a CSV with the header comment, then `columns`, then `rows`.
pub fn write_csv<I, R>(path: &Path, header: &Header, columns: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut buf = Vec::new();
    writeln!(buf, "# {}", header.line()).map_err(|e| Error::io(path, e))?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(columns)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Writes `{"config_hash", "version", "data"}` as pretty JSON.
pub fn write_json<T: Serialize>(path: &Path, header: &Header, data: &T) -> Result<()> {
    #[derive(Serialize)]
    struct Wrapped<'a, T> {
        config_hash: &'a str,
        version: &'a str,
        data: &'a T,
    }
    let text = serde_json::to_string_pretty(&Wrapped {
        config_hash: &header.config_hash,
        version: header.version,
        data,
    })?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Opens a stage artifact or explains which stage produces it.
pub(crate) fn read_records(dir: &Path, name: &str, stage: &'static str) -> Result<(PathBuf, Vec<csv::StringRecord>, csv::StringRecord)> {
    let path = dir.join(name);
    if !path.is_file() {
        return Err(Error::MissingArtifact {
            artifact: path,
            stage,
        });
    }
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&path)
        .map_err(|e| Error::parse(&path, e.to_string()))?;
    let headers = r.headers()?.clone();
    let rows = r.records().collect::<std::result::Result<Vec<_>, _>>()?;
    Ok((path, rows, headers))
}

fn col(path: &Path, headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| Error::parse(path, format!("missing column {name}")))
}

fn field<T: std::str::FromStr>(path: &Path, rec: &csv::StringRecord, i: usize, what: &str) -> Result<T> {
    let raw = rec.get(i).unwrap_or("");
    raw.parse()
        .map_err(|_| Error::parse(path, format!("line {}: bad {what} {raw:?}", rec.position().map_or(0, |p| p.line()))))
}

pub fn write_qualifications(path: &Path, header: &Header, quals: &[MonthQualification]) -> Result<()> {
    write_csv(
        path,
        header,
        &["device_id", "month", "city_id", "station_days", "qualified"],
        quals.iter().map(|q| {
            [
                q.device_id.clone(),
                q.month.to_string(),
                q.city_id.clone(),
                q.station_days.to_string(),
                q.qualified.to_string(),
            ]
        }),
    )
}

/// Qualification records grouped by device.
pub fn read_qualifications(dir: &Path) -> Result<BTreeMap<String, Vec<MonthQualification>>> {
    let (path, rows, h) = read_records(dir, QUALIFICATIONS, "qualify")?;
    let (d, m, c, s, q) = (
        col(&path, &h, "device_id")?,
        col(&path, &h, "month")?,
        col(&path, &h, "city_id")?,
        col(&path, &h, "station_days")?,
        col(&path, &h, "qualified")?,
    );
    let mut out: BTreeMap<String, Vec<MonthQualification>> = BTreeMap::new();
    for r in &rows {
        let rec = MonthQualification {
            device_id: r[d].to_string(),
            month: field::<Month>(&path, r, m, "month")?,
            station_days: field(&path, r, s, "station_days")?,
            qualified: field(&path, r, q, "qualified")?,
            city_id: r[c].to_string(),
        };
        out.entry(rec.device_id.clone()).or_default().push(rec);
    }
    Ok(out)
}

pub fn write_homes(path: &Path, header: &Header, homes: &BTreeMap<String, Homes>) -> Result<()> {
    write_csv(
        path,
        header,
        &["device_id", "half", "home_cell", "support", "center_lat", "center_lon"],
        homes.values().flat_map(|h| h.iter()).map(|h| {
            let c = h.home_cell.center();
            [
                h.device_id.clone(),
                h.half.to_string(),
                h.home_cell.to_string(),
                h.support.to_string(),
                c.lat().to_string(),
                c.lon().to_string(),
            ]
        }),
    )
}

pub fn read_homes(dir: &Path) -> Result<BTreeMap<String, Homes>> {
    let (path, rows, h) = read_records(dir, HOMES, "homes")?;
    let (d, half, cell, sup) = (
        col(&path, &h, "device_id")?,
        col(&path, &h, "half")?,
        col(&path, &h, "home_cell")?,
        col(&path, &h, "support")?,
    );
    let mut out: BTreeMap<String, Homes> = BTreeMap::new();
    for r in &rows {
        let home = HomeLocation {
            device_id: r[d].to_string(),
            half: match &r[half] {
                "H1" => crate::corpus::Half::H1,
                "H2" => crate::corpus::Half::H2,
                other => return Err(Error::parse(&path, format!("bad half {other:?}"))),
            },
            home_cell: Geohash7::parse(&r[cell]).map_err(|e| Error::parse(&path, e.to_string()))?,
            support: field(&path, r, sup, "support")?,
        };
        let entry = out.entry(home.device_id.clone()).or_default();
        match home.half {
            crate::corpus::Half::H1 => entry.h1 = Some(home),
            crate::corpus::Half::H2 => entry.h2 = Some(home),
        }
    }
    Ok(out)
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_officer_race(
    path: &Path,
    header: &Header,
    rows: &BTreeMap<String, (String, Option<RaceShares>)>,
) -> Result<()> {
    write_csv(
        path,
        header,
        &["device_id", "city_id", "white", "black", "hispanic", "asian"],
        rows.iter().map(|(id, (city, r))| {
            [
                id.clone(),
                city.clone(),
                opt(r.map(|r| r.white)),
                opt(r.map(|r| r.black)),
                opt(r.map(|r| r.hispanic)),
                opt(r.map(|r| r.asian)),
            ]
        }),
    )
}

pub fn read_officer_race(dir: &Path) -> Result<BTreeMap<String, (String, Option<RaceShares>)>> {
    let (path, rows, h) = read_records(dir, OFFICER_RACE, "homes")?;
    let idx: Vec<usize> = ["device_id", "city_id", "white", "black", "hispanic", "asian"]
        .iter()
        .map(|c| col(&path, &h, c))
        .collect::<Result<_>>()?;
    let mut out = BTreeMap::new();
    for r in &rows {
        let race = if r[idx[2]].is_empty() {
            None
        } else {
            Some(RaceShares {
                white: field(&path, r, idx[2], "white")?,
                black: field(&path, r, idx[3], "black")?,
                hispanic: field(&path, r, idx[4], "hispanic")?,
                asian: field(&path, r, idx[5], "asian")?,
            })
        };
        out.insert(r[idx[0]].to_string(), (r[idx[1]].to_string(), race));
    }
    Ok(out)
}

const SHIFT_COLUMNS: [&str; 11] = [
    "shift_id",
    "device_id",
    "city_id",
    "start_ts",
    "end_ts",
    "duration_h",
    "bracket_home_before",
    "bracket_home_after",
    "station_in",
    "station_out",
    "n_patrol_pings",
];

/// `shifts.csv` plus `patrol_pings.csv` keyed by the row index of the shift.
pub fn write_shifts(dir: &Path, header: &Header, shifts: &[Shift]) -> Result<()> {
    write_csv(
        &dir.join(SHIFTS),
        header,
        &SHIFT_COLUMNS,
        shifts.iter().enumerate().map(|(i, s)| {
            [
                i.to_string(),
                s.device_id.clone(),
                s.city_id.clone(),
                s.start_ts.to_string(),
                s.end_ts.to_string(),
                format!("{:.4}", s.duration_h()),
                s.bracket_home_before.to_string(),
                s.bracket_home_after.to_string(),
                s.station_in.clone(),
                s.station_out.clone(),
                s.patrol_pings.len().to_string(),
            ]
        }),
    )?;
    write_csv(
        &dir.join(PATROL_PINGS),
        header,
        &["shift_id", "ts_unix_s", "lat", "lon"],
        shifts.iter().enumerate().flat_map(|(i, s)| {
            s.patrol_pings.iter().map(move |p| {
                [
                    i.to_string(),
                    p.ts.to_string(),
                    p.location.lat().to_string(),
                    p.location.lon().to_string(),
                ]
            })
        }),
    )
}

pub fn read_shifts(dir: &Path) -> Result<Vec<Shift>> {
    let (path, rows, h) = read_records(dir, SHIFTS, "shifts")?;
    let idx: Vec<usize> = SHIFT_COLUMNS.iter().map(|c| col(&path, &h, c)).collect::<Result<_>>()?;
    let mut shifts = Vec::with_capacity(rows.len());
    let mut ids: BTreeMap<String, Arc<str>> = BTreeMap::new();
    for (i, r) in rows.iter().enumerate() {
        let sid: usize = field(&path, r, idx[0], "shift_id")?;
        if sid != i {
            return Err(Error::parse(&path, format!("shift ids must run 0..n in order, found {sid} at row {i}")));
        }
        ids.entry(r[idx[1]].to_string()).or_insert_with(|| Arc::from(&r[idx[1]]));
        shifts.push(Shift {
            device_id: r[idx[1]].to_string(),
            city_id: r[idx[2]].to_string(),
            start_ts: field(&path, r, idx[3], "start_ts")?,
            end_ts: field(&path, r, idx[4], "end_ts")?,
            patrol_pings: Vec::new(),
            bracket_home_before: field(&path, r, idx[6], "bracket_home_before")?,
            bracket_home_after: field(&path, r, idx[7], "bracket_home_after")?,
            station_in: r[idx[8]].to_string(),
            station_out: r[idx[9]].to_string(),
        });
    }
    let (ppath, prows, ph) = read_records(dir, PATROL_PINGS, "shifts")?;
    let (s, t, la, lo) = (
        col(&ppath, &ph, "shift_id")?,
        col(&ppath, &ph, "ts_unix_s")?,
        col(&ppath, &ph, "lat")?,
        col(&ppath, &ph, "lon")?,
    );
    for r in &prows {
        let sid: usize = field(&ppath, r, s, "shift_id")?;
        let shift = shifts
            .get_mut(sid)
            .ok_or_else(|| Error::parse(&ppath, format!("ping references unknown shift {sid}")))?;
        let location = GeoPoint::new(field(&ppath, r, la, "lat")?, field(&ppath, r, lo, "lon")?)
            .map_err(|e| Error::parse(&ppath, e.to_string()))?;
        shift.patrol_pings.push(Ping {
            device_id: ids[&shift.device_id].clone(),
            ts: field(&ppath, r, t, "ts_unix_s")?,
            location,
        });
    }
    Ok(shifts)
}

/// Presence row as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PresenceRow {
    pub bg_id: String,
    pub city_id: String,
    pub dwell: Dwell,
    pub shift_count: u64,
    pub by_shift_hour: [f64; SHIFT_HOUR_BUCKETS],
}

impl PresenceRow {
    pub fn hours(&self) -> f64 {
        self.dwell.hours()
    }
}

pub fn presence_columns() -> Vec<String> {
    let mut c: Vec<String> = ["bg_id", "city_id", "dwell_half_s", "hours", "arsinh_hours", "shift_count"]
        .map(String::from)
        .to_vec();
    c.extend((1..=SHIFT_HOUR_BUCKETS).map(crate::econ::shift_hour_column));
    c
}

/// Every block group, zero rows included.
pub fn write_presence(path: &Path, header: &Header, rows: &[PresenceRow]) -> Result<()> {
    let cols = presence_columns();
    let cols: Vec<&str> = cols.iter().map(String::as_str).collect();
    write_csv(
        path,
        header,
        &cols,
        rows.iter().map(|r| {
            let mut v = vec![
                r.bg_id.clone(),
                r.city_id.clone(),
                r.dwell.0.to_string(),
                r.hours().to_string(),
                crate::presence::arsinh(r.hours()).to_string(),
                r.shift_count.to_string(),
            ];
            v.extend(r.by_shift_hour.iter().map(|x| x.to_string()));
            v
        }),
    )
}

pub fn read_presence(dir: &Path) -> Result<Vec<PresenceRow>> {
    let (path, rows, h) = read_records(dir, PRESENCE, "presence")?;
    let cols = presence_columns();
    let idx: Vec<usize> = cols.iter().map(|c| col(&path, &h, c)).collect::<Result<_>>()?;
    rows.iter()
        .map(|r| {
            let mut by = [0.0; SHIFT_HOUR_BUCKETS];
            for (k, slot) in by.iter_mut().enumerate() {
                *slot = field(&path, r, idx[6 + k], "shift-hour hours")?;
            }
            Ok(PresenceRow {
                bg_id: r[idx[0]].to_string(),
                city_id: r[idx[1]].to_string(),
                dwell: Dwell(field(&path, r, idx[2], "dwell_half_s")?),
                shift_count: field(&path, r, idx[5], "shift_count")?,
                by_shift_hour: by,
            })
        })
        .collect()
}

impl PresenceRow {
    pub fn from_cell(cell: &PresenceCell, city_id: &str) -> PresenceRow {
        PresenceRow {
            bg_id: cell.bg_id.clone(),
            city_id: city_id.to_string(),
            dwell: cell.dwell,
            shift_count: cell.shift_count as u64,
            by_shift_hour: cell.hours_by_shift_hour,
        }
    }
}
