use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use super::{Ping, StudyWindow};
use crate::error::{Error, Result};
use crate::geo::GeoPoint;

/// A row that did not make it into the corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reject {
    pub line_no: u64,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IngestReport {
    pub rows_read: u64,
    pub rows_kept: u64,
    /// Malformed rows plus duplicates, in file order.
    pub rejects: Vec<Reject>,
    pub malformed: u64,
    pub duplicates: u64,
    pub out_of_window: u64,
}

impl IngestReport {
    pub fn malformed_fraction(&self) -> f64 {
        if self.rows_read == 0 {
            0.0
        } else {
            self.malformed as f64 / self.rows_read as f64
        }
    }

    /// Writes the `line_no,reason` rejects CSV.
    pub fn write_rejects_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["line_no", "reason"])?;
        for r in &self.rejects {
            w.write_record([r.line_no.to_string(), r.reason.clone()])?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }
}

/// Per-device, time-sorted ping streams.
#[derive(Debug, Clone, Default)]
pub struct PingCorpus {
    pub streams: BTreeMap<String, Vec<Ping>>,
    pub report: IngestReport,
}

impl PingCorpus {
    /// Builds a canonical corpus from unordered pings: sorts each device's
    /// stream and removes exact duplicates.
    pub fn from_pings(pings: impl IntoIterator<Item = Ping>) -> PingCorpus {
        let mut streams: BTreeMap<String, Vec<Ping>> = BTreeMap::new();
        for p in pings {
            streams.entry(p.device_id.to_string()).or_default().push(p);
        }
        for s in streams.values_mut() {
            sort_stream(s);
            s.dedup();
        }
        PingCorpus {
            streams,
            report: IngestReport::default(),
        }
    }

    pub fn n_pings(&self) -> usize {
        self.streams.values().map(Vec::len).sum()
    }

    /// Serialized canonical form (the CSV written by [`write_pings_csv`]).
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        write_pings_to(&mut buf, &self.streams).expect("in-memory write");
        buf
    }
}

pub(crate) fn sort_stream(s: &mut [Ping]) {
    s.sort_by(|a, b| {
        a.ts.cmp(&b.ts)
            .then(a.location.lat().total_cmp(&b.location.lat()))
            .then(a.location.lon().total_cmp(&b.location.lon()))
    });
}

#[derive(Deserialize)]
struct JsonPing {
    device_id: Option<String>,
    ts_unix_s: Option<serde_json::Value>,
    lat: Option<f64>,
    lon: Option<f64>,
}

fn parse_ts(raw: &str) -> std::result::Result<i64, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err("missing ts_unix_s".into());
    }
    raw.parse::<i64>().map_err(|_| match raw.parse::<f64>() {
        Ok(v) if v.is_finite() => "non-integer ts_unix_s".to_string(),
        _ => "unparseable ts_unix_s".to_string(),
    })
}

fn parse_coord(raw: &str, name: &str) -> std::result::Result<f64, String> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Err(format!("missing {name}"));
    }
    raw.parse::<f64>().map_err(|_| format!("unparseable {name}"))
}

fn build_ping(
    device_id: Option<&str>,
    ts: std::result::Result<i64, String>,
    lat: std::result::Result<f64, String>,
    lon: std::result::Result<f64, String>,
    ids: &mut HashSet<Arc<str>>,
) -> std::result::Result<Ping, String> {
    let device_id = device_id.map(str::trim).unwrap_or("");
    if device_id.is_empty() {
        return Err("empty device_id".into());
    }
    let ts = ts?;
    let (lat, lon) = (lat?, lon?);
    let location = GeoPoint::new(lat, lon).map_err(|e| match e {
        Error::InvalidCoordinate(msg) => msg,
        other => other.to_string(),
    })?;
    let id = match ids.get(device_id) {
        Some(id) => id.clone(),
        None => {
            let id: Arc<str> = Arc::from(device_id);
            ids.insert(id.clone());
            id
        }
    };
    Ok(Ping {
        device_id: id,
        ts,
        location,
    })
}

/// Loads a ping file (`.csv`, or `.jsonl`/`.ndjson`) with fields
/// `device_id, ts_unix_s, lat, lon`.
///
/// Rows outside the study window are dropped and counted; malformed rows and
/// exact duplicates go to the rejects report. Fails if malformed rows exceed
/// `max_reject_fraction` of all rows.
pub fn load_pings(path: &Path, window: &StudyWindow, max_reject_fraction: f64) -> Result<PingCorpus> {
    let mut ids: HashSet<Arc<str>> = HashSet::new();
    let mut rows: Vec<(u64, std::result::Result<Ping, String>)> = Vec::new();
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    if ext == "jsonl" || ext == "ndjson" {
        let f = File::open(path).map_err(|e| Error::io(path, e))?;
        for (i, line) in BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let line_no = i as u64 + 1;
            let parsed = match serde_json::from_str::<JsonPing>(&line) {
                Err(e) => Err(format!("invalid json: {e}")),
                Ok(j) => {
                    let ts = match &j.ts_unix_s {
                        None => Err("missing ts_unix_s".to_string()),
                        Some(serde_json::Value::Number(n)) => n.as_i64().ok_or_else(|| "non-integer ts_unix_s".to_string()),
                        Some(serde_json::Value::String(s)) => parse_ts(s),
                        Some(_) => Err("unparseable ts_unix_s".to_string()),
                    };
                    build_ping(
                        j.device_id.as_deref(),
                        ts,
                        j.lat.ok_or_else(|| "missing lat".to_string()),
                        j.lon.ok_or_else(|| "missing lon".to_string()),
                        &mut ids,
                    )
                }
            };
            rows.push((line_no, parsed));
        }
    } else {
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .flexible(true)
            .from_path(path)?;
        let headers = rdr.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::parse(path, format!("missing column {name:?}")))
        };
        let (c_dev, c_ts, c_lat, c_lon) = (col("device_id")?, col("ts_unix_s")?, col("lat")?, col("lon")?);
        let mut record = csv::StringRecord::new();
        loop {
            match rdr.read_record(&mut record) {
                Ok(false) => break,
                Ok(true) => {
                    let line_no = record.position().map(|p| p.line()).unwrap_or(0);
                    let parsed = build_ping(
                        record.get(c_dev),
                        record.get(c_ts).map(parse_ts).unwrap_or_else(|| Err("missing ts_unix_s".into())),
                        record.get(c_lat).map(|v| parse_coord(v, "lat")).unwrap_or_else(|| Err("missing lat".into())),
                        record.get(c_lon).map(|v| parse_coord(v, "lon")).unwrap_or_else(|| Err("missing lon".into())),
                        &mut ids,
                    );
                    rows.push((line_no, parsed));
                }
                Err(e) => {
                    let line_no = e.position().map(|p| p.line()).unwrap_or(0);
                    rows.push((line_no, Err(format!("malformed row: {e}"))));
                }
            }
        }
    }

    let mut report = IngestReport::default();
    let mut seen: HashSet<(Arc<str>, i64, u64, u64)> = HashSet::new();
    let mut streams: BTreeMap<String, Vec<Ping>> = BTreeMap::new();
    for (line_no, parsed) in rows {
        report.rows_read += 1;
        match parsed {
            Err(reason) => {
                report.malformed += 1;
                report.rejects.push(Reject { line_no, reason });
            }
            Ok(p) => {
                if !window.contains_ts(p.ts) {
                    report.out_of_window += 1;
                    continue;
                }
                let key = (
                    p.device_id.clone(),
                    p.ts,
                    p.location.lat().to_bits(),
                    p.location.lon().to_bits(),
                );
                if !seen.insert(key) {
                    report.duplicates += 1;
                    report.rejects.push(Reject {
                        line_no,
                        reason: "duplicate row".into(),
                    });
                    continue;
                }
                report.rows_kept += 1;
                streams.entry(p.device_id.to_string()).or_default().push(p);
            }
        }
    }
    let fraction = report.malformed_fraction();
    if fraction > max_reject_fraction {
        return Err(Error::TooManyRejects {
            path: path.to_path_buf(),
            fraction,
            limit: max_reject_fraction,
        });
    }
    if report.malformed > 0 {
        log::warn!("{}: {} malformed rows rejected", path.display(), report.malformed);
    }
    for s in streams.values_mut() {
        sort_stream(s);
    }
    Ok(PingCorpus { streams, report })
}

fn write_pings_to<W: Write>(w: W, streams: &BTreeMap<String, Vec<Ping>>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["device_id", "ts_unix_s", "lat", "lon"])?;
    for pings in streams.values() {
        for p in pings {
            wtr.write_record([
                p.device_id.as_ref(),
                &p.ts.to_string(),
                &p.location.lat().to_string(),
                &p.location.lon().to_string(),
            ])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<pings>", e))?;
    Ok(())
}

/// Writes streams in canonical order (device id, then time).
pub fn write_pings_csv(path: &Path, streams: &BTreeMap<String, Vec<Ping>>) -> Result<()> {
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    write_pings_to(BufWriter::new(f), streams)
}
