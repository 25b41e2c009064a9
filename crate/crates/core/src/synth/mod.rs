//! Seeded synthetic cities with planted ground truth.
//!
//! A city is a rectangular grid of block groups with independently drawn
//! covariates, a few square station footprints, officers who commute from a
//! home cell to a station and patrol block groups in proportion to planted
//! weights, and civilians who never enter a station. Every agent draws from
//! its own ChaCha stream, so output is identical for any worker count.

mod agents;
mod city;
mod score;
mod spec;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use score::{score, Detected, Scores};
pub use spec::{ActionRates, CitySpec, DemographicModel, GapModel, PatrolPolicy, ShiftSchedule, SynthSpec};

use crate::corpus::{
    write_attribute_csv, write_blockgroups_geojson, write_counts_csv, write_pings_csv, write_stations_geojson,
    write_zones_geojson, AttributeRow, BlockGroup, BlockGroupIndex, CalendarMode, CityRecord, InputManifest,
    PingCorpus, Station, StationIndex, WindowConfig, Zone,
};
use crate::error::{Error, Result};
use crate::geo::{GeoPoint, Ring};
use agents::{AgentOutput, World};
use city::{CityLayout, RACE_COLUMNS};

/// Planted facts about one officer device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueOfficer {
    pub device_id: String,
    pub city_id: String,
    pub station_id: String,
    pub home_cell: String,
    /// Block group containing the home cell center.
    pub home_bg: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueShift {
    pub device_id: String,
    pub leave_home: i64,
    pub arrive_station: i64,
    pub depart_station: i64,
    pub return_home: i64,
    /// Span of the emitted station pings of this shift, when there are any.
    pub observed_start: Option<i64>,
    pub observed_end: Option<i64>,
}

impl TrueShift {
    /// Interval a perfect detector would report: the observed station span
    /// when available, otherwise the scheduled station arrival and departure.
    pub fn interval(&self) -> (i64, i64) {
        match (self.observed_start, self.observed_end) {
            (Some(a), Some(b)) => (a, b),
            _ => (self.arrive_station, self.depart_station),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrueBgHours {
    pub city_id: String,
    pub weight: f64,
    /// City patrol hours allocated in proportion to the planted weight.
    pub expected_hours: f64,
    /// Hours the simulated officers actually spent patrolling here.
    pub realized_hours: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub officers: Vec<TrueOfficer>,
    pub civilians: Vec<String>,
    pub shifts: Vec<TrueShift>,
    pub bg_hours: BTreeMap<String, TrueBgHours>,
}

impl GroundTruth {
    pub fn load(path: &Path) -> Result<GroundTruth> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// A generated corpus held in memory.
#[derive(Debug, Clone)]
pub struct SynthCity {
    pub window: WindowConfig,
    pub stations: Vec<Station>,
    pub blockgroups: Vec<BlockGroup>,
    pub cities: Vec<CityRecord>,
    /// Recorded stops and arrests per block group.
    pub actions: BTreeMap<String, AttributeRow>,
    pub zones: Vec<Zone>,
    /// True number of officers residing in each zone.
    pub zone_counts: BTreeMap<String, f64>,
    pub corpus: PingCorpus,
    pub truth: GroundTruth,
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const CITY_STREAM: u64 = 1 << 40;
const ID_STREAM: u64 = 1 << 41;
const ACTION_STREAM: u64 = 1 << 42;

struct Agent {
    city: usize,
    officer: bool,
}

/// Builds the corpus described by `spec`. Deterministic in `spec` alone.
pub fn generate(spec: &SynthSpec) -> Result<SynthCity> {
    spec.validate()?;
    let layouts: Vec<CityLayout> = spec
        .cities
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let mut rng = stream(spec.rng_seed, CITY_STREAM + i as u64);
            CityLayout::build(c, &spec.demographics, &spec.patrol_policy, &mut rng)
        })
        .collect::<Result<_>>()?;
    let window = WindowConfig {
        start: spec.start,
        end: spec.end(),
        timezone_by_city: spec.cities.iter().map(|c| (c.city_id.clone(), c.timezone.clone())).collect(),
        calendar: CalendarMode::CityLocal,
    };
    let study = crate::corpus::StudyWindow::new(&window)?;
    let stations: Vec<Station> = layouts.iter().flat_map(|l| l.stations.iter().cloned()).collect();
    let blockgroups: Vec<BlockGroup> = layouts.iter().flat_map(|l| l.bgs.iter().cloned()).collect();
    let station_index = StationIndex::new(stations.clone());
    let bg_index = BlockGroupIndex::new(blockgroups.clone());
    let world = World {
        spec,
        start_ts: study.start_ts(),
        end_ts: study.end_ts(),
        stations: &station_index,
        bgs: &bg_index,
    };

    let agents: Vec<Agent> = spec
        .cities
        .iter()
        .enumerate()
        .flat_map(|(ci, c)| {
            let officers = (0..c.n_officers).map(move |_| Agent { city: ci, officer: true });
            let civilians = (0..c.n_civilians).map(move |_| Agent { city: ci, officer: false });
            officers.chain(civilians)
        })
        .collect();
    let mut labels: Vec<usize> = (0..agents.len()).collect();
    labels.shuffle(&mut stream(spec.rng_seed, ID_STREAM));
    let width = agents.len().to_string().len().max(5);
    let ids: Vec<String> = labels.iter().map(|l| format!("dev{l:0width$}")).collect();

    let outputs: Vec<AgentOutput> = agents
        .par_iter()
        .enumerate()
        .map(|(i, a)| {
            let mut rng = stream(spec.rng_seed, i as u64);
            let device: Arc<str> = Arc::from(ids[i].as_str());
            if a.officer {
                agents::officer(&world, &layouts[a.city], device, &mut rng)
            } else {
                agents::civilian(&world, &layouts[a.city], device, &mut rng)
            }
        })
        .collect();

    let mut truth = GroundTruth {
        officers: Vec::new(),
        civilians: Vec::new(),
        shifts: Vec::new(),
        bg_hours: BTreeMap::new(),
    };
    let mut patrol_secs = vec![0.0; bg_index.len()];
    let mut police_black: Vec<Vec<f64>> = vec![Vec::new(); layouts.len()];
    for ((a, out), id) in agents.iter().zip(&outputs).zip(&ids) {
        if !a.officer {
            truth.civilians.push(id.clone());
            continue;
        }
        let cell = out.home_cell.expect("officers have homes");
        let home_bg = bg_index.locate(cell.center()).map(|i| bg_index.get(i));
        if let Some(b) = home_bg.and_then(|b| b.attr("pct_black")) {
            police_black[a.city].push(b);
        }
        truth.officers.push(TrueOfficer {
            device_id: id.clone(),
            city_id: spec.cities[a.city].city_id.clone(),
            station_id: out.station_id.clone().unwrap_or_default(),
            home_cell: cell.to_string(),
            home_bg: home_bg.map(|b| b.bg_id.clone()),
        });
        for s in &out.shifts {
            truth.shifts.push(TrueShift {
                device_id: id.clone(),
                leave_home: s.leave_home,
                arrive_station: s.arrive_station,
                depart_station: s.depart_station,
                return_home: s.return_home,
                observed_start: s.observed.map(|o| o.0),
                observed_end: s.observed.map(|o| o.1),
            });
        }
        for (&bg, &secs) in &out.patrol_secs {
            patrol_secs[bg] += secs;
        }
    }
    truth.officers.sort_by(|a, b| a.device_id.cmp(&b.device_id));
    truth.civilians.sort();
    truth
        .shifts
        .sort_by(|a, b| (&a.device_id, a.arrive_station).cmp(&(&b.device_id, b.arrive_station)));

    let mut city_hours: BTreeMap<&str, f64> = BTreeMap::new();
    for (b, s) in bg_index.blockgroups().iter().zip(&patrol_secs) {
        *city_hours.entry(b.city_id.as_str()).or_default() += s / 3600.0;
    }
    for l in &layouts {
        let total_w: f64 = l.weights.iter().sum();
        for (b, w) in l.bgs.iter().zip(&l.weights) {
            let idx = bg_index
                .blockgroups()
                .binary_search_by(|x| x.bg_id.cmp(&b.bg_id))
                .expect("indexed");
            let expected = if total_w > 0.0 {
                city_hours.get(l.spec.city_id.as_str()).copied().unwrap_or(0.0) * w / total_w
            } else {
                0.0
            };
            truth.bg_hours.insert(
                b.bg_id.clone(),
                TrueBgHours {
                    city_id: l.spec.city_id.clone(),
                    weight: *w,
                    expected_hours: expected,
                    realized_hours: patrol_secs[idx] / 3600.0,
                },
            );
        }
    }

    // recorded actions scale with realized patrol time
    let mut rng = stream(spec.rng_seed, ACTION_STREAM);
    let draw = |rate: f64, hours: f64, rng: &mut ChaCha8Rng| -> f64 {
        let lambda = rate * hours;
        if lambda > 0.0 {
            Poisson::new(lambda).map(|p| p.sample(rng)).unwrap_or(0.0)
        } else {
            0.0
        }
    };
    let actions: BTreeMap<String, AttributeRow> = truth
        .bg_hours
        .iter()
        .map(|(id, h)| {
            let stops = draw(spec.actions.stops_per_hour, h.realized_hours, &mut rng);
            let arrests = draw(spec.actions.arrests_per_hour, h.realized_hours, &mut rng);
            let row: AttributeRow = [("stops".to_string(), Some(stops)), ("arrests".to_string(), Some(arrests))].into();
            (id.clone(), row)
        })
        .collect();

    let cities: Vec<CityRecord> = layouts
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let mut rng = stream(spec.rng_seed, CITY_STREAM + (1 << 20) + i as u64);
            let mut attrs: AttributeRow = BTreeMap::new();
            attrs.insert("population".into(), Some(l.population));
            for col in RACE_COLUMNS {
                attrs.insert(col.into(), Some(l.shares[col]));
            }
            attrs.insert("sworn_officers".into(), Some(l.spec.n_officers as f64));
            let police = (!police_black[i].is_empty())
                .then(|| police_black[i].iter().sum::<f64>() / police_black[i].len() as f64);
            attrs.insert("police_pct_black".into(), police);
            attrs.insert(
                "supervisor_pct_black".into(),
                police.map(|p| p * rng.random_range(0.6..1.0)),
            );
            CityRecord {
                city_id: l.spec.city_id.clone(),
                attributes: attrs,
            }
        })
        .collect();

    let (zones, zone_counts) = build_zones(spec, &layouts, &truth)?;
    let pings = outputs.into_iter().flat_map(|o| o.pings);
    Ok(SynthCity {
        window,
        stations,
        blockgroups,
        cities,
        actions,
        zones,
        zone_counts,
        corpus: PingCorpus::from_pings(pings),
        truth,
    })
}

/// Square zones of `zone_size` block groups on a side and the true count of
/// officer homes in each.
fn build_zones(spec: &SynthSpec, layouts: &[CityLayout], truth: &GroundTruth) -> Result<(Vec<Zone>, BTreeMap<String, f64>)> {
    let mut zones = Vec::new();
    let z = spec.zone_size;
    for l in layouts {
        let (rows, cols) = (l.spec.rows, l.spec.cols);
        let corner = |r: u32, c: u32| -> GeoPoint {
            // block-group corners are shared, so reuse them
            let bg = |rr: u32, cc: u32| &l.bgs[(rr * cols + cc) as usize];
            match (r < rows, c < cols) {
                (true, true) => bg(r, c).polygon.vertices()[0],
                (true, false) => bg(r, cols - 1).polygon.vertices()[1],
                (false, true) => bg(rows - 1, c).polygon.vertices()[3],
                (false, false) => bg(rows - 1, cols - 1).polygon.vertices()[2],
            }
        };
        for zr in (0..rows).step_by(z as usize) {
            for zc in (0..cols).step_by(z as usize) {
                let (r1, c1) = ((zr + z).min(rows), (zc + z).min(cols));
                zones.push(Zone {
                    zone_id: format!("{}_z{:03}_{:03}", l.spec.city_id, zr / z, zc / z),
                    ring: Ring::new(vec![corner(zr, zc), corner(zr, c1), corner(r1, c1), corner(r1, zc)])?,
                });
            }
        }
    }
    let mut counts: BTreeMap<String, f64> = zones.iter().map(|z| (z.zone_id.clone(), 0.0)).collect();
    for o in &truth.officers {
        let center = crate::geo::Geohash7::parse(&o.home_cell)?.center();
        if let Some(z) = zones.iter().find(|z| z.ring.contains(center)) {
            *counts.get_mut(&z.zone_id).expect("zone listed") += 1.0;
        }
    }
    Ok((zones, counts))
}

/// File names written by [`SynthCity::write`].
pub mod files {
    pub const PINGS: &str = "pings.csv";
    pub const GEOFENCES: &str = "stations.geojson";
    pub const BG_GEOMETRY: &str = "blockgroups.geojson";
    pub const BG_ATTRIBUTES: &str = "bg_attributes.csv";
    pub const CITY_TABLE: &str = "cities.csv";
    pub const ACTIONS: &str = "actions.csv";
    pub const ZONES: &str = "zones.geojson";
    pub const ZONE_COUNTS: &str = "zone_counts.csv";
    pub const TRUTH: &str = "truth.json";
    pub const MANIFEST: &str = "manifest.json";
}

impl SynthCity {
    /// Writes the corpus files, `truth.json` and a `manifest.json` with
    /// relative paths. Returns the manifest.
    pub fn write(&self, dir: &Path) -> Result<InputManifest> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_pings_csv(&dir.join(files::PINGS), &self.corpus.streams)?;
        write_stations_geojson(&dir.join(files::GEOFENCES), &self.stations)?;
        write_blockgroups_geojson(&dir.join(files::BG_GEOMETRY), &self.blockgroups)?;
        let attrs: BTreeMap<String, AttributeRow> = self
            .blockgroups
            .iter()
            .map(|b| (b.bg_id.clone(), b.attributes.clone()))
            .collect();
        write_attribute_csv(&dir.join(files::BG_ATTRIBUTES), "bg_id", &attrs)?;
        let cities: BTreeMap<String, AttributeRow> = self
            .cities
            .iter()
            .map(|c| (c.city_id.clone(), c.attributes.clone()))
            .collect();
        write_attribute_csv(&dir.join(files::CITY_TABLE), "city_id", &cities)?;
        write_attribute_csv(&dir.join(files::ACTIONS), "bg_id", &self.actions)?;
        write_zones_geojson(&dir.join(files::ZONES), &self.zones)?;
        write_counts_csv(&dir.join(files::ZONE_COUNTS), "zone_id", &self.zone_counts)?;
        let truth_path = dir.join(files::TRUTH);
        let text = serde_json::to_string_pretty(&self.truth)?;
        std::fs::write(&truth_path, text + "\n").map_err(|e| Error::io(&truth_path, e))?;
        let manifest = InputManifest {
            pings: files::PINGS.into(),
            geofences: files::GEOFENCES.into(),
            bg_geometry: files::BG_GEOMETRY.into(),
            bg_attributes: files::BG_ATTRIBUTES.into(),
            city_table: Some(files::CITY_TABLE.into()),
            actions: Some(files::ACTIONS.into()),
            zones: Some(files::ZONES.into()),
            zone_counts: Some(files::ZONE_COUNTS.into()),
            window: Some(self.window.clone()),
        };
        manifest.save(&dir.join(files::MANIFEST))?;
        Ok(manifest.resolved(dir))
    }

    pub fn officer_ids(&self) -> BTreeSet<String> {
        self.truth.officers.iter().map(|o| o.device_id.clone()).collect()
    }
}
