//! Canonical data model for ping corpora, station geofences, block groups and
//! auxiliary attribute tables, plus the loaders and writers for their file
//! formats.

mod geometry;
mod manifest;
mod pings;
mod tables;
mod window;

use std::collections::BTreeMap;
use std::sync::Arc;

pub use geometry::{
    load_blockgroups, load_geofences, load_zones, write_blockgroups_geojson, write_stations_geojson,
    write_zones_geojson, Zone,
};
pub use manifest::InputManifest;
pub use pings::{load_pings, write_pings_csv, IngestReport, PingCorpus, Reject};
pub use tables::{
    load_attribute_table, load_city_table, load_counts, write_attribute_csv, write_counts_csv, AttributeRow,
    CityRecord,
};
pub use window::{local_datetime, CalendarMode, Half, Month, StudyWindow, WindowConfig};

use crate::geo::{ConvexPolygon, GeoPoint, GridIndex, Ring};

/// One timestamped location sample from one device.
#[derive(Debug, Clone, PartialEq)]
pub struct Ping {
    pub device_id: Arc<str>,
    /// UTC seconds since the Unix epoch.
    pub ts: i64,
    pub location: GeoPoint,
}

/// A police station footprint.
#[derive(Debug, Clone, PartialEq)]
pub struct Station {
    pub station_id: String,
    pub city_id: String,
    pub footprint: ConvexPolygon,
}

/// Census block group: geometry plus named covariates. A `None` value marks
/// a covariate that is missing or failed validation.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGroup {
    pub bg_id: String,
    pub city_id: String,
    pub polygon: Ring,
    pub attributes: BTreeMap<String, Option<f64>>,
}

impl BlockGroup {
    pub fn attr(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied().flatten()
    }
}

/// Covariates held as shares and validated to `[0, 1]`.
pub const SHARE_COLUMNS: &[&str] = &[
    "pct_white",
    "pct_black",
    "pct_hispanic",
    "pct_asian",
    "pct_college",
    "census_return_rate",
];

/// The standard block-group covariates. Extra columns are carried through.
pub const STANDARD_COVARIATES: &[&str] = &[
    "population",
    "pct_white",
    "pct_black",
    "pct_hispanic",
    "pct_asian",
    "pct_college",
    "median_income_k",
    "census_return_rate",
    "homicide_count",
    "dist_nearest_homicide_km",
];

/// Result of a loader together with the non-fatal issues it logged.
#[derive(Debug, Clone)]
pub struct Loaded<T> {
    pub items: T,
    pub warnings: Vec<String>,
}

/// Station lookup by location. Stations are kept sorted by id so the first
/// containing footprint is deterministic when footprints overlap.
#[derive(Debug, Clone)]
pub struct StationIndex {
    stations: Vec<Station>,
    grid: GridIndex,
}

impl StationIndex {
    pub fn new(mut stations: Vec<Station>) -> StationIndex {
        stations.sort_by(|a, b| a.station_id.cmp(&b.station_id));
        let boxes: Vec<_> = stations.iter().map(|s| s.footprint.bbox()).collect();
        StationIndex {
            grid: GridIndex::build(&boxes),
            stations,
        }
    }

    pub fn stations(&self) -> &[Station] {
        &self.stations
    }

    pub fn locate(&self, p: GeoPoint) -> Option<&Station> {
        self.grid
            .candidates(p)
            .iter()
            .map(|&i| &self.stations[i])
            .find(|s| s.footprint.contains(p))
    }

    pub fn is_inside_any(&self, p: GeoPoint) -> bool {
        self.locate(p).is_some()
    }
}

/// Block-group lookup by location; ties on shared boundaries go to the
/// smallest `bg_id`.
#[derive(Debug, Clone)]
pub struct BlockGroupIndex {
    blockgroups: Vec<BlockGroup>,
    grid: GridIndex,
}

impl BlockGroupIndex {
    pub fn new(mut blockgroups: Vec<BlockGroup>) -> BlockGroupIndex {
        blockgroups.sort_by(|a, b| a.bg_id.cmp(&b.bg_id));
        let boxes: Vec<_> = blockgroups.iter().map(|b| b.polygon.bbox()).collect();
        BlockGroupIndex {
            grid: GridIndex::build(&boxes),
            blockgroups,
        }
    }

    pub fn blockgroups(&self) -> &[BlockGroup] {
        &self.blockgroups
    }

    pub fn get(&self, idx: usize) -> &BlockGroup {
        &self.blockgroups[idx]
    }

    pub fn len(&self) -> usize {
        self.blockgroups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blockgroups.is_empty()
    }

    /// Index (into [`BlockGroupIndex::blockgroups`]) of the containing BG.
    pub fn locate(&self, p: GeoPoint) -> Option<usize> {
        self.grid
            .candidates(p)
            .iter()
            .copied()
            .find(|&i| self.blockgroups[i].polygon.contains(p))
    }
}
