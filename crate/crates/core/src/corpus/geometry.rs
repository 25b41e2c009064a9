use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde_json::{json, Value};

use super::{load_attribute_table, BlockGroup, Loaded, Station};
use crate::error::{Error, Result};
use crate::geo::{ConvexPolygon, GeoPoint, Ring};

/// Arbitrary polygonal zone (e.g. a zip code) used by residence checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Zone {
    pub zone_id: String,
    pub ring: Ring,
}

struct Feature {
    properties: serde_json::Map<String, Value>,
    ring: Vec<GeoPoint>,
    label: String,
}

fn read_features(path: &Path, id_key: &str) -> Result<Vec<Feature>> {
    let f = File::open(path).map_err(|e| Error::io(path, e))?;
    let doc: Value = serde_json::from_reader(BufReader::new(f)).map_err(|e| Error::parse(path, e.to_string()))?;
    let features = match doc.get("features").and_then(Value::as_array) {
        Some(fs) => fs,
        None => return Err(Error::parse(path, "expected a GeoJSON FeatureCollection")),
    };
    let mut out = Vec::with_capacity(features.len());
    for (i, feat) in features.iter().enumerate() {
        let properties = feat
            .get("properties")
            .and_then(Value::as_object)
            .cloned()
            .unwrap_or_default();
        let label = properties
            .get(id_key)
            .map(value_to_string)
            .unwrap_or_else(|| format!("#{i}"));
        let geom = feat.get("geometry").ok_or_else(|| Error::InvalidGeometry {
            feature: label.clone(),
            reason: "missing geometry".into(),
        })?;
        let kind = geom.get("type").and_then(Value::as_str).unwrap_or("");
        let coords = geom.get("coordinates");
        let exterior = match kind {
            "Polygon" => coords.and_then(|c| c.get(0)),
            "MultiPolygon" => coords.and_then(|c| c.get(0)).and_then(|c| c.get(0)),
            other => {
                return Err(Error::InvalidGeometry {
                    feature: label,
                    reason: format!("unsupported geometry type {other:?}"),
                })
            }
        };
        let exterior = exterior.and_then(Value::as_array).ok_or_else(|| Error::InvalidGeometry {
            feature: label.clone(),
            reason: "missing exterior ring".into(),
        })?;
        let mut ring = Vec::with_capacity(exterior.len());
        for pos in exterior {
            let lon = pos.get(0).and_then(Value::as_f64);
            let lat = pos.get(1).and_then(Value::as_f64);
            let (Some(lon), Some(lat)) = (lon, lat) else {
                return Err(Error::InvalidGeometry {
                    feature: label,
                    reason: "malformed position".into(),
                });
            };
            ring.push(GeoPoint::new(lat, lon).map_err(|e| Error::InvalidGeometry {
                feature: label.clone(),
                reason: e.to_string(),
            })?);
        }
        out.push(Feature {
            properties,
            ring,
            label,
        });
    }
    Ok(out)
}

fn value_to_string(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn required_prop(f: &Feature, key: &str) -> Result<String> {
    f.properties
        .get(key)
        .map(value_to_string)
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::InvalidGeometry {
            feature: f.label.clone(),
            reason: format!("missing property {key:?}"),
        })
}

fn with_feature(e: Error, feature: &str) -> Error {
    match e {
        Error::InvalidGeometry { reason, .. } => Error::InvalidGeometry {
            feature: feature.to_string(),
            reason,
        },
        other => other,
    }
}

/// Loads station footprints from a GeoJSON FeatureCollection whose features
/// carry `station_id` and `city_id`. Non-convex rings are replaced by their
/// convex hull with a warning; a feature with fewer than three distinct
/// vertices is an error.
pub fn load_geofences(path: &Path) -> Result<Loaded<Vec<Station>>> {
    let mut warnings = Vec::new();
    let mut stations: Vec<Station> = Vec::new();
    for f in read_features(path, "station_id")? {
        let station_id = required_prop(&f, "station_id")?;
        let city_id = required_prop(&f, "city_id")?;
        let footprint = match ConvexPolygon::new(f.ring.clone()) {
            Ok(p) => p,
            Err(_) => {
                let hull = ConvexPolygon::hull(&f.ring).map_err(|e| with_feature(e, &station_id))?;
                let msg = format!(
                    "station {station_id}: ring not convex, replaced by its {}-vertex convex hull",
                    hull.vertices().len()
                );
                log::warn!("{msg}");
                warnings.push(msg);
                hull
            }
        };
        if stations.iter().any(|s| s.station_id == station_id) {
            return Err(Error::InvalidGeometry {
                feature: station_id,
                reason: "duplicate station_id".into(),
            });
        }
        stations.push(Station {
            station_id,
            city_id,
            footprint,
        });
    }
    stations.sort_by(|a, b| a.station_id.cmp(&b.station_id));
    Ok(Loaded {
        items: stations,
        warnings,
    })
}

/// Joins block-group geometry (GeoJSON with `bg_id`, `city_id`) to an
/// attribute CSV keyed by `bg_id`.
///
/// Geometry without attributes is kept with every covariate missing;
/// attribute rows without geometry are ignored with a warning; invalid
/// values are flagged missing.
pub fn load_blockgroups(geom_path: &Path, attr_path: &Path) -> Result<Loaded<Vec<BlockGroup>>> {
    let mut warnings = Vec::new();
    let attrs = load_attribute_table(attr_path, "bg_id")?;
    warnings.extend(attrs.warnings);
    let mut attrs = attrs.items;
    let columns: Vec<String> = attrs
        .values()
        .next()
        .map(|row| row.keys().cloned().collect())
        .unwrap_or_default();
    let mut bgs = Vec::new();
    for f in read_features(geom_path, "bg_id")? {
        let bg_id = required_prop(&f, "bg_id")?;
        let city_id = required_prop(&f, "city_id")?;
        let polygon = Ring::new(f.ring).map_err(|e| with_feature(e, &bg_id))?;
        let attributes = match attrs.remove(&bg_id) {
            Some(row) => row,
            None => {
                let msg = format!("block group {bg_id}: no attribute row, all covariates missing");
                log::warn!("{msg}");
                warnings.push(msg);
                columns.iter().map(|c| (c.clone(), None)).collect()
            }
        };
        bgs.push(BlockGroup {
            bg_id,
            city_id,
            polygon,
            attributes,
        });
    }
    for orphan in attrs.keys() {
        let msg = format!("attribute row {orphan}: no matching geometry, ignored");
        log::warn!("{msg}");
        warnings.push(msg);
    }
    bgs.sort_by(|a, b| a.bg_id.cmp(&b.bg_id));
    Ok(Loaded { items: bgs, warnings })
}

/// Loads zones from GeoJSON features carrying `zone_id`.
pub fn load_zones(path: &Path) -> Result<Vec<Zone>> {
    let mut zones = Vec::new();
    for f in read_features(path, "zone_id")? {
        let zone_id = required_prop(&f, "zone_id")?;
        let ring = Ring::new(f.ring).map_err(|e| with_feature(e, &zone_id))?;
        zones.push(Zone { zone_id, ring });
    }
    zones.sort_by(|a, b| a.zone_id.cmp(&b.zone_id));
    Ok(zones)
}

fn ring_json(points: &[GeoPoint]) -> Value {
    let mut coords: Vec<Value> = points.iter().map(|p| json!([p.lon(), p.lat()])).collect();
    if let Some(first) = coords.first().cloned() {
        coords.push(first);
    }
    json!([coords])
}

fn write_collection(path: &Path, features: Vec<Value>) -> Result<()> {
    let doc = json!({ "type": "FeatureCollection", "features": features });
    let f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer(BufWriter::new(f), &doc)?;
    Ok(())
}

fn polygon_feature(props: BTreeMap<&str, &str>, ring: &[GeoPoint]) -> Value {
    json!({
        "type": "Feature",
        "properties": props,
        "geometry": { "type": "Polygon", "coordinates": ring_json(ring) },
    })
}

pub fn write_stations_geojson(path: &Path, stations: &[Station]) -> Result<()> {
    let features = stations
        .iter()
        .map(|s| {
            polygon_feature(
                [("station_id", s.station_id.as_str()), ("city_id", s.city_id.as_str())].into(),
                s.footprint.vertices(),
            )
        })
        .collect();
    write_collection(path, features)
}

/// Writes block-group geometry only; attributes go through
/// [`super::write_attribute_csv`].
pub fn write_blockgroups_geojson(path: &Path, bgs: &[BlockGroup]) -> Result<()> {
    let features = bgs
        .iter()
        .map(|b| {
            polygon_feature(
                [("bg_id", b.bg_id.as_str()), ("city_id", b.city_id.as_str())].into(),
                b.polygon.vertices(),
            )
        })
        .collect();
    write_collection(path, features)
}

pub fn write_zones_geojson(path: &Path, zones: &[Zone]) -> Result<()> {
    let features = zones
        .iter()
        .map(|z| polygon_feature([("zone_id", z.zone_id.as_str())].into(), z.ring.vertices()))
        .collect();
    write_collection(path, features)
}
