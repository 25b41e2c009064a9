//! Geodesic and planar primitives: points, Geohash-7 cells, convex station
//! footprints, general block-group rings and a bounding-box grid index.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::Ping;
use crate::error::{Error, Result};

/// Mean Earth radius in meters used for every great-circle distance.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// Meters in one statute mile.
pub const METERS_PER_MILE: f64 = 1609.344;

/// WGS84 location in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPoint", into = "RawPoint")]
pub struct GeoPoint {
    lat: f64,
    lon: f64,
}

#[derive(Serialize, Deserialize)]
struct RawPoint {
    lat: f64,
    lon: f64,
}

impl TryFrom<RawPoint> for GeoPoint {
    type Error = Error;

    fn try_from(raw: RawPoint) -> Result<Self> {
        GeoPoint::new(raw.lat, raw.lon)
    }
}

impl From<GeoPoint> for RawPoint {
    fn from(p: GeoPoint) -> Self {
        RawPoint {
            lat: p.lat,
            lon: p.lon,
        }
    }
}

impl GeoPoint {
    /// Latitude must lie in `[-90, 90]`, longitude in `[-180, 180)`.
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        if !lat.is_finite() || !lon.is_finite() {
            return Err(Error::InvalidCoordinate(format!(
                "non-finite coordinate ({lat}, {lon})"
            )));
        }
        if !(-90.0..=90.0).contains(&lat) {
            return Err(Error::InvalidCoordinate("lat out of range".into()));
        }
        if !(-180.0..180.0).contains(&lon) {
            return Err(Error::InvalidCoordinate("lon out of range".into()));
        }
        Ok(GeoPoint { lat, lon })
    }

    pub fn lat(&self) -> f64 {
        self.lat
    }

    pub fn lon(&self) -> f64 {
        self.lon
    }

    /// Point displaced by `(north_m, east_m)` meters using a local
    /// equirectangular approximation. Longitude wraps into `[-180, 180)`;
    /// latitude is clamped to the poles.
    pub fn offset_m(&self, north_m: f64, east_m: f64) -> GeoPoint {
        let dlat = (north_m / EARTH_RADIUS_M).to_degrees();
        let coslat = self.lat.to_radians().cos().max(1e-12);
        let dlon = (east_m / (EARTH_RADIUS_M * coslat)).to_degrees();
        let lat = (self.lat + dlat).clamp(-90.0, 90.0);
        let mut lon = self.lon + dlon;
        if !(-180.0..180.0).contains(&lon) {
            lon = (lon + 180.0).rem_euclid(360.0) - 180.0;
        }
        GeoPoint { lat, lon }
    }
}

impl fmt::Display for GeoPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lat, self.lon)
    }
}

/// Great-circle distance on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = phi2 - phi1;
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.clamp(0.0, 1.0).sqrt().asin()
}

/// Average ground speed between two pings in miles per hour.
///
/// Fails when `b` is not strictly later than `a`.
pub fn speed_mph(a: &Ping, b: &Ping) -> Result<f64> {
    let dt = b.ts - a.ts;
    if dt <= 0 {
        return Err(Error::NonIncreasingTime {
            earlier: a.ts,
            later: b.ts,
        });
    }
    let meters = haversine_m(a.location, b.location);
    Ok(meters / dt as f64 * 3600.0 / METERS_PER_MILE)
}

const GEOHASH_ALPHABET: &[u8; 32] = b"0123456789bcdefghjkmnpqrstuvwxyz";

/// Length of the home-location cell code.
pub const GEOHASH_LEN: usize = 7;

/// A 7-character geohash cell (about 153 m north-south).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Geohash7([u8; GEOHASH_LEN]);

impl Geohash7 {
    pub fn encode(p: GeoPoint) -> Geohash7 {
        let (mut lat_lo, mut lat_hi) = (-90.0_f64, 90.0_f64);
        let (mut lon_lo, mut lon_hi) = (-180.0_f64, 180.0_f64);
        let mut code = [0u8; GEOHASH_LEN];
        let mut even = true;
        for slot in code.iter_mut() {
            let mut idx = 0usize;
            for _ in 0..5 {
                idx <<= 1;
                if even {
                    let mid = (lon_lo + lon_hi) / 2.0;
                    if p.lon >= mid {
                        idx |= 1;
                        lon_lo = mid;
                    } else {
                        lon_hi = mid;
                    }
                } else {
                    let mid = (lat_lo + lat_hi) / 2.0;
                    if p.lat >= mid {
                        idx |= 1;
                        lat_lo = mid;
                    } else {
                        lat_hi = mid;
                    }
                }
                even = !even;
            }
            *slot = GEOHASH_ALPHABET[idx];
        }
        Geohash7(code)
    }

    pub fn parse(s: &str) -> Result<Geohash7> {
        let bytes = s.as_bytes();
        if bytes.len() != GEOHASH_LEN {
            return Err(Error::InvalidCoordinate(format!(
                "geohash {s:?} must have {GEOHASH_LEN} characters"
            )));
        }
        let mut code = [0u8; GEOHASH_LEN];
        for (slot, &b) in code.iter_mut().zip(bytes) {
            if !GEOHASH_ALPHABET.contains(&b) {
                return Err(Error::InvalidCoordinate(format!(
                    "geohash {s:?} contains invalid character {:?}",
                    b as char
                )));
            }
            *slot = b;
        }
        Ok(Geohash7(code))
    }

    pub fn as_str(&self) -> &str {
        // alphabet is ASCII
        std::str::from_utf8(&self.0).expect("geohash is ascii")
    }

    /// Cell bounds as `(min_lat, min_lon, max_lat, max_lon)`.
    pub fn bounds(&self) -> BBox {
        let (mut lat_lo, mut lat_hi) = (-90.0_f64, 90.0_f64);
        let (mut lon_lo, mut lon_hi) = (-180.0_f64, 180.0_f64);
        let mut even = true;
        for &c in &self.0 {
            let idx = GEOHASH_ALPHABET.iter().position(|&a| a == c).unwrap_or(0);
            for bit in (0..5).rev() {
                let set = (idx >> bit) & 1 == 1;
                if even {
                    let mid = (lon_lo + lon_hi) / 2.0;
                    if set {
                        lon_lo = mid;
                    } else {
                        lon_hi = mid;
                    }
                } else {
                    let mid = (lat_lo + lat_hi) / 2.0;
                    if set {
                        lat_lo = mid;
                    } else {
                        lat_hi = mid;
                    }
                }
                even = !even;
            }
        }
        BBox {
            min_lat: lat_lo,
            min_lon: lon_lo,
            max_lat: lat_hi,
            max_lon: lon_hi,
        }
    }

    pub fn center(&self) -> GeoPoint {
        let b = self.bounds();
        GeoPoint {
            lat: (b.min_lat + b.max_lat) / 2.0,
            lon: (b.min_lon + b.max_lon) / 2.0,
        }
    }
}

impl fmt::Display for Geohash7 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl fmt::Debug for Geohash7 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Geohash7({})", self.as_str())
    }
}

impl TryFrom<String> for Geohash7 {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        Geohash7::parse(&s)
    }
}

impl From<Geohash7> for String {
    fn from(g: Geohash7) -> Self {
        g.as_str().to_owned()
    }
}

impl std::str::FromStr for Geohash7 {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Geohash7::parse(s)
    }
}

/// Axis-aligned lat/lon box, bounds inclusive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_lat: f64,
    pub min_lon: f64,
    pub max_lat: f64,
    pub max_lon: f64,
}

impl BBox {
    pub fn of(points: &[GeoPoint]) -> BBox {
        let mut b = BBox {
            min_lat: f64::INFINITY,
            min_lon: f64::INFINITY,
            max_lat: f64::NEG_INFINITY,
            max_lon: f64::NEG_INFINITY,
        };
        for p in points {
            b.min_lat = b.min_lat.min(p.lat);
            b.max_lat = b.max_lat.max(p.lat);
            b.min_lon = b.min_lon.min(p.lon);
            b.max_lon = b.max_lon.max(p.lon);
        }
        b
    }

    pub fn contains(&self, p: GeoPoint) -> bool {
        p.lat >= self.min_lat && p.lat <= self.max_lat && p.lon >= self.min_lon && p.lon <= self.max_lon
    }

    fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_lat: self.min_lat.min(other.min_lat),
            min_lon: self.min_lon.min(other.min_lon),
            max_lat: self.max_lat.max(other.max_lat),
            max_lon: self.max_lon.max(other.max_lon),
        }
    }
}

/// z-component of `(b - a) x (c - a)` in the lon/lat plane.
fn cross(a: GeoPoint, b: GeoPoint, c: GeoPoint) -> f64 {
    (b.lon - a.lon) * (c.lat - a.lat) - (b.lat - a.lat) * (c.lon - a.lon)
}

/// Drops consecutive duplicates and an explicit closing vertex.
fn dedup_ring(points: &[GeoPoint]) -> Vec<GeoPoint> {
    let mut out: Vec<GeoPoint> = Vec::with_capacity(points.len());
    for &p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Strictly convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<GeoPoint>,
    bbox: BBox,
}

impl ConvexPolygon {
    /// Accepts an open or closed ring in either orientation. Repeated and
    /// collinear vertices are dropped; anything still non-convex is an error
    /// (see [`ConvexPolygon::hull`]).
    pub fn new(vertices: Vec<GeoPoint>) -> Result<ConvexPolygon> {
        let mut ring = dedup_ring(&vertices);
        if ring.len() < 3 {
            return Err(degenerate("fewer than 3 distinct vertices"));
        }
        // drop collinear vertices until stable
        loop {
            let n = ring.len();
            if n < 3 {
                return Err(degenerate("all vertices collinear"));
            }
            let drop = (0..n).find(|&i| cross(ring[(i + n - 1) % n], ring[i], ring[(i + 1) % n]) == 0.0);
            match drop {
                Some(i) => {
                    ring.remove(i);
                }
                None => break,
            }
        }
        let n = ring.len();
        let signs: Vec<f64> = (0..n)
            .map(|i| cross(ring[i], ring[(i + 1) % n], ring[(i + 2) % n]))
            .collect();
        let all_pos = signs.iter().all(|&s| s > 0.0);
        let all_neg = signs.iter().all(|&s| s < 0.0);
        if !all_pos && !all_neg {
            return Err(degenerate("ring is not convex"));
        }
        if all_neg {
            ring.reverse();
        }
        // a star polygon has consistent turn signs but winds more than once
        let turn: f64 = (0..n)
            .map(|i| {
                let (a, b, c) = (ring[i], ring[(i + 1) % n], ring[(i + 2) % n]);
                let h1 = (b.lat - a.lat).atan2(b.lon - a.lon);
                let h2 = (c.lat - b.lat).atan2(c.lon - b.lon);
                let mut d = h2 - h1;
                while d <= -std::f64::consts::PI {
                    d += 2.0 * std::f64::consts::PI;
                }
                while d > std::f64::consts::PI {
                    d -= 2.0 * std::f64::consts::PI;
                }
                d
            })
            .sum();
        if (turn - 2.0 * std::f64::consts::PI).abs() > 1e-6 {
            return Err(degenerate("ring self-intersects"));
        }
        let bbox = BBox::of(&ring);
        Ok(ConvexPolygon {
            vertices: ring,
            bbox,
        })
    }

    /// Convex hull of a point set (Andrew's monotone chain).
    pub fn hull(points: &[GeoPoint]) -> Result<ConvexPolygon> {
        let mut pts: Vec<GeoPoint> = points.to_vec();
        pts.sort_by(|a, b| {
            a.lon
                .partial_cmp(&b.lon)
                .unwrap_or(Ordering::Equal)
                .then(a.lat.partial_cmp(&b.lat).unwrap_or(Ordering::Equal))
        });
        pts.dedup();
        if pts.len() < 3 {
            return Err(degenerate("fewer than 3 distinct vertices"));
        }
        let mut lower: Vec<GeoPoint> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<GeoPoint> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        ConvexPolygon::new(lower)
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Half-plane test; points on the boundary are inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let n = self.vertices.len();
        (0..n).all(|i| cross(self.vertices[i], self.vertices[(i + 1) % n], p) >= 0.0)
    }
}

fn degenerate(reason: &str) -> Error {
    Error::InvalidGeometry {
        feature: String::new(),
        reason: reason.into(),
    }
}

/// Simple polygon ring, possibly non-convex. Used for block groups.
#[derive(Debug, Clone, PartialEq)]
pub struct Ring {
    vertices: Vec<GeoPoint>,
    bbox: BBox,
}

impl Ring {
    pub fn new(vertices: Vec<GeoPoint>) -> Result<Ring> {
        let ring = dedup_ring(&vertices);
        if ring.len() < 3 {
            return Err(degenerate("ring needs at least 3 distinct vertices"));
        }
        let bbox = BBox::of(&ring);
        Ok(Ring {
            vertices: ring,
            bbox,
        })
    }

    pub fn vertices(&self) -> &[GeoPoint] {
        &self.vertices
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }

    /// Ray casting with an explicit on-edge check, so boundary points count
    /// as inside.
    pub fn contains(&self, p: GeoPoint) -> bool {
        if !self.bbox.contains(p) {
            return false;
        }
        let v = &self.vertices;
        let n = v.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[j], v[i]);
            if on_segment(a, b, p) {
                return true;
            }
            if (b.lat > p.lat) != (a.lat > p.lat) {
                let x = (a.lon - b.lon) * (p.lat - b.lat) / (a.lat - b.lat) + b.lon;
                if p.lon < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }

    /// Vertex centroid; adequate as a label point for convex-ish cells.
    pub fn centroid(&self) -> GeoPoint {
        let n = self.vertices.len() as f64;
        let lat = self.vertices.iter().map(|p| p.lat).sum::<f64>() / n;
        let lon = self.vertices.iter().map(|p| p.lon).sum::<f64>() / n;
        GeoPoint { lat, lon }
    }
}

fn on_segment(a: GeoPoint, b: GeoPoint, p: GeoPoint) -> bool {
    cross(a, b, p) == 0.0
        && p.lon >= a.lon.min(b.lon)
        && p.lon <= a.lon.max(b.lon)
        && p.lat >= a.lat.min(b.lat)
        && p.lat <= a.lat.max(b.lat)
}

/// Uniform grid over item bounding boxes. Queries return candidate item
/// indices in ascending order; callers run the exact containment test.
#[derive(Debug, Clone)]
pub struct GridIndex {
    extent: BBox,
    rows: usize,
    cols: usize,
    cells: Vec<Vec<usize>>,
}

impl GridIndex {
    pub fn build(boxes: &[BBox]) -> GridIndex {
        if boxes.is_empty() {
            return GridIndex {
                extent: BBox {
                    min_lat: 0.0,
                    min_lon: 0.0,
                    max_lat: 0.0,
                    max_lon: 0.0,
                },
                rows: 0,
                cols: 0,
                cells: Vec::new(),
            };
        }
        let extent = boxes[1..].iter().fold(boxes[0], |acc, b| acc.union(b));
        let side = ((boxes.len() as f64).sqrt().ceil() as usize).clamp(1, 512);
        let mut index = GridIndex {
            extent,
            rows: side,
            cols: side,
            cells: vec![Vec::new(); side * side],
        };
        for (i, b) in boxes.iter().enumerate() {
            let (r0, c0) = index.cell_of(b.min_lat, b.min_lon);
            let (r1, c1) = index.cell_of(b.max_lat, b.max_lon);
            for r in r0..=r1 {
                for c in c0..=c1 {
                    index.cells[r * index.cols + c].push(i);
                }
            }
        }
        index
    }

    fn cell_of(&self, lat: f64, lon: f64) -> (usize, usize) {
        let h = (self.extent.max_lat - self.extent.min_lat).max(f64::MIN_POSITIVE);
        let w = (self.extent.max_lon - self.extent.min_lon).max(f64::MIN_POSITIVE);
        let r = (((lat - self.extent.min_lat) / h) * self.rows as f64).floor();
        let c = (((lon - self.extent.min_lon) / w) * self.cols as f64).floor();
        (
            (r.max(0.0) as usize).min(self.rows - 1),
            (c.max(0.0) as usize).min(self.cols - 1),
        )
    }

    pub fn candidates(&self, p: GeoPoint) -> &[usize] {
        if self.cells.is_empty() || !self.extent.contains(p) {
            return &[];
        }
        let (r, c) = self.cell_of(p.lat, p.lon);
        &self.cells[r * self.cols + c]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(lat: f64, lon: f64) -> GeoPoint {
        GeoPoint::new(lat, lon).unwrap()
    }

    fn ping(ts: i64, lat: f64, lon: f64) -> Ping {
        Ping {
            device_id: "d".into(),
            ts,
            location: pt(lat, lon),
        }
    }

    #[test]
    fn point_ranges_enforced() {
        assert!(GeoPoint::new(95.0, 0.0).is_err());
        assert!(GeoPoint::new(0.0, 180.0).is_err());
        assert!(GeoPoint::new(0.0, -180.0).is_ok());
        assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    }

    #[test]
    fn geohash_reference_vector() {
        assert_eq!(Geohash7::encode(pt(57.64911, 10.40744)).as_str(), "u4pruyd");
    }

    #[test]
    fn geohash_origin_cell_contains_origin() {
        let g = Geohash7::encode(pt(0.0, 0.0));
        assert_eq!(g.as_str().len(), 7);
        assert!(g.bounds().contains(pt(0.0, 0.0)));
    }

    #[test]
    fn geohash_parse_rejects_bad_codes() {
        assert!(Geohash7::parse("u4pruy").is_err());
        assert!(Geohash7::parse("u4pruya").is_err());
        assert_eq!(Geohash7::parse("u4pruyd").unwrap().as_str(), "u4pruyd");
    }

    #[test]
    fn jitter_near_center_keeps_cell() {
        let g = Geohash7::encode(pt(41.8781, -87.6298));
        let c = g.center();
        for k in 0..16 {
            let ang = k as f64 * std::f64::consts::PI / 8.0;
            let q = c.offset_m(ang.sin(), ang.cos());
            assert_eq!(Geohash7::encode(q), g);
        }
    }

    #[test]
    fn haversine_examples() {
        assert_eq!(haversine_m(pt(10.0, 20.0), pt(10.0, 20.0)), 0.0);
        assert!((haversine_m(pt(0.0, 0.0), pt(0.0, 1.0)) - 111_194.9).abs() < 0.1);
        let half = std::f64::consts::PI * EARTH_RADIUS_M;
        assert!((haversine_m(pt(0.0, 0.0), pt(0.0, -180.0)) - half).abs() < 1.0);
    }

    #[test]
    fn speed_examples() {
        let a = ping(0, 40.0, -75.0);
        let b = Ping {
            ts: 60,
            location: a.location.offset_m(2000.0, 0.0),
            ..a.clone()
        };
        let d = haversine_m(a.location, b.location);
        let mph = speed_mph(&a, &b).unwrap();
        assert!((mph - d / 60.0 * 3600.0 / METERS_PER_MILE).abs() < 1e-12);
        assert!((mph - 74.56).abs() < 0.05, "{mph}");
        assert_eq!(speed_mph(&a, &ping(100, 40.0, -75.0)).unwrap(), 0.0);
        assert!(speed_mph(&a, &ping(0, 40.0, -75.0)).is_err());
        assert!(speed_mph(&b, &a).is_err());
    }

    #[test]
    fn unit_square_containment() {
        let sq = ConvexPolygon::new(vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(1.0, 1.0), pt(1.0, 0.0)]).unwrap();
        assert!(sq.contains(pt(0.5, 0.5)));
        assert!(sq.contains(pt(0.0, 0.5)));
        assert!(sq.contains(pt(0.5, 0.0)));
        assert!(sq.contains(pt(1.0, 1.0)));
        assert!(!sq.contains(pt(1.5, 0.5)));
    }

    #[test]
    fn convex_polygon_normalizes_ring() {
        // clockwise, closed, with a collinear midpoint
        let p = ConvexPolygon::new(vec![
            pt(0.0, 0.0),
            pt(1.0, 0.0),
            pt(1.0, 1.0),
            pt(0.5, 1.0),
            pt(0.0, 1.0),
            pt(0.0, 0.0),
        ])
        .unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert!(p.contains(pt(0.25, 0.25)));
    }

    #[test]
    fn non_convex_and_degenerate_rejected() {
        let dart = vec![pt(0.0, 0.0), pt(2.0, 1.0), pt(0.0, 2.0), pt(0.5, 1.0)];
        assert!(ConvexPolygon::new(dart.clone()).is_err());
        assert_eq!(ConvexPolygon::hull(&dart).unwrap().vertices().len(), 3);
        assert!(ConvexPolygon::new(vec![pt(0.0, 0.0), pt(1.0, 1.0)]).is_err());
        assert!(ConvexPolygon::new(vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 2.0)]).is_err());
    }

    #[test]
    fn hull_drops_interior_point() {
        let pts = vec![pt(0.0, 0.0), pt(0.0, 1.0), pt(0.5, 0.5), pt(1.0, 1.0), pt(1.0, 0.0)];
        let h = ConvexPolygon::hull(&pts).unwrap();
        assert_eq!(h.vertices().len(), 4);
        assert!(!h.vertices().contains(&pt(0.5, 0.5)));
    }

    #[test]
    fn ring_contains_concave_notch() {
        // U shape opening north
        let u = Ring::new(vec![
            pt(0.0, 0.0),
            pt(0.0, 3.0),
            pt(3.0, 3.0),
            pt(3.0, 2.0),
            pt(1.0, 2.0),
            pt(1.0, 1.0),
            pt(3.0, 1.0),
            pt(3.0, 0.0),
        ])
        .unwrap();
        assert!(u.contains(pt(0.5, 1.5)));
        assert!(!u.contains(pt(2.0, 1.5)));
        assert!(u.contains(pt(2.0, 2.5)));
        assert!(u.contains(pt(1.0, 1.5)));
        assert!(u.contains(pt(3.0, 2.5)));
    }

    #[test]
    fn grid_index_candidates_cover_items() {
        let boxes: Vec<BBox> = (0..10)
            .map(|i| BBox {
                min_lat: i as f64,
                min_lon: 0.0,
                max_lat: i as f64 + 1.0,
                max_lon: 1.0,
            })
            .collect();
        let idx = GridIndex::build(&boxes);
        for i in 0..10 {
            let p = pt(i as f64 + 0.5, 0.5);
            assert!(idx.candidates(p).contains(&i));
        }
        assert!(idx.candidates(pt(50.0, 50.0)).is_empty());
    }
}
