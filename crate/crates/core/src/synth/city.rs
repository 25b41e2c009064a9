//! Static city layout: block-group grid, covariates, stations and patrol
//! weights.

use std::collections::BTreeMap;

use chrono_tz::Tz;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};

use super::spec::{CitySpec, DemographicModel, PatrolPolicy};
use crate::corpus::{BlockGroup, Station};
use crate::error::{Error, Result};
use crate::geo::{haversine_m, ConvexPolygon, GeoPoint, Geohash7, Ring};

/// Half-width of the square station footprint.
pub(crate) const STATION_HALF_M: f64 = 75.0;
/// Homes and patrol stops keep this distance from station centers.
const STATION_CLEARANCE_M: f64 = 300.0;
const PATROL_CLEARANCE_M: f64 = 160.0;

#[derive(Debug, Clone)]
pub(crate) struct CityLayout {
    pub spec: CitySpec,
    pub tz: Tz,
    origin: GeoPoint,
    /// Sorted by `bg_id` (row-major).
    pub bgs: Vec<BlockGroup>,
    pub stations: Vec<Station>,
    pub station_centers: Vec<GeoPoint>,
    pub weights: Vec<f64>,
    pub population: f64,
    pub shares: BTreeMap<&'static str, f64>,
}

pub(crate) const RACE_COLUMNS: [&str; 4] = ["pct_white", "pct_black", "pct_hispanic", "pct_asian"];

impl CityLayout {
    pub fn build(spec: &CitySpec, demo: &DemographicModel, policy: &PatrolPolicy, rng: &mut ChaCha8Rng) -> Result<CityLayout> {
        let tz: Tz = spec.timezone.parse().map_err(|_| Error::UnknownTimezone {
            city: spec.city_id.clone(),
            tz: spec.timezone.clone(),
        })?;
        let origin = GeoPoint::new(spec.origin_lat, spec.origin_lon)?;
        let mut layout = CityLayout {
            spec: spec.clone(),
            tz,
            origin,
            bgs: Vec::new(),
            stations: Vec::new(),
            station_centers: Vec::new(),
            weights: Vec::new(),
            population: 0.0,
            shares: BTreeMap::new(),
        };
        for r in 0..spec.rows {
            for c in 0..spec.cols {
                let corners = [(0, 0), (0, 1), (1, 1), (1, 0)]
                    .map(|(dr, dc)| layout.grid_point((r + dr) as f64, (c + dc) as f64));
                layout.bgs.push(BlockGroup {
                    bg_id: format!("{}_{:03}_{:03}", spec.city_id, r, c),
                    city_id: spec.city_id.clone(),
                    polygon: Ring::new(corners.to_vec())?,
                    attributes: draw_covariates(demo, rng),
                });
            }
        }
        layout.aggregate_shares();

        let mut cells: Vec<usize> = (0..layout.bgs.len()).collect();
        for i in 0..spec.n_stations as usize {
            let j = rng.random_range(i..cells.len());
            cells.swap(i, j);
            let bg = cells[i];
            let (r, c) = layout.rc(bg);
            let center = layout.grid_point(r as f64 + 0.5, c as f64 + 0.5);
            let corners = [(-1.0, -1.0), (-1.0, 1.0), (1.0, 1.0), (1.0, -1.0)]
                .map(|(n, e)| center.offset_m(n * STATION_HALF_M, e * STATION_HALF_M));
            layout.stations.push(Station {
                station_id: format!("{}_st{:02}", spec.city_id, i),
                city_id: spec.city_id.clone(),
                footprint: ConvexPolygon::new(corners.to_vec())?,
            });
            layout.station_centers.push(center);
        }
        layout.weights = layout.patrol_weights(policy, rng)?;
        Ok(layout)
    }

    fn grid_point(&self, row: f64, col: f64) -> GeoPoint {
        self.origin.offset_m(row * self.spec.cell_m, col * self.spec.cell_m)
    }

    fn rc(&self, bg: usize) -> (u32, u32) {
        (bg as u32 / self.spec.cols, bg as u32 % self.spec.cols)
    }

    fn aggregate_shares(&mut self) {
        let pop: f64 = self.bgs.iter().filter_map(|b| b.attr("population")).sum();
        self.population = pop;
        for col in RACE_COLUMNS {
            let s: f64 = self
                .bgs
                .iter()
                .map(|b| b.attr("population").unwrap_or(0.0) * b.attr(col).unwrap_or(0.0))
                .sum();
            self.shares.insert(col, if pop > 0.0 { s / pop } else { 0.0 });
        }
    }

    fn patrol_weights(&self, policy: &PatrolPolicy, rng: &mut ChaCha8Rng) -> Result<Vec<f64>> {
        let w: Vec<f64> = match policy {
            PatrolPolicy::Uniform => vec![1.0; self.bgs.len()],
            PatrolPolicy::Lognormal { sigma } => {
                let d = LogNormal::new(0.0, *sigma).map_err(|e| Error::InfeasibleSpec(e.to_string()))?;
                self.bgs.iter().map(|_| d.sample(rng)).collect()
            }
            PatrolPolicy::RaceWeighted { coef } => {
                let city = self.shares["pct_black"];
                self.bgs
                    .iter()
                    .map(|b| {
                        let rel = if city > 0.0 { b.attr("pct_black").unwrap_or(0.0) / city } else { 0.0 };
                        (1.0 + coef * rel).max(0.0)
                    })
                    .collect()
            }
            PatrolPolicy::Weights { weights } => self
                .bgs
                .iter()
                .map(|b| weights.get(&b.bg_id).copied().unwrap_or(0.0))
                .collect(),
        };
        if self.spec.n_officers > 0 && w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InfeasibleSpec(format!(
                "{}: patrol weights are all zero",
                self.spec.city_id
            )));
        }
        Ok(w)
    }

    fn near_station(&self, p: GeoPoint, clearance: f64) -> bool {
        self.station_centers.iter().any(|&s| haversine_m(s, p) < clearance)
    }

    /// Uniform point in the inner 80% of a block group, away from stations.
    pub fn patrol_point(&self, bg: usize, rng: &mut ChaCha8Rng) -> GeoPoint {
        let (r, c) = self.rc(bg);
        let mut p = self.grid_point(r as f64 + 0.5, c as f64 + 0.5);
        for _ in 0..64 {
            p = self.grid_point(
                r as f64 + rng.random_range(0.1..0.9),
                c as f64 + rng.random_range(0.1..0.9),
            );
            if !self.near_station(p, PATROL_CLEARANCE_M) {
                break;
            }
        }
        p
    }

    /// Random point anywhere in the city.
    pub fn any_point(&self, rng: &mut ChaCha8Rng) -> GeoPoint {
        self.grid_point(
            rng.random_range(0.0..self.spec.rows as f64),
            rng.random_range(0.0..self.spec.cols as f64),
        )
    }

    /// Officer home: a Geohash-7 cell center in a block group drawn with the
    /// configured majority-Black preference, clear of every station.
    pub fn officer_home(&self, black_share: f64, rng: &mut ChaCha8Rng) -> (GeoPoint, Geohash7) {
        let majority: Vec<usize> = (0..self.bgs.len())
            .filter(|&i| self.bgs[i].attr("pct_black").unwrap_or(0.0) > 0.5)
            .collect();
        let other: Vec<usize> = (0..self.bgs.len()).filter(|i| !majority.contains(i)).collect();
        let mut best = None;
        for _ in 0..256 {
            let pool = if (rng.random::<f64>() < black_share && !majority.is_empty()) || other.is_empty() {
                &majority
            } else {
                &other
            };
            let bg = pool[rng.random_range(0..pool.len())];
            let (r, c) = self.rc(bg);
            let raw = self.grid_point(
                r as f64 + rng.random_range(0.15..0.85),
                c as f64 + rng.random_range(0.15..0.85),
            );
            let cell = Geohash7::encode(raw);
            let center = cell.center();
            best = Some((center, cell));
            if !self.near_station(center, STATION_CLEARANCE_M) {
                break;
            }
        }
        best.expect("at least one draw")
    }
}

fn draw_covariates(demo: &DemographicModel, rng: &mut ChaCha8Rng) -> BTreeMap<String, Option<f64>> {
    let black: f64 = if rng.random::<f64>() < demo.black_majority_share {
        rng.random_range(0.55..0.9)
    } else {
        rng.random_range(0.0..0.3)
    };
    let rest = 1.0 - black;
    let hispanic = rest * rng.random_range(0.0..0.5);
    let asian = rest * rng.random_range(0.0..0.2);
    let white = (rest - hispanic - asian).max(0.0);
    let (lo, hi) = demo.population;
    let population = if hi > lo { rng.random_range(lo..hi).round() } else { lo.round() };
    let homicides = [0.0, 0.0, 0.0, 1.0, 2.0][rng.random_range(0..5)];
    let round4 = |x: f64| (x * 1e4).round() / 1e4;
    [
        ("population", population),
        ("pct_white", round4(white)),
        ("pct_black", round4(black)),
        ("pct_hispanic", round4(hispanic)),
        ("pct_asian", round4(asian)),
        ("pct_college", round4(rng.random_range(0.1..0.6))),
        ("median_income_k", round4(rng.random_range(25.0..120.0))),
        ("census_return_rate", round4(rng.random_range(0.55..0.85))),
        ("homicide_count", homicides),
        ("dist_nearest_homicide_km", round4(rng.random_range(0.1..3.0))),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), Some(v)))
    .collect()
}
