//! Agent itineraries and their ping streams.

use std::collections::BTreeMap;
use std::sync::Arc;

use chrono::{Datelike, Duration, NaiveDate, TimeZone, Weekday};
use chrono_tz::Tz;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::weighted::WeightedIndex;
use rand_distr::{Distribution, LogNormal, Normal};

use super::city::CityLayout;
use super::spec::SynthSpec;
use crate::corpus::{BlockGroupIndex, Ping, StationIndex};
use crate::geo::{haversine_m, GeoPoint, Geohash7, METERS_PER_MILE};

#[derive(Debug, Clone, Copy, PartialEq)]
enum Activity {
    Station,
    PatrolStay,
    PatrolMove,
    Commute,
    Errand,
}

/// Time interval `[t0, t1)` spent at `a` (when `a == b`) or moving from `a`
/// to `b` at constant speed. Time outside every segment is spent at home.
#[derive(Debug, Clone, Copy)]
struct Seg {
    t0: i64,
    t1: i64,
    a: GeoPoint,
    b: GeoPoint,
    act: Activity,
}

impl Seg {
    fn at(&self, t: i64) -> GeoPoint {
        if self.t1 <= self.t0 || self.a == self.b {
            return self.a;
        }
        let f = (t - self.t0) as f64 / (self.t1 - self.t0) as f64;
        let lat = self.a.lat() + f * (self.b.lat() - self.a.lat());
        let lon = self.a.lon() + f * (self.b.lon() - self.a.lon());
        GeoPoint::new(lat, lon).unwrap_or(self.a)
    }
}

/// One scheduled shift and what the emitted pings reveal about it.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct ScheduledShift {
    pub leave_home: i64,
    pub arrive_station: i64,
    pub depart_station: i64,
    pub return_home: i64,
    /// First and last emitted ping inside a station footprint between
    /// leaving and returning home.
    pub observed: Option<(i64, i64)>,
}

pub(crate) struct AgentOutput {
    pub pings: Vec<Ping>,
    pub shifts: Vec<ScheduledShift>,
    pub home_cell: Option<Geohash7>,
    pub station_id: Option<String>,
    /// Realized patrol seconds by global block-group index.
    pub patrol_secs: BTreeMap<usize, f64>,
}

pub(crate) struct World<'a> {
    pub spec: &'a SynthSpec,
    pub start_ts: i64,
    pub end_ts: i64,
    pub stations: &'a StationIndex,
    pub bgs: &'a BlockGroupIndex,
}

fn local_ts(tz: Tz, date: NaiveDate, hours: f64) -> i64 {
    let ndt = date.and_hms_opt(0, 0, 0).expect("midnight") + Duration::seconds((hours * 3600.0).round() as i64);
    match tz.from_local_datetime(&ndt).earliest() {
        Some(t) => t.timestamp(),
        // inside a spring-forward gap: take the instant one hour later
        None => tz
            .from_local_datetime(&(ndt + Duration::hours(1)))
            .earliest()
            .map(|t| t.timestamp())
            .unwrap_or_else(|| ndt.and_utc().timestamp()),
    }
}

fn travel_secs(a: GeoPoint, b: GeoPoint, mph: f64) -> i64 {
    let mps = mph * METERS_PER_MILE / 3600.0;
    (haversine_m(a, b) / mps).round().max(1.0) as i64
}

fn uniform_min(rng: &mut ChaCha8Rng, (lo, hi): (f64, f64)) -> i64 {
    let m = if hi > lo { rng.random_range(lo..hi) } else { lo };
    (m * 60.0).round() as i64
}

fn local_days(world: &World, tz: Tz) -> Vec<NaiveDate> {
    let first = tz.from_utc_datetime(&chrono::DateTime::from_timestamp(world.start_ts, 0).unwrap_or_default().naive_utc());
    let mut d = first.date_naive() - Duration::days(1);
    let mut out = Vec::new();
    while local_ts(tz, d, 0.0) < world.end_ts {
        out.push(d);
        d += Duration::days(1);
    }
    out
}

struct Plan {
    home: GeoPoint,
    segs: Vec<Seg>,
    shifts: Vec<ScheduledShift>,
}

pub(crate) fn officer(world: &World, city: &CityLayout, device: Arc<str>, rng: &mut ChaCha8Rng) -> AgentOutput {
    let sched = &world.spec.shift;
    let (home, home_cell) = city.officer_home(world.spec.demographics.officer_home_black_share, rng);
    let st = rng.random_range(0..city.stations.len());
    let station = city.station_centers[st];
    let start_hour = sched.start_hours[rng.random_range(0..sched.start_hours.len())];
    let off_offset = rng.random_range(0..7u32);
    let length = Normal::new(sched.length_mean_h, sched.length_sd_h.max(0.0)).expect("finite shift length");
    let pick = WeightedIndex::new(&city.weights).ok();
    let margin = 2 * 3600;

    // choose work days: weekly pattern, topped up so every month has five
    let days = local_days(world, city.tz);
    let feasible = |d: NaiveDate| {
        let a = local_ts(city.tz, d, start_hour);
        a - 3 * 3600 >= world.start_ts + margin && a + ((sched.length_max_h + 3.0) * 3600.0) as i64 <= world.end_ts - margin
    };
    let mut work: Vec<(NaiveDate, bool)> = days
        .iter()
        .enumerate()
        .map(|(k, &d)| (d, feasible(d) && ((k as u32 + off_offset) % 7) < sched.workdays_per_week))
        .collect();
    let mut by_month: BTreeMap<(i32, u32), Vec<usize>> = BTreeMap::new();
    for (i, (d, _)) in work.iter().enumerate() {
        by_month.entry((d.year(), d.month())).or_default().push(i);
    }
    for idx in by_month.values() {
        let mut have = idx.iter().filter(|&&i| work[i].1).count();
        for &i in idx {
            if have >= 5 {
                break;
            }
            if !work[i].1 && feasible(work[i].0) {
                work[i].1 = true;
                have += 1;
            }
        }
    }

    let mut plan = Plan {
        home,
        segs: Vec::new(),
        shifts: Vec::new(),
    };
    let mut prev_end = i64::MIN;
    for (d, on) in work {
        if !on {
            continue;
        }
        let jitter = rng.random_range(-0.25..0.25);
        let arrive = local_ts(city.tz, d, start_hour + jitter);
        let hours = length.sample(rng).clamp(sched.length_min_h, sched.length_max_h);
        let depart = arrive + (hours * 3600.0).round() as i64;
        let commute = travel_secs(home, station, sched.travel_mph);
        let leave_home = arrive - commute;
        if leave_home <= prev_end + 3600 {
            continue;
        }
        plan.segs.push(Seg {
            t0: leave_home,
            t1: arrive,
            a: home,
            b: station,
            act: Activity::Commute,
        });
        let roll_call = uniform_min(rng, sched.station_stay_min);
        let patrol_end = depart - uniform_min(rng, sched.station_stay_min);
        plan.segs.push(Seg {
            t0: arrive,
            t1: arrive + roll_call,
            a: station,
            b: station,
            act: Activity::Station,
        });
        let mut t = arrive + roll_call;
        let mut cur = station;
        if let Some(pick) = &pick {
            loop {
                let bg = pick.sample(rng);
                let p = city.patrol_point(bg, rng);
                let go = travel_secs(cur, p, sched.travel_mph);
                let back = travel_secs(p, station, sched.travel_mph);
                let room = patrol_end - (t + go) - back;
                if room < 5 * 60 {
                    break;
                }
                let stay = uniform_min(rng, sched.patrol_stay_min).min(room);
                plan.segs.push(Seg {
                    t0: t,
                    t1: t + go,
                    a: cur,
                    b: p,
                    act: Activity::PatrolMove,
                });
                plan.segs.push(Seg {
                    t0: t + go,
                    t1: t + go + stay,
                    a: p,
                    b: p,
                    act: Activity::PatrolStay,
                });
                t += go + stay;
                cur = p;
            }
        }
        let back = travel_secs(cur, station, sched.travel_mph);
        if cur != station {
            plan.segs.push(Seg {
                t0: t,
                t1: t + back,
                a: cur,
                b: station,
                act: Activity::PatrolMove,
            });
            t += back;
        }
        plan.segs.push(Seg {
            t0: t,
            t1: depart,
            a: station,
            b: station,
            act: Activity::Station,
        });
        let return_home = depart + commute;
        plan.segs.push(Seg {
            t0: depart,
            t1: return_home,
            a: station,
            b: home,
            act: Activity::Commute,
        });
        plan.shifts.push(ScheduledShift {
            leave_home,
            arrive_station: arrive,
            depart_station: depart,
            return_home,
            observed: None,
        });
        prev_end = return_home;
    }

    let pings = emit(world, &plan, device, rng, |seg, p| match seg.map(|s| s.act) {
        Some(Activity::PatrolStay | Activity::PatrolMove) => Geohash7::encode(p) != home_cell,
        _ => true,
    });
    let mut shifts = plan.shifts;
    for s in &mut shifts {
        let inside: Vec<i64> = pings
            .iter()
            .filter(|p| p.ts > s.leave_home && p.ts < s.return_home && world.stations.is_inside_any(p.location))
            .map(|p| p.ts)
            .collect();
        s.observed = inside.first().zip(inside.last()).map(|(&a, &b)| (a, b));
    }
    AgentOutput {
        pings,
        shifts,
        home_cell: Some(home_cell),
        station_id: Some(city.stations[st].station_id.clone()),
        patrol_secs: patrol_seconds(world, &plan.segs),
    }
}

pub(crate) fn civilian(world: &World, city: &CityLayout, device: Arc<str>, rng: &mut ChaCha8Rng) -> AgentOutput {
    let home = city.any_point(rng);
    let work = city.any_point(rng);
    let mph = 20.0;
    let mut plan = Plan {
        home,
        segs: Vec::new(),
        shifts: Vec::new(),
    };
    let trip = |plan: &mut Plan, leave: i64, dest: GeoPoint, stay: i64, then: Option<(GeoPoint, i64)>| {
        let go = travel_secs(home, dest, mph);
        let mut t = leave;
        let mut push = |a: GeoPoint, b: GeoPoint, t0: i64, t1: i64| {
            plan.segs.push(Seg {
                t0,
                t1,
                a,
                b,
                act: Activity::Errand,
            })
        };
        push(home, dest, t, t + go);
        t += go;
        push(dest, dest, t, t + stay);
        t += stay;
        let mut last = dest;
        if let Some((next, next_stay)) = then {
            let hop = travel_secs(dest, next, mph);
            push(dest, next, t, t + hop);
            t += hop;
            push(next, next, t, t + next_stay);
            t += next_stay;
            last = next;
        }
        let back = travel_secs(last, home, mph);
        push(last, home, t, t + back);
    };
    for d in local_days(world, city.tz) {
        let weekend = matches!(d.weekday(), Weekday::Sat | Weekday::Sun);
        if !weekend && rng.random::<f64>() < 0.85 {
            let leave = local_ts(city.tz, d, rng.random_range(7.0..9.0));
            let stay = (rng.random_range(8.0..9.0) * 3600.0) as i64;
            let extra = (rng.random::<f64>() < 0.3)
                .then(|| (city.any_point(rng), (rng.random_range(0.5..2.0) * 3600.0) as i64));
            trip(&mut plan, leave, work, stay, extra);
        } else if rng.random::<f64>() < 0.6 {
            let leave = local_ts(city.tz, d, rng.random_range(10.0..16.0));
            let stay = (rng.random_range(1.0..4.0) * 3600.0) as i64;
            let dest = city.any_point(rng);
            trip(&mut plan, leave, dest, stay, None);
        }
    }
    // keep only trips inside the window and non-overlapping
    plan.segs.retain(|s| s.t0 >= world.start_ts && s.t1 <= world.end_ts);
    let pings = emit(world, &plan, device, rng, |_, p| !world.stations.is_inside_any(p));
    AgentOutput {
        pings,
        shifts: Vec::new(),
        home_cell: None,
        station_id: None,
        patrol_secs: BTreeMap::new(),
    }
}

/// Samples ping times from the gap model over the whole window and places
/// each ping on the itinerary with Gaussian position error. `keep` sees the
/// active segment (`None` at home) and the noisy position.
fn emit(
    world: &World,
    plan: &Plan,
    device: Arc<str>,
    rng: &mut ChaCha8Rng,
    keep: impl Fn(Option<&Seg>, GeoPoint) -> bool) -> Vec<Ping> {
    let spec = world.spec;
    let gap = LogNormal::new(spec.ping_gap.mu(), spec.ping_gap.sigma).expect("validated gap model");
    let noise = (spec.gps_noise_m > 0.0).then(|| Normal::new(0.0, spec.gps_noise_m).expect("validated noise"));
    let next_gap = |rng: &mut ChaCha8Rng| (spec.ping_gap.shift_s + gap.sample(rng)).round().max(1.0) as i64;
    let mut out = Vec::new();
    let mut i = 0;
    let first = next_gap(rng);
    let mut t = world.start_ts + rng.random_range(0..first);
    while t < world.end_ts {
        while i < plan.segs.len() && plan.segs[i].t1 <= t {
            i += 1;
        }
        let seg = plan.segs.get(i).filter(|s| s.t0 <= t);
        let base = seg.map_or(plan.home, |s| s.at(t));
        let p = match &noise {
            Some(n) => base.offset_m(n.sample(rng), n.sample(rng)),
            None => base,
        };
        let round = |x: f64| (x * 1e7).round() / 1e7;
        if let Ok(p) = GeoPoint::new(round(p.lat()), round(p.lon())) {
            if keep(seg, p) {
                out.push(Ping {
                    device_id: device.clone(),
                    ts: t,
                    location: p,
                });
            }
        }
        t += next_gap(rng);
    }
    out
}

/// Patrol time per block group: stays in full, travel sampled every 15 s.
fn patrol_seconds(world: &World, segs: &[Seg]) -> BTreeMap<usize, f64> {
    let mut out: BTreeMap<usize, f64> = BTreeMap::new();
    for s in segs {
        match s.act {
            Activity::PatrolStay => {
                if let Some(bg) = world.bgs.locate(s.a) {
                    *out.entry(bg).or_default() += (s.t1 - s.t0) as f64;
                }
            }
            Activity::PatrolMove => {
                let mut t = s.t0;
                while t < s.t1 {
                    let step = 15.min(s.t1 - t);
                    if let Some(bg) = world.bgs.locate(s.at(t + step / 2)) {
                        *out.entry(bg).or_default() += step as f64;
                    }
                    t += step;
                }
            }
            _ => {}
        }
    }
    out
}
