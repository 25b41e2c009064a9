mod common;

use std::sync::Arc;

use common::*;
use patrolscope::corpus::Ping;
use patrolscope::geo::{GeoPoint, Geohash7};
use patrolscope::officers::{infer_home, qualify_months};
use patrolscope::shifts::{detect_shifts, ShiftConfig};
use proptest::prelude::*;

fn home() -> GeoPoint {
    origin().offset_m(3000.0, 0.0)
}

fn station() -> GeoPoint {
    origin().offset_m(5.0, 5.0)
}

fn patrol() -> GeoPoint {
    origin().offset_m(1200.0, -800.0)
}

/// `days` workdays, each home -> station -> patrol -> station -> home with
/// a shift of `span_h` hours, and half-hourly home pings overnight.
fn officer(days: i64, span_h: i64) -> Vec<Ping> {
    let dev: Arc<str> = Arc::from("o");
    let mut v = Vec::new();
    for d in 0..days {
        let s = T0 + d * DAY + 7 * HOUR;
        v.push(ping(&dev, s - HOUR, home()));
        v.push(ping(&dev, s, station()));
        for k in 1..span_h * 2 {
            v.push(ping(&dev, s + k * 1800, patrol()));
        }
        v.push(ping(&dev, s + span_h * HOUR, station()));
        v.push(ping(&dev, s + span_h * HOUR + HOUR, home()));
        for k in 3..(2 * (24 - span_h) - 3) {
            v.push(ping(&dev, s + span_h * HOUR + k * 1800, home()));
        }
    }
    v
}

fn shifts_of(pings: &[Ping], cfg: &ShiftConfig, min_days: u32) -> Vec<(i64, i64)> {
    let st = one_station();
    let w = march_window();
    let q = qualify_months("o", pings, &st, &w, min_days);
    let h = infer_home("o", pings, &st, &w, Some(CITY));
    detect_shifts("o", pings, &h, &st, &q, &w, cfg).iter().map(|s| (s.start_ts, s.end_ts)).collect()
}

#[test]
fn regular_officer_yields_one_shift_per_day() {
    let p = officer(10, 8);
    let got = shifts_of(&p, &ShiftConfig::default(), 5);
    assert_eq!(got.len(), 10);
    assert!(got.iter().all(|(a, b)| b - a == 8 * HOUR));
}

#[test]
fn home_is_the_modal_cell_outside_stations() {
    let p = officer(10, 8);
    let h = infer_home("o", &p, &one_station(), &march_window(), Some(CITY));
    // March alone is H1 of a one-month window
    let h1 = h.h1.expect("home in H1");
    assert_eq!(h1.home_cell, Geohash7::encode(home()));
    assert!(h1.support >= 20);
    assert!(h.h2.is_none());
}

#[test]
fn civilian_never_at_a_station_is_not_an_officer() {
    let dev: Arc<str> = Arc::from("c");
    let p: Vec<Ping> = (0..200).map(|i| ping(&dev, T0 + i * 1800, patrol())).collect();
    let q = qualify_months("c", &p, &one_station(), &march_window(), 5);
    assert!(q.iter().all(|m| !m.qualified));
}

#[test]
fn same_station_rule_is_optional() {
    let p = officer(6, 6);
    let cfg = ShiftConfig {
        require_same_station: true,
        ..ShiftConfig::default()
    };
    assert_eq!(shifts_of(&p, &cfg, 5).len(), 6);
}

#[test]
fn maximum_span_variant_drops_long_shifts() {
    let mut p = officer(6, 6);
    p.extend(officer(6, 13).into_iter().map(|mut x| {
        x.ts += 10 * DAY;
        x
    }));
    let cfg = ShiftConfig {
        max_shift_h: Some(12.0),
        ..ShiftConfig::default()
    };
    assert_eq!(shifts_of(&p, &ShiftConfig::default(), 5).len(), 12);
    assert_eq!(shifts_of(&p, &cfg, 5).len(), 6);
}

proptest! {
    #[test]
    fn raising_thresholds_never_adds_shifts(days in 5i64..12, span in 2i64..14, lo in 1.0f64..8.0, extra in 0.0f64..6.0) {
        let p = officer(days, span);
        let a = ShiftConfig { min_shift_h: lo, ..ShiftConfig::default() };
        let b = ShiftConfig { min_shift_h: lo + extra, ..ShiftConfig::default() };
        let sa = shifts_of(&p, &a, 5);
        let sb = shifts_of(&p, &b, 5);
        prop_assert!(sb.len() <= sa.len());
        prop_assert!(sb.iter().all(|s| sa.contains(s)));
        let q5 = shifts_of(&p, &a, 5).len();
        let q8 = shifts_of(&p, &a, 8).len();
        prop_assert!(q8 <= q5);
    }

    #[test]
    fn input_order_does_not_matter(seed in any::<u64>(), days in 5i64..9) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let p = officer(days, 8);
        let mut shuffled = p.clone();
        shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        shuffled.sort_by_key(|x| x.ts);
        prop_assert_eq!(shifts_of(&p, &ShiftConfig::default(), 5), shifts_of(&shuffled, &ShiftConfig::default(), 5));
    }
}
