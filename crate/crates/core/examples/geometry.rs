//! Distances, geohash cells and footprint containment.
//!
//!     cargo run --example geometry

use patrolscope::geo::{haversine_m, ConvexPolygon, GeoPoint, Geohash7, Ring};

fn main() -> patrolscope::Result<()> {
    let loop_ = GeoPoint::new(41.8789, -87.6359)?;
    let hyde_park = GeoPoint::new(41.7943, -87.5907)?;
    println!("distance: {:.0} m", haversine_m(loop_, hyde_park));

    let cell = Geohash7::encode(loop_);
    let b = cell.bounds();
    println!(
        "geohash {cell}: lat [{:.5}, {:.5}] lon [{:.5}, {:.5}], center {:?}",
        b.min_lat,
        b.max_lat,
        b.min_lon,
        b.max_lon,
        cell.center()
    );

    // a 120 m square station footprint and an L-shaped block group
    let station = ConvexPolygon::new(
        [(-60.0, -60.0), (-60.0, 60.0), (60.0, 60.0), (60.0, -60.0)]
            .map(|(n, e)| loop_.offset_m(n, e))
            .to_vec(),
    )?;
    let block = Ring::new(
        [(0.0, 0.0), (0.0, 400.0), (200.0, 400.0), (200.0, 200.0), (400.0, 200.0), (400.0, 0.0)]
            .map(|(n, e)| loop_.offset_m(n, e))
            .to_vec(),
    )?;
    for (label, north, east) in [("station center", 0.0, 0.0), ("lobby door", 60.0, 0.0), ("courtyard", 300.0, 300.0), ("alley", 100.0, 300.0)] {
        let p = loop_.offset_m(north, east);
        println!(
            "{label:>14}: in station {:5}  in block {:5}",
            station.contains(p),
            block.contains(p)
        );
    }
    Ok(())
}
