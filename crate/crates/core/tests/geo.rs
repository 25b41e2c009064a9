use patrolscope::geo::{haversine_m, ConvexPolygon, GeoPoint, Geohash7, Ring};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = GeoPoint> {
    (-89.9f64..89.9, -179.9f64..179.9).prop_map(|(lat, lon)| GeoPoint::new(lat, lon).unwrap())
}

fn local_points(n: std::ops::Range<usize>) -> impl Strategy<Value = Vec<GeoPoint>> {
    prop::collection::vec((-0.02f64..0.02, -0.02f64..0.02), n)
        .prop_map(|v| v.into_iter().map(|(a, b)| GeoPoint::new(41.8 + a, -87.7 + b).unwrap()).collect())
}

proptest! {
    #[test]
    fn haversine_is_a_metric(a in point(), b in point(), c in point()) {
        let ab = haversine_m(a, b);
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - haversine_m(b, a)).abs() <= 1e-6 * ab.max(1.0));
        prop_assert!(haversine_m(a, a) == 0.0);
        prop_assert!(ab <= haversine_m(a, c) + haversine_m(c, b) + 1e-6);
        prop_assert!(ab <= std::f64::consts::PI * 6_371_000.0 + 1e-6);
    }

    #[test]
    fn offsets_have_the_requested_length(p in (-60.0f64..60.0, -170.0f64..170.0), n in -5000.0f64..5000.0, e in -5000.0f64..5000.0) {
        let p = GeoPoint::new(p.0, p.1).unwrap();
        let d = haversine_m(p, p.offset_m(n, e));
        let want = n.hypot(e);
        prop_assert!((d - want).abs() <= 0.005 * want + 0.01, "{d} vs {want}");
    }

    #[test]
    fn geohash_cell_contains_its_point(p in point()) {
        let g = Geohash7::encode(p);
        prop_assert!(g.bounds().contains(p));
        prop_assert!(g.bounds().contains(g.center()));
        prop_assert_eq!(Geohash7::encode(g.center()), g);
        prop_assert_eq!(Geohash7::parse(g.as_str()).unwrap(), g);
    }

    #[test]
    fn hull_contains_its_generators(pts in local_points(3..20)) {
        if let Ok(hull) = ConvexPolygon::hull(&pts) {
            for p in &pts {
                prop_assert!(hull.contains(*p));
            }
            let ring = Ring::new(hull.vertices().to_vec()).unwrap();
            for v in hull.vertices() {
                prop_assert!(ring.contains(*v));
            }
        }
    }

    #[test]
    fn outside_the_bbox_is_outside(pts in local_points(3..12), q in point()) {
        let ring = Ring::new(pts).unwrap();
        if !ring.bbox().contains(q) {
            prop_assert!(!ring.contains(q));
        }
    }
}

#[test]
fn rejects_invalid_coordinates() {
    assert!(GeoPoint::new(90.5, 0.0).is_err());
    assert!(GeoPoint::new(0.0, 181.0).is_err());
    assert!(GeoPoint::new(f64::NAN, 0.0).is_err());
    assert!(Geohash7::parse("u4pru").is_err());
    assert!(Geohash7::parse("u4pruya").is_err());
}

#[test]
fn non_convex_footprint_is_refused() {
    let o = GeoPoint::new(41.8, -87.7).unwrap();
    let dart = [(0.0, 0.0), (0.0, 100.0), (20.0, 50.0), (100.0, 50.0)]
        .map(|(n, e)| o.offset_m(n, e))
        .to_vec();
    assert!(ConvexPolygon::new(dart).is_err());
}

#[test]
fn square_boundary_counts_as_inside() {
    let sq: Vec<GeoPoint> = [(41.0, -88.0), (41.0, -87.0), (42.0, -87.0), (42.0, -88.0)]
        .iter()
        .map(|&(a, b)| GeoPoint::new(a, b).unwrap())
        .collect();
    let c = ConvexPolygon::new(sq.clone()).unwrap();
    let r = Ring::new(sq).unwrap();
    for (lat, lon) in [(41.0, -87.5), (41.5, -87.0), (42.0, -88.0)] {
        let p = GeoPoint::new(lat, lon).unwrap();
        assert!(c.contains(p), "{p:?}");
        assert!(r.contains(p), "{p:?}");
    }
}
