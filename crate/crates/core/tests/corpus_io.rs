mod common;

use std::io::Write;

use common::*;
use patrolscope::corpus::{load_pings, write_pings_csv, InputManifest, PingCorpus};
use patrolscope::Error;

fn write(dir: &std::path::Path, name: &str, body: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
    p
}

#[test]
fn malformed_rows_are_reported_with_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let mut body = String::from("device_id,ts_unix_s,lat,lon\n");
    for i in 0..200 {
        body.push_str(&format!("a,{},41.8,-87.7\n", T0 + i * 60));
    }
    body.push_str("a,notanumber,41.8,-87.7\n");
    body.push_str(&format!("a,{},95.0,-87.7\n", T0 + 99_999));
    body.push_str(&format!("a,{},41.8,-87.7\n", T0)); // duplicate
    let p = write(dir.path(), "pings.csv", &body);
    let c = load_pings(&p, &march_window(), 0.05).unwrap();
    assert_eq!(c.report.rows_read, 203);
    assert_eq!(c.report.rows_kept, 200);
    assert_eq!(c.report.malformed, 2);
    assert_eq!(c.report.duplicates, 1);
    let lines: Vec<u64> = c.report.rejects.iter().map(|r| r.line_no).collect();
    assert_eq!(lines, [202, 203, 204]);
    // strict limit
    let err = load_pings(&p, &march_window(), 0.001).unwrap_err();
    assert!(matches!(err, Error::TooManyRejects { .. }), "{err}");
}

#[test]
fn jsonl_matches_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = write(
        dir.path(),
        "a.csv",
        &format!("device_id,ts_unix_s,lat,lon\nb,{},41.8,-87.7\na,{},41.9,-87.6\n", T0 + 5, T0 + DAY),
    );
    let jsonl = write(
        dir.path(),
        "a.jsonl",
        &format!(
            "{{\"device_id\":\"a\",\"ts_unix_s\":{},\"lat\":41.9,\"lon\":-87.6}}\n{{\"device_id\":\"b\",\"ts_unix_s\":{},\"lat\":41.8,\"lon\":-87.7}}\n",
            T0 + DAY,
            T0 + 5
        ),
    );
    let a = load_pings(&csv, &march_window(), 0.0).unwrap();
    let b = load_pings(&jsonl, &march_window(), 0.0).unwrap();
    assert_eq!(a.canonical_bytes(), b.canonical_bytes());
    assert_eq!(a.streams["a"][0].ts, T0 + DAY);
}

#[test]
fn fractional_timestamps_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "f.csv",
        &format!("device_id,ts_unix_s,lat,lon\na,{}.5,41.8,-87.7\na,{},41.8,-87.7\n", T0, T0 + 1),
    );
    let c = load_pings(&p, &march_window(), 1.0).unwrap();
    assert_eq!(c.report.rejects[0].reason, "non-integer ts_unix_s");
}

#[test]
fn out_of_window_pings_are_dropped_not_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let p = write(
        dir.path(),
        "p.csv",
        &format!("device_id,ts_unix_s,lat,lon\na,{},41.8,-87.7\na,{},41.8,-87.7\n", T0 - 1, T0),
    );
    let c = load_pings(&p, &march_window(), 0.0).unwrap();
    assert_eq!((c.report.out_of_window, c.report.rows_kept, c.report.rejects.len()), (1, 1, 0));
}

#[test]
fn written_pings_reload_identically() {
    let dir = tempfile::tempdir().unwrap();
    let dev = std::sync::Arc::from("z");
    let corpus = PingCorpus::from_pings((0..50).rev().map(|i| ping(&dev, T0 + i * 97, origin().offset_m(i as f64 * 10.0, 0.0))));
    let p = dir.path().join("out.csv");
    write_pings_csv(&p, &corpus.streams).unwrap();
    let back = load_pings(&p, &march_window(), 0.0).unwrap();
    assert_eq!(back.canonical_bytes(), corpus.canonical_bytes());
    assert!(corpus.streams["z"].windows(2).all(|w| w[0].ts < w[1].ts));
}

#[test]
fn fixture_manifest_resolves_and_loads() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus");
    let m = InputManifest::load(&root.join("manifest.json")).unwrap().resolved(&root);
    for p in m.paths() {
        assert!(p.exists(), "{}", p.display());
    }
    let c = load_pings(&m.pings, &patrolscope::corpus::StudyWindow::new(m.window.as_ref().unwrap()).unwrap(), 0.01).unwrap();
    assert_eq!(c.report.rejects.len(), 0);
    assert_eq!(c.n_pings(), 8077);
}

#[test]
fn missing_file_is_an_input_error() {
    let err = load_pings(std::path::Path::new("/nonexistent/pings.csv"), &march_window(), 0.01).unwrap_err();
    assert!(err.is_input_error());
}
