//! Loads the bundled fixture corpus and prints the ingest report.
//!
//!     cargo run --example ingest [path/to/manifest.json]

use std::path::PathBuf;

use patrolscope::corpus::{load_blockgroups, load_geofences, load_pings, InputManifest, StudyWindow};

fn main() -> patrolscope::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/corpus/manifest.json"));
    let manifest = InputManifest::load(&path)?.resolved(path.parent().unwrap());
    let window_cfg = manifest
        .window
        .clone()
        .ok_or_else(|| patrolscope::Error::Config("manifest has no window".into()))?;
    let window = StudyWindow::new(&window_cfg)?;
    println!("window {} .. {} ({} months)", window.start(), window.end(), window.months().len());

    let stations = load_geofences(&manifest.geofences)?;
    let bgs = load_blockgroups(&manifest.bg_geometry, &manifest.bg_attributes)?;
    println!(
        "{} stations, {} block groups ({} warnings)",
        stations.items.len(),
        bgs.items.len(),
        stations.warnings.len() + bgs.warnings.len()
    );

    let corpus = load_pings(&manifest.pings, &window, 0.01)?;
    let r = &corpus.report;
    println!(
        "read {} rows, kept {}, malformed {}, duplicates {}, out of window {}",
        r.rows_read, r.rows_kept, r.malformed, r.duplicates, r.out_of_window
    );
    for (device, stream) in corpus.streams.iter().take(5) {
        println!("  {device}: {} pings from {} to {}", stream.len(), stream[0].ts, stream[stream.len() - 1].ts);
    }
    Ok(())
}
