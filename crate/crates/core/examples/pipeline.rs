//! Drives the staged pipeline from an inline configuration: synthesize a
//! corpus, run every stage and list the artifacts.
//!
//!     cargo run --release --example pipeline -- [out_dir]

use std::path::PathBuf;

use patrolscope::pipeline::{reproducible_files, run, RunConfig, Stage};

fn main() -> patrolscope::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("patrolscope-run"));
    let mut cfg = RunConfig::from_json(
        r#"{
            "synth": { "rng_seed": 21, "patrol_policy": { "kind": "race_weighted", "coef": 0.4 } },
            "thresholds": { "min_shift_h": 4, "bracket_max_h": 24 },
            "presence": { "speed_cap_mph": 50 }
        }"#,
    )?;
    cfg.output_dir = out.clone();

    let report = run(Stage::All, &cfg)?;
    for s in &report.stages {
        let rows: Vec<String> = s.rows.iter().map(|(k, v)| format!("{k}={v}")).collect();
        println!("{:<14} {:6.2}s  {}", s.stage, s.seconds, rows.join(" "));
    }
    println!("config_hash {}", report.config_hash);
    for f in reproducible_files(&out)? {
        println!("  {}", out.join(f).display());
    }
    Ok(())
}
