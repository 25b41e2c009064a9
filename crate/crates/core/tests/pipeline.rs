mod common;

use std::path::{Path, PathBuf};
use std::process::Command;

use common::differing_files;
use patrolscope::pipeline::{reproducible_files, run, RunConfig, RunReport, Stage};
use patrolscope::Error;

fn fixture_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/config.json")
}

fn fixture(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::load(&fixture_config(), &[]).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn report(dir: &Path) -> RunReport {
    serde_json::from_str(&std::fs::read_to_string(dir.join("run_report.json")).unwrap()).unwrap()
}

#[test]
fn fixture_validates_without_rejects() {
    let dir = tempfile::tempdir().unwrap();
    let r = run(Stage::Validate, &fixture(dir.path())).unwrap();
    let s = r.stage("validate").unwrap();
    assert_eq!(s.rows["rejects"], 0);
    assert_eq!(s.rows["pings_kept"], 8077);
}

#[test]
fn every_artifact_carries_the_config_hash() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    let r = run(Stage::All, &cfg).unwrap();
    assert_eq!(r.config_hash, cfg.hash());
    let files = reproducible_files(dir.path()).unwrap();
    assert!(files.iter().any(|f| f.ends_with("shifts.csv")));
    for f in files {
        let text = std::fs::read_to_string(dir.path().join(&f)).unwrap();
        match f.extension().and_then(|e| e.to_str()) {
            Some("csv") => assert!(
                text.starts_with(&format!("# config_hash={} version=", cfg.hash())),
                "{}",
                f.display()
            ),
            Some("json") => {
                let v: serde_json::Value = serde_json::from_str(&text).unwrap();
                assert_eq!(v["config_hash"], cfg.hash(), "{}", f.display());
            }
            _ => assert!(text.contains(&cfg.hash()), "{}", f.display()),
        }
    }
    assert_eq!(report(dir.path()).status, "ok");
}

#[test]
fn stages_can_run_one_at_a_time() {
    let whole = tempfile::tempdir().unwrap();
    let steps = tempfile::tempdir().unwrap();
    run(Stage::All, &fixture(whole.path())).unwrap();
    let cfg = fixture(steps.path());
    for s in ["validate", "qualify", "homes", "shifts", "presence", "regress", "validate-city"] {
        run(s.parse().unwrap(), &cfg).unwrap();
    }
    assert!(differing_files(whole.path(), steps.path()).is_empty());
}

#[test]
fn rerun_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = fixture(dir.path());
    run(Stage::All, &cfg).unwrap();
    let snapshot = tempfile::tempdir().unwrap();
    for f in reproducible_files(dir.path()).unwrap() {
        let to = snapshot.path().join(&f);
        std::fs::create_dir_all(to.parent().unwrap()).unwrap();
        std::fs::copy(dir.path().join(&f), to).unwrap();
    }
    run(Stage::All, &cfg).unwrap();
    assert!(differing_files(dir.path(), snapshot.path()).is_empty());
}

#[test]
fn missing_upstream_artifact_fails_with_marker() {
    let dir = tempfile::tempdir().unwrap();
    let err = run(Stage::Regress, &fixture(dir.path())).unwrap_err();
    assert!(matches!(err, Error::MissingArtifact { stage: "presence", .. }), "{err}");
    let marker = std::fs::read_to_string(dir.path().join("FAILED")).unwrap();
    assert!(marker.starts_with("stage: regress\n"), "{marker}");
    let r = report(dir.path());
    assert_eq!(r.status, "failed");
    // a later success clears the marker
    run(Stage::All, &fixture(dir.path())).unwrap();
    assert!(!dir.path().join("FAILED").exists());
}

#[test]
fn overrides_change_thresholds_and_hash() {
    let base = RunConfig::load(&fixture_config(), &[]).unwrap();
    let cfg = RunConfig::load(
        &fixture_config(),
        &["thresholds.min_shift_h=6".into(), "presence.speed_cap_mph=25".into()],
    )
    .unwrap();
    assert_eq!(cfg.thresholds.min_shift_h, 6.0);
    assert_eq!(cfg.presence.speed_cap_mph, Some(25.0));
    assert_ne!(cfg.hash(), base.hash());
    let bad = RunConfig::load(&fixture_config(), &["thresholds.min_shift_h=-1".into()]).unwrap();
    assert!(bad.validate().unwrap_err().is_input_error());
    assert!(RunConfig::load(&fixture_config(), &["thresholds.nonsense=1".into()]).is_err());
}

#[test]
fn stricter_shift_threshold_gives_fewer_shifts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let loose = run(Stage::All, &fixture(a.path())).unwrap();
    let mut strict_cfg = fixture(b.path());
    strict_cfg.thresholds.min_shift_h = 9.0;
    let strict = run(Stage::All, &strict_cfg).unwrap();
    let n = |r: &RunReport| r.stage("shifts").unwrap().rows["shifts"];
    assert!(n(&strict) < n(&loose), "{} vs {}", n(&strict), n(&loose));
}

#[test]
fn unknown_stage_name_is_rejected() {
    let err = "regres".parse::<Stage>().unwrap_err();
    assert!(err.to_string().contains("validate-city"));
}

fn cli(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_patrolscope"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

#[test]
fn cli_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = fixture_config();
    let config = config.to_str().unwrap();
    let ok = cli(&["validate", "--config", config, "--output-dir", out]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("config_hash="));
    let missing = cli(&["regress", "--config", config, "--output-dir", &format!("{out}/empty")]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("presence"));
    let bad = cli(&["validate", "--config", config, "--set", "thresholds.bracket_max_h=0"]);
    assert_eq!(bad.status.code(), Some(1));
    let nofile = cli(&["validate", "--config", "/nonexistent.json"]);
    assert_eq!(nofile.status.code(), Some(1));
}

#[test]
fn cli_overrides_reach_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let config = fixture_config();
    let st = cli(&[
        "shifts",
        "--config",
        config.to_str().unwrap(),
        "--output-dir",
        out,
        "--workers",
        "2",
        "--set",
        "thresholds.min_shift_h=20",
    ]);
    // shifts needs the qualify and homes artifacts first
    assert_eq!(st.status.code(), Some(1));
    let all = cli(&["all", "--config", config.to_str().unwrap(), "--output-dir", out, "--set", "thresholds.min_shift_h=20"]);
    assert_eq!(all.status.code(), Some(0), "{}", String::from_utf8_lossy(&all.stderr));
    let r = report(dir.path());
    assert_eq!(r.stage("shifts").unwrap().rows["shifts"], 0);
}
