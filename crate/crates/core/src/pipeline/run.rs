use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::artifacts::{self as art, Header, PresenceRow};
use super::config::{InputSource, RunConfig};
use crate::corpus::{
    load_attribute_table, load_blockgroups, load_city_table, load_counts, load_geofences, load_pings, load_zones,
    AttributeRow, BlockGroupIndex, CityRecord, InputManifest, PingCorpus, StationIndex, StudyWindow,
};
use crate::econ::{
    build_design, city_validation_suite, elasticity_arsinh, fit_model, shift_hour_profile, standard_blocks,
    text_table, variance_decomposition, write_coefficients_csv, AnalysisTable, BgPresence, OfficerRecord,
    RegressionResult, ValidationInputs,
};
use crate::error::{Error, Result};
use crate::officers::{device_city, device_race, infer_home, qualify_months, Homes, MonthQualification};
use crate::presence::{aggregate_presence, Transform};
use crate::shifts::{detect_shifts, Shift};
use crate::synth::{self, Detected, GroundTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Validate,
    Synth,
    Qualify,
    Homes,
    Shifts,
    Presence,
    Regress,
    ValidateCity,
    All,
}

impl Stage {
    pub const NAMES: [&'static str; 9] = [
        "validate",
        "synth",
        "qualify",
        "homes",
        "shifts",
        "presence",
        "regress",
        "validate-city",
        "all",
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Validate => "validate",
            Stage::Synth => "synth",
            Stage::Qualify => "qualify",
            Stage::Homes => "homes",
            Stage::Shifts => "shifts",
            Stage::Presence => "presence",
            Stage::Regress => "regress",
            Stage::ValidateCity => "validate-city",
            Stage::All => "all",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Stage> {
        Ok(match s {
            "validate" => Stage::Validate,
            "synth" => Stage::Synth,
            "qualify" => Stage::Qualify,
            "homes" => Stage::Homes,
            "shifts" => Stage::Shifts,
            "presence" => Stage::Presence,
            "regress" => Stage::Regress,
            "validate-city" => Stage::ValidateCity,
            "all" => Stage::All,
            other => {
                return Err(Error::Config(format!(
                    "unknown subcommand {other:?}; expected one of {}",
                    Stage::NAMES.join(", ")
                )))
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: String,
    pub seconds: f64,
    pub rows: BTreeMap<String, u64>,
    pub warnings: Vec<String>,
}

/// Written to `run_report.json` by every invocation, failed ones included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub command: String,
    pub status: String,
    pub error: Option<String>,
    pub config_hash: String,
    pub version: String,
    pub workers: usize,
    pub started_unix_s: i64,
    pub total_seconds: f64,
    pub stages: Vec<StageReport>,
}

impl RunReport {
    pub fn stage(&self, name: &str) -> Option<&StageReport> {
        self.stages.iter().find(|s| s.stage == name)
    }
}

struct Geometry {
    manifest: InputManifest,
    window: StudyWindow,
    stations: StationIndex,
    bgs: BlockGroupIndex,
    cities: Option<Vec<CityRecord>>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    out: PathBuf,
    header: Header,
    geometry: Option<Geometry>,
    pings: Option<PingCorpus>,
    stages: Vec<StageReport>,
}

struct StageOut {
    rows: BTreeMap<String, u64>,
    warnings: Vec<String>,
}

impl StageOut {
    fn new() -> StageOut {
        StageOut {
            rows: BTreeMap::new(),
            warnings: Vec::new(),
        }
    }

    fn count(&mut self, key: &str, n: usize) {
        self.rows.insert(key.to_string(), n as u64);
    }
}

/// Runs `stage` with `cfg`, writing artifacts and `run_report.json` into
/// the output directory. On failure a `FAILED` marker names the stage and
/// the error; earlier artifacts stay in place.
pub fn run(stage: Stage, cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    check_inputs_exist(cfg)?;
    let workers = cfg.worker_count()?;
    let out = cfg.output_dir.clone();
    std::fs::create_dir_all(&out).map_err(|e| Error::io(&out, e))?;
    let marker = out.join(art::FAILED);
    if marker.exists() {
        std::fs::remove_file(&marker).map_err(|e| Error::io(&marker, e))?;
    }
    let started = Instant::now();
    let started_unix_s = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs() as i64);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    let hash = cfg.hash();
    let mut ctx = Ctx {
        cfg,
        out: out.clone(),
        header: Header::new(hash.clone()),
        geometry: None,
        pings: None,
        stages: Vec::new(),
    };
    let result = pool.install(|| ctx.execute(stage));
    let mut report = RunReport {
        command: stage.to_string(),
        status: "ok".into(),
        error: None,
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").into(),
        workers,
        started_unix_s,
        total_seconds: started.elapsed().as_secs_f64(),
        stages: std::mem::take(&mut ctx.stages),
    };
    if let Err((failed, e)) = &result {
        report.status = "failed".into();
        report.error = Some(e.to_string());
        let text = format!("stage: {failed}\nerror: {e}\n");
        std::fs::write(&marker, text).map_err(|e| Error::io(&marker, e))?;
    }
    let path = out.join(art::RUN_REPORT);
    let text = serde_json::to_string_pretty(&report)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    match result {
        Ok(()) => Ok(report),
        Err((_, e)) => Err(e),
    }
}

fn check_inputs_exist(cfg: &RunConfig) -> Result<()> {
    let manifest = match &cfg.inputs {
        None => return Ok(()),
        Some(InputSource::Manifest(p)) => {
            if !p.is_file() {
                return Err(Error::Config(format!("input manifest {} does not exist", p.display())));
            }
            InputManifest::load(p)?
        }
        Some(InputSource::Inline(m)) => m.clone(),
    };
    for p in manifest.paths() {
        if !p.exists() {
            return Err(Error::Config(format!("input file {} does not exist", p.display())));
        }
    }
    Ok(())
}

impl Ctx<'_> {
    fn execute(&mut self, stage: Stage) -> std::result::Result<(), (Stage, Error)> {
        let plan: Vec<Stage> = match stage {
            Stage::All => {
                let mut v = Vec::new();
                if self.cfg.inputs.is_none() {
                    v.push(Stage::Synth);
                }
                v.extend([
                    Stage::Validate,
                    Stage::Qualify,
                    Stage::Homes,
                    Stage::Shifts,
                    Stage::Presence,
                    Stage::Regress,
                    Stage::ValidateCity,
                ]);
                v
            }
            s => vec![s],
        };
        for s in plan {
            let t = Instant::now();
            log::info!("stage {s}");
            let out = self.stage(s).map_err(|e| (s, e))?;
            self.stages.push(StageReport {
                stage: s.to_string(),
                seconds: t.elapsed().as_secs_f64(),
                rows: out.rows,
                warnings: out.warnings,
            });
        }
        Ok(())
    }

    fn stage(&mut self, s: Stage) -> Result<StageOut> {
        match s {
            Stage::Validate => self.validate(),
            Stage::Synth => self.synth(),
            Stage::Qualify => self.qualify(),
            Stage::Homes => self.homes(),
            Stage::Shifts => self.shifts(),
            Stage::Presence => self.presence(),
            Stage::Regress => self.regress(),
            Stage::ValidateCity => self.validate_city(),
            Stage::All => unreachable!("expanded by execute"),
        }
    }

    fn manifest(&self) -> Result<InputManifest> {
        match &self.cfg.inputs {
            Some(InputSource::Manifest(p)) => InputManifest::load(p),
            Some(InputSource::Inline(m)) => Ok(m.clone()),
            None => {
                let p = self.out.join(art::SYNTH_DIR).join(synth::files::MANIFEST);
                if !p.is_file() {
                    return Err(Error::MissingArtifact { artifact: p, stage: "synth" });
                }
                InputManifest::load(&p)
            }
        }
    }

    fn geometry(&mut self, warnings: &mut Vec<String>) -> Result<&Geometry> {
        if self.geometry.is_none() {
            let manifest = self.manifest()?;
            let wcfg = self
                .cfg
                .window
                .clone()
                .or_else(|| manifest.window.clone())
                .ok_or_else(|| Error::Config("no study window in the config or the input manifest".into()))?;
            let window = StudyWindow::new(&wcfg)?;
            let stations = load_geofences(&manifest.geofences)?;
            let bgs = load_blockgroups(&manifest.bg_geometry, &manifest.bg_attributes)?;
            warnings.extend(stations.warnings);
            warnings.extend(bgs.warnings);
            let cities = match &manifest.city_table {
                Some(p) => {
                    let c = load_city_table(p)?;
                    warnings.extend(c.warnings);
                    Some(c.items)
                }
                None => None,
            };
            self.geometry = Some(Geometry {
                manifest,
                window,
                stations: StationIndex::new(stations.items),
                bgs: BlockGroupIndex::new(bgs.items),
                cities,
            });
        }
        Ok(self.geometry.as_ref().expect("loaded"))
    }

    fn load_pings(&mut self, warnings: &mut Vec<String>) -> Result<()> {
        if self.pings.is_none() {
            let limit = self.cfg.max_reject_fraction;
            let g = self.geometry(warnings)?;
            let corpus = load_pings(&g.manifest.pings, &g.window, limit)?;
            self.pings = Some(corpus);
        }
        Ok(())
    }

    fn validate(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        self.load_pings(&mut out.warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let corpus = self.pings.as_ref().expect("loaded");
        let r = &corpus.report;
        out.rows.insert("pings_read".into(), r.rows_read);
        out.rows.insert("pings_kept".into(), r.rows_kept);
        out.rows.insert("malformed".into(), r.malformed);
        out.rows.insert("duplicates".into(), r.duplicates);
        out.rows.insert("out_of_window".into(), r.out_of_window);
        out.count("rejects", r.rejects.len());
        out.count("devices", corpus.streams.len());
        out.count("stations", g.stations.stations().len());
        out.count("blockgroups", g.bgs.len());
        out.count("cities", g.cities.as_ref().map_or(0, Vec::len));
        let summary = serde_json::json!({
            "pings_read": r.rows_read,
            "pings_kept": r.rows_kept,
            "malformed": r.malformed,
            "malformed_fraction": r.malformed_fraction(),
            "duplicates": r.duplicates,
            "out_of_window": r.out_of_window,
            "rejects": r.rejects.len(),
            "devices": corpus.streams.len(),
            "stations": g.stations.stations().len(),
            "blockgroups": g.bgs.len(),
            "warnings": out.warnings,
        });
        art::write_json(&self.out.join(art::INGEST_REPORT), &self.header, &summary)?;
        art::write_csv(
            &self.out.join(art::REJECTS),
            &self.header,
            &["line_no", "reason"],
            r.rejects.iter().map(|j| [j.line_no.to_string(), j.reason.clone()]),
        )?;
        Ok(out)
    }

    fn synth(&mut self) -> Result<StageOut> {
        let spec = self
            .cfg
            .synth_spec()
            .ok_or_else(|| Error::Config("the synth stage needs a `synth` section in the config".into()))?;
        let city = synth::generate(&spec)?;
        let dir = self.out.join(art::SYNTH_DIR);
        city.write(&dir)?;
        self.geometry = None;
        self.pings = None;
        let mut out = StageOut::new();
        out.count("devices", city.corpus.streams.len());
        out.count("pings", city.corpus.n_pings());
        out.count("officers", city.truth.officers.len());
        out.count("true_shifts", city.truth.shifts.len());
        out.count("blockgroups", city.blockgroups.len());
        Ok(out)
    }

    fn qualify(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        self.load_pings(&mut out.warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let corpus = self.pings.as_ref().expect("loaded");
        let min = self.cfg.thresholds.station_days_min;
        let streams: Vec<(&String, &Vec<_>)> = corpus.streams.iter().collect();
        let quals: Vec<Vec<MonthQualification>> = streams
            .par_iter()
            .map(|(id, s)| qualify_months(id, s, &g.stations, &g.window, min))
            .collect();
        let flat: Vec<MonthQualification> = quals.iter().flatten().cloned().collect();
        art::write_qualifications(&self.out.join(art::QUALIFICATIONS), &self.header, &flat)?;
        let officers: Vec<[String; 3]> = quals
            .iter()
            .filter_map(|q| {
                let city = device_city(q)?;
                let n = q.iter().filter(|m| m.qualified).count();
                Some([q[0].device_id.clone(), city, n.to_string()])
            })
            .collect();
        art::write_csv(
            &self.out.join(art::OFFICERS),
            &self.header,
            &["device_id", "city_id", "qualified_months"],
            officers.iter().map(|r| r.iter().cloned()),
        )?;
        out.count("devices_with_station_pings", quals.iter().filter(|q| !q.is_empty()).count());
        out.count("device_months", flat.len());
        out.count("qualified_device_months", flat.iter().filter(|q| q.qualified).count());
        out.count("officers", officers.len());
        Ok(out)
    }

    fn homes(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        let quals = art::read_qualifications(&self.out)?;
        self.load_pings(&mut out.warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let corpus = self.pings.as_ref().expect("loaded");
        let officers: Vec<(&String, String)> = quals
            .iter()
            .filter_map(|(id, q)| Some((id, device_city(q)?)))
            .collect();
        let homes: Vec<(String, String, Homes)> = officers
            .par_iter()
            .map(|(id, city)| {
                let stream = corpus.streams.get(*id).map(Vec::as_slice).unwrap_or_default();
                (
                    id.to_string(),
                    city.clone(),
                    infer_home(id, stream, &g.stations, &g.window, Some(city)),
                )
            })
            .collect();
        let mut race = BTreeMap::new();
        let mut by_device = BTreeMap::new();
        for (id, city, h) in homes {
            if h.h1.is_none() && h.h2.is_none() {
                out.warnings.push(format!("officer {id} has no pings outside stations; no home"));
            }
            race.insert(id.clone(), (city, device_race(&h, &g.bgs)));
            by_device.insert(id, h);
        }
        art::write_homes(&self.out.join(art::HOMES), &self.header, &by_device)?;
        art::write_officer_race(&self.out.join(art::OFFICER_RACE), &self.header, &race)?;
        out.count("officers", by_device.len());
        out.count("homes", by_device.values().map(|h| h.iter().count()).sum());
        out.count("with_race", race.values().filter(|r| r.1.is_some()).count());
        Ok(out)
    }

    fn shifts(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        let quals = art::read_qualifications(&self.out)?;
        let homes = art::read_homes(&self.out)?;
        self.load_pings(&mut out.warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let corpus = self.pings.as_ref().expect("loaded");
        let cfg = self.cfg.thresholds.shift_config();
        let devices: Vec<(&String, &Homes)> = homes.iter().collect();
        let per_device: Vec<Vec<Shift>> = devices
            .par_iter()
            .map(|(id, h)| {
                let stream = corpus.streams.get(*id).map(Vec::as_slice).unwrap_or_default();
                let q = quals.get(*id).map(Vec::as_slice).unwrap_or_default();
                detect_shifts(id, stream, h, &g.stations, q, &g.window, &cfg)
            })
            .collect();
        let shifts: Vec<Shift> = per_device.into_iter().flatten().collect();
        art::write_shifts(&self.out, &self.header, &shifts)?;
        out.count("shifts", shifts.len());
        out.count("devices_with_shifts", shifts.iter().map(|s| &s.device_id).collect::<BTreeSet<_>>().len());
        out.count("patrol_pings", shifts.iter().map(|s| s.patrol_pings.len()).sum());
        Ok(out)
    }

    fn presence(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        let shifts = art::read_shifts(&self.out)?;
        let cfg = self.cfg;
        let g = self.geometry(&mut out.warnings)?;
        let res = aggregate_presence(&shifts, &g.bgs, &g.window, &cfg.presence)?;
        let cells: BTreeMap<&str, _> = res.cells.iter().map(|c| (c.bg_id.as_str(), c)).collect();
        let rows: Vec<PresenceRow> = g
            .bgs
            .blockgroups()
            .iter()
            .map(|b| match cells.get(b.bg_id.as_str()) {
                Some(c) => PresenceRow::from_cell(c, &b.city_id),
                None => PresenceRow {
                    bg_id: b.bg_id.clone(),
                    city_id: b.city_id.clone(),
                    dwell: Default::default(),
                    shift_count: 0,
                    by_shift_hour: Default::default(),
                },
            })
            .collect();
        art::write_presence(&self.out.join(art::PRESENCE), &self.header, &rows)?;
        out.count("shifts", shifts.len());
        out.count("blockgroups", rows.len());
        out.count("blockgroups_with_presence", res.cells.len());
        out.rows.insert("counted_pings".into(), res.counted_pings);
        out.rows.insert("unassigned_pings".into(), res.unassigned_pings);
        out.rows.insert("speed_excluded_pings".into(), res.speed_excluded_pings);
        out.rows.insert("time_excluded_pings".into(), res.time_excluded_pings);
        Ok(out)
    }

    fn extra_columns(&self, g: &Geometry, warnings: &mut Vec<String>) -> Result<BTreeMap<String, AttributeRow>> {
        match &g.manifest.actions {
            Some(p) => {
                let t = load_attribute_table(p, "bg_id")?;
                warnings.extend(t.warnings);
                Ok(t.items)
            }
            None => Ok(BTreeMap::new()),
        }
    }

    fn table(&mut self, warnings: &mut Vec<String>) -> Result<AnalysisTable> {
        let presence = art::read_presence(&self.out)?;
        self.geometry(warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let extra = self.extra_columns(g, warnings)?;
        let map: BTreeMap<String, BgPresence> = presence
            .iter()
            .map(|r| {
                (
                    r.bg_id.clone(),
                    BgPresence {
                        hours: r.hours(),
                        by_shift_hour: r.by_shift_hour,
                    },
                )
            })
            .collect();
        let cities = g.cities.clone().unwrap_or_default();
        if g.cities.is_none() {
            warnings.push("no city table: relative shares are undefined".into());
        }
        let table = AnalysisTable::build(g.bgs.blockgroups(), &cities, &map, &extra);
        warnings.extend(table.warnings.iter().cloned());
        Ok(table)
    }

    fn regress(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        let table = self.table(&mut out.warnings)?;
        let results: Vec<RegressionResult> = self
            .cfg
            .models
            .par_iter()
            .map(|m| fit_model(&table, m))
            .collect::<Result<_>>()?;
        let line = self.header.line();
        for r in &results {
            write_coefficients_csv(&self.out.join(art::regression_file(&r.model)), &line, r)?;
            out.count(&format!("{}_n_obs", r.model), r.n_obs);
        }
        let txt = self.out.join(art::REGRESSION_TABLE);
        let body = format!("# {line}\n{}", text_table(&results));
        std::fs::write(&txt, body).map_err(|e| Error::io(&txt, e))?;

        let mut el_rows = Vec::new();
        for (spec, r) in self.cfg.models.iter().zip(&results) {
            if spec.transform != Transform::Arsinh {
                continue;
            }
            let design = build_design(&table, spec)?;
            for (j, name) in design.names.iter().enumerate() {
                if !name.starts_with("rel_") {
                    continue;
                }
                let xbar = match design.centers.get(name) {
                    Some(c) => *c,
                    None => design.x.iter().map(|row| row[j]).sum::<f64>() / design.x.len().max(1) as f64,
                };
                let Some(t) = r.term(name) else { continue };
                match elasticity_arsinh(r.outcome_mean_levels, xbar, t.coefficient) {
                    Ok(e) => el_rows.push([
                        r.model.clone(),
                        name.clone(),
                        r.outcome_mean_levels.to_string(),
                        xbar.to_string(),
                        t.coefficient.to_string(),
                        e.factor.to_string(),
                        (e.elasticity * 100.0).to_string(),
                    ]),
                    Err(e) => out.warnings.push(format!("{} {name}: {e}", r.model)),
                }
            }
        }
        art::write_csv(
            &self.out.join(art::ELASTICITIES),
            &self.header,
            &["model", "term", "ybar", "xbar", "beta", "factor", "elasticity_pct"],
            el_rows.iter().map(|r| r.iter().cloned()),
        )?;

        if self.cfg.decomposition {
            let d = variance_decomposition(&table, "hours", Transform::Arsinh, &standard_blocks())?;
            let mut rows = Vec::new();
            for row in &d.rows {
                for (k, block) in d.blocks.iter().enumerate() {
                    rows.push([
                        row.city_id.clone(),
                        row.n_obs.to_string(),
                        block.clone(),
                        row.cumulative_r2[k].to_string(),
                        row.delta_r2[k].to_string(),
                    ]);
                }
            }
            art::write_csv(
                &self.out.join(art::DECOMPOSITION),
                &self.header,
                &["city_id", "n_obs", "block", "cumulative_r2", "delta_r2"],
                rows.iter().map(|r| r.iter().cloned()),
            )?;
            out.count("decomposition_cities", d.rows.len());
        }

        match shift_hour_profile(&table, table.cities().len() > 1) {
            Ok(profile) => art::write_csv(
                &self.out.join(art::SHIFT_HOUR_PROFILE),
                &self.header,
                &["hour", "term", "coefficient", "se", "p"],
                profile.iter().map(|p| {
                    [
                        p.hour.to_string(),
                        p.term.clone(),
                        p.coefficient.to_string(),
                        p.se.to_string(),
                        crate::econ::plain_or_exp(p.p),
                    ]
                }),
            )?,
            Err(e) => out.warnings.push(format!("shift-hour profile skipped: {e}")),
        }
        out.count("models", results.len());
        out.count("table_rows", table.rows.len());
        Ok(out)
    }

    fn validate_city(&mut self) -> Result<StageOut> {
        let mut out = StageOut::new();
        let race = art::read_officer_race(&self.out)?;
        let homes = art::read_homes(&self.out)?;
        let table = match self.table(&mut out.warnings) {
            Ok(t) => Some(t),
            Err(Error::MissingArtifact { .. }) => {
                out.warnings.push("presence.csv missing: action checks skipped".into());
                None
            }
            Err(e) => return Err(e),
        };
        self.geometry(&mut out.warnings)?;
        let g = self.geometry.as_ref().expect("loaded");
        let zones = g.manifest.zones.as_deref().map(load_zones).transpose()?;
        let zone_counts = g
            .manifest
            .zone_counts
            .as_deref()
            .map(|p| load_counts(p, "zone_id"))
            .transpose()?;
        let action_columns: Vec<String> = match &g.manifest.actions {
            Some(p) => {
                let t = load_attribute_table(p, "bg_id")?;
                let cols: BTreeSet<String> = t.items.values().flat_map(|r| r.keys().cloned()).collect();
                cols.into_iter().collect()
            }
            None => Vec::new(),
        };
        let officers: Vec<OfficerRecord> = race
            .iter()
            .map(|(id, (city, r))| OfficerRecord {
                device_id: id.clone(),
                city_id: city.clone(),
                home: homes
                    .get(id)
                    .and_then(|h| h.h1.as_ref().or(h.h2.as_ref()))
                    .map(|h| h.home_cell.center()),
                race: *r,
            })
            .collect();
        let report = city_validation_suite(&ValidationInputs {
            table: table.as_ref(),
            cities: g.cities.as_deref(),
            officers: &officers,
            zones: zones.as_deref(),
            zone_counts: zone_counts.as_ref(),
            action_columns,
        });
        art::write_json(&self.out.join(art::VALIDATION), &self.header, &report)?;
        out.count("officers", officers.len());
        out.count("cities", report.cities.len());
        out.warnings.extend(report.notes.iter().cloned());

        let truth_path = self.out.join(art::SYNTH_DIR).join(synth::files::TRUTH);
        if self.cfg.inputs.is_none() && truth_path.is_file() {
            let truth = GroundTruth::load(&truth_path)?;
            let shifts = match art::read_shifts(&self.out) {
                Ok(s) => s,
                Err(Error::MissingArtifact { .. }) => Vec::new(),
                Err(e) => return Err(e),
            };
            let detected = Detected {
                officers: race.keys().cloned().collect(),
                homes: homes
                    .iter()
                    .map(|(id, h)| (id.clone(), h.iter().map(|x| x.home_cell.to_string()).collect()))
                    .collect(),
                shifts: shifts.iter().map(|s| (s.device_id.clone(), s.start_ts, s.end_ts)).collect(),
                bg_hours: table
                    .as_ref()
                    .map(|t| t.rows.iter().map(|r| (r.bg_id.clone(), r.get("hours").unwrap_or(0.0))).collect())
                    .unwrap_or_default(),
            };
            let scores = synth::score(&detected, &truth);
            art::write_json(&self.out.join(art::SYNTH_SCORES), &self.header, &scores)?;
            out.count("true_officers", scores.n_true_officers);
        }
        Ok(out)
    }
}

/// Lists the files of an output directory that must be reproducible:
/// everything except `run_report.json`.
pub fn reproducible_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).map_err(|e| Error::io(&d, e))? {
            let p = e.map_err(|e| Error::io(&d, e))?.path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().is_some_and(|n| n != art::RUN_REPORT) {
                out.push(p.strip_prefix(dir).expect("under dir").to_path_buf());
            }
        }
    }
    out.sort();
    Ok(out)
}
