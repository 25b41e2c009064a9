use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::corpus::{InputManifest, WindowConfig};
use crate::econ::ModelSpec;
use crate::error::{Error, Result};
use crate::officers::STATION_DAYS_MIN;
use crate::presence::PresenceConfig;
use crate::shifts::ShiftConfig;
use crate::synth::SynthSpec;

/// Environment variable read when the config leaves `workers` unset.
pub const WORKERS_ENV: &str = "PATROLSCOPE_WORKERS";

/// Where the input corpus comes from: a manifest file or an inline manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputSource {
    Manifest(PathBuf),
    Inline(InputManifest),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub station_days_min: u32,
    pub min_shift_h: f64,
    pub max_shift_h: Option<f64>,
    pub bracket_max_h: f64,
    pub require_same_station: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        let s = ShiftConfig::default();
        Thresholds {
            station_days_min: STATION_DAYS_MIN,
            min_shift_h: s.min_shift_h,
            max_shift_h: s.max_shift_h,
            bracket_max_h: s.bracket_max_h,
            require_same_station: s.require_same_station,
        }
    }
}

impl Thresholds {
    pub fn shift_config(&self) -> ShiftConfig {
        ShiftConfig {
            min_shift_h: self.min_shift_h,
            max_shift_h: self.max_shift_h,
            bracket_max_h: self.bracket_max_h,
            require_same_station: self.require_same_station,
        }
    }
}

/// One declarative run. Relative paths inside a config file are resolved
/// against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Input corpus. When absent, the corpus written by the `synth` stage
    /// into `<output_dir>/synth` is used.
    pub inputs: Option<InputSource>,
    /// Study window; falls back to the manifest's window.
    pub window: Option<WindowConfig>,
    pub thresholds: Thresholds,
    pub presence: PresenceConfig,
    pub models: Vec<ModelSpec>,
    /// Fit the per-city block decomposition in `regress`.
    pub decomposition: bool,
    pub synth: Option<SynthSpec>,
    pub output_dir: PathBuf,
    /// Overrides `synth.rng_seed` when set.
    pub rng_seed: Option<u64>,
    /// Worker threads; `None` reads the environment, then uses all cores.
    pub workers: Option<usize>,
    pub max_reject_fraction: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            inputs: None,
            window: None,
            thresholds: Thresholds::default(),
            presence: PresenceConfig::default(),
            models: (1..=3).map(|c| ModelSpec::table1(c).expect("columns 1-3 exist")).collect(),
            decomposition: true,
            synth: None,
            output_dir: PathBuf::from("out"),
            rng_seed: None,
            workers: None,
            max_reject_fraction: 0.01,
        }
    }
}

impl RunConfig {
    /// Reads a config file, applies `key.path=value` overrides and resolves
    /// relative paths against the file's directory.
    pub fn load(path: &Path, overrides: &[String]) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut doc: Value = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        for o in overrides {
            apply_override(&mut doc, o)?;
        }
        let cfg: RunConfig =
            serde_json::from_value(doc).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Ok(cfg.resolved(path.parent().unwrap_or(Path::new("."))))
    }

    pub fn from_json(text: &str) -> Result<RunConfig> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn resolved(mut self, base: &Path) -> RunConfig {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut self.inputs {
            Some(InputSource::Manifest(p)) => fix(p),
            Some(InputSource::Inline(m)) => *m = m.clone().resolved(base),
            None => {}
        }
        fix(&mut self.output_dir);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.thresholds;
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("thresholds.{name} must be positive, got {v}")))
            }
        };
        if t.station_days_min == 0 {
            return Err(Error::Config("thresholds.station_days_min must be positive".into()));
        }
        positive("min_shift_h", t.min_shift_h)?;
        positive("bracket_max_h", t.bracket_max_h)?;
        if let Some(m) = t.max_shift_h {
            positive("max_shift_h", m)?;
            if m < t.min_shift_h {
                return Err(Error::Config(format!(
                    "thresholds.max_shift_h ({m}) is below min_shift_h ({})",
                    t.min_shift_h
                )));
            }
        }
        self.presence.validate()?;
        if !(0.0..=1.0).contains(&self.max_reject_fraction) {
            return Err(Error::Config(format!(
                "max_reject_fraction must lie in [0, 1], got {}",
                self.max_reject_fraction
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        let mut names = std::collections::BTreeSet::new();
        for m in &self.models {
            if !names.insert(m.name.as_str()) {
                return Err(Error::Config(format!("duplicate model name {:?}", m.name)));
            }
            if m.name.is_empty() || !m.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(Error::Config(format!(
                    "model name {:?} must be non-empty ASCII letters, digits, '_' or '-'",
                    m.name
                )));
            }
        }
        if self.inputs.is_none() && self.synth.is_none() {
            return Err(Error::Config("either `inputs` or `synth` must be given".into()));
        }
        if let Some(s) = self.synth_spec() {
            s.validate()?;
        }
        Ok(())
    }

    /// The synthetic spec with `rng_seed` applied.
    pub fn synth_spec(&self) -> Option<SynthSpec> {
        let mut s = self.synth.clone()?;
        if let Some(seed) = self.rng_seed {
            s.rng_seed = seed;
        }
        Some(s)
    }

    /// SHA-256 of the canonical JSON form, ignoring `workers` and
    /// `output_dir`, which do not affect results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.workers = None;
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Configured worker count, then the environment variable, then all
    /// available cores.
    pub fn worker_count(&self) -> Result<usize> {
        if let Some(n) = self.workers {
            return Ok(n);
        }
        match std::env::var(WORKERS_ENV) {
            Ok(v) => match v.trim().parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::Config(format!("{WORKERS_ENV}={v:?} is not a positive integer"))),
            },
            Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
        }
    }
}

/// Sets `a.b.c=value` in a JSON document. The value is read as JSON when it
/// parses, otherwise as a string.
pub fn apply_override(doc: &mut Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {assignment:?} is not key=value")))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if part.is_empty() {
            return Err(Error::Config(format!("override key {key:?} has an empty segment")));
        }
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(Error::Config(format!(
                    "override {key:?}: {} is not an object",
                    parts[..i].join(".")
                )));
            }
        }
        let obj = cur.as_object_mut().expect("checked");
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn override_nested_and_string() {
        let mut doc = serde_json::json!({"thresholds": {"min_shift_h": 4}});
        apply_override(&mut doc, "thresholds.min_shift_h=5.5").unwrap();
        apply_override(&mut doc, "synth.cities=[]").unwrap();
        apply_override(&mut doc, "output_dir=runs/a").unwrap();
        assert_eq!(doc["thresholds"]["min_shift_h"], 5.5);
        assert_eq!(doc["synth"]["cities"], serde_json::json!([]));
        assert_eq!(doc["output_dir"], "runs/a");
        assert!(apply_override(&mut doc, "novalue").is_err());
    }

    #[test]
    fn hash_ignores_workers_and_output() {
        let a = RunConfig {
            synth: Some(SynthSpec::default()),
            ..RunConfig::default()
        };
        let mut b = a.clone();
        b.workers = Some(16);
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.thresholds.min_shift_h = 5.0;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn rejects_nonpositive_thresholds() {
        let mut c = RunConfig {
            synth: Some(SynthSpec::default()),
            ..RunConfig::default()
        };
        c.validate().unwrap();
        c.thresholds.min_shift_h = 0.0;
        assert!(matches!(c.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(RunConfig::from_json(r#"{"thresholds": {"min_shift": 4}}"#).is_err());
    }
}
