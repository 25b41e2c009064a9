use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::WindowConfig;
use crate::error::{Error, Result};

/// Paths of one input corpus. Relative paths are resolved against the
/// directory holding the manifest file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputManifest {
    pub pings: PathBuf,
    pub geofences: PathBuf,
    pub bg_geometry: PathBuf,
    pub bg_attributes: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub city_table: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub actions: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zones: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone_counts: Option<PathBuf>,
    /// Window the corpus was generated for, if known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<WindowConfig>,
}

impl InputManifest {
    pub fn load(path: &Path) -> Result<InputManifest> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let m: InputManifest = serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        Ok(m.resolved(path.parent().unwrap_or(Path::new("."))))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Joins every relative path onto `base`.
    pub fn resolved(mut self, base: &Path) -> InputManifest {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.pings);
        fix(&mut self.geofences);
        fix(&mut self.bg_geometry);
        fix(&mut self.bg_attributes);
        for p in [&mut self.city_table, &mut self.actions, &mut self.zones, &mut self.zone_counts]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
        self
    }

    /// Every referenced path, required ones first.
    pub fn paths(&self) -> Vec<&Path> {
        let mut v: Vec<&Path> = vec![&self.pings, &self.geofences, &self.bg_geometry, &self.bg_attributes];
        v.extend(
            [&self.city_table, &self.actions, &self.zones, &self.zone_counts]
                .into_iter()
                .flatten()
                .map(|p| p.as_path()),
        );
        v
    }
}
