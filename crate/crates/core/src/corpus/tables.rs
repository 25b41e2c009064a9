use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use super::{Loaded, SHARE_COLUMNS};
use crate::error::{Error, Result};

pub type AttributeRow = BTreeMap<String, Option<f64>>;

/// City-level attributes (population, racial shares, department figures).
#[derive(Debug, Clone, PartialEq)]
pub struct CityRecord {
    pub city_id: String,
    pub attributes: AttributeRow,
}

impl CityRecord {
    pub fn attr(&self, name: &str) -> Option<f64> {
        self.attributes.get(name).copied().flatten()
    }
}

fn validate(key: &str, column: &str, raw: &str) -> std::result::Result<Option<f64>, String> {
    let raw = raw.trim();
    if raw.is_empty() || raw.eq_ignore_ascii_case("na") || raw.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    let v: f64 = raw
        .parse()
        .map_err(|_| format!("{key}: {column}={raw:?} is not a number, flagged missing"))?;
    if !v.is_finite() {
        return Err(format!("{key}: {column}={raw:?} is not finite, flagged missing"));
    }
    let is_share = SHARE_COLUMNS.contains(&column) || column.starts_with("pct_") || column.contains("_pct_");
    if is_share && !(0.0..=1.0).contains(&v) {
        return Err(format!("{key}: {column}={v} outside [0, 1], flagged missing"));
    }
    if column == "population" && v < 0.0 {
        return Err(format!("{key}: population={v} is negative, flagged missing"));
    }
    Ok(Some(v))
}

/// Reads a CSV keyed by `key_col`; every other column is a real-valued
/// attribute. Empty or `NA` cells are missing; invalid values are flagged
/// missing with a warning.
pub fn load_attribute_table(path: &Path, key_col: &str) -> Result<Loaded<BTreeMap<String, AttributeRow>>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let key_idx = headers
        .iter()
        .position(|h| h == key_col)
        .ok_or_else(|| Error::parse(path, format!("missing key column {key_col:?}")))?;
    let mut rows = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut seen = BTreeSet::new();
    for rec in rdr.records() {
        let rec = rec?;
        let key = rec.get(key_idx).unwrap_or("").trim().to_string();
        if key.is_empty() {
            warnings.push(format!("{}: row with empty {key_col} ignored", path.display()));
            continue;
        }
        if !seen.insert(key.clone()) {
            warnings.push(format!("{}: duplicate {key_col} {key}, later row ignored", path.display()));
            continue;
        }
        let mut row = AttributeRow::new();
        for (i, h) in headers.iter().enumerate() {
            if i == key_idx {
                continue;
            }
            let value = match validate(&key, h, rec.get(i).unwrap_or("")) {
                Ok(v) => v,
                Err(msg) => {
                    log::warn!("{msg}");
                    warnings.push(msg);
                    None
                }
            };
            row.insert(h.clone(), value);
        }
        rows.insert(key, row);
    }
    Ok(Loaded { items: rows, warnings })
}

/// Loads a city table keyed by `city_id`.
pub fn load_city_table(path: &Path) -> Result<Loaded<Vec<CityRecord>>> {
    let loaded = load_attribute_table(path, "city_id")?;
    Ok(Loaded {
        items: loaded
            .items
            .into_iter()
            .map(|(city_id, attributes)| CityRecord { city_id, attributes })
            .collect(),
        warnings: loaded.warnings,
    })
}

/// Two-column count table (`key_col`, `count`), e.g. arrests per block
/// group. Rows with a missing or negative count are skipped.
pub fn load_counts(path: &Path, key_col: &str) -> Result<BTreeMap<String, f64>> {
    let loaded = load_attribute_table(path, key_col)?;
    Ok(loaded
        .items
        .into_iter()
        .filter_map(|(k, row)| row.get("count").copied().flatten().filter(|v| *v >= 0.0).map(|v| (k, v)))
        .collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes a keyed attribute table; columns are the union of row keys.
pub fn write_attribute_csv(path: &Path, key_col: &str, rows: &BTreeMap<String, AttributeRow>) -> Result<()> {
    let columns: BTreeSet<&String> = rows.values().flat_map(|r| r.keys()).collect();
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec![key_col.to_string()];
    header.extend(columns.iter().map(|c| c.to_string()));
    w.write_record(&header)?;
    for (key, row) in rows {
        let mut rec = vec![key.clone()];
        rec.extend(columns.iter().map(|c| fmt_opt(row.get(*c).copied().flatten())));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn write_counts_csv(path: &Path, key_col: &str, counts: &BTreeMap<String, f64>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record([key_col, "count"])?;
    for (k, v) in counts {
        w.write_record([k.clone(), v.to_string()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn city_table_and_counts() {
        let dir = tempfile::tempdir().unwrap();
        let cities = dir.path().join("c.csv");
        std::fs::write(&cities, "city_id,population,pct_black,police_pct_black\nx,100000,0.2,0.25\ny,5000,NA,\n").unwrap();
        let c = load_city_table(&cities).unwrap().items;
        assert_eq!(c.len(), 2);
        assert_eq!(c[0].attr("police_pct_black"), Some(0.25));
        assert_eq!(c[1].attr("pct_black"), None);

        let counts = dir.path().join("a.csv");
        std::fs::write(&counts, "bg_id,count\nb1,20\nb2,-1\nb3,\n").unwrap();
        let m = load_counts(&counts, "bg_id").unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["b1"], 20.0);
    }

    #[test]
    fn attribute_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut rows = BTreeMap::new();
        rows.insert(
            "b1".to_string(),
            AttributeRow::from([("population".to_string(), Some(12.5)), ("pct_black".to_string(), None)]),
        );
        let p = dir.path().join("a.csv");
        write_attribute_csv(&p, "bg_id", &rows).unwrap();
        assert_eq!(load_attribute_table(&p, "bg_id").unwrap().items, rows);
    }
}
