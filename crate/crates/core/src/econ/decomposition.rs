use serde::{Deserialize, Serialize};

use super::ols::{ols, SeType};
use super::table::{AnalysisTable, Row, CRIME_BLOCK, RELATIVE_SHARES, SOCIO_BLOCK};
use crate::error::{Error, Result};
use crate::presence::Transform;

/// An ordered group of covariates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub name: String,
    pub columns: Vec<String>,
}

/// Socioeconomics, then crime, then race.
pub fn standard_blocks() -> Vec<Block> {
    let b = |name: &str, cols: &[&str]| Block {
        name: name.into(),
        columns: cols.iter().map(|s| s.to_string()).collect(),
    };
    vec![
        b("socioeconomics", &SOCIO_BLOCK),
        b("crime", &CRIME_BLOCK),
        b("race", &RELATIVE_SHARES),
    ]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecompositionRow {
    pub city_id: String,
    pub n_obs: usize,
    /// R-squared after adding blocks `0..=i`.
    pub cumulative_r2: Vec<f64>,
    pub delta_r2: Vec<f64>,
    /// Gain of the last block relative to the R-squared before it.
    pub last_block_relative_gain: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Decomposition {
    pub blocks: Vec<String>,
    pub rows: Vec<DecompositionRow>,
}

fn decompose(rows: &[&Row], city: &str, outcome: &str, transform: Transform, blocks: &[Block]) -> Result<DecompositionRow> {
    let cols: Vec<&str> = blocks.iter().flat_map(|b| b.columns.iter().map(String::as_str)).collect();
    let sample: Vec<&&Row> = rows
        .iter()
        .filter(|r| r.get(outcome).is_some_and(f64::is_finite))
        .filter(|r| cols.iter().all(|c| r.get(c).is_some_and(f64::is_finite)))
        .collect();
    let y: Vec<f64> = sample.iter().map(|r| transform.apply(r.get(outcome).expect("listwise"))).collect();
    let mut used: Vec<&str> = Vec::new();
    let mut cumulative = Vec::new();
    for b in blocks {
        used.extend(b.columns.iter().map(String::as_str));
        let mut names = vec!["(intercept)".to_string()];
        names.extend(used.iter().map(|s| s.to_string()));
        let x: Vec<Vec<f64>> = sample
            .iter()
            .map(|r| {
                let mut v = vec![1.0];
                v.extend(used.iter().map(|c| r.get(c).expect("listwise")));
                v
            })
            .collect();
        let fit = ols(&y, &x, &names, None, SeType::Hc1)?;
        let prev = cumulative.last().copied().unwrap_or(0.0);
        if fit.r_squared < prev - 1e-9 {
            return Err(Error::Internal(format!(
                "R-squared fell from {prev} to {} after adding block {}",
                fit.r_squared, b.name
            )));
        }
        // nested least squares cannot lose fit; absorb rounding noise
        cumulative.push(fit.r_squared.max(prev));
    }
    let delta: Vec<f64> = cumulative
        .iter()
        .enumerate()
        .map(|(i, r)| r - if i == 0 { 0.0 } else { cumulative[i - 1] })
        .collect();
    let before = cumulative.len().checked_sub(2).map(|i| cumulative[i]);
    Ok(DecompositionRow {
        city_id: city.to_string(),
        n_obs: sample.len(),
        last_block_relative_gain: before.filter(|b| *b > 0.0).map(|b| delta[delta.len() - 1] / b),
        cumulative_r2: cumulative,
        delta_r2: delta,
    })
}

/// Cumulative R-squared from fitting the blocks in order, separately per
/// city, each on the rows complete for every block.
pub fn variance_decomposition(
    table: &AnalysisTable,
    outcome: &str,
    transform: Transform,
    blocks: &[Block],
) -> Result<Decomposition> {
    if blocks.is_empty() {
        return Err(Error::Config("variance decomposition needs at least one block".into()));
    }
    let mut rows = Vec::new();
    for city in table.cities() {
        let city_rows: Vec<&Row> = table.rows.iter().filter(|r| r.city_id == city).collect();
        rows.push(decompose(&city_rows, &city, outcome, transform, blocks)?);
    }
    Ok(Decomposition {
        blocks: blocks.iter().map(|b| b.name.clone()).collect(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn table() -> AnalysisTable {
        let rows = (0..60)
            .map(|i| {
                let a = (i as f64 * 0.37).sin();
                let b = (i as f64 * 1.3).cos();
                let c = ((i * 7 % 11) as f64) / 11.0;
                let values: BTreeMap<String, f64> =
                    [("y", 2.0 + 3.0 * a), ("a", a), ("b", b), ("c", c)]
                        .into_iter()
                        .map(|(k, v)| (k.to_string(), v))
                        .collect();
                Row {
                    bg_id: format!("{i:03}"),
                    city_id: "c".into(),
                    values,
                }
            })
            .collect();
        AnalysisTable { rows, warnings: vec![] }
    }

    #[test]
    fn later_blocks_add_nothing_when_outcome_is_block_one() {
        let blocks = vec![
            Block { name: "one".into(), columns: vec!["a".into()] },
            Block { name: "two".into(), columns: vec!["b".into()] },
            Block { name: "three".into(), columns: vec!["c".into()] },
        ];
        let d = variance_decomposition(&table(), "y", Transform::None, &blocks).unwrap();
        let r = &d.rows[0];
        assert!((r.cumulative_r2[0] - 1.0).abs() < 1e-9);
        assert!(r.delta_r2[1].abs() <= 1e-6 && r.delta_r2[2].abs() <= 1e-6);
        assert!(r.cumulative_r2.windows(2).all(|w| w[1] >= w[0]));
    }
}
