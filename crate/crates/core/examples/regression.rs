//! Fits the disparity regressions on presence measured from a corpus with a
//! planted racial tilt, then reports elasticities and the R-squared
//! decomposition.
//!
//!     cargo run --release --example regression -- [coef]

use std::collections::BTreeMap;

use patrolscope::corpus::{BlockGroupIndex, StationIndex, StudyWindow};
use patrolscope::econ::{
    elasticity_arsinh, fit_model, standard_blocks, text_table, variance_decomposition, AnalysisTable, BgPresence, ModelSpec,
};
use patrolscope::officers::{device_city, infer_home, qualify_months, STATION_DAYS_MIN};
use patrolscope::presence::{aggregate_presence, PresenceConfig, Transform};
use patrolscope::shifts::{detect_shifts, ShiftConfig};
use patrolscope::synth::{generate, PatrolPolicy, SynthSpec};

fn main() -> patrolscope::Result<()> {
    let coef = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.5);
    let city = generate(&SynthSpec {
        patrol_policy: PatrolPolicy::RaceWeighted { coef },
        ..SynthSpec::default()
    })?;
    let window = StudyWindow::new(&city.window)?;
    let stations = StationIndex::new(city.stations.clone());
    let bgs = BlockGroupIndex::new(city.blockgroups.clone());

    let mut shifts = Vec::new();
    for (device, stream) in &city.corpus.streams {
        let months = qualify_months(device, stream, &stations, &window, STATION_DAYS_MIN);
        let homes = infer_home(device, stream, &stations, &window, device_city(&months).as_deref());
        shifts.extend(detect_shifts(device, stream, &homes, &stations, &months, &window, &ShiftConfig::default()));
    }
    let res = aggregate_presence(&shifts, &bgs, &window, &PresenceConfig::main_text())?;
    let presence: BTreeMap<String, BgPresence> = res
        .cells
        .iter()
        .map(|c| {
            (
                c.bg_id.clone(),
                BgPresence {
                    hours: c.hours,
                    by_shift_hour: c.hours_by_shift_hour,
                },
            )
        })
        .collect();
    let table = AnalysisTable::build(&city.blockgroups, &city.cities, &presence, &city.actions);

    let mut results = Vec::new();
    for col in 1..=3 {
        results.push(fit_model(&table, &ModelSpec::table1(col)?)?);
    }
    println!("{}", text_table(&results));

    // raw coefficient on the relative Black share, translated to an elasticity
    let r = &results[1];
    if let Some(t) = r.term("rel_black") {
        let rel: Vec<f64> = table.column("rel_black").into_iter().flatten().collect();
        let xbar = rel.iter().sum::<f64>() / rel.len() as f64;
        let e = elasticity_arsinh(r.outcome_mean_levels, xbar, t.coefficient)?;
        println!(
            "rel_black: beta {:.4}{} -> elasticity {:.2}% (mean hours {:.2}, factor {:.4})",
            t.coefficient,
            t.stars,
            100.0 * e.elasticity,
            r.outcome_mean_levels,
            e.factor
        );
    }

    let d = variance_decomposition(&table, "hours", Transform::Arsinh, &standard_blocks())?;
    for row in &d.rows {
        let parts: Vec<String> = d.blocks.iter().zip(&row.delta_r2).map(|(b, x)| format!("{b} +{x:.3}")).collect();
        println!("{} (n={}): {}", row.city_id, row.n_obs, parts.join(", "));
    }
    Ok(())
}
