//! City-level validation of detected departments against reported
//! headcounts, composition, residence zones and recorded police actions.
//!
//!     cargo run --release --example validation

use std::collections::BTreeMap;

use patrolscope::corpus::{BlockGroupIndex, StationIndex, StudyWindow};
use patrolscope::econ::{city_validation_suite, AnalysisTable, BgPresence, OfficerRecord, ValidationInputs};
use patrolscope::officers::{device_city, device_race, infer_home, qualify_months, STATION_DAYS_MIN};
use patrolscope::presence::{aggregate_presence, PresenceConfig};
use patrolscope::shifts::{detect_shifts, ShiftConfig};
use patrolscope::synth::{generate, CitySpec, SynthSpec};

fn main() -> patrolscope::Result<()> {
    // four small cities with different department sizes
    let cities: Vec<CitySpec> = (0..4u32)
        .map(|i| CitySpec {
            city_id: format!("city{i}"),
            origin_lat: 35.0 + 2.0 * i as f64,
            rows: 8,
            cols: 8,
            n_officers: 10 + 8 * i,
            n_civilians: 20,
            ..CitySpec::default()
        })
        .collect();
    let city = generate(&SynthSpec {
        cities,
        ..SynthSpec::default()
    })?;
    let window = StudyWindow::new(&city.window)?;
    let stations = StationIndex::new(city.stations.clone());
    let bgs = BlockGroupIndex::new(city.blockgroups.clone());

    let mut officers = Vec::new();
    let mut shifts = Vec::new();
    for (device, stream) in &city.corpus.streams {
        let months = qualify_months(device, stream, &stations, &window, STATION_DAYS_MIN);
        let Some(city_id) = device_city(&months) else { continue };
        let homes = infer_home(device, stream, &stations, &window, Some(&city_id));
        shifts.extend(detect_shifts(device, stream, &homes, &stations, &months, &window, &ShiftConfig::default()));
        officers.push(OfficerRecord {
            device_id: device.clone(),
            city_id,
            home: homes.iter().next().map(|h| h.home_cell.center()),
            race: device_race(&homes, &bgs),
        });
    }
    let res = aggregate_presence(&shifts, &bgs, &window, &PresenceConfig::main_text())?;
    let presence: BTreeMap<String, BgPresence> = res
        .cells
        .iter()
        .map(|c| {
            let p = BgPresence {
                hours: c.hours,
                by_shift_hour: c.hours_by_shift_hour,
            };
            (c.bg_id.clone(), p)
        })
        .collect();
    let table = AnalysisTable::build(&city.blockgroups, &city.cities, &presence, &city.actions);

    let report = city_validation_suite(&ValidationInputs {
        table: Some(&table),
        cities: Some(&city.cities),
        officers: &officers,
        zones: Some(&city.zones),
        zone_counts: Some(&city.zone_counts),
        action_columns: vec!["stops".into(), "arrests".into()],
    });
    for c in &report.cities {
        println!(
            "{}: {} detected, {:?} sworn, {:.1?} vs {:.1?} per 10k",
            c.city_id, c.detected_officers, c.sworn_officers, c.detected_per_10k, c.sworn_per_10k
        );
    }
    println!("count rho {:.3?}, per-capita rho {:.3?}", report.count_rho, report.per_capita_rho);
    for f in &report.composition {
        println!(
            "composition {}: smartphone {:.3} ({:.3}), city {:.3} ({:.3}), R2 {:.3}",
            f.group, f.smartphone_coef, f.smartphone_se, f.city_coef, f.city_se, f.r_squared
        );
    }
    if let Some(z) = &report.zone_residence {
        println!("residence zones: {} zones, rho {:.3?}", z.n_zones, z.rho);
    }
    for n in &report.notes {
        println!("note: {n}");
    }
    Ok(())
}
