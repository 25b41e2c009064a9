//! Finds officer devices in a synthetic corpus by their station days, then
//! infers home cells and department composition.
//!
//!     cargo run --example officers

use patrolscope::corpus::{BlockGroupIndex, StationIndex, StudyWindow};
use patrolscope::officers::{department_composition, device_city, device_race, infer_home, qualify_months, STATION_DAYS_MIN};
use patrolscope::synth::{generate, SynthSpec};

fn main() -> patrolscope::Result<()> {
    let city = generate(&SynthSpec::default())?;
    let window = StudyWindow::new(&city.window)?;
    let stations = StationIndex::new(city.stations.clone());
    let bgs = BlockGroupIndex::new(city.blockgroups.clone());

    let mut races = Vec::new();
    let mut found = 0;
    for (device, stream) in &city.corpus.streams {
        let months = qualify_months(device, stream, &stations, &window, STATION_DAYS_MIN);
        if !months.iter().any(|m| m.qualified) {
            continue;
        }
        found += 1;
        let homes = infer_home(device, stream, &stations, &window, device_city(&months).as_deref());
        races.push(device_race(&homes, &bgs));
        if found <= 5 {
            let m = &months[0];
            let home = homes.iter().map(|h| format!("{}={} ({} pings)", h.half, h.home_cell, h.support));
            println!(
                "{device}: {} station days in {}-{:02}, home {}",
                m.station_days,
                m.month.year,
                m.month.month,
                home.collect::<Vec<_>>().join(", ")
            );
        }
    }
    println!("{found} officers found, {} planted", city.truth.officers.len());

    let comp = department_composition(&races);
    if let Some(s) = comp.shares {
        println!(
            "department: {:.1}% white, {:.1}% Black, {:.1}% Hispanic, {:.1}% Asian ({} devices, {} without a home block group)",
            100.0 * s.white,
            100.0 * s.black,
            100.0 * s.hispanic,
            100.0 * s.asian,
            comp.n_devices,
            comp.n_excluded
        );
    }
    Ok(())
}
