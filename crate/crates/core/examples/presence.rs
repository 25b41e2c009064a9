//! Credits patrol pings with dwell time and aggregates officer-hours per
//! block group, under the main and the stricter speed cap.
//!
//!     cargo run --example presence

use patrolscope::corpus::{BlockGroupIndex, StationIndex, StudyWindow};
use patrolscope::officers::{device_city, infer_home, qualify_months, STATION_DAYS_MIN};
use patrolscope::presence::{aggregate_presence, PresenceConfig};
use patrolscope::shifts::{detect_shifts, ShiftConfig};
use patrolscope::synth::{generate, SynthSpec};

fn main() -> patrolscope::Result<()> {
    let city = generate(&SynthSpec::default())?;
    let window = StudyWindow::new(&city.window)?;
    let stations = StationIndex::new(city.stations.clone());
    let bgs = BlockGroupIndex::new(city.blockgroups.clone());

    let mut shifts = Vec::new();
    for (device, stream) in &city.corpus.streams {
        let months = qualify_months(device, stream, &stations, &window, STATION_DAYS_MIN);
        let homes = infer_home(device, stream, &stations, &window, device_city(&months).as_deref());
        shifts.extend(detect_shifts(device, stream, &homes, &stations, &months, &window, &ShiftConfig::default()));
    }

    for (label, cfg) in [("50 mph", PresenceConfig::main_text()), ("25 mph", PresenceConfig::appendix_tables())] {
        let res = aggregate_presence(&shifts, &bgs, &window, &cfg)?;
        let total: f64 = res.cells.iter().map(|c| c.hours).sum();
        println!(
            "{label}: {:.1} h in {} block groups, {:.1} h outside any, {} pings dropped by speed",
            total,
            res.cells.len(),
            res.unassigned.hours(),
            res.speed_excluded_pings
        );
        let mut top: Vec<_> = res.cells.iter().collect();
        top.sort_by(|a, b| b.hours.total_cmp(&a.hours));
        for c in top.iter().take(3) {
            let planted = city.truth.bg_hours.get(&c.bg_id).map_or(0.0, |t| t.expected_hours);
            println!(
                "  {}: {:.1} h over {} shifts (planted expectation {:.1} h), first shift hour {:.1} h",
                c.bg_id, c.hours, c.shift_count, planted, c.hours_by_shift_hour[0]
            );
        }
    }
    Ok(())
}
