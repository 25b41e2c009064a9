//! Reconstructs patrol shifts from a synthetic corpus and compares them with
//! the planted schedule.
//!
//!     cargo run --example shifts -- [min_shift_h]

use patrolscope::corpus::{StationIndex, StudyWindow};
use patrolscope::officers::{device_city, infer_home, qualify_months, STATION_DAYS_MIN};
use patrolscope::shifts::{detect_shifts, shift_statistics, ShiftConfig};
use patrolscope::synth::{generate, SynthSpec};

fn main() -> patrolscope::Result<()> {
    let min_shift_h = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4.0);
    let cfg = ShiftConfig {
        min_shift_h,
        ..ShiftConfig::default()
    };
    let city = generate(&SynthSpec::default())?;
    let window = StudyWindow::new(&city.window)?;
    let stations = StationIndex::new(city.stations.clone());

    let mut shifts = Vec::new();
    for (device, stream) in &city.corpus.streams {
        let months = qualify_months(device, stream, &stations, &window, STATION_DAYS_MIN);
        let homes = infer_home(device, stream, &stations, &window, device_city(&months).as_deref());
        shifts.extend(detect_shifts(device, stream, &homes, &stations, &months, &window, &cfg));
    }

    for s in shifts.iter().take(5) {
        println!(
            "{} {} -> {}: {:.2} h, {} patrol pings, {} -> {}",
            s.device_id,
            s.start_ts,
            s.end_ts,
            s.duration_h(),
            s.patrol_pings.len(),
            s.station_in,
            s.station_out
        );
    }
    if let Some(st) = shift_statistics(&shifts, &window) {
        println!(
            "{} shifts on {} devices: mean {:.2} h, median {:.2} h, {:.1} per device-month",
            st.n_shifts, st.n_devices, st.mean_h, st.median_h, st.shifts_per_device_month
        );
    }
    println!("planted shifts: {}", city.truth.shifts.len());
    Ok(())
}
