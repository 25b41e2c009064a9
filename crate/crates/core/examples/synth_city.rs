//! Generates a synthetic multi-city corpus with planted officers, shifts and
//! patrol intensity, and writes it in the pipeline's input formats.
//!
//!     cargo run --example synth_city -- [out_dir] [seed]

use std::path::PathBuf;

use patrolscope::synth::{generate, CitySpec, PatrolPolicy, SynthSpec};

fn main() -> patrolscope::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args.next().map(PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("patrolscope-synth"));
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(7);

    let base = CitySpec::default();
    let spec = SynthSpec {
        rng_seed: seed,
        cities: vec![
            CitySpec {
                city_id: "north".into(),
                ..base.clone()
            },
            CitySpec {
                city_id: "south".into(),
                timezone: "America/New_York".into(),
                origin_lat: 40.70,
                origin_lon: -74.00,
                rows: 10,
                cols: 10,
                n_officers: 30,
                ..base
            },
        ],
        patrol_policy: PatrolPolicy::RaceWeighted { coef: 0.5 },
        ..SynthSpec::default()
    };
    let city = generate(&spec)?;
    let manifest = city.write(&out)?;
    println!("wrote {} to {}", manifest.pings.display(), out.display());
    println!(
        "{} devices, {} pings, {} officers, {} civilians, {} true shifts",
        city.corpus.streams.len(),
        city.corpus.n_pings(),
        city.truth.officers.len(),
        city.truth.civilians.len(),
        city.truth.shifts.len()
    );
    for c in &city.cities {
        let attrs: Vec<String> = c.attributes.iter().filter_map(|(k, v)| v.map(|v| format!("{k}={v:.3}"))).collect();
        println!("  {}: {}", c.city_id, attrs.join(" "));
    }
    Ok(())
}
