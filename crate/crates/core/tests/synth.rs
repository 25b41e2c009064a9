use patrolscope::synth::{generate, CitySpec, GroundTruth, PatrolPolicy, SynthSpec};
use patrolscope::Error;

fn small() -> SynthSpec {
    let mut s = SynthSpec {
        rng_seed: 3,
        days: 14,
        ..SynthSpec::default()
    };
    let c = &mut s.cities[0];
    c.rows = 4;
    c.cols = 4;
    c.n_stations = 1;
    c.n_officers = 5;
    c.n_civilians = 5;
    s
}

#[test]
fn same_spec_same_corpus() {
    let a = generate(&small()).unwrap();
    let b = generate(&small()).unwrap();
    assert_eq!(a.corpus.canonical_bytes(), b.corpus.canonical_bytes());
    assert_eq!(a.truth.shifts.len(), b.truth.shifts.len());
    let c = generate(&SynthSpec { rng_seed: 4, ..small() }).unwrap();
    assert_ne!(a.corpus.canonical_bytes(), c.corpus.canonical_bytes());
}

#[test]
fn adding_a_civilian_leaves_officers_untouched() {
    let a = generate(&small()).unwrap();
    let mut spec = small();
    spec.cities[0].n_civilians += 1;
    let b = generate(&spec).unwrap();
    // ids are shuffled, so compare trajectories without them
    let traces = |c: &patrolscope::synth::SynthCity| -> Vec<Vec<(i64, f64, f64)>> {
        let mut v: Vec<_> = c
            .truth
            .officers
            .iter()
            .map(|o| c.corpus.streams[&o.device_id].iter().map(|p| (p.ts, p.location.lat(), p.location.lon())).collect())
            .collect();
        v.sort_by(|x: &Vec<(i64, f64, f64)>, y| x[0].0.cmp(&y[0].0).then(x.len().cmp(&y.len())));
        v
    };
    assert_eq!(traces(&a), traces(&b));
}

#[test]
fn written_corpus_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let city = generate(&small()).unwrap();
    let m = city.write(dir.path()).unwrap().resolved(dir.path());
    for p in m.paths() {
        assert!(p.exists(), "{}", p.display());
    }
    let truth = GroundTruth::load(&dir.path().join("truth.json")).unwrap();
    assert_eq!(truth.officers.len(), 5);
    assert_eq!(truth.civilians.len(), 5);
    let window = patrolscope::corpus::StudyWindow::new(m.window.as_ref().unwrap()).unwrap();
    let back = patrolscope::corpus::load_pings(&m.pings, &window, 0.0).unwrap();
    assert_eq!(back.canonical_bytes(), city.corpus.canonical_bytes());
}

#[test]
fn every_ping_is_inside_the_window() {
    let spec = small();
    let city = generate(&spec).unwrap();
    let window = patrolscope::corpus::StudyWindow::new(&city.window).unwrap();
    assert!(city.corpus.streams.values().flatten().all(|p| window.contains_ts(p.ts)));
}

#[test]
fn weights_naming_no_block_group_are_refused() {
    let mut spec = small();
    spec.patrol_policy = PatrolPolicy::Weights {
        weights: [("fixture_bg".to_string(), 1.0)].into(),
    };
    // unknown ids give every block group zero weight
    assert!(generate(&spec).is_err());
}

#[test]
fn infeasible_specs_are_refused() {
    let cases: Vec<SynthSpec> = vec![
        SynthSpec { days: 0, ..small() },
        SynthSpec {
            cities: vec![],
            ..small()
        },
        SynthSpec {
            cities: vec![CitySpec {
                n_stations: 0,
                ..small().cities[0].clone()
            }],
            ..small()
        },
        SynthSpec {
            cities: vec![CitySpec {
                n_stations: 17,
                ..small().cities[0].clone()
            }],
            ..small()
        },
        SynthSpec {
            cities: vec![CitySpec {
                cell_m: 50.0,
                ..small().cities[0].clone()
            }],
            ..small()
        },
        {
            let mut s = small();
            s.shift.length_max_h = 23.0;
            s
        },
        {
            let mut s = small();
            s.shift.workdays_per_week = 2;
            s
        },
    ];
    for (i, s) in cases.iter().enumerate() {
        let err = generate(s).unwrap_err();
        assert!(matches!(err, Error::InfeasibleSpec(_)), "case {i}: {err}");
    }
}
