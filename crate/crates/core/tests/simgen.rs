use epirisk::detect::{build_features, Cohort, Label};
use epirisk::ingest::{parse_registry, parse_trajectories, ParseOptions};
use epirisk::pipeline::{prepare, risk_maps, score_all, PipelineConfig};
use epirisk::score::ScoreOptions;
use epirisk::simgen::{generate_world, simulate, InfectionCause, Simulation, WorldConfig};

fn small(seed: u64) -> WorldConfig {
    WorldConfig {
        grid_rows: 40,
        grid_cols: 40,
        n_agents: 600,
        n_days: 20,
        n_venues: 4,
        n_hospitals: 2,
        seed,
        ..Default::default()
    }
}

fn run(cfg: &WorldConfig) -> Simulation {
    simulate(generate_world(cfg).unwrap()).unwrap()
}

fn files(sim: &Simulation) -> (Vec<u8>, Vec<u8>) {
    let (mut t, mut r) = (Vec::new(), Vec::new());
    sim.write_trajectories(&mut t).unwrap();
    sim.write_registry(&mut r).unwrap();
    (t, r)
}

#[test]
fn same_seed_same_files() {
    let a = files(&run(&small(5)));
    assert_eq!(a, files(&run(&small(5))));
    assert_ne!(a.0, files(&run(&small(6))).0);
}

#[test]
fn output_parses_cleanly() {
    let sim = run(&small(1));
    let (traj, reg) = files(&sim);
    let parsed = parse_trajectories(&traj[..], &ParseOptions::default()).unwrap();
    assert_eq!(parsed.rejected.malformed + parsed.rejected.bad_coordinates + parsed.rejected.bad_timestamp, 0);
    assert_eq!(parsed.records.len(), sim.corpus.record_count());
    assert_eq!(parsed.records, sim.corpus.to_records());
    let registry = parse_registry(&reg[..]).unwrap();
    assert_eq!(registry, sim.registry);
    assert_eq!(registry.len(), 600);
}

#[test]
fn no_contact_no_infection() {
    let mut cfg = small(2);
    cfg.hazard_per_hour = 0.0;
    let sim = run(&cfg);
    assert!(sim.infections.iter().flatten().all(|i| i.cause != InfectionCause::Contact));
    // Exactly the index infections, all diagnosed within the horizon.
    assert_eq!(sim.confirmed_count(), (0.03f64 * 600.0).ceil() as usize);
}

#[test]
fn confirmed_count_tracks_rate() {
    let cfg = WorldConfig { n_agents: 10_000, grid_rows: 120, grid_cols: 120, ..Default::default() };
    let sim = run(&cfg);
    let n = sim.confirmed_count() as f64;
    assert!((240.0..=360.0).contains(&n), "{n} confirmed");
}

#[test]
fn diagnosis_lags_in_range() {
    let sim = run(&small(3));
    for i in sim.infections.iter().flatten() {
        let lag = i.diagnosis_day - i.day;
        assert!((2..=14).contains(&lag), "{i:?}");
    }
}

/// Median confirmed windowed score above the 90th percentile of normals.
#[test]
fn confirmed_exposure_dominates() {
    for seed in [11, 12] {
        let cfg = WorldConfig { n_agents: 5_000, grid_rows: 80, grid_cols: 80, seed, ..Default::default() };
        let sim = run(&cfg);
        let pc = PipelineConfig::default();
        let prepared = prepare(sim.corpus.clone(), &pc, Some(sim.window()));
        let (cases, series) = risk_maps(&prepared, &sim.registry, &pc, 0..=cfg.n_days as i64 - 1).unwrap();
        let opts = ScoreOptions { leave_one_out: true, ..Default::default() };
        let scores = score_all(&prepared, &cases, &series, &pc, &opts);
        let cohort = Cohort::build(&scores, &sim.registry, &pc.clock, 8, None).unwrap();
        let m = build_features(&scores, &cohort, 8).unwrap();
        let pick = |l: Label| {
            let mut v: Vec<f64> = (0..m.len()).filter(|&i| m.labels[i] == l).map(|i| m.window_scores[i]).collect();
            v.sort_by(f64::total_cmp);
            v
        };
        let (pos, neg) = (pick(Label::Confirmed), pick(Label::Normal));
        let median = pos[pos.len() / 2];
        let p90 = neg[(neg.len() as f64 * 0.9) as usize];
        assert!(median > p90, "seed {seed}: median {median} <= p90 {p90}");
    }
}
