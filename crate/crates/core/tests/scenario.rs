use aerial_market::abm::{compare, run, run_seed, AbmSetup};
use aerial_market::config::{Scenario, ScenarioConfig};
use aerial_market::cooperation::compare_cooperation;
use aerial_market::dynamics::Trajectory;
use aerial_market::equilibrium::Game;
use aerial_market::ModelError;

fn defaults() -> Scenario {
    Scenario::new(ScenarioConfig::default()).unwrap()
}

#[test]
fn trajectory_csv_roundtrip() {
    let s = defaults();
    let m = s.model(Game::Bertrand, true).unwrap();
    let t = m.integrate(m.initial_state(), 5.0, 0.5, s.econ.nu).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let back = Trajectory::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.samples.len(), t.samples.len());
    assert!(back.coop);
    let last = back.last().unwrap();
    let orig = t.last().unwrap();
    assert!((last.state.y1 - orig.state.y1).abs() < 1e-12);
    assert!((last.state.z2 - orig.state.z2).abs() < 1e-12);
}

#[test]
fn usp_takes_share_then_prices_up() {
    let s = defaults();
    for game in [Game::Bertrand, Game::Cournot] {
        let m = s.model(game, false).unwrap();
        let t = m
            .integrate(m.initial_state(), s.config.horizon, s.config.dt, s.econ.nu)
            .unwrap();
        let first = t.samples[0].state;
        let last = t.last().unwrap().state;
        assert!(last.usp_share() > first.usp_share());
        assert!(last.p0 > first.p0);
        assert!(m.settling_time(&t, 1e-4).is_some());
    }
}

#[test]
fn abm_is_reproducible_per_seed() {
    let s = Scenario::new(ScenarioConfig {
        population: 1000,
        ..Default::default()
    })
    .unwrap();
    let setup = AbmSetup::new(&s, Game::Cournot, false).unwrap();
    let a = run_seed(&setup, 3, 20.0);
    let b = run_seed(&setup, 3, 20.0);
    assert_eq!(a, b);
    let c = run_seed(&setup, 4, 20.0);
    assert_ne!(a, c);
    let r = run(&setup, &[3, 4], 20.0);
    assert_eq!(r.runs.len(), 2);
    assert_eq!(compare(&a, &a).unwrap().max_share, 0.0);
}

#[test]
fn mismatched_horizons_are_rejected() {
    let s = Scenario::new(ScenarioConfig {
        population: 500,
        ..Default::default()
    })
    .unwrap();
    let setup = AbmSetup::new(&s, Game::Bertrand, false).unwrap();
    let a = run_seed(&setup, 1, 10.0);
    let b = run_seed(&setup, 1, 20.0);
    assert!(matches!(compare(&a, &b), Err(ModelError::HorizonMismatch { .. })));
}

#[test]
fn cooperation_summary_is_consistent() {
    let s = defaults();
    let (plain, coop, sum) = compare_cooperation(&s, Game::Bertrand, 60.0, 0.1).unwrap();
    assert!(!plain.coop && coop.coop);
    assert!((sum.geometry.epsilon - 0.5).abs() < 0.01);
    let sh = sum.shapley;
    assert!((sh.phi1 + sh.phi2 - sh.v12).abs() < 1e-9);
    assert_eq!(sh.v1, sum.standalone[1]);
}

#[test]
fn config_file_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scenario.json");
    let c = ScenarioConfig {
        horizon: 30.0,
        ..Default::default()
    };
    std::fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    assert_eq!(ScenarioConfig::from_file(&path).unwrap(), c);
    std::fs::write(&path, "{\"horizon\": ").unwrap();
    assert!(ScenarioConfig::from_file(&path).is_err());
}
