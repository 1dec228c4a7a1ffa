use swarm_pe_core::game::PolicyKind;
use swarm_pe_core::montecarlo::{
    build_capture_table, run_mc, run_mc_episodes, CaptureTimeTable, McConfig,
};

#[test]
fn single_run_statistics_collapse() {
    let cfg = McConfig { n_runs: 1, ..McConfig::default() };
    let s = run_mc(&cfg).unwrap().summary.unwrap();
    assert_eq!(s.n, 1);
    assert_eq!(s.mean, s.min);
    assert_eq!(s.mean, s.max);
    assert_eq!(s.std, 0.0);
}

#[test]
fn batches_are_deterministic_and_prefix_stable() {
    let cfg = McConfig { n_runs: 8, base_seed: 5, ..McConfig::default() };
    let a = run_mc_episodes(&cfg).unwrap();
    assert_eq!(a, run_mc_episodes(&cfg).unwrap());
    let shorter = McConfig { n_runs: 4, ..cfg };
    assert_eq!(run_mc_episodes(&shorter).unwrap(), a[..4]);
}

#[test]
fn table_json_round_trip_and_lookup() {
    let base = McConfig { n_runs: 4, ..McConfig::default() };
    let table = build_capture_table(&[PolicyKind::AreaMin], &[1, 3], &base).unwrap();
    let json = serde_json::to_string(&table).unwrap();
    let back = CaptureTimeTable::from_json(&json).unwrap();
    assert_eq!(back, table);
    let m1 = table.mean_at(PolicyKind::AreaMin, 1.0).unwrap();
    let m3 = table.mean_at(PolicyKind::AreaMin, 3.0).unwrap();
    let mid = table.mean_at(PolicyKind::AreaMin, 2.0).unwrap();
    assert!((mid - 0.5 * (m1 + m3)).abs() < 1e-12);
    assert_eq!(table.mean_at(PolicyKind::AreaMin, 10.0).unwrap(), m3);
    assert!(table.mean_at(PolicyKind::PureDistance, 1.0).is_err());
}
