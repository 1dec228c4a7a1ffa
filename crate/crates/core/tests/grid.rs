use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_pe_core::game::PolicyKind;
use swarm_pe_core::grid::{
    action_pairs, build_transition, env_step, n_actions, GridConfig, GridEnv, GridState,
    RewardConfig,
};
use swarm_pe_core::montecarlo::CaptureTimeTable;

fn table() -> CaptureTimeTable {
    CaptureTimeTable::from_means(PolicyKind::PureDistance, &[(1, 6.0), (3, 3.0), (5, 2.5)]).unwrap()
}

/// Independent count: ordered cell pairs at Chebyshev distance ≤ 1.
fn brute_force_pairs(n: usize) -> usize {
    let mut count = 0;
    for a in 0..n * n {
        for b in 0..n * n {
            let (ra, ca, rb, cb) = (a / n, a % n, b / n, b % n);
            if ra.abs_diff(rb) <= 1 && ca.abs_diff(cb) <= 1 {
                count += 1;
            }
        }
    }
    count
}

#[test]
fn action_count_matches_enumeration() {
    for n in 2..=8 {
        assert_eq!(n_actions(n).unwrap(), brute_force_pairs(n));
        assert_eq!(action_pairs(n).len(), brute_force_pairs(n));
    }
    assert_eq!(n_actions(3).unwrap(), 49);
}

fn random_state(rng: &mut ChaCha8Rng, n: usize) -> GridState {
    let cells = n * n;
    let mut defender: Vec<f64> = (0..cells).map(|_| rng.random::<f64>()).collect();
    let s: f64 = defender.iter().sum();
    defender.iter_mut().for_each(|d| *d /= s);
    let mut intruder: Vec<f64> = (0..cells).map(|_| rng.random::<f64>()).collect();
    let total = rng.random::<f64>();
    let s: f64 = intruder.iter().sum();
    intruder.iter_mut().for_each(|d| *d *= total / s);
    GridState { defender, intruder, k: 0, k_max: 8, breach_steps: 0 }
}

proptest! {
    #[test]
    fn defender_mass_is_conserved(seed in any::<u64>(), n in 2usize..6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let state = random_state(&mut rng, n);
        let action: Vec<f64> = (0..n_actions(n).unwrap()).map(|_| rng.random::<f64>()).collect();
        let config = GridConfig { n, ..GridConfig::default() };
        let step = env_step(&state, &action, &config, &RewardConfig::default(), &table()).unwrap();
        prop_assert!((step.state.defender_total() - 1.0).abs() < 1e-9);
        prop_assert!(step.state.intruder_total() <= state.intruder_total() + 1e-12);
        prop_assert!((step.reward + step.state.intruder_total()).abs() < 1e-12);
        let t = build_transition(&action, n).unwrap();
        for c in 0..n * n {
            prop_assert!((t.column_sum(c) - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn sparse_actions_fall_back_to_staying() {
    let n = 3;
    let t = build_transition(&vec![0.0; n_actions(n).unwrap()], n).unwrap();
    for c in 0..9 {
        assert_eq!(t.get(c, c), 1.0);
    }
}

#[test]
fn environment_episode_terminates() {
    let mut env = GridEnv::new(GridConfig::default(), RewardConfig::default(), table()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    env.reset_with(&mut rng);
    let stay: Vec<f64> = action_pairs(3).iter().map(|&(s, d)| if s == d { 1.0 } else { 0.0 }).collect();
    let mut steps = 0;
    loop {
        let s = env.step_action(&stay).unwrap();
        steps += 1;
        if s.done {
            break;
        }
    }
    assert!(steps <= 8);
}
