use std::convert::Infallible;

use ndarray::{Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use swarm_pe_core::td3::{
    bootstrap_target, greedy_episode, train, ActionCritic, Batch, EnvStep, Environment, Mlp,
    OutputActivation, ReplayBuffer, Td3Agent, Td3Config, TrainBudget, Transition,
};

/// Scalar loss `Σ w ⊙ f(x)` so that the upstream gradient is `w`.
fn weighted_output(net: &Mlp, x: &Array2<f64>, w: &Array2<f64>) -> f64 {
    (&net.forward(x.view()).unwrap() * w).sum()
}

fn finite_difference_check(output: OutputActivation, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Mlp::new(&[4, 8, 6, 2], output, &mut rng);
    let x = Array2::from_shape_simple_fn((5, 4), || rng.random_range(-1.0..1.0));
    let w = Array2::from_shape_simple_fn((5, 2), || rng.random_range(-1.0..1.0));
    let (_, cache) = net.forward_cached(x.view()).unwrap();
    let (grads, dx) = net.backward(&cache, w.view()).unwrap();
    let analytic = grads.flatten();

    let h = 1e-5;
    let n = analytic.len();
    let mut worst: f64 = 0.0;
    for k in 0..n {
        let orig = *net.parameters_mut().nth(k).unwrap();
        *net.parameters_mut().nth(k).unwrap() = orig + h;
        let plus = weighted_output(&net, &x, &w);
        *net.parameters_mut().nth(k).unwrap() = orig - h;
        let minus = weighted_output(&net, &x, &w);
        *net.parameters_mut().nth(k).unwrap() = orig;
        let numeric = (plus - minus) / (2.0 * h);
        let rel = (numeric - analytic[k]).abs() / numeric.abs().max(analytic[k].abs()).max(1e-6);
        worst = worst.max(rel);
    }
    assert!(worst < 1e-4, "worst parameter relative error {worst:e}");

    for i in 0..x.nrows() {
        for j in 0..x.ncols() {
            let mut xp = x.clone();
            xp[[i, j]] += h;
            let mut xm = x.clone();
            xm[[i, j]] -= h;
            let numeric = (weighted_output(&net, &xp, &w) - weighted_output(&net, &xm, &w)) / (2.0 * h);
            let rel = (numeric - dx[[i, j]]).abs() / numeric.abs().max(dx[[i, j]].abs()).max(1e-6);
            assert!(rel < 1e-4, "input gradient ({i},{j}) relative error {rel:e}");
        }
    }
}

#[test]
fn backprop_matches_finite_differences_identity_head() {
    for seed in 0..4 {
        finite_difference_check(OutputActivation::Identity, seed);
    }
}

#[test]
fn backprop_matches_finite_differences_bounded_head() {
    for seed in 10..14 {
        finite_difference_check(OutputActivation::Bounded { low: -2.0, high: 3.0 }, seed);
    }
}

struct Quadratic {
    optimum: f64,
}

impl ActionCritic for Quadratic {
    fn action_gradient(&self, _states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
        actions.mapv(|a| -2.0 * (a - self.optimum))
    }
}

#[test]
fn actor_climbs_quadratic_critic() {
    let mut agent = Td3Agent::new(1, 1, Td3Config::default(), 3).unwrap();
    let critic = Quadratic { optimum: 0.3 };
    let states = Array2::from_elem((16, 1), 1.0);
    for _ in 0..2000 {
        agent.actor_ascent_step(states.view(), &critic);
    }
    let a = agent.act(&[1.0]).unwrap()[0];
    assert!((a - 0.3).abs() <= 0.02, "actor output {a}");
}

fn tiny_batch() -> Batch {
    let items: Vec<Transition> = (0..4)
        .map(|i| Transition {
            state: vec![i as f64 * 0.25, 1.0],
            action: vec![0.2 * i as f64],
            reward: 1.0 - 0.5 * i as f64,
            next_state: vec![0.0, 0.0],
            done: true,
        })
        .collect();
    Batch::from_transitions(&items.iter().collect::<Vec<_>>())
}

#[test]
fn critic_overfits_fixed_batch() {
    let cfg = Td3Config { hidden: vec![16, 16], ..Td3Config::default() };
    let mut agent = Td3Agent::new(2, 1, cfg, 5).unwrap();
    let batch = tiny_batch();
    let first = agent.critic_update(&batch);
    let mut last = first;
    for _ in 0..100 {
        last = agent.critic_update(&batch);
    }
    assert!(last < first, "loss went from {first} to {last}");
}

#[test]
fn critic_loss_is_squared_error_and_vanishes_at_target() {
    let cfg = Td3Config { hidden: vec![3], ..Td3Config::default() };
    let mut agent = Td3Agent::new(1, 1, cfg, 0).unwrap();
    for net in [&mut agent.critic1, &mut agent.critic2] {
        *net = Mlp::zeros(&net.sizes(), OutputActivation::Identity);
    }
    let t = Transition {
        state: vec![0.0],
        action: vec![0.5],
        reward: 2.0,
        next_state: vec![0.0],
        done: true,
    };
    let batch = Batch::from_transitions(&[&t]);
    assert_eq!(agent.critic_update(&batch), 4.0);

    let mut agent = Td3Agent::new(1, 1, Td3Config { hidden: vec![3], ..Td3Config::default() }, 0).unwrap();
    let before = (agent.critic1.clone(), agent.critic2.clone());
    let q = agent.critic1.forward_one(&[0.0, 0.5]).unwrap()[0];
    let y = Array1::from(vec![q]);
    let [l1, _] = agent.critic_step(&batch, &y);
    assert_eq!(l1, 0.0);
    assert_eq!(agent.critic1, before.0);
}

#[test]
fn bootstrapped_term_never_exceeds_either_target_critic() {
    let mut agent = Td3Agent::new(2, 1, Td3Config { hidden: vec![8, 8], ..Td3Config::default() }, 9).unwrap();
    // Perturb the second target so the two critics disagree.
    agent.critic2_target = Mlp::new(&agent.critic2.sizes(), OutputActivation::Identity, &mut ChaCha8Rng::seed_from_u64(1));
    let items: Vec<Transition> = (0..32)
        .map(|i| Transition {
            state: vec![0.0, 0.0],
            action: vec![0.5],
            reward: 0.0,
            next_state: vec![(i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()],
            done: false,
        })
        .collect();
    let batch = Batch::from_transitions(&items.iter().collect::<Vec<_>>());
    let y = agent.td_targets(&batch);
    let gamma = agent.config().gamma;
    // The smoothed action is bounded, so check against each critic's range over actions.
    for (i, t) in items.iter().enumerate() {
        let q_at = |net: &Mlp, a: f64| net.forward_one(&[t.next_state[0], t.next_state[1], a]).unwrap()[0];
        let max_over = |net: &Mlp| (0..=200).map(|k| q_at(net, k as f64 / 200.0)).fold(f64::MIN, f64::max);
        let bound = max_over(&agent.critic1_target).min(max_over(&agent.critic2_target));
        assert!(y[i] / gamma <= bound + 1e-9);
    }
    assert_eq!(bootstrap_target(0.0, false, 1.0, 3.0, -1.0), -1.0);
}

#[test]
fn polyak_with_rho_near_one_barely_moves_targets() {
    let cfg = Td3Config { hidden: vec![4], rho: 1.0 - 1e-12, ..Td3Config::default() };
    let mut agent = Td3Agent::new(1, 1, cfg, 2).unwrap();
    let before = agent.actor_target.clone();
    agent.actor = Mlp::zeros(&agent.actor.sizes(), agent.actor.output);
    agent.soft_update_targets();
    for (a, b) in agent.actor_target.layers.iter().zip(&before.layers) {
        assert!((&a.w - &b.w).iter().all(|d| d.abs() < 1e-11));
    }
}

/// One-state continuous bandit with reward `−(a − 0.6)²`.
struct Bandit;

impl Environment for Bandit {
    type Error = Infallible;

    fn observation_dim(&self) -> usize {
        1
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn reset(&mut self, _rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![1.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, Infallible> {
        Ok(EnvStep {
            observation: vec![1.0],
            reward: -(action[0] - 0.6).powi(2),
            done: true,
        })
    }
}

#[test]
fn bandit_optimum_is_recovered() {
    let mut agent = Td3Agent::new(1, 1, Td3Config::default(), 11).unwrap();
    let budget = TrainBudget { episodes: 5000, max_episode_steps: 1 };
    let log = train(&mut Bandit, &mut agent, budget, 11).unwrap();
    assert_eq!(log.episodes.len(), 5000);
    let a = agent.act(&[1.0]).unwrap()[0];
    assert!((a - 0.6).abs() <= 0.05, "learned action {a}");
}

/// Records every action so the range invariant can be checked.
struct Recorder {
    actions: Vec<Vec<f64>>,
}

impl Environment for Recorder {
    type Error = Infallible;

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        vec![rng.random_range(-1.0..1.0), 1.0]
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, Infallible> {
        self.actions.push(action.to_vec());
        Ok(EnvStep {
            observation: vec![action[0], action[1]],
            reward: action.iter().sum(),
            done: self.actions.len().is_multiple_of(5),
        })
    }
}

#[test]
fn training_emits_actions_in_range_and_is_deterministic() {
    let cfg = Td3Config {
        hidden: vec![16, 12],
        a_low: -0.5,
        a_high: 0.25,
        expl_sigma: Some(1.0),
        warmup_steps: 20,
        batch_size: 8,
        ..Td3Config::default()
    };
    let run = || {
        let mut env = Recorder { actions: vec![] };
        let mut agent = Td3Agent::new(2, 3, cfg.clone(), 4).unwrap();
        let log = train(&mut env, &mut agent, TrainBudget { episodes: 30, max_episode_steps: 50 }, 4).unwrap();
        (env.actions, log, agent.actor)
    };
    let (actions, log, actor) = run();
    assert!(actions.iter().flatten().all(|&a| (-0.5..=0.25).contains(&a)));
    let mut csv = Vec::new();
    log.write_csv(&mut csv).unwrap();
    let again = run();
    assert_eq!(again.0, actions);
    assert_eq!(again.1, log);
    assert_eq!(again.2, actor);
    assert!(String::from_utf8(csv).unwrap().starts_with("episode,steps,return,critic_loss_mean\n"));
}

#[test]
fn frozen_greedy_policy_repeats_rollouts() {
    let agent = Td3Agent::new(1, 1, Td3Config { hidden: vec![8], ..Td3Config::default() }, 1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let first = greedy_episode(&mut Bandit, &agent, &mut rng, 10).unwrap();
    for _ in 0..5 {
        assert_eq!(greedy_episode(&mut Bandit, &agent, &mut rng, 10).unwrap(), first);
    }
}

#[test]
fn replay_buffer_drops_oldest_first() {
    let mut buf = ReplayBuffer::new(100);
    for i in 0..130 {
        buf.push(Transition {
            state: vec![i as f64],
            action: vec![],
            reward: 0.0,
            next_state: vec![],
            done: false,
        });
    }
    assert_eq!(buf.len(), 100);
    let kept: Vec<f64> = buf.iter().map(|t| t.state[0]).collect();
    assert!((0..30).all(|i| !kept.contains(&(i as f64))));
    assert!((30..130).all(|i| kept.contains(&(i as f64))));
}
