use ndarray::{concatenate, s, Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::buffer::{ReplayBuffer, Transition};
use super::mlp::{Mlp, MlpRecord, OutputActivation};
use super::Td3Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Td3Config {
    pub gamma: f64,
    pub rho: f64,
    /// Exploration noise std; defaults to 0.1·(a_high − a_low).
    pub expl_sigma: Option<f64>,
    /// Target smoothing noise std; defaults to 0.2·(a_high − a_low).
    pub smooth_sigma: Option<f64>,
    /// Smoothing noise clip; defaults to σ_smooth.
    pub noise_clip: Option<f64>,
    pub policy_delay: u32,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub a_low: f64,
    pub a_high: f64,
    pub hidden: Vec<usize>,
    pub warmup_steps: usize,
}

impl Default for Td3Config {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            rho: 0.995,
            expl_sigma: None,
            smooth_sigma: None,
            noise_clip: None,
            policy_delay: 2,
            batch_size: 64,
            buffer_capacity: 100_000,
            actor_lr: 1e-3,
            critic_lr: 1e-3,
            a_low: 0.0,
            a_high: 1.0,
            hidden: vec![400, 300],
            warmup_steps: 500,
        }
    }
}

impl Td3Config {
    fn range(&self) -> f64 {
        self.a_high - self.a_low
    }

    pub fn expl_sigma(&self) -> f64 {
        self.expl_sigma.unwrap_or(0.1 * self.range())
    }

    pub fn smooth_sigma(&self) -> f64 {
        self.smooth_sigma.unwrap_or(0.2 * self.range())
    }

    pub fn noise_clip(&self) -> f64 {
        self.noise_clip.unwrap_or(0.5 * self.smooth_sigma() * 2.0)
    }

    pub fn validate(&self) -> Result<(), Td3Error> {
        let bad = |field: &'static str, reason: String| Err(Td3Error::InvalidConfig { field, reason });
        if !(0.0..1.0).contains(&self.gamma) {
            return bad("gamma", format!("must lie in [0, 1), got {}", self.gamma));
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return bad("rho", format!("must lie in (0, 1), got {}", self.rho));
        }
        if !(self.a_low.is_finite() && self.a_high.is_finite() && self.a_low < self.a_high) {
            return bad("a_low", format!("need finite a_low < a_high, got [{}, {}]", self.a_low, self.a_high));
        }
        for (field, v) in [
            ("expl_sigma", self.expl_sigma()),
            ("smooth_sigma", self.smooth_sigma()),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return bad(field, format!("must be finite and non-negative, got {v}"));
            }
        }
        if !(self.noise_clip().is_finite() && self.noise_clip() > 0.0) {
            return bad("noise_clip", format!("must be positive, got {}", self.noise_clip()));
        }
        if self.policy_delay < 1 {
            return bad("policy_delay", "must be at least 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be positive".into());
        }
        if self.buffer_capacity < self.batch_size {
            return bad("buffer_capacity", format!("must hold at least one batch ({})", self.batch_size));
        }
        for (field, v) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !(v.is_finite() && v > 0.0) {
                return bad(field, format!("must be positive, got {v}"));
            }
        }
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return bad("hidden", "need at least one non-empty hidden layer".into());
        }
        Ok(())
    }
}

/// `r + γ(1−d)·min(q1, q2)`.
pub fn bootstrap_target(reward: f64, done: bool, gamma: f64, q1: f64, q2: f64) -> f64 {
    if done {
        reward
    } else {
        reward + gamma * q1.min(q2)
    }
}

/// `clip(μ + clip(ε, −c, c), low, high)`.
pub fn smoothed_action(mu: f64, eps: f64, clip: f64, low: f64, high: f64) -> f64 {
    (mu + eps.clamp(-clip, clip)).clamp(low, high)
}

/// Anything that can report `∂Q/∂a` for a batch of state-action pairs.
pub trait ActionCritic {
    fn action_gradient(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64>;
}

fn join(states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
    concatenate(Axis(1), &[states, actions]).expect("batch rows agree")
}

impl ActionCritic for Mlp {
    fn action_gradient(&self, states: ArrayView2<f64>, actions: ArrayView2<f64>) -> Array2<f64> {
        let x = join(states, actions);
        let (_, cache) = self.forward_cached(x.view()).expect("critic input shape");
        let ones = Array2::ones((x.nrows(), 1));
        let (_, dx) = self.backward(&cache, ones.view()).expect("critic output shape");
        dx.slice(s![.., states.ncols()..]).to_owned()
    }
}

/// Column-stacked view of a sampled minibatch.
#[derive(Debug, Clone)]
pub struct Batch {
    pub states: Array2<f64>,
    pub actions: Array2<f64>,
    pub rewards: Array1<f64>,
    pub next_states: Array2<f64>,
    pub dones: Vec<bool>,
}

impl Batch {
    pub fn from_transitions(items: &[&Transition]) -> Self {
        let stack = |f: &dyn Fn(&Transition) -> &Vec<f64>| {
            let cols = f(items[0]).len();
            Array2::from_shape_vec(
                (items.len(), cols),
                items.iter().flat_map(|t| f(t).iter().copied()).collect(),
            )
            .expect("uniform transition shapes")
        };
        Self {
            states: stack(&|t| &t.state),
            actions: stack(&|t| &t.action),
            rewards: items.iter().map(|t| t.reward).collect(),
            next_states: stack(&|t| &t.next_state),
            dones: items.iter().map(|t| t.done).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.dones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dones.is_empty()
    }
}

/// Actor, twin critics, their targets and optimizer state.
#[derive(Debug, Clone)]
pub struct Td3Agent {
    cfg: Td3Config,
    observation_dim: usize,
    action_dim: usize,
    pub actor: Mlp,
    pub critic1: Mlp,
    pub critic2: Mlp,
    pub actor_target: Mlp,
    pub critic1_target: Mlp,
    pub critic2_target: Mlp,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    rng: ChaCha8Rng,
    rounds: u64,
}

impl Td3Agent {
    pub fn new(
        observation_dim: usize,
        action_dim: usize,
        cfg: Td3Config,
        seed: u64,
    ) -> Result<Self, Td3Error> {
        cfg.validate()?;
        if observation_dim == 0 || action_dim == 0 {
            return Err(Td3Error::InvalidConfig {
                field: "dimensions",
                reason: "observation and action dimensions must be positive".into(),
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sizes = |input: usize, output: usize| {
            let mut v = vec![input];
            v.extend(&cfg.hidden);
            v.push(output);
            v
        };
        let squash = OutputActivation::Bounded { low: cfg.a_low, high: cfg.a_high };
        let actor = Mlp::new(&sizes(observation_dim, action_dim), squash, &mut rng);
        let critic_sizes = sizes(observation_dim + action_dim, 1);
        let critic1 = Mlp::new(&critic_sizes, OutputActivation::Identity, &mut rng);
        let critic2 = Mlp::new(&critic_sizes, OutputActivation::Identity, &mut rng);
        Ok(Self::assemble(cfg, actor, critic1, critic2, rng))
    }

    fn assemble(cfg: Td3Config, actor: Mlp, critic1: Mlp, critic2: Mlp, rng: ChaCha8Rng) -> Self {
        Self {
            observation_dim: actor.input_dim(),
            action_dim: actor.output_dim(),
            actor_opt: Adam::new(&actor, cfg.actor_lr),
            critic1_opt: Adam::new(&critic1, cfg.critic_lr),
            critic2_opt: Adam::new(&critic2, cfg.critic_lr),
            actor_target: actor.clone(),
            critic1_target: critic1.clone(),
            critic2_target: critic2.clone(),
            actor,
            critic1,
            critic2,
            cfg,
            rng,
            rounds: 0,
        }
    }

    pub fn config(&self) -> &Td3Config {
        &self.cfg
    }

    pub fn observation_dim(&self) -> usize {
        self.observation_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    /// Completed update rounds.
    pub fn rounds(&self) -> u64 {
        self.rounds
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    /// Greedy action `μ_θ(s)`.
    pub fn act(&self, state: &[f64]) -> Result<Vec<f64>, Td3Error> {
        self.actor.forward_one(state)
    }

    /// `clip(μ_θ(s) + N(0, σ_expl), a_low, a_high)`.
    pub fn act_explore(&mut self, state: &[f64]) -> Result<Vec<f64>, Td3Error> {
        let mut a = self.act(state)?;
        let sigma = self.cfg.expl_sigma();
        if sigma > 0.0 {
            let noise = Normal::new(0.0, sigma).expect("finite sigma");
            for v in &mut a {
                *v = (*v + noise.sample(&mut self.rng)).clamp(self.cfg.a_low, self.cfg.a_high);
            }
        }
        Ok(a)
    }

    /// Uniform action over the box, used during warmup.
    pub fn random_action(&mut self) -> Vec<f64> {
        let (lo, hi) = (self.cfg.a_low, self.cfg.a_high);
        (0..self.action_dim).map(|_| self.rng.random_range(lo..=hi)).collect()
    }

    /// Clipped double-Q targets with target-policy smoothing.
    pub fn td_targets(&mut self, batch: &Batch) -> Array1<f64> {
        let mut next_actions = self
            .actor_target
            .forward(batch.next_states.view())
            .expect("next-state shape");
        let sigma = self.cfg.smooth_sigma();
        let clip = self.cfg.noise_clip();
        let noise = (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite sigma"));
        for mu in next_actions.iter_mut() {
            let eps = noise.map_or(0.0, |n| n.sample(&mut self.rng));
            *mu = smoothed_action(*mu, eps, clip, self.cfg.a_low, self.cfg.a_high);
        }
        let x = join(batch.next_states.view(), next_actions.view());
        let q1 = self.critic1_target.forward(x.view()).expect("critic shape");
        let q2 = self.critic2_target.forward(x.view()).expect("critic shape");
        (0..batch.len())
            .map(|i| {
                bootstrap_target(batch.rewards[i], batch.dones[i], self.cfg.gamma, q1[[i, 0]], q2[[i, 0]])
            })
            .collect()
    }

    /// One descent step of both critics toward `targets`; returns each critic's
    /// mean squared error before the step.
    pub fn critic_step(&mut self, batch: &Batch, targets: &Array1<f64>) -> [f64; 2] {
        let x = join(batch.states.view(), batch.actions.view());
        let n = batch.len() as f64;
        let mut losses = [0.0; 2];
        for (k, (net, opt)) in [
            (&mut self.critic1, &mut self.critic1_opt),
            (&mut self.critic2, &mut self.critic2_opt),
        ]
        .into_iter()
        .enumerate()
        {
            let (q, cache) = net.forward_cached(x.view()).expect("critic shape");
            let diff = &q.column(0) - targets;
            losses[k] = diff.mapv(|d| d * d).sum() / n;
            let upstream = diff.mapv(|d| 2.0 * d / n).insert_axis(Axis(1));
            let (grads, _) = net.backward(&cache, upstream.view()).expect("critic shape");
            opt.step(net, &grads);
        }
        losses
    }

    /// Computes targets and updates both critics; returns the mean of their losses.
    pub fn critic_update(&mut self, batch: &Batch) -> f64 {
        let y = self.td_targets(batch);
        let [l1, l2] = self.critic_step(batch, &y);
        0.5 * (l1 + l2)
    }

    /// One ascent step of the actor on `mean Q(s, μ_θ(s))` under `critic`.
    pub fn actor_ascent_step<C: ActionCritic + ?Sized>(&mut self, states: ArrayView2<f64>, critic: &C) {
        let (actions, cache) = self.actor.forward_cached(states).expect("actor shape");
        let dq = critic.action_gradient(states, actions.view());
        let n = states.nrows() as f64;
        let upstream = dq.mapv(|g| -g / n);
        let (grads, _) = self.actor.backward(&cache, upstream.view()).expect("actor shape");
        self.actor_opt.step(&mut self.actor, &grads);
    }

    /// Actor step against the first critic followed by polyak averaging of all targets.
    pub fn actor_update(&mut self, batch: &Batch) {
        let critic = self.critic1.clone();
        self.actor_ascent_step(batch.states.view(), &critic);
        self.soft_update_targets();
    }

    pub fn soft_update_targets(&mut self) {
        let rho = self.cfg.rho;
        self.actor_target.soft_update_from(&self.actor, rho);
        self.critic1_target.soft_update_from(&self.critic1, rho);
        self.critic2_target.soft_update_from(&self.critic2, rho);
    }

    /// One full round: sample, critic update, and every `policy_delay` rounds an
    /// actor update. Returns the critic loss, or `None` if the buffer is too small.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Option<f64> {
        let batch = {
            let items = buffer.sample(self.cfg.batch_size, &mut self.rng)?;
            Batch::from_transitions(&items)
        };
        let loss = self.critic_update(&batch);
        self.rounds += 1;
        if self.rounds.is_multiple_of(u64::from(self.cfg.policy_delay)) {
            self.actor_update(&batch);
        }
        Some(loss)
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            observation_dim: self.observation_dim,
            action_dim: self.action_dim,
            config: self.cfg.clone(),
            actor: MlpRecord::from(&self.actor),
            critic1: MlpRecord::from(&self.critic1),
            critic2: MlpRecord::from(&self.critic2),
        }
    }

    /// Restores online networks; targets start equal to them and optimizer
    /// moments start fresh.
    pub fn from_checkpoint(ck: Checkpoint, seed: u64) -> Result<Self, Td3Error> {
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Td3Error::Checkpoint(format!(
                "unknown checkpoint format {:?}, expected {CHECKPOINT_FORMAT:?}",
                ck.format
            )));
        }
        ck.config.validate()?;
        let actor = Mlp::try_from(ck.actor)?;
        let critic1 = Mlp::try_from(ck.critic1)?;
        let critic2 = Mlp::try_from(ck.critic2)?;
        let (o, a) = (ck.observation_dim, ck.action_dim);
        let checks = [
            ("actor input", actor.input_dim(), o),
            ("actor output", actor.output_dim(), a),
            ("critic1 input", critic1.input_dim(), o + a),
            ("critic2 input", critic2.input_dim(), o + a),
            ("critic1 output", critic1.output_dim(), 1),
            ("critic2 output", critic2.output_dim(), 1),
        ];
        for (what, got, expected) in checks {
            if got != expected {
                return Err(Td3Error::Shape { what, expected, got });
            }
        }
        Ok(Self::assemble(ck.config, actor, critic1, critic2, ChaCha8Rng::seed_from_u64(seed)))
    }
}

pub const CHECKPOINT_FORMAT: &str = "swarm-pe-td3/1";

/// JSON weight dump: dimensions header, trainer config, and the online networks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub observation_dim: usize,
    pub action_dim: usize,
    pub config: Td3Config,
    pub actor: MlpRecord,
    pub critic1: MlpRecord,
    pub critic2: MlpRecord,
}

impl Checkpoint {
    /// Explicit diagnostic when an environment does not fit the stored networks.
    pub fn check_dims(&self, observation_dim: usize, action_dim: usize) -> Result<(), Td3Error> {
        if self.observation_dim != observation_dim {
            return Err(Td3Error::Shape {
                what: "observation (checkpoint vs environment)",
                expected: self.observation_dim,
                got: observation_dim,
            });
        }
        if self.action_dim != action_dim {
            return Err(Td3Error::Shape {
                what: "action (checkpoint vs environment)",
                expected: self.action_dim,
                got: action_dim,
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> Td3Config {
        Td3Config { hidden: vec![8, 6], batch_size: 4, ..Td3Config::default() }
    }

    #[test]
    fn default_noise_scales_follow_range() {
        let cfg = Td3Config { a_low: -1.0, a_high: 1.0, ..Td3Config::default() };
        assert!((cfg.expl_sigma() - 0.2).abs() < 1e-15);
        assert!((cfg.smooth_sigma() - 0.4).abs() < 1e-15);
        assert!((cfg.noise_clip() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn config_validation_names_field() {
        let cfg = Td3Config { gamma: 1.0, ..Td3Config::default() };
        assert!(matches!(cfg.validate(), Err(Td3Error::InvalidConfig { field: "gamma", .. })));
        let cfg = Td3Config { rho: 1.0, ..Td3Config::default() };
        assert!(matches!(cfg.validate(), Err(Td3Error::InvalidConfig { field: "rho", .. })));
        let cfg = Td3Config { policy_delay: 0, ..Td3Config::default() };
        assert!(matches!(cfg.validate(), Err(Td3Error::InvalidConfig { field: "policy_delay", .. })));
    }

    #[test]
    fn target_arithmetic() {
        assert_eq!(bootstrap_target(2.0, true, 0.99, 100.0, -100.0), 2.0);
        assert_eq!(bootstrap_target(0.0, false, 0.5, 4.0, 6.0), 2.0);
        assert!((smoothed_action(0.5, 0.7, 0.2, 0.0, 1.0) - 0.7).abs() < 1e-15);
        assert_eq!(smoothed_action(0.95, 0.7, 0.2, 0.0, 1.0), 1.0);
    }

    #[test]
    fn targets_start_equal_to_online() {
        let agent = Td3Agent::new(3, 2, small_cfg(), 7).unwrap();
        assert_eq!(agent.actor, agent.actor_target);
        assert_eq!(agent.critic1, agent.critic1_target);
        assert_eq!(agent.critic2, agent.critic2_target);
        assert_ne!(agent.critic1, agent.critic2);
    }

    #[test]
    fn checkpoint_round_trip_and_shape_check() {
        let agent = Td3Agent::new(3, 2, small_cfg(), 7).unwrap();
        let ck = agent.checkpoint();
        assert!(ck.check_dims(3, 2).is_ok());
        assert!(matches!(ck.check_dims(4, 2), Err(Td3Error::Shape { expected: 3, got: 4, .. })));
        let json = serde_json::to_string(&ck).unwrap();
        let back: Checkpoint = serde_json::from_str(&json).unwrap();
        let restored = Td3Agent::from_checkpoint(back, 0).unwrap();
        assert_eq!(restored.actor, agent.actor);
        assert_eq!(restored.critic2, agent.critic2);
    }
}
