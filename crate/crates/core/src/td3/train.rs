use std::io::{self, Write};

use rand_chacha::ChaCha8Rng;

use super::agent::Td3Agent;
use super::buffer::{ReplayBuffer, Transition};
use crate::format::sig9;
use crate::game::episode_rng;
use crate::grid::{GridEnv, GridError};

/// What an environment reports after one step.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvStep {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

/// Step-then-observe contract used by the trainer.
pub trait Environment {
    type Error: std::error::Error + Send + Sync + 'static;

    fn observation_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<EnvStep, Self::Error>;
}

impl Environment for GridEnv {
    type Error = GridError;

    fn observation_dim(&self) -> usize {
        GridEnv::observation_dim(self)
    }

    fn action_dim(&self) -> usize {
        GridEnv::action_dim(self)
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.reset_with(rng)
    }

    fn step(&mut self, action: &[f64]) -> Result<EnvStep, GridError> {
        let s = self.step_action(action)?;
        Ok(EnvStep {
            observation: s.state.observation(),
            reward: s.reward,
            done: s.done,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainBudget {
    pub episodes: usize,
    /// Hard cap on episode length for environments that never signal `done`.
    pub max_episode_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog {
    pub episode: usize,
    pub steps: usize,
    pub ret: f64,
    /// `None` when no update round ran during the episode.
    pub critic_loss_mean: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub episodes: Vec<EpisodeLog>,
}

impl TrainingLog {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.ret).collect()
    }

    /// Mean return of the last `n` episodes (fewer if the log is shorter).
    pub fn tail_mean(&self, n: usize) -> Option<f64> {
        let tail = &self.episodes[self.episodes.len().saturating_sub(n)..];
        (!tail.is_empty()).then(|| tail.iter().map(|e| e.ret).sum::<f64>() / tail.len() as f64)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "episode,steps,return,critic_loss_mean")?;
        for e in &self.episodes {
            let loss = e.critic_loss_mean.map(sig9).unwrap_or_default();
            writeln!(out, "{},{},{},{}", e.episode, e.steps, sig9(e.ret), loss)?;
        }
        Ok(())
    }
}

/// Environment failure; the log holds every completed episode.
#[derive(Debug, thiserror::Error)]
#[error("environment failed during episode {episode}: {source}")]
pub struct TrainError<E: std::error::Error + 'static> {
    pub episode: usize,
    pub log: TrainingLog,
    #[source]
    pub source: E,
}

/// Runs the exploration/storage/update loop. Episode starts draw from stream 1
/// of `seed`; action noise and minibatches draw from the agent's own generator.
pub fn train<E: Environment>(
    env: &mut E,
    agent: &mut Td3Agent,
    budget: TrainBudget,
    seed: u64,
) -> Result<TrainingLog, TrainError<E::Error>> {
    train_with(env, agent, budget, seed, |_, _| {})
}

/// [`train`] with a hook called after every finished episode (checkpointing,
/// progress output).
pub fn train_with<E: Environment>(
    env: &mut E,
    agent: &mut Td3Agent,
    budget: TrainBudget,
    seed: u64,
    mut on_episode: impl FnMut(&EpisodeLog, &Td3Agent),
) -> Result<TrainingLog, TrainError<E::Error>> {
    assert_eq!(env.observation_dim(), agent.observation_dim(), "observation dimension");
    assert_eq!(env.action_dim(), agent.action_dim(), "action dimension");
    let mut env_rng = episode_rng(seed, 1);
    let mut buffer = ReplayBuffer::new(agent.config().buffer_capacity);
    let warmup = agent.config().warmup_steps;
    let mut log = TrainingLog::default();
    let mut total_steps = 0usize;

    for episode in 0..budget.episodes {
        let mut state = env.reset(&mut env_rng);
        let (mut ret, mut steps) = (0.0, 0usize);
        let (mut loss_sum, mut loss_n) = (0.0, 0usize);
        while steps < budget.max_episode_steps {
            let action = if total_steps < warmup {
                agent.random_action()
            } else {
                agent.act_explore(&state).expect("observation matches actor input")
            };
            let out = match env.step(&action) {
                Ok(out) => out,
                Err(source) => return Err(TrainError { episode, log, source }),
            };
            buffer.push(Transition {
                state: std::mem::take(&mut state),
                action,
                reward: out.reward,
                next_state: out.observation.clone(),
                done: out.done,
            });
            total_steps += 1;
            steps += 1;
            ret += out.reward;
            state = out.observation;
            if total_steps >= warmup {
                if let Some(loss) = agent.update(&buffer) {
                    loss_sum += loss;
                    loss_n += 1;
                }
            }
            if out.done {
                break;
            }
        }
        log.episodes.push(EpisodeLog {
            episode,
            steps,
            ret,
            critic_loss_mean: (loss_n > 0).then(|| loss_sum / loss_n as f64),
        });
        on_episode(&log.episodes[episode], agent);
    }
    Ok(log)
}

/// Greedy rollout from a freshly reset environment; returns the return and
/// the number of steps taken.
pub fn greedy_episode<E: Environment>(
    env: &mut E,
    agent: &Td3Agent,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
) -> Result<(f64, usize), E::Error> {
    let mut state = env.reset(rng);
    let (mut ret, mut steps) = (0.0, 0);
    while steps < max_steps {
        let action = agent.act(&state).expect("observation matches actor input");
        let out = env.step(&action)?;
        ret += out.reward;
        steps += 1;
        state = out.observation;
        if out.done {
            break;
        }
    }
    Ok((ret, steps))
}
