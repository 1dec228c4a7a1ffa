//! The single JSON run configuration shared by every subcommand.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use swarm_pe_core::game::{GameConfig, PolicyKind, Role};
use swarm_pe_core::grid::{GridConfig, RewardConfig};
use swarm_pe_core::montecarlo::McConfig;
use swarm_pe_core::td3::Td3Config;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Capture-time table consumed by the grid commands.
    pub table: Option<PathBuf>,
    pub game: GameConfig,
    pub montecarlo: MonteCarloSection,
    pub grid: GridConfig,
    pub reward: RewardConfig,
    pub td3: Td3Config,
    pub training: TrainingSection,
    pub evaluation: EvaluationSection,
    pub rollout: RolloutSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: PathBuf::from("out"),
            table: None,
            game: GameConfig::default(),
            montecarlo: MonteCarloSection::default(),
            grid: GridConfig::default(),
            reward: RewardConfig::default(),
            td3: Td3Config::default(),
            training: TrainingSection::default(),
            evaluation: EvaluationSection::default(),
            rollout: RolloutSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloSection {
    pub n_runs: usize,
    pub area_min_group_evader: PolicyKind,
    /// Pursuit strategies of the capture-time suite.
    pub policies: Vec<PolicyKind>,
    /// Pursuer counts against a single evader.
    pub ratios: Vec<u32>,
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        let base = McConfig::default();
        Self {
            n_runs: base.n_runs,
            area_min_group_evader: base.area_min_group_evader,
            policies: vec![PolicyKind::PureDistance, PolicyKind::AreaMin],
            ratios: vec![1, 3, 5],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainingSection {
    pub episodes: usize,
    pub max_episode_steps: usize,
    /// Also write `checkpoint_<episode>.json` every this many episodes.
    pub checkpoint_every: Option<usize>,
}

impl Default for TrainingSection {
    fn default() -> Self {
        Self { episodes: 1000, max_episode_steps: 100, checkpoint_every: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluationSection {
    pub episodes: usize,
}

impl Default for EvaluationSection {
    fn default() -> Self {
        Self { episodes: 1 }
    }
}

/// Action source for `mdp-rollout`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RolloutPolicy {
    /// Fresh uniform random action vector every step.
    #[default]
    Random,
    /// Every source cell spreads evenly over its neighbourhood.
    Uniform,
    /// All mass stays put.
    Stay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RolloutSection {
    pub policy: RolloutPolicy,
    pub max_steps: usize,
}

impl Default for RolloutSection {
    fn default() -> Self {
        Self { policy: RolloutPolicy::Random, max_steps: 100 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            bail!("config file not found: {}", path.display());
        }
        let text = fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .with_context(|| format!("cannot parse config {}", path.display()))?;
        Ok(cfg)
    }

    pub fn mc_config(&self) -> McConfig {
        McConfig {
            n_runs: self.montecarlo.n_runs,
            base_seed: self.seed,
            game: self.game.clone(),
            area_min_group_evader: self.montecarlo.area_min_group_evader,
        }
    }

    /// Checks every section; the error names the offending field.
    pub fn validate(&self) -> Result<()> {
        self.game.validate().context("invalid config section `game`")?;
        let mc = &self.montecarlo;
        if mc.n_runs == 0 {
            bail!("invalid config field `montecarlo.n_runs`: must be at least 1");
        }
        if mc.area_min_group_evader.role() != Role::Evader {
            bail!("invalid config field `montecarlo.area_min_group_evader`: must be an evasion policy");
        }
        if mc.policies.is_empty() || mc.policies.iter().any(|p| p.role() != Role::Pursuer) {
            bail!("invalid config field `montecarlo.policies`: need one or more pursuit policies");
        }
        if mc.ratios.is_empty() || mc.ratios.contains(&0) {
            bail!("invalid config field `montecarlo.ratios`: need one or more positive pursuer counts");
        }
        self.grid.validate().context("invalid config section `grid`")?;
        self.reward.validate().context("invalid config section `reward`")?;
        self.td3.validate().context("invalid config section `td3`")?;
        if self.training.episodes == 0 {
            bail!("invalid config field `training.episodes`: must be at least 1");
        }
        if self.training.max_episode_steps == 0 {
            bail!("invalid config field `training.max_episode_steps`: must be at least 1");
        }
        if self.training.checkpoint_every == Some(0) {
            bail!("invalid config field `training.checkpoint_every`: must be at least 1");
        }
        if self.evaluation.episodes == 0 {
            bail!("invalid config field `evaluation.episodes`: must be at least 1");
        }
        if self.rollout.max_steps == 0 {
            bail!("invalid config field `rollout.max_steps`: must be at least 1");
        }
        Ok(())
    }
}
