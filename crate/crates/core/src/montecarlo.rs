//! Batch capture-time experiments and the capture-time lookup table.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::sig9;
use crate::game::{episode_rng, simulate, Agent, GameConfig, GameError, PolicyKind, Setup};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct McConfig {
    pub n_runs: usize,
    pub base_seed: u64,
    pub game: GameConfig,
    /// Evader policy for area-minimization cells with more than one pursuer.
    pub area_min_group_evader: PolicyKind,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            n_runs: 50,
            base_seed: 0,
            game: GameConfig::default(),
            area_min_group_evader: PolicyKind::ConstantArea,
        }
    }
}

impl McConfig {
    pub fn validate(&self) -> Result<(), McError> {
        if self.n_runs == 0 {
            return Err(McError::InvalidConfig("n_runs must be at least 1".into()));
        }
        if self.area_min_group_evader.role() != crate::game::Role::Evader {
            return Err(McError::InvalidConfig(
                "area_min_group_evader must be an evasion policy".into(),
            ));
        }
        self.game.validate()?;
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum McError {
    #[error("invalid Monte-Carlo config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error("every run of {policy} with ratio {ratio} timed out")]
    AllTimedOut { policy: &'static str, ratio: u32 },
    #[error("capture table has no entries for {0}")]
    MissingPolicy(&'static str),
    #[error("capture table: {0}")]
    Table(String),
}

/// Initial agents of run `run_index`, drawn from an independent stream of the base seed.
pub fn sample_initial(cfg: &McConfig, run_index: u64) -> Vec<Agent> {
    match &cfg.game.setup {
        Setup::Spawn(spec) => spec.sample(&mut episode_rng(cfg.base_seed, run_index)),
        Setup::Agents(_) => cfg.game.initial_agents(cfg.base_seed),
    }
}

/// Mean, spread and range of the captured runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSummary {
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (zero for a single run).
    pub std: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaptureStats {
    pub n_runs: usize,
    pub timeout_count: usize,
    /// `None` when every run timed out.
    pub summary: Option<TimeSummary>,
}

impl CaptureStats {
    /// Aggregates per-run times in the given order (`None` = timeout).
    pub fn from_times(times: &[Option<f64>]) -> Self {
        let captured: Vec<f64> = times.iter().flatten().copied().collect();
        let summary = (!captured.is_empty()).then(|| {
            let n = captured.len();
            let mean = captured.iter().sum::<f64>() / n as f64;
            let var = if n > 1 {
                captured.iter().map(|t| (t - mean).powi(2)).sum::<f64>() / (n - 1) as f64
            } else {
                0.0
            };
            TimeSummary {
                n,
                mean,
                std: var.sqrt(),
                min: captured.iter().copied().fold(f64::INFINITY, f64::min),
                max: captured.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            }
        });
        Self {
            n_runs: times.len(),
            timeout_count: times.len() - captured.len(),
            summary,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.summary.is_none()
    }
}

/// Completion time of every run, in run order (`None` = timeout).
pub fn run_mc_episodes(cfg: &McConfig) -> Result<Vec<Option<f64>>, McError> {
    cfg.validate()?;
    (0..cfg.n_runs as u64)
        .into_par_iter()
        .map(|run| {
            let result = simulate(&cfg.game, sample_initial(cfg, run))?;
            Ok(result.completion_time())
        })
        .collect()
}

pub fn run_mc(cfg: &McConfig) -> Result<CaptureStats, McError> {
    Ok(CaptureStats::from_times(&run_mc_episodes(cfg)?))
}

/// Per-episode capture times as CSV (`run,capture_time,timed_out`).
pub fn write_episode_csv<W: Write>(times: &[Option<f64>], mut out: W) -> io::Result<()> {
    writeln!(out, "run,capture_time,timed_out")?;
    for (run, t) in times.iter().enumerate() {
        match t {
            Some(t) => writeln!(out, "{run},{},0", sig9(*t))?,
            None => writeln!(out, "{run},,1")?,
        }
    }
    Ok(())
}

/// Evader behaviour paired with each pursuit suite: pure-distance games use a
/// target-seeking evader; area-minimization games use constant-area evasion
/// against a single pursuer and `group_evader` against several.
pub fn suite_evader_policy(
    pursuit: PolicyKind,
    n_pursuers: u32,
    group_evader: PolicyKind,
) -> PolicyKind {
    match (pursuit, n_pursuers) {
        (PolicyKind::PureDistance, _) => PolicyKind::MoveToTarget,
        (_, 1) => PolicyKind::ConstantArea,
        _ => group_evader,
    }
}

/// The Monte-Carlo config of one table cell: `ratio` pursuers against one evader.
pub fn suite_config(base: &McConfig, pursuit: PolicyKind, ratio: u32) -> McConfig {
    let mut cfg = base.clone();
    let mut spec = match &base.game.setup {
        Setup::Spawn(spec) => spec.clone(),
        Setup::Agents(_) => Default::default(),
    };
    spec.n_pursuers = ratio as usize;
    spec.n_evaders = 1;
    spec.pursuer_policy = pursuit;
    spec.evader_policy = suite_evader_policy(pursuit, ratio, base.area_min_group_evader);
    cfg.game.setup = Setup::Spawn(spec);
    cfg
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableEntry {
    pub policy: PolicyKind,
    pub ratio: u32,
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

/// Mean capture time per (pursuers-per-evader ratio, pursuit policy).
/// Serialized as a plain JSON array of entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CaptureTimeTable {
    pub entries: Vec<TableEntry>,
}

impl CaptureTimeTable {
    pub fn new(entries: Vec<TableEntry>) -> Result<Self, McError> {
        if entries.is_empty() {
            return Err(McError::Table("no entries".into()));
        }
        for e in &entries {
            if !(e.mean > 0.0 && e.mean.is_finite()) {
                return Err(McError::Table(format!(
                    "{} ratio {} has non-positive mean {}",
                    e.policy.as_str(),
                    e.ratio,
                    e.mean
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Table from bare means, e.g. hand-entered reference values.
    pub fn from_means(policy: PolicyKind, means: &[(u32, f64)]) -> Result<Self, McError> {
        Self::new(
            means
                .iter()
                .map(|&(ratio, mean)| TableEntry {
                    policy,
                    ratio,
                    mean,
                    std: 0.0,
                    min: mean,
                    max: mean,
                    n: 1,
                })
                .collect(),
        )
    }

    pub fn from_json(text: &str) -> Result<Self, McError> {
        let table: CaptureTimeTable =
            serde_json::from_str(text).map_err(|e| McError::Table(e.to_string()))?;
        Self::new(table.entries)
    }

    /// Normalization constant: the largest mean in the table.
    pub fn t_norm(&self) -> f64 {
        self.entries.iter().map(|e| e.mean).fold(0.0, f64::max)
    }

    /// Smallest mean in the table.
    pub fn t_min(&self) -> f64 {
        self.entries.iter().map(|e| e.mean).fold(f64::INFINITY, f64::min)
    }

    /// Knots `(ratio, mean)` of one policy, sorted by ratio.
    fn knots(&self, policy: PolicyKind) -> Vec<(f64, f64)> {
        let mut k: Vec<(f64, f64)> = self
            .entries
            .iter()
            .filter(|e| e.policy == policy)
            .map(|e| (e.ratio as f64, e.mean))
            .collect();
        k.sort_by(|a, b| a.0.total_cmp(&b.0));
        k
    }

    /// Piecewise-linear mean capture time at `ratio`, clamped to the end knots.
    pub fn mean_at(&self, policy: PolicyKind, ratio: f64) -> Result<f64, McError> {
        let knots = self.knots(policy);
        let (first, last) = match (knots.first(), knots.last()) {
            (Some(f), Some(l)) => (*f, *l),
            _ => return Err(McError::MissingPolicy(policy.as_str())),
        };
        if ratio.is_nan() || ratio <= first.0 {
            return Ok(first.1);
        }
        if ratio >= last.0 {
            return Ok(last.1);
        }
        let (lo, hi) = knots
            .windows(2)
            .map(|w| (w[0], w[1]))
            .find(|(_, hi)| ratio <= hi.0)
            .unwrap_or((last, last));
        if hi.0 == lo.0 {
            return Ok(hi.1);
        }
        let w = (ratio - lo.0) / (hi.0 - lo.0);
        Ok(lo.1 + w * (hi.1 - lo.1))
    }

    /// `mean / t_norm`, in (0, 1].
    pub fn normalized_time(&self, policy: PolicyKind, ratio: f64) -> Result<f64, McError> {
        Ok(self.mean_at(policy, ratio)? / self.t_norm())
    }
}

/// Runs one Monte-Carlo batch per (ratio, policy) cell.
pub fn build_capture_table(
    policies: &[PolicyKind],
    ratios: &[u32],
    base: &McConfig,
) -> Result<CaptureTimeTable, McError> {
    let mut entries = Vec::with_capacity(policies.len() * ratios.len());
    for &policy in policies {
        for &ratio in ratios {
            let stats = run_mc(&suite_config(base, policy, ratio))?;
            let s = stats.summary.ok_or(McError::AllTimedOut {
                policy: policy.as_str(),
                ratio,
            })?;
            entries.push(TableEntry {
                policy,
                ratio,
                mean: s.mean,
                std: s.std,
                min: s.min,
                max: s.max,
                n: s.n,
            });
        }
    }
    CaptureTimeTable::new(entries)
}
