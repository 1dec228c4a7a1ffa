//! High-level engagement MDP over an `n × n` density grid.
//!
//! Defender density moves by a column-stochastic transition matrix built
//! from the action vector; intruder density drifts one column left per step.
//! Co-occupied cells fight a low-level game whose outcome comes from the
//! capture-time table.

mod engagement;
mod transition;

use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::format::round_sig9;
use crate::game::PolicyKind;
use crate::montecarlo::{CaptureTimeTable, McError};

pub use engagement::{
    resolve_cell, resolve_engagements, CellEngagement, EngagementOutcome, ScoreOrientation,
    UnitScale, ENGAGEMENT_THRESHOLD,
};
pub use transition::{action_pairs, build_transition, n_actions, TransitionMatrix, OFFSETS};

/// Intruder mass below this total ends the episode.
pub const CLEARED_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("grid side must be at least 2, got {0}")]
    GridTooSmall(usize),
    #[error("action vector has length {got}, expected {expected}")]
    ActionShape { expected: usize, got: usize },
    #[error("action entry {index} is {value}; entries must be non-negative and finite")]
    NegativeAction { index: usize, value: f64 },
    #[error("state vectors must have {expected} entries, got {got}")]
    StateShape { expected: usize, got: usize },
    #[error("invalid grid config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error(transparent)]
    Table(#[from] McError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntruderStart {
    /// A uniformly random cell of the rightmost column.
    #[default]
    RandomRightColumn,
    Cell { row: usize, col: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub k_max: usize,
    /// `(row, col)` of the defender base; left-centre when absent.
    pub defender_start: Option<[usize; 2]>,
    pub intruder_start: IntruderStart,
    pub units: UnitScale,
    /// End the episode once intruder mass has sat in column 0 for two consecutive steps.
    pub breach_terminates: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 3,
            k_max: 8,
            defender_start: None,
            intruder_start: IntruderStart::RandomRightColumn,
            units: UnitScale { defender: 100.0, intruder: 50.0 },
            breach_terminates: false,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), GridError> {
        n_actions(self.n)?;
        let invalid = |field, reason: &str| GridError::InvalidConfig { field, reason: reason.into() };
        if self.k_max == 0 {
            return Err(invalid("grid.k_max", "must be at least 1"));
        }
        let [r, c] = self.defender_cell();
        if r >= self.n || c >= self.n {
            return Err(invalid("grid.defender_start", "cell is off the grid"));
        }
        if let IntruderStart::Cell { row, col } = self.intruder_start {
            if row >= self.n || col >= self.n {
                return Err(invalid("grid.intruder_start", "cell is off the grid"));
            }
        }
        if !(self.units.defender > 0.0 && self.units.intruder > 0.0) {
            return Err(invalid("grid.units", "unit scales must be positive"));
        }
        Ok(())
    }

    pub fn cells(&self) -> usize {
        self.n * self.n
    }

    pub fn defender_cell(&self) -> [usize; 2] {
        self.defender_start.unwrap_or([self.n / 2, 0])
    }

    /// Initial state; `rng` picks the intruder row for random starts.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> GridState {
        let mut defender = vec![0.0; self.cells()];
        let [dr, dc] = self.defender_cell();
        defender[dr * self.n + dc] = 1.0;
        let (ir, ic) = match self.intruder_start {
            IntruderStart::RandomRightColumn => (rng.random_range(0..self.n), self.n - 1),
            IntruderStart::Cell { row, col } => (row, col),
        };
        let mut intruder = vec![0.0; self.cells()];
        intruder[ir * self.n + ic] = 1.0;
        GridState {
            defender,
            intruder,
            k: 0,
            k_max: self.k_max,
            breach_steps: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RewardConfig {
    pub c_distribution: f64,
    pub c_capture: f64,
    /// Table rows used for the capture score.
    pub policy: PolicyKind,
    pub orientation: ScoreOrientation,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self {
            c_distribution: 1.0,
            c_capture: 0.0,
            policy: PolicyKind::PureDistance,
            orientation: ScoreOrientation::default(),
        }
    }
}

impl RewardConfig {
    pub fn validate(&self) -> Result<(), GridError> {
        for (field, w) in [
            ("reward.c_distribution", self.c_distribution),
            ("reward.c_capture", self.c_capture),
        ] {
            if !(w >= 0.0 && w.is_finite()) {
                return Err(GridError::InvalidConfig {
                    field,
                    reason: format!("weight must be non-negative, got {w}"),
                });
            }
        }
        Ok(())
    }
}

/// Defender and intruder densities, row-major over the grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridState {
    pub defender: Vec<f64>,
    pub intruder: Vec<f64>,
    pub k: usize,
    pub k_max: usize,
    /// Consecutive steps with intruder mass in column 0.
    pub breach_steps: usize,
}

impl GridState {
    pub fn defender_total(&self) -> f64 {
        self.defender.iter().sum()
    }

    pub fn intruder_total(&self) -> f64 {
        self.intruder.iter().sum()
    }

    /// Defender densities followed by intruder densities.
    pub fn observation(&self) -> Vec<f64> {
        self.defender.iter().chain(&self.intruder).copied().collect()
    }
}

/// Moves every column one step left; column-0 mass stays put.
pub fn shift_left(density: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            out[r * n + c.saturating_sub(1)] += density[r * n + c];
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridStep {
    pub state: GridState,
    pub reward: f64,
    pub done: bool,
    pub engagements: EngagementOutcome,
}

/// One MDP transition. The reward is
/// `−c_distribution · Σ intruder' + c_capture · Σ_cells destroyed · score`.
pub fn env_step(
    state: &GridState,
    action: &[f64],
    config: &GridConfig,
    reward: &RewardConfig,
    table: &CaptureTimeTable,
) -> Result<GridStep, GridError> {
    let n = config.n;
    let cells = n * n;
    for v in [&state.defender, &state.intruder] {
        if v.len() != cells {
            return Err(GridError::StateShape { expected: cells, got: v.len() });
        }
    }
    let t = build_transition(action, n)?;
    let defender = t.apply(&state.defender);
    let mut intruder = shift_left(&state.intruder, n);
    let engagements = resolve_engagements(
        &defender,
        &intruder,
        config.units,
        table,
        reward.policy,
        reward.orientation,
    )?;
    for (mass, cell) in intruder.iter_mut().zip(&engagements.cells) {
        *mass = (*mass - cell.destroyed).max(0.0);
    }

    let remaining: f64 = intruder.iter().sum();
    let r = -reward.c_distribution * remaining + reward.c_capture * engagements.capture_credit();

    let breached = (0..n).any(|row| intruder[row * n] > ENGAGEMENT_THRESHOLD);
    let breach_steps = if breached { state.breach_steps + 1 } else { 0 };
    let k = state.k + 1;
    let done = k >= state.k_max
        || remaining <= CLEARED_THRESHOLD
        || (config.breach_terminates && breach_steps >= 2);
    Ok(GridStep {
        state: GridState {
            defender,
            intruder,
            k,
            k_max: state.k_max,
            breach_steps,
        },
        reward: r,
        done,
        engagements,
    })
}

/// A stateful environment instance for rollouts and training.
#[derive(Debug, Clone)]
pub struct GridEnv {
    pub config: GridConfig,
    pub reward: RewardConfig,
    pub table: CaptureTimeTable,
    pub state: GridState,
}

impl GridEnv {
    pub fn new(
        config: GridConfig,
        reward: RewardConfig,
        table: CaptureTimeTable,
    ) -> Result<Self, GridError> {
        config.validate()?;
        reward.validate()?;
        // Fail early if the table cannot serve the configured policy.
        table.mean_at(reward.policy, 1.0)?;
        let state = config.initial_state(&mut crate::game::episode_rng(0, 0));
        Ok(Self { config, reward, table, state })
    }

    pub fn action_dim(&self) -> usize {
        action_pairs(self.config.n).len()
    }

    pub fn observation_dim(&self) -> usize {
        2 * self.config.cells()
    }

    pub fn reset_with<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Vec<f64> {
        self.state = self.config.initial_state(rng);
        self.state.observation()
    }

    pub fn step_action(&mut self, action: &[f64]) -> Result<GridStep, GridError> {
        let step = env_step(&self.state, action, &self.config, &self.reward, &self.table)?;
        self.state = step.state.clone();
        Ok(step)
    }
}

/// One line of a rollout log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutRecord {
    pub k: usize,
    pub defender: Vec<f64>,
    pub intruder: Vec<f64>,
    pub reward: f64,
    pub done: bool,
}

impl RolloutRecord {
    pub fn new(state: &GridState, reward: f64, done: bool) -> Self {
        Self {
            k: state.k,
            defender: state.defender.clone(),
            intruder: state.intruder.clone(),
            reward,
            done,
        }
    }
}

/// JSON lines with every number rounded to nine significant digits.
pub fn write_rollout_jsonl<W: Write>(records: &[RolloutRecord], mut out: W) -> io::Result<()> {
    for rec in records {
        let rounded = RolloutRecord {
            k: rec.k,
            defender: rec.defender.iter().map(|&x| round_sig9(x)).collect(),
            intruder: rec.intruder.iter().map(|&x| round_sig9(x)).collect(),
            reward: round_sig9(rec.reward),
            done: rec.done,
        };
        serde_json::to_writer(&mut out, &rounded)?;
        writeln!(out)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn table() -> CaptureTimeTable {
        CaptureTimeTable::from_means(PolicyKind::PureDistance, &[(1, 3.373), (3, 2.856), (5, 2.0)])
            .unwrap()
    }

    fn fixed_config() -> GridConfig {
        GridConfig {
            intruder_start: IntruderStart::Cell { row: 0, col: 2 },
            ..GridConfig::default()
        }
    }

    fn stay_action(n: usize) -> Vec<f64> {
        action_pairs(n).iter().map(|&(s, d)| f64::from(u8::from(s == d))).collect()
    }

    #[test]
    fn no_intruders_no_reward() {
        let cfg = fixed_config();
        let mut s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        s.intruder = vec![0.0; 9];
        let reward = RewardConfig { c_capture: 1.5, ..RewardConfig::default() };
        let step = env_step(&s, &stay_action(3), &cfg, &reward, &table()).unwrap();
        assert_eq!(step.reward, 0.0);
        assert!(step.done);
    }

    #[test]
    fn distribution_only_reward() {
        let cfg = fixed_config();
        let mut s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        s.intruder = vec![0.0; 9];
        s.intruder[2] = 0.4; // top-right, far from the defender base
        let reward = RewardConfig { c_distribution: 2.0, c_capture: 0.0, ..RewardConfig::default() };
        let step = env_step(&s, &stay_action(3), &cfg, &reward, &table()).unwrap();
        assert_eq!(step.state.intruder_total(), 0.4);
        assert_eq!(step.reward, -0.4 * 2.0);
        assert!(!step.done);
    }

    #[test]
    fn intruders_drift_left_and_pile_up() {
        let n = 3;
        let mut d = vec![0.0; 9];
        d[2] = 0.5;
        d[3] = 0.25;
        let once = shift_left(&d, n);
        assert_eq!(once[1], 0.5);
        assert_eq!(once[3], 0.25);
        let twice = shift_left(&once, n);
        assert_eq!(twice[0], 0.5);
    }

    #[test]
    fn interception_clears_intruders() {
        // Send all base mass (cell 3) to cell 4, where the intruder arrives.
        let cfg = GridConfig {
            intruder_start: IntruderStart::Cell { row: 1, col: 2 },
            ..GridConfig::default()
        };
        let s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        let action: Vec<f64> = action_pairs(3)
            .iter()
            .map(|&(src, dst)| if src == 3 { f64::from(u8::from(dst == 4)) } else { f64::from(u8::from(src == dst)) })
            .collect();
        let reward = RewardConfig { c_capture: 1.5, ..RewardConfig::default() };
        let step = env_step(&s, &action, &cfg, &reward, &table()).unwrap();
        assert!(step.done);
        assert_eq!(step.state.intruder_total(), 0.0);
        assert_eq!(step.engagements.max_engaged_defender(), Some(1.0));
        // ratio 2 under 100:50 units: fast-capture score at ratio 2.
        let mean2 = 0.5 * (3.373 + 2.856);
        let expected = 1.5 * (1.0 - mean2 / 3.373 + 2.0 / 3.373);
        assert!((step.reward - expected).abs() < 1e-12);
    }

    #[test]
    fn episode_ends_at_k_max() {
        let cfg = GridConfig { k_max: 2, ..fixed_config() };
        let s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        let reward = RewardConfig::default();
        let a = stay_action(3);
        let s1 = env_step(&s, &a, &cfg, &reward, &table()).unwrap();
        assert!(!s1.done);
        let s2 = env_step(&s1.state, &a, &cfg, &reward, &table()).unwrap();
        assert!(s2.done);
    }

    #[test]
    fn breach_flag_ends_episode() {
        let cfg = GridConfig { breach_terminates: true, k_max: 20, ..fixed_config() };
        let mut s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        let reward = RewardConfig::default();
        let a = stay_action(3);
        let mut steps = 0;
        loop {
            let st = env_step(&s, &a, &cfg, &reward, &table()).unwrap();
            steps += 1;
            s = st.state;
            if st.done {
                break;
            }
        }
        // column 1 after step 1, column 0 after steps 2 and 3
        assert_eq!(steps, 3);
    }

    #[test]
    fn wrong_action_length_is_rejected() {
        let cfg = fixed_config();
        let s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        let err = env_step(&s, &[0.5; 10], &cfg, &RewardConfig::default(), &table()).unwrap_err();
        assert!(matches!(err, GridError::ActionShape { expected: 49, got: 10 }));
    }

    #[test]
    fn rollout_jsonl_shape() {
        let cfg = fixed_config();
        let s = cfg.initial_state(&mut ChaCha8Rng::seed_from_u64(0));
        let mut buf = Vec::new();
        write_rollout_jsonl(&[RolloutRecord::new(&s, -1.0 / 3.0, false)], &mut buf).unwrap();
        let line = String::from_utf8(buf).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap();
        assert_eq!(v["k"], 0);
        assert_eq!(v["reward"], -0.333333333);
        assert_eq!(v["defender"].as_array().unwrap().len(), 9);
        assert_eq!(v["done"], false);
    }
}
