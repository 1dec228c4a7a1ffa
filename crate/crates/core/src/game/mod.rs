//! The low-level pursuit-evasion game: agents with single-integrator
//! dynamics on a convex arena, Voronoi-based control laws, capture detection
//! and episode orchestration.

mod control;
mod sim;
mod spawn;
mod trajectory;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{ConvexPolygon, GeometryError, Point2};

pub use control::{
    area_gradient, area_min_control, constant_area_control, move_to_centroid_control,
    move_to_target_control, nearest_index, pure_distance_control,
};
pub use sim::{
    capture_check, run_episode, simulate, step, EpisodeResult, GameState, Partition, Termination,
};
pub use spawn::{episode_rng, SpawnBox, SpawnSpec};
pub use trajectory::{Trajectory, TrajectorySample};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Pursuer,
    Evader,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Pursuer => "pursuer",
            Role::Evader => "evader",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    AreaMin,
    PureDistance,
    ConstantArea,
    MoveToCentroid,
    MoveToTarget,
}

impl PolicyKind {
    pub fn role(self) -> Role {
        match self {
            PolicyKind::AreaMin | PolicyKind::PureDistance => Role::Pursuer,
            PolicyKind::ConstantArea | PolicyKind::MoveToCentroid | PolicyKind::MoveToTarget => {
                Role::Evader
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PolicyKind::AreaMin => "area_min",
            PolicyKind::PureDistance => "pure_distance",
            PolicyKind::ConstantArea => "constant_area",
            PolicyKind::MoveToCentroid => "move_to_centroid",
            PolicyKind::MoveToTarget => "move_to_target",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub role: Role,
    pub position: Point2,
    pub policy: PolicyKind,
    pub alive: bool,
    /// Goal point for [`PolicyKind::MoveToTarget`].
    pub target: Option<Point2>,
}

impl Agent {
    pub fn new(id: usize, position: Point2, policy: PolicyKind) -> Self {
        Self {
            id,
            role: policy.role(),
            position,
            policy,
            alive: true,
            target: None,
        }
    }

    pub fn with_target(mut self, target: Point2) -> Self {
        self.target = Some(target);
        self
    }
}

/// Placement of one agent in a hand-written scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub position: Point2,
    pub policy: PolicyKind,
    #[serde(default)]
    pub target: Option<Point2>,
}

/// How the agents of an episode are placed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Setup {
    Agents(Vec<AgentSpec>),
    Spawn(SpawnSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GameConfig {
    pub domain: ConvexPolygon,
    pub v_max: f64,
    pub capture_radius: f64,
    pub dt: f64,
    pub t_max: f64,
    pub setup: Setup,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            domain: ConvexPolygon::square(10.0),
            v_max: 1.0,
            capture_radius: 0.25,
            dt: 0.01,
            t_max: 200.0,
            setup: Setup::Spawn(SpawnSpec::default()),
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<(), GameError> {
        let positive = [
            ("v_max", self.v_max),
            ("capture_radius", self.capture_radius),
            ("dt", self.dt),
            ("t_max", self.t_max),
        ];
        for (field, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(GameError::InvalidConfig {
                    field,
                    reason: format!("must be a positive finite number, got {value}"),
                });
            }
        }
        match &self.setup {
            Setup::Agents(specs) => {
                for (i, s) in specs.iter().enumerate() {
                    if !self.domain.contains(s.position, crate::geometry::TOLERANCE) {
                        return Err(GameError::InvalidConfig {
                            field: "setup.agents",
                            reason: format!("agent {i} starts outside the domain"),
                        });
                    }
                    if s.policy == PolicyKind::MoveToTarget && s.target.is_none() {
                        return Err(GameError::InvalidConfig {
                            field: "setup.agents",
                            reason: format!("agent {i} uses move_to_target without a target"),
                        });
                    }
                }
            }
            Setup::Spawn(spec) => spec.validate(&self.domain)?,
        }
        Ok(())
    }

    /// Agents for an episode; `rng_seed` only matters for spawned setups.
    pub fn initial_agents(&self, rng_seed: u64) -> Vec<Agent> {
        match &self.setup {
            Setup::Agents(specs) => specs
                .iter()
                .enumerate()
                .map(|(id, s)| Agent {
                    target: s.target,
                    ..Agent::new(id, s.position, s.policy)
                })
                .collect(),
            Setup::Spawn(spec) => spec.sample(&mut episode_rng(rng_seed, 0)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ControlError {
    #[error("no targets to pursue")]
    NoTargets,
    #[error("agents are not Voronoi neighbours")]
    NotNeighbors,
    #[error("pursuer and evader coincide")]
    Singular,
    #[error("agent already sits at its goal point")]
    ZeroDirection,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GameError {
    #[error("invalid game config `{field}`: {reason}")]
    InvalidConfig { field: &'static str, reason: String },
    #[error("no alive {0}s remain")]
    EpisodeOver(&'static str),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}
