use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::geometry::{ConvexPolygon, Point2, TOLERANCE};

use super::{Agent, GameError, PolicyKind, Role};

/// Minimum separation between two spawned agents.
const MIN_SPAWN_SEPARATION: f64 = 1e-6;

/// Deterministic generator for `(seed, stream)`; independent streams per run.
pub fn episode_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Axis-aligned box for uniform initial positions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpawnBox {
    pub x: [f64; 2],
    pub y: [f64; 2],
}

impl SpawnBox {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point2 {
        let x = self.x[0] + (self.x[1] - self.x[0]) * rng.random::<f64>();
        let y = self.y[0] + (self.y[1] - self.y[0]) * rng.random::<f64>();
        Point2::new(x, y)
    }

    fn corners(&self) -> [Point2; 4] {
        [
            Point2::new(self.x[0], self.y[0]),
            Point2::new(self.x[1], self.y[0]),
            Point2::new(self.x[1], self.y[1]),
            Point2::new(self.x[0], self.y[1]),
        ]
    }
}

/// Randomized team layout: counts, spawn boxes and policies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpawnSpec {
    pub n_pursuers: usize,
    pub n_evaders: usize,
    pub pursuer_box: SpawnBox,
    pub evader_box: SpawnBox,
    pub pursuer_policy: PolicyKind,
    pub evader_policy: PolicyKind,
    /// Goal for move-to-target evaders.
    pub evader_target: Point2,
}

impl Default for SpawnSpec {
    fn default() -> Self {
        Self {
            n_pursuers: 1,
            n_evaders: 1,
            pursuer_box: SpawnBox { x: [3.0, 5.0], y: [0.0, 10.0] },
            evader_box: SpawnBox { x: [7.0, 9.0], y: [0.0, 10.0] },
            pursuer_policy: PolicyKind::AreaMin,
            evader_policy: PolicyKind::ConstantArea,
            evader_target: Point2::new(0.0, 5.0),
        }
    }
}

impl SpawnSpec {
    pub fn validate(&self, domain: &ConvexPolygon) -> Result<(), GameError> {
        let invalid = |field: &'static str, reason: &str| GameError::InvalidConfig {
            field,
            reason: reason.to_string(),
        };
        if self.n_pursuers == 0 {
            return Err(invalid("setup.spawn.n_pursuers", "must be at least 1"));
        }
        if self.n_evaders == 0 {
            return Err(invalid("setup.spawn.n_evaders", "must be at least 1"));
        }
        if self.pursuer_policy.role() != Role::Pursuer {
            return Err(invalid("setup.spawn.pursuer_policy", "not a pursuit policy"));
        }
        if self.evader_policy.role() != Role::Evader {
            return Err(invalid("setup.spawn.evader_policy", "not an evasion policy"));
        }
        for (field, b) in [
            ("setup.spawn.pursuer_box", &self.pursuer_box),
            ("setup.spawn.evader_box", &self.evader_box),
        ] {
            if !(b.x[0] <= b.x[1] && b.y[0] <= b.y[1]) {
                return Err(invalid(field, "bounds must be ordered [low, high]"));
            }
            if b.corners().iter().any(|c| !domain.contains(*c, TOLERANCE)) {
                return Err(invalid(field, "box must lie inside the domain"));
            }
        }
        if !domain.contains(self.evader_target, TOLERANCE) {
            return Err(invalid("setup.spawn.evader_target", "target must lie inside the domain"));
        }
        Ok(())
    }

    /// Pursuers first, then evaders; positions closer than 1e-6 to an
    /// earlier agent are redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Agent> {
        let mut agents: Vec<Agent> = Vec::with_capacity(self.n_pursuers + self.n_evaders);
        let plan = std::iter::repeat_n((self.pursuer_box, self.pursuer_policy), self.n_pursuers)
            .chain(std::iter::repeat_n((self.evader_box, self.evader_policy), self.n_evaders));
        for (id, (b, policy)) in plan.enumerate() {
            let position = loop {
                let p = b.sample(rng);
                if agents
                    .iter()
                    .all(|a| a.position.distance(p) >= MIN_SPAWN_SEPARATION)
                {
                    break p;
                }
            };
            let mut agent = Agent::new(id, position, policy);
            if policy == PolicyKind::MoveToTarget {
                agent.target = Some(self.evader_target);
            }
            agents.push(agent);
        }
        agents
    }
}
