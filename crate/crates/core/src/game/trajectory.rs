use std::io::{self, Write};

use crate::format::sig9;
use crate::geometry::Point2;

use super::sim::GameState;
use super::{Agent, Role};

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectorySample {
    pub t: f64,
    pub positions: Vec<Point2>,
    pub alive: Vec<bool>,
}

/// Per-step positions of every agent.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub roles: Vec<Role>,
    pub samples: Vec<TrajectorySample>,
}

impl Trajectory {
    pub fn new(agents: &[Agent]) -> Self {
        Self {
            roles: agents.iter().map(|a| a.role).collect(),
            samples: Vec::new(),
        }
    }

    pub fn record(&mut self, state: &GameState) {
        self.samples.push(TrajectorySample {
            t: state.t,
            positions: state.agents.iter().map(|a| a.position).collect(),
            alive: state.agents.iter().map(|a| a.alive).collect(),
        });
    }

    /// Path of one agent up to and including sample `upto`.
    pub fn path(&self, agent: usize, upto: usize) -> Vec<Point2> {
        self.samples[..=upto.min(self.samples.len().saturating_sub(1))]
            .iter()
            .map(|s| s.positions[agent])
            .collect()
    }

    /// Columns `t,agent_id,role,x,y,alive`, one row per agent per step.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "t,agent_id,role,x,y,alive")?;
        for s in &self.samples {
            for (id, p) in s.positions.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{},{},{},{}",
                    sig9(s.t),
                    id,
                    self.roles[id].as_str(),
                    sig9(p.x),
                    sig9(p.y),
                    u8::from(s.alive[id])
                )?;
            }
        }
        Ok(())
    }
}
