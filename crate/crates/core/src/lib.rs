//! Multi-agent pursuit-evasion on bounded Voronoi partitions, Monte-Carlo
//! capture-time statistics, a density-grid engagement MDP and a TD3 learner
//! for engagement allocation.

pub mod geometry;
pub mod format;
pub mod game;
pub mod montecarlo;
pub mod grid;
pub mod td3;
