use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::geometry::{clipped_voronoi, Point2, VoronoiDiagram, TOLERANCE};

use super::control::{
    area_min_control, constant_area_control, move_to_centroid_control, move_to_target_control,
    nearest_index, pure_distance_control,
};
use super::trajectory::Trajectory;
use super::{Agent, GameConfig, GameError, PolicyKind, Role};

/// Voronoi partition of the alive agents. Agents closer than the geometry
/// tolerance share one site.
#[derive(Debug, Clone)]
pub struct Partition {
    pub diagram: VoronoiDiagram,
    /// Site index of each agent (indexed like `GameState::agents`), `None` when dead.
    pub site_of: Vec<Option<usize>>,
}

impl Partition {
    pub fn build(agents: &[Agent], domain: &crate::geometry::ConvexPolygon) -> Result<Self, GameError> {
        let mut sites: Vec<Point2> = Vec::with_capacity(agents.len());
        let mut site_of = vec![None; agents.len()];
        for (i, a) in agents.iter().enumerate() {
            if !a.alive {
                continue;
            }
            let existing = sites.iter().position(|s| s.distance(a.position) <= TOLERANCE);
            site_of[i] = Some(existing.unwrap_or_else(|| {
                sites.push(a.position);
                sites.len() - 1
            }));
        }
        if sites.is_empty() {
            return Err(GameError::EpisodeOver("agent"));
        }
        let diagram = clipped_voronoi(&sites, domain)?;
        Ok(Self { diagram, site_of })
    }

    /// Area of the cell holding agent `i`.
    pub fn cell_area(&self, i: usize) -> Option<f64> {
        self.site_of[i].map(|s| self.diagram.cell_area(s))
    }
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub agents: Vec<Agent>,
    pub steps: u64,
    pub t: f64,
    pub partition: Partition,
    /// Evaders captured by the step that produced this state.
    pub last_captures: Vec<usize>,
}

impl GameState {
    pub fn new(agents: Vec<Agent>, config: &GameConfig) -> Result<Self, GameError> {
        let partition = Partition::build(&agents, &config.domain)?;
        Ok(Self {
            agents,
            steps: 0,
            t: 0.0,
            partition,
            last_captures: Vec::new(),
        })
    }

    pub fn alive_count(&self, role: Role) -> usize {
        self.agents.iter().filter(|a| a.alive && a.role == role).count()
    }

    fn alive_indices(&self, role: Role) -> Vec<usize> {
        (0..self.agents.len())
            .filter(|&i| self.agents[i].alive && self.agents[i].role == role)
            .collect()
    }

    /// Heading (unit or zero) for agent `i` under its policy.
    pub fn heading(&self, i: usize) -> Point2 {
        let agent = &self.agents[i];
        if !agent.alive {
            return Point2::ZERO;
        }
        let diagram = &self.partition.diagram;
        let site = |k: usize| self.partition.site_of[k];
        match agent.policy {
            PolicyKind::PureDistance | PolicyKind::AreaMin => {
                let evaders = self.alive_indices(Role::Evader);
                let positions: Vec<Point2> =
                    evaders.iter().map(|&k| self.agents[k].position).collect();
                let Some(nearest) = nearest_index(agent.position, &positions) else {
                    return Point2::ZERO;
                };
                if agent.policy == PolicyKind::AreaMin {
                    let (ps, es) = (site(i), site(evaders[nearest]));
                    if let (Some(ps), Some(es)) = (ps, es) {
                        if ps != es && diagram.are_neighbors(ps, es) {
                            return area_min_control(diagram, ps, es).unwrap_or(Point2::ZERO);
                        }
                    }
                }
                pure_distance_control(agent.position, &positions[nearest..=nearest])
                    .unwrap_or(Point2::ZERO)
            }
            PolicyKind::ConstantArea => {
                let Some(es) = site(i) else {
                    return Point2::ZERO;
                };
                let neighbor_pursuer = self
                    .alive_indices(Role::Pursuer)
                    .into_iter()
                    .filter_map(|k| site(k).map(|ps| (k, ps)))
                    .filter(|&(_, ps)| ps != es && diagram.are_neighbors(es, ps))
                    .min_by(|a, b| {
                        let da = self.agents[a.0].position.distance(agent.position);
                        let db = self.agents[b.0].position.distance(agent.position);
                        da.total_cmp(&db)
                    });
                match neighbor_pursuer {
                    Some((_, ps)) => constant_area_control(diagram, es, ps).unwrap_or(Point2::ZERO),
                    None => move_to_centroid_control(diagram, es),
                }
            }
            PolicyKind::MoveToCentroid => site(i)
                .map(|s| move_to_centroid_control(diagram, s))
                .unwrap_or(Point2::ZERO),
            PolicyKind::MoveToTarget => agent
                .target
                .map(|t| move_to_target_control(agent.position, t))
                .unwrap_or(Point2::ZERO),
        }
    }
}

/// Ids of alive evaders strictly inside the capture radius of some alive pursuer.
pub fn capture_check(state: &GameState, capture_radius: f64) -> Vec<usize> {
    let pursuers: Vec<Point2> = state
        .agents
        .iter()
        .filter(|a| a.alive && a.role == Role::Pursuer)
        .map(|a| a.position)
        .collect();
    state
        .agents
        .iter()
        .filter(|a| a.alive && a.role == Role::Evader)
        .filter(|e| pursuers.iter().any(|p| p.distance(e.position) < capture_radius))
        .map(|e| e.id)
        .collect()
}

/// One forward-Euler step of every alive agent, followed by projection onto
/// the arena, capture detection and a fresh partition.
pub fn step(state: &GameState, config: &GameConfig) -> Result<GameState, GameError> {
    if state.alive_count(Role::Pursuer) == 0 {
        return Err(GameError::EpisodeOver("pursuer"));
    }
    if state.alive_count(Role::Evader) == 0 {
        return Err(GameError::EpisodeOver("evader"));
    }
    let reach = config.v_max * config.dt;
    let mut agents = state.agents.clone();
    for (i, agent) in agents.iter_mut().enumerate() {
        if agent.alive {
            let u = state.heading(i);
            agent.position = config.domain.project(agent.position + u * reach);
        }
    }
    let steps = state.steps + 1;
    let mut next = GameState {
        agents,
        steps,
        t: steps as f64 * config.dt,
        partition: state.partition.clone(),
        last_captures: Vec::new(),
    };
    let captured = capture_check(&next, config.capture_radius);
    for &id in &captured {
        next.agents[id].alive = false;
    }
    next.last_captures = captured;
    if next.agents.iter().any(|a| a.alive) {
        next.partition = Partition::build(&next.agents, &config.domain)?;
    }
    Ok(next)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Capture,
    Timeout,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeResult {
    /// Evader id → capture time, `None` if it survived to the time cap.
    pub capture_times: BTreeMap<usize, Option<f64>>,
    pub trajectory: Trajectory,
    pub terminated_by: Termination,
}

impl EpisodeResult {
    /// Time of the last capture when every evader was caught.
    pub fn completion_time(&self) -> Option<f64> {
        self.capture_times
            .values()
            .try_fold(0.0_f64, |acc, t| t.map(|t| acc.max(t)))
    }
}

/// Runs one episode from the configured setup.
pub fn run_episode(config: &GameConfig, seed: u64) -> Result<EpisodeResult, GameError> {
    config.validate()?;
    simulate(config, config.initial_agents(seed))
}

/// Runs one episode from explicit initial agents until every evader is
/// captured or the time cap is reached.
pub fn simulate(config: &GameConfig, agents: Vec<Agent>) -> Result<EpisodeResult, GameError> {
    let mut state = GameState::new(agents, config)?;
    let mut capture_times: BTreeMap<usize, Option<f64>> = state
        .agents
        .iter()
        .filter(|a| a.role == Role::Evader)
        .map(|a| (a.id, None))
        .collect();

    for id in capture_check(&state, config.capture_radius) {
        state.agents[id].alive = false;
        capture_times.insert(id, Some(0.0));
    }
    if state.agents.iter().any(|a| a.alive) {
        state.partition = Partition::build(&state.agents, &config.domain)?;
    }

    let max_steps = (config.t_max / config.dt - 1e-9).ceil() as u64;
    let mut trajectory = Trajectory::new(&state.agents);
    trajectory.record(&state);
    while state.alive_count(Role::Evader) > 0
        && state.alive_count(Role::Pursuer) > 0
        && state.steps < max_steps
    {
        state = step(&state, config)?;
        for &id in &state.last_captures {
            capture_times.insert(id, Some(state.t));
        }
        trajectory.record(&state);
    }

    let terminated_by = if capture_times.values().all(Option::is_some) {
        Termination::Capture
    } else {
        Termination::Timeout
    };
    Ok(EpisodeResult {
        capture_times,
        trajectory,
        terminated_by,
    })
}
