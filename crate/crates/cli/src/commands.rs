//! One function per subcommand; each writes its artifacts into `out`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use swarm_pe_core::format::round_sig9;
use swarm_pe_core::game::{episode_rng, run_episode, Termination};
use swarm_pe_core::grid::{action_pairs, write_rollout_jsonl, GridEnv, RolloutRecord};
use swarm_pe_core::montecarlo::{
    run_mc_episodes, suite_config, write_episode_csv, CaptureStats, CaptureTimeTable, TableEntry,
};
use swarm_pe_core::td3::{train_with, Checkpoint, Td3Agent, TrainBudget};

use crate::config::{RolloutPolicy, RunConfig};
use crate::svg;

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

fn read_existing(path: &Path, what: &str) -> Result<String> {
    if !path.is_file() {
        bail!("{what} file not found: {}", path.display());
    }
    fs::read_to_string(path).with_context(|| format!("cannot read {what} {}", path.display()))
}

pub fn load_table(path: &Path) -> Result<CaptureTimeTable> {
    let text = read_existing(path, "capture-time table")?;
    CaptureTimeTable::from_json(&text)
        .with_context(|| format!("malformed capture-time table {}", path.display()))
}

fn resolve_table(cfg: &RunConfig, flag: Option<&Path>) -> Result<CaptureTimeTable> {
    let path = flag.map(Path::to_path_buf).or_else(|| cfg.table.clone()).ok_or_else(|| {
        anyhow!(
            "no capture-time table: pass --table PATH or set `table` in the config \
             (create one with `swarm-pe montecarlo --table PATH`)"
        )
    })?;
    load_table(&path)
}

fn grid_env(cfg: &RunConfig, table: Option<&Path>) -> Result<GridEnv> {
    let table = resolve_table(cfg, table)?;
    GridEnv::new(cfg.grid.clone(), cfg.reward.clone(), table).context("cannot build grid environment")
}

#[derive(Serialize)]
struct EpisodeSummary {
    seed: u64,
    terminated_by: &'static str,
    steps: usize,
    completion_time: Option<f64>,
    capture_times: Vec<(usize, Option<f64>)>,
}

/// One episode: trajectory CSV, three snapshot plots (start, middle, end) and a summary.
pub fn simulate(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let result = run_episode(&cfg.game, cfg.seed)?;
    let traj = &result.trajectory;
    let mut written = Vec::new();

    let csv = out.join("trajectory.csv");
    let mut w = create(&csv)?;
    traj.write_csv(&mut w)?;
    w.flush()?;
    written.push(csv);

    let last = traj.samples.len() - 1;
    for (i, sample) in [0, last / 2, last].into_iter().enumerate() {
        let path = out.join(format!("snapshot_{i}.svg"));
        write_text(&path, &svg::snapshot(traj, sample, &cfg.game.domain, cfg.game.capture_radius))?;
        written.push(path);
    }

    let summary = EpisodeSummary {
        seed: cfg.seed,
        terminated_by: match result.terminated_by {
            Termination::Capture => "capture",
            Termination::Timeout => "timeout",
        },
        steps: last,
        completion_time: result.completion_time().map(round_sig9),
        capture_times: result
            .capture_times
            .iter()
            .map(|(&id, t)| (id, t.map(round_sig9)))
            .collect(),
    };
    let path = out.join("summary.json");
    write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}

#[derive(Serialize)]
struct CaseStats {
    policy: &'static str,
    ratio: u32,
    n_runs: usize,
    timeout_count: usize,
    mean: Option<f64>,
    std: Option<f64>,
    min: Option<f64>,
    max: Option<f64>,
}

/// Capture-time suite over every (policy, pursuer count) case. With `table`,
/// also writes the lookup table consumed by the grid commands.
pub fn montecarlo(cfg: &RunConfig, out: &Path, table: Option<&Path>) -> Result<Vec<PathBuf>> {
    let base = cfg.mc_config();
    let mut written = Vec::new();
    let mut cases = Vec::new();
    let mut entries = Vec::new();
    for &policy in &cfg.montecarlo.policies {
        for &ratio in &cfg.montecarlo.ratios {
            let case = suite_config(&base, policy, ratio);
            let times = run_mc_episodes(&case)
                .with_context(|| format!("Monte-Carlo case {} × {ratio}", policy.as_str()))?;
            let path = out.join(format!("episodes_{}_{ratio}.csv", policy.as_str()));
            let mut w = create(&path)?;
            write_episode_csv(&times, &mut w)?;
            w.flush()?;
            written.push(path);

            let stats = CaptureStats::from_times(&times);
            let s = stats.summary.as_ref();
            cases.push(CaseStats {
                policy: policy.as_str(),
                ratio,
                n_runs: stats.n_runs,
                timeout_count: stats.timeout_count,
                mean: s.map(|s| round_sig9(s.mean)),
                std: s.map(|s| round_sig9(s.std)),
                min: s.map(|s| round_sig9(s.min)),
                max: s.map(|s| round_sig9(s.max)),
            });
            if let Some(s) = s {
                entries.push(TableEntry {
                    policy,
                    ratio,
                    mean: round_sig9(s.mean),
                    std: round_sig9(s.std),
                    min: round_sig9(s.min),
                    max: round_sig9(s.max),
                    n: s.n,
                });
            } else if table.is_some() {
                bail!("every run of {} with {ratio} pursuers timed out; no table entry", policy.as_str());
            }
        }
    }
    let path = out.join("capture_stats.json");
    write_json(&path, &cases)?;
    written.push(path);

    if let Some(table_path) = table {
        let table = CaptureTimeTable::new(entries)?;
        if let Some(parent) = table_path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        write_json(table_path, &table)?;
        written.push(table_path.to_path_buf());
    }
    Ok(written)
}

/// One episode of the grid MDP driven by `policy`, starting with the reset state.
pub struct Rollout {
    pub records: Vec<RolloutRecord>,
    pub ret: f64,
    /// Largest defender mass among engaged cells, one entry per step with an engagement.
    pub concentration: Vec<f64>,
}

pub fn rollout(
    env: &mut GridEnv,
    rng: &mut ChaCha8Rng,
    max_steps: usize,
    mut policy: impl FnMut(&[f64], &mut ChaCha8Rng) -> Result<Vec<f64>>,
) -> Result<Rollout> {
    let obs = env.reset_with(rng);
    let mut records = vec![RolloutRecord::new(&env.state, 0.0, false)];
    let (mut ret, mut concentration) = (0.0, Vec::new());
    let mut obs = obs;
    for _ in 0..max_steps {
        let action = policy(&obs, rng)?;
        let step = env.step_action(&action)?;
        ret += step.reward;
        concentration.extend(step.engagements.max_engaged_defender());
        records.push(RolloutRecord::new(&step.state, step.reward, step.done));
        obs = step.state.observation();
        if step.done {
            break;
        }
    }
    Ok(Rollout { records, ret, concentration })
}

fn write_rollouts(out: &Path, rollouts: &[Rollout], n: usize, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = out.join("rollout.jsonl");
    let mut w = create(&path)?;
    for r in rollouts {
        write_rollout_jsonl(&r.records, &mut w)?;
    }
    w.flush()?;
    written.push(path);
    let path = out.join("density.svg");
    write_text(&path, &svg::density_strip(&rollouts[0].records, n))?;
    written.push(path);
    Ok(())
}

/// Grid rollout under a fixed, non-learned action rule.
pub fn mdp_rollout(cfg: &RunConfig, out: &Path, table: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut env = grid_env(cfg, table)?;
    let pairs = action_pairs(cfg.grid.n);
    let fixed: Vec<f64> = match cfg.rollout.policy {
        RolloutPolicy::Stay => pairs.iter().map(|&(s, d)| if s == d { 1.0 } else { 0.0 }).collect(),
        _ => vec![1.0; pairs.len()],
    };
    let kind = cfg.rollout.policy;
    let mut rng = episode_rng(cfg.seed, 3);
    let r = rollout(&mut env, &mut rng, cfg.rollout.max_steps, |_, rng| {
        Ok(match kind {
            RolloutPolicy::Random => (0..fixed.len()).map(|_| rng.random::<f64>()).collect(),
            _ => fixed.clone(),
        })
    })?;
    let mut written = Vec::new();
    write_rollouts(out, std::slice::from_ref(&r), cfg.grid.n, &mut written)?;
    Ok(written)
}

/// Trains a TD3 agent on the grid MDP: training log plus final (and optional
/// periodic) checkpoints.
pub fn train(cfg: &RunConfig, out: &Path, table: Option<&Path>) -> Result<Vec<PathBuf>> {
    let mut env = grid_env(cfg, table)?;
    let mut agent = Td3Agent::new(env.observation_dim(), env.action_dim(), cfg.td3.clone(), cfg.seed)?;
    let budget = TrainBudget {
        episodes: cfg.training.episodes,
        max_episode_steps: cfg.training.max_episode_steps,
    };
    let mut written = Vec::new();
    let mut hook_error = None;
    let every = cfg.training.checkpoint_every;
    let result = train_with(&mut env, &mut agent, budget, cfg.seed, |ep, agent| {
        if let Some(k) = every {
            if (ep.episode + 1) % k == 0 && hook_error.is_none() {
                let path = out.join(format!("checkpoint_{}.json", ep.episode + 1));
                match write_json(&path, &agent.checkpoint()) {
                    Ok(()) => written.push(path),
                    Err(e) => hook_error = Some(e),
                }
            }
        }
    });
    let log_path = out.join("training_log.csv");
    let log = match &result {
        Ok(log) => log,
        Err(e) => &e.log,
    };
    let mut w = create(&log_path)?;
    log.write_csv(&mut w)?;
    w.flush()?;
    written.push(log_path);
    if let Some(e) = hook_error {
        return Err(e);
    }
    result.map_err(|e| anyhow!(e).context("training aborted; partial log written"))?;

    let path = out.join("checkpoint.json");
    write_json(&path, &agent.checkpoint())?;
    written.push(path);
    Ok(written)
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let text = read_existing(path, "checkpoint")?;
    serde_json::from_str(&text).with_context(|| format!("malformed checkpoint {}", path.display()))
}

#[derive(Serialize)]
struct EvaluationSummary {
    episodes: usize,
    returns: Vec<f64>,
    mean_return: f64,
    /// Mean over engaged steps of the largest engaged defender cell mass.
    mean_concentration: Option<f64>,
}

/// Greedy rollouts of a trained policy.
pub fn evaluate(
    cfg: &RunConfig,
    out: &Path,
    table: Option<&Path>,
    checkpoint: &Path,
) -> Result<Vec<PathBuf>> {
    let ck = load_checkpoint(checkpoint)?;
    let mut env = grid_env(cfg, table)?;
    ck.check_dims(env.observation_dim(), env.action_dim()).with_context(|| {
        format!(
            "checkpoint {} does not fit the configured {n}×{n} grid",
            checkpoint.display(),
            n = cfg.grid.n
        )
    })?;
    let agent = Td3Agent::from_checkpoint(ck, cfg.seed)?;
    let mut rng = episode_rng(cfg.seed, 2);
    let mut rollouts = Vec::with_capacity(cfg.evaluation.episodes);
    for _ in 0..cfg.evaluation.episodes {
        rollouts.push(rollout(&mut env, &mut rng, cfg.training.max_episode_steps, |obs, _| {
            Ok(agent.act(obs)?)
        })?);
    }
    let mut written = Vec::new();
    write_rollouts(out, &rollouts, cfg.grid.n, &mut written)?;

    let returns: Vec<f64> = rollouts.iter().map(|r| r.ret).collect();
    let conc: Vec<f64> = rollouts.iter().flat_map(|r| r.concentration.iter().copied()).collect();
    let summary = EvaluationSummary {
        episodes: returns.len(),
        mean_return: round_sig9(returns.iter().sum::<f64>() / returns.len() as f64),
        returns: returns.iter().map(|&r| round_sig9(r)).collect(),
        mean_concentration: (!conc.is_empty())
            .then(|| round_sig9(conc.iter().sum::<f64>() / conc.len() as f64)),
    };
    let path = out.join("evaluation.json");
    write_json(&path, &summary)?;
    written.push(path);
    Ok(written)
}
