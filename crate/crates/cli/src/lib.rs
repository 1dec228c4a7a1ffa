//! Command-line front end: loads a run configuration, runs one experiment and
//! writes its artifacts.

pub mod commands;
pub mod config;
pub mod svg;

use std::fs;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

pub use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "swarm-pe", version, about = "Voronoi pursuit-evasion games and swarm engagement learning")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one pursuit-evasion episode; writes trajectory.csv and snapshot SVGs.
    Simulate(CommonArgs),
    /// Capture-time statistics per pursuit policy and pursuer count.
    Montecarlo(CommonArgs),
    /// Roll out the grid engagement MDP under a fixed action rule.
    MdpRollout(CommonArgs),
    /// Train a TD3 allocation policy on the grid MDP.
    Train(CommonArgs),
    /// Roll out a trained policy greedily.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Checkpoint written by `train`.
        #[arg(long, value_name = "PATH")]
        checkpoint: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, value_name = "U64")]
    pub seed: Option<u64>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Capture-time table: written by `montecarlo`, read by the grid commands.
    #[arg(long, value_name = "PATH")]
    pub table: Option<PathBuf>,
    /// Overrides the Monte-Carlo run count.
    #[arg(long, value_name = "N")]
    pub runs: Option<usize>,
}

impl CommonArgs {
    /// Config file plus command-line overrides, validated.
    pub fn resolve(&self) -> Result<(RunConfig, PathBuf)> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(runs) = self.runs {
            cfg.montecarlo.n_runs = runs;
        }
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        cfg.validate()?;
        let out = cfg.output_dir.clone();
        fs::create_dir_all(&out)
            .with_context(|| format!("cannot create output directory {}", out.display()))?;
        Ok((cfg, out))
    }
}

/// Runs one subcommand and returns the files it wrote.
pub fn run(cli: &Cli) -> Result<Vec<PathBuf>> {
    match &cli.command {
        Command::Simulate(a) => {
            let (cfg, out) = a.resolve()?;
            commands::simulate(&cfg, &out)
        }
        Command::Montecarlo(a) => {
            let (cfg, out) = a.resolve()?;
            commands::montecarlo(&cfg, &out, a.table.as_deref())
        }
        Command::MdpRollout(a) => {
            let (cfg, out) = a.resolve()?;
            commands::mdp_rollout(&cfg, &out, a.table.as_deref())
        }
        Command::Train(a) => {
            let (cfg, out) = a.resolve()?;
            commands::train(&cfg, &out, a.table.as_deref())
        }
        Command::Evaluate { common, checkpoint } => {
            let (cfg, out) = common.resolve()?;
            commands::evaluate(&cfg, &out, common.table.as_deref(), checkpoint)
        }
    }
}

/// Applies `SWARM_PE_THREADS` to the global worker pool.
pub fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("SWARM_PE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .with_context(|| format!("SWARM_PE_THREADS must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .context("cannot configure worker threads")
}
