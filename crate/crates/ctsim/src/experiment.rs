use ctsim_core::PolicyKind;
use rayon::prelude::*;

use crate::stats::{mean, sample_std};
use crate::{run_episode_with, EpisodeResult, HarnessError, Result, ScenarioConfig};

/// Environment variable capping the number of episodes run concurrently.
pub const THREADS_ENV: &str = "CT_SIM_THREADS";

/// Per-seed results and their summary for one (policy, agent count) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub policy: PolicyKind,
    pub agents: usize,
    pub mean_rate: f64,
    /// Sample standard deviation; zero when `n == 1`.
    pub std_rate: f64,
    pub n: usize,
    pub runs: Vec<EpisodeResult>,
}

impl Cell {
    fn from_runs(policy: PolicyKind, agents: usize, runs: Vec<EpisodeResult>) -> Self {
        let rates = rates(&runs);
        Cell {
            policy,
            agents,
            mean_rate: mean(&rates),
            std_rate: sample_std(&rates),
            n: runs.len(),
            runs,
        }
    }

    /// A single-seed cell carries no spread information.
    pub fn is_single_sample(&self) -> bool {
        self.n < 2
    }

    pub fn rates(&self) -> Vec<f64> {
        rates(&self.runs)
    }
}

fn rates(runs: &[EpisodeResult]) -> Vec<f64> {
    runs.iter().map(|r| r.rate).collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExperimentSummary {
    /// Ordered by policy, then agent count, as requested.
    pub cells: Vec<Cell>,
}

impl ExperimentSummary {
    pub fn cell(&self, policy: PolicyKind, agents: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.policy == policy && c.agents == agents)
    }
}

/// Thread cap from [`THREADS_ENV`], if set to a positive integer.
pub fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse().ok().filter(|&n| n > 0)
}

/// Full factorial over policies × agent counts × seeds.
///
/// Episodes are independent and run in parallel; results are gathered in
/// request order, so the summary does not depend on scheduling.
pub fn run_experiment(
    cfg: &ScenarioConfig,
    agent_counts: &[usize],
    seeds: &[u64],
    policies: &[PolicyKind],
) -> Result<ExperimentSummary> {
    if agent_counts.is_empty() || seeds.is_empty() || policies.is_empty() {
        return Err(HarnessError::Config("policies, agent counts and seeds must be non-empty".into()));
    }
    let jobs: Vec<(PolicyKind, usize, u64)> = policies
        .iter()
        .flat_map(|&p| agent_counts.iter().flat_map(move |&a| seeds.iter().map(move |&s| (p, a, s))))
        .collect();
    let run = || -> Result<Vec<EpisodeResult>> {
        jobs.par_iter()
            .map(|&(policy, agents, seed)| run_episode_with(cfg, policy, agents, seed, false))
            .collect()
    };
    let results = match thread_cap() {
        Some(n) => rayon::ThreadPoolBuilder::new().num_threads(n).build()?.install(run)?,
        None => run()?,
    };
    let mut results = results.into_iter();
    let mut cells = Vec::with_capacity(policies.len() * agent_counts.len());
    for &policy in policies {
        for &agents in agent_counts {
            let runs: Vec<EpisodeResult> = results.by_ref().take(seeds.len()).collect();
            cells.push(Cell::from_runs(policy, agents, runs));
        }
    }
    Ok(ExperimentSummary { cells })
}
