//! Experiment harness for the continuous transportation simulator.
//!
//! Loads scenario configurations, runs single episodes or factorial
//! experiments over policies, agent counts and seeds, summarises per-seed
//! delivery rates, compares samples with Welch's t-test and writes CSVs.

pub mod config;
pub mod episode;
pub mod experiment;
pub mod output;
pub mod scenario;
pub mod stats;

use std::path::PathBuf;

pub use config::{AgentConfig, ScenarioConfig};
pub use episode::{run_episode, run_episode_with, EpisodeResult};
pub use experiment::{run_experiment, Cell, ExperimentSummary};
pub use scenario::generate_scenario;
pub use stats::{welch_t_test, StatsError, WelchTest};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("simulation failed (policy {policy}, {agents} agents, seed {seed}): {source}")]
    Episode {
        policy: ctsim_core::PolicyKind,
        agents: usize,
        seed: u64,
        #[source]
        source: ctsim_core::WorldError,
    },
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
