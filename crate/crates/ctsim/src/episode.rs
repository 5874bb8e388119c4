use ctsim_core::policy::PolicyController;
use ctsim_core::{rng_stream, AgentState, PolicyKind, WorldState};
use serde::{Deserialize, Serialize};

use crate::{generate_scenario, HarnessError, Result, ScenarioConfig};

/// Random streams derived from an episode seed.
const SCENARIO_STREAM: u64 = 0;
const WORLD_STREAM: u64 = 1;
const POLICY_STREAM: u64 = 2;

/// Metrics of one simulated run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub policy: String,
    pub agents: usize,
    pub seed: u64,
    /// Objects at the hub after the final tick.
    pub delivered: u64,
    /// `delivered / horizon`.
    pub rate: f64,
    pub repartitions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub series: Option<Vec<u64>>,
}

/// Runs `cfg.policy` with `cfg.agents.count` agents.
pub fn run_episode(cfg: &ScenarioConfig, seed: u64) -> Result<EpisodeResult> {
    run_episode_with(cfg, cfg.policy, cfg.agents.count, seed, false)
}

/// Runs one episode to the horizon.
///
/// The scenario layout depends only on the seed, so every policy and agent
/// count sees the same locations and the same replenishment draws for a given
/// seed. GR+EO gets one extra zero-capacity reconnaissance agent.
/// With `record_series` the cumulative delivered count after every tick is
/// kept.
pub fn run_episode_with(
    cfg: &ScenarioConfig,
    policy: PolicyKind,
    agents: usize,
    seed: u64,
    record_series: bool,
) -> Result<EpisodeResult> {
    let cfg = ScenarioConfig { agents: crate::AgentConfig { count: agents, ..cfg.agents.clone() }, ..cfg.clone() };
    cfg.validate()?;
    let fail = |source| HarnessError::Episode { policy, agents, seed, source };
    let (locations, mut fleet) = generate_scenario(&cfg, &mut rng_stream(seed, SCENARIO_STREAM))?;
    if policy == PolicyKind::GrEo {
        fleet.push(AgentState::new(fleet.len(), cfg.agents.speed, 0));
    }
    let mut world = WorldState::new(locations, fleet, cfg.horizon, rng_stream(seed, WORLD_STREAM)).map_err(fail)?;
    let mut controller = PolicyController::new(policy, &world, cfg.params(), rng_stream(seed, POLICY_STREAM))
        .map_err(|e| fail(e.into()))?;
    let mut series = record_series.then(|| Vec::with_capacity(cfg.horizon as usize));
    while !world.is_finished() {
        world.step(&mut controller).map_err(fail)?;
        if let Some(s) = series.as_mut() {
            s.push(world.hub_delivered());
        }
    }
    let delivered = world.hub_delivered();
    Ok(EpisodeResult {
        policy: policy.name().to_string(),
        agents,
        seed,
        delivered,
        rate: delivered as f64 / cfg.horizon as f64,
        repartitions: controller.repartitions(),
        series,
    })
}
