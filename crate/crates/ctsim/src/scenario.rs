use ctsim_core::{AgentState, Location, Point};
use rand::Rng;

use crate::{HarnessError, Result, ScenarioConfig};

/// Lays out a scenario: hub at the centre of the square, other locations
/// uniform in it, rates uniform in `rate_range` unless listed explicitly.
/// Agents start empty at the hub.
pub fn generate_scenario<R: Rng + ?Sized>(cfg: &ScenarioConfig, rng: &mut R) -> Result<(Vec<Location>, Vec<AgentState>)> {
    if let Some(rates) = &cfg.rates {
        if rates.len() != cfg.n_locations {
            return Err(HarnessError::Config(format!(
                "{} explicit rates for {} locations",
                rates.len(),
                cfg.n_locations
            )));
        }
    }
    let half = cfg.area / 2.0;
    let mut locations = Vec::with_capacity(cfg.n_locations + 1);
    locations.push(Location::hub(Point::new(half, half)));
    let [lo, hi] = cfg.rate_range;
    for j in 1..=cfg.n_locations {
        let position = Point::new(rng.random_range(0.0..cfg.area), rng.random_range(0.0..cfg.area));
        let rate = match &cfg.rates {
            Some(rates) => rates[j - 1],
            None if hi > lo => rng.random_range(lo..=hi),
            None => lo,
        };
        locations.push(Location::new(j, position, rate));
    }
    let agents = (0..cfg.agents.count)
        .map(|id| AgentState::new(id, cfg.agents.speed, cfg.agents.capacity))
        .collect();
    Ok((locations, agents))
}
