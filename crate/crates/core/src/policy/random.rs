use super::{random_decide, Controller, Decision, PolicyError};
use crate::world::{AgentState, Observation, WorldState};
use crate::SimRng;

/// Random Transportation: no estimates, uniform destinations.
#[derive(Debug, Clone)]
pub struct RandomController {
    rng: SimRng,
}

impl RandomController {
    pub fn new(rng: SimRng) -> Self {
        RandomController { rng }
    }
}

impl Controller for RandomController {
    fn observe(&mut self, _world: &WorldState, _observations: &[Observation]) -> Result<(), PolicyError> {
        Ok(())
    }

    fn decide(&mut self, world: &WorldState, agent: &AgentState) -> Decision {
        random_decide(world, agent, &mut self.rng)
    }
}
