use alloc::vec::Vec;

use super::{greo_decide, Controller, Decision, PolicyError, PolicyParams};
use crate::estimation::{EstimateStore, Owner};
use crate::world::{AgentState, Observation, WorldState};

/// Destinations claimed by transporting agents until they arrive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reservations {
    holders: Vec<Option<usize>>,
}

impl Reservations {
    pub fn new(n_locations: usize) -> Self {
        Reservations { holders: alloc::vec![None; n_locations] }
    }

    pub fn holder(&self, j: usize) -> Option<usize> {
        self.holders[j]
    }

    pub fn holders(&self) -> &[Option<usize>] {
        &self.holders
    }

    pub fn is_open_for(&self, j: usize, agent: usize) -> bool {
        self.holders[j].is_none_or(|h| h == agent)
    }

    /// Claims `j` for `agent`, dropping any earlier claim of that agent.
    pub fn reserve(&mut self, j: usize, agent: usize) {
        for h in &mut self.holders {
            if *h == Some(agent) {
                *h = None;
            }
        }
        debug_assert!(self.holders[j].is_none(), "location {j} already reserved");
        self.holders[j] = Some(agent);
    }

    /// Drops claims whose holder is no longer travelling.
    pub fn release_arrived(&mut self, world: &WorldState) {
        for h in &mut self.holders {
            if h.is_some_and(|a| world.agent(a).location().is_some()) {
                *h = None;
            }
        }
    }
}

/// Greedy Rate with Expected Observation.
///
/// All agents share one [`EstimateStore`]; between visits its count estimates
/// grow with the estimated rates. Transporting agents reserve their
/// destinations and zero-capacity agents act as reconnaissance.
#[derive(Debug, Clone)]
pub struct GreoController {
    shared: EstimateStore,
    reservations: Reservations,
}

impl GreoController {
    pub fn new(world: &WorldState, params: PolicyParams) -> Result<Self, PolicyError> {
        let n = world.locations().len();
        Ok(GreoController {
            shared: EstimateStore::new(Owner::Shared, n, params.prior)?,
            reservations: Reservations::new(n),
        })
    }

    pub fn shared(&self) -> &EstimateStore {
        &self.shared
    }

    pub fn reservations(&self) -> &Reservations {
        &self.reservations
    }
}

impl Controller for GreoController {
    fn observe(&mut self, world: &WorldState, observations: &[Observation]) -> Result<(), PolicyError> {
        self.shared.propagate(1)?;
        for obs in observations {
            self.shared.incorporate(obs)?;
        }
        self.reservations.release_arrived(world);
        Ok(())
    }

    fn decide(&mut self, world: &WorldState, agent: &AgentState) -> Decision {
        greo_decide(world, agent, &self.shared, &mut self.reservations)
    }
}
