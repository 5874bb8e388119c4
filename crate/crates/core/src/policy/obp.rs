use alloc::vec::Vec;

use super::{obp_decide, Controller, Decision, PolicyError, PolicyParams};
use crate::estimation::{EstimateStore, Owner};
use crate::partition::{assign_agents, balance_partition, kmeans_partition, should_repartition, Partition};
use crate::world::{AgentState, Observation, WorldState};
use crate::SimRng;

/// Online Balanced Partitioning.
///
/// Every agent keeps a private [`EstimateStore`] fed only by its own visits
/// and plans within its cluster. A central store sees every observation and
/// is used solely to judge cluster balance; when the imbalance exceeds the
/// threshold (and the cooldown has passed) the locations are re-clustered
/// from fresh k-means seeds, balanced, and matched to agents again.
#[derive(Debug, Clone)]
pub struct ObpController {
    params: PolicyParams,
    stores: Vec<EstimateStore>,
    central: EstimateStore,
    partition: Partition,
    clusters: Vec<usize>,
    last_repartition: u64,
    repartitions: usize,
    rng: SimRng,
}

impl ObpController {
    /// Clusters the locations by position alone, one cluster per agent.
    pub fn new(world: &WorldState, params: PolicyParams, mut rng: SimRng) -> Result<Self, PolicyError> {
        let prior_rates = EstimateStore::new(Owner::Central, world.locations().len(), params.prior)?;
        let k = world.agents().len();
        let partition = kmeans_partition(world.locations(), prior_rates.rates(), k, &mut rng)?;
        Self::with_partition(world, params, partition, rng)
    }

    /// Starts from a given partition instead of k-means.
    pub fn with_partition(
        world: &WorldState,
        params: PolicyParams,
        partition: Partition,
        rng: SimRng,
    ) -> Result<Self, PolicyError> {
        let n = world.locations().len();
        let stores = world
            .agents()
            .iter()
            .map(|a| EstimateStore::new(Owner::Agent(a.id), n, params.prior))
            .collect::<Result<Vec<_>, _>>()?;
        let central = EstimateStore::new(Owner::Central, n, params.prior)?;
        let clusters = assign_agents(&partition, world.agents(), world.locations())?;
        Ok(ObpController {
            params,
            stores,
            central,
            partition,
            clusters,
            last_repartition: world.clock(),
            repartitions: 0,
            rng,
        })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn store(&self, agent: usize) -> &EstimateStore {
        &self.stores[agent]
    }

    pub fn central(&self) -> &EstimateStore {
        &self.central
    }

    pub fn repartitions(&self) -> usize {
        self.repartitions
    }

    fn repartition(&mut self, world: &WorldState) -> Result<(), PolicyError> {
        let rates = self.central.rates();
        let fresh = kmeans_partition(world.locations(), rates, self.partition.k(), &mut self.rng)?;
        self.partition = balance_partition(&fresh, rates, world.locations());
        self.clusters = assign_agents(&self.partition, world.agents(), world.locations())?;
        self.last_repartition = world.clock();
        self.repartitions += 1;
        Ok(())
    }
}

impl Controller for ObpController {
    fn observe(&mut self, world: &WorldState, observations: &[Observation]) -> Result<(), PolicyError> {
        for store in self.stores.iter_mut().chain(core::iter::once(&mut self.central)) {
            store.propagate(1)?;
        }
        for obs in observations {
            self.stores[obs.agent].incorporate(obs)?;
            self.central.incorporate(obs)?;
        }
        let rested = world.clock().saturating_sub(self.last_repartition) >= self.params.cooldown;
        if rested && should_repartition(&self.partition, self.central.rates(), self.params.threshold) {
            self.repartition(world)?;
        }
        Ok(())
    }

    fn decide(&mut self, world: &WorldState, agent: &AgentState) -> Decision {
        obp_decide(world, agent, &self.partition, &self.stores[agent.id])
    }

    fn cluster_of(&self, agent: usize) -> Option<usize> {
        self.clusters.get(agent).copied()
    }
}
