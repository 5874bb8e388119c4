//! Ground truth of a continuous transportation episode.
//!
//! A tick runs in a fixed order:
//!
//! 1. every non-hub location receives a Poisson(λⱼ) batch of new objects;
//! 2. en-route agents advance one step and may arrive;
//! 3. agents standing at a location pick up (or deliver, at the hub), in
//!    ascending agent id;
//! 4. idle agents adopt a new destination;
//! 5. the clock advances.
//!
//! [`WorldState::advance`] runs phases 1-3 and [`WorldState::commit`] runs 4-5,
//! so a caller can inspect the post-pickup state before deciding.
//! [`WorldState::step`] composes both around a [`Controller`].

use alloc::vec::Vec;

use crate::geometry::Point;
use crate::policy::{Controller, Decision, PolicyError};
use crate::{poisson, SimRng};

/// Index of the transportation hub.
pub const HUB: usize = 0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WorldError {
    #[error("location {index} is stored at position {position}")]
    LocationIndex { index: usize, position: usize },
    #[error("location {0} has an invalid replenishment rate")]
    InvalidRate(usize),
    #[error("location {0} has a non-finite position")]
    InvalidPosition(usize),
    #[error("the hub must have replenishment rate 0")]
    HubRate,
    #[error("scenario has no locations")]
    NoLocations,
    #[error("agent {id} is stored at position {position}")]
    AgentId { id: usize, position: usize },
    #[error("agent {0} has a non-positive speed")]
    InvalidSpeed(usize),
    #[error("agent {0} carries more than its capacity")]
    Overloaded(usize),
    #[error("agent {agent} refers to unknown location {location}")]
    UnknownLocation { agent: usize, location: usize },
    #[error("horizon must be at least one tick")]
    ZeroHorizon,
    #[error("horizon {0} already reached")]
    HorizonReached(u64),
    #[error("agent {0} is not at a location")]
    NotIdle(usize),
    #[error("agent {0} is at the hub; pickups happen at other locations")]
    PickupAtHub(usize),
    #[error("agent {0} is not at the hub")]
    NotAtHub(usize),
    #[error("no decision supplied for idle agent {0}")]
    MissingDecision(usize),
    #[error("duplicate decision for agent {0}")]
    DuplicateDecision(usize),
    #[error("unknown agent {0}")]
    UnknownAgent(usize),
    #[error("tick phases called out of order")]
    PhaseOrder,
    #[error("controller failed: {0}")]
    Policy(#[from] PolicyError),
}

/// A fixed place in the environment. Index 0 is the hub.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Location {
    pub index: usize,
    pub position: Point,
    /// Mean number of objects replenished per tick.
    pub rate: f64,
}

impl Location {
    pub fn new(index: usize, position: Point, rate: f64) -> Self {
        Location { index, position, rate }
    }

    pub fn hub(position: Point) -> Self {
        Location::new(HUB, position, 0.0)
    }
}

/// Euclidean distance between two locations.
pub fn distance(a: &Location, b: &Location) -> f64 {
    a.position.distance(b.position)
}

/// Whole ticks needed to cover `distance` at `speed`: `⌈distance / speed⌉`.
pub fn travel_ticks(distance: f64, speed: f64) -> u64 {
    debug_assert!(speed > 0.0);
    libm::ceil(distance / speed) as u64
}

/// Ticks for `agent` to move from `from` to `to`.
pub fn travel_time(agent: &AgentState, from: &Location, to: &Location) -> u64 {
    travel_ticks(distance(from, to), agent.speed)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trip {
    AtLocation(usize),
    /// `remaining` is always at least one.
    EnRoute { destination: usize, remaining: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub id: usize,
    /// Distance units per tick.
    pub speed: f64,
    /// Zero only for reconnaissance agents.
    pub capacity: u32,
    pub load: u32,
    pub trip: Trip,
    pub cluster: Option<usize>,
}

impl AgentState {
    /// An empty agent standing at the hub.
    pub fn new(id: usize, speed: f64, capacity: u32) -> Self {
        AgentState {
            id,
            speed,
            capacity,
            load: 0,
            trip: Trip::AtLocation(HUB),
            cluster: None,
        }
    }

    pub fn free_capacity(&self) -> u32 {
        self.capacity - self.load
    }

    pub fn is_full(&self) -> bool {
        self.load >= self.capacity
    }

    /// Location the agent stands at, or `None` while travelling.
    pub fn location(&self) -> Option<usize> {
        match self.trip {
            Trip::AtLocation(j) => Some(j),
            Trip::EnRoute { .. } => None,
        }
    }

    /// Where the agent is, or where it will be once its trip completes.
    pub fn anchor(&self) -> usize {
        match self.trip {
            Trip::AtLocation(j) => j,
            Trip::EnRoute { destination, .. } => destination,
        }
    }
}

/// What an agent saw while picking up at a non-hub location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Observation {
    pub agent: usize,
    pub location: usize,
    /// Number of ticks of replenishment that have happened when the
    /// observation is made, i.e. the clock of the tick plus one.
    pub time: u64,
    pub arrival_count: u64,
    pub picked: u64,
    pub remaining: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Phase {
    Ready,
    Advanced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorldState {
    clock: u64,
    horizon: u64,
    locations: Vec<Location>,
    counts: Vec<u64>,
    hub_delivered: u64,
    agents: Vec<AgentState>,
    rng: SimRng,
    replenished: u64,
    phase: Phase,
}

impl WorldState {
    /// Builds a world with every location empty. Objects already carried by
    /// agents count towards the audit total.
    ///
    /// `locations[0]` must be the hub and every location's `index` must equal
    /// its position in the slice; the same holds for agent ids.
    pub fn new(
        locations: Vec<Location>,
        agents: Vec<AgentState>,
        horizon: u64,
        rng: SimRng,
    ) -> Result<Self, WorldError> {
        if locations.is_empty() {
            return Err(WorldError::NoLocations);
        }
        if horizon == 0 {
            return Err(WorldError::ZeroHorizon);
        }
        for (position, loc) in locations.iter().enumerate() {
            if loc.index != position {
                return Err(WorldError::LocationIndex { index: loc.index, position });
            }
            if !loc.position.is_finite() {
                return Err(WorldError::InvalidPosition(position));
            }
            if !(loc.rate.is_finite() && loc.rate >= 0.0) {
                return Err(WorldError::InvalidRate(position));
            }
        }
        if locations[HUB].rate != 0.0 {
            return Err(WorldError::HubRate);
        }
        for (position, agent) in agents.iter().enumerate() {
            if agent.id != position {
                return Err(WorldError::AgentId { id: agent.id, position });
            }
            if !(agent.speed.is_finite() && agent.speed > 0.0) {
                return Err(WorldError::InvalidSpeed(agent.id));
            }
            if agent.load > agent.capacity {
                return Err(WorldError::Overloaded(agent.id));
            }
            let (j, remaining) = match agent.trip {
                Trip::AtLocation(j) => (j, 1),
                Trip::EnRoute { destination, remaining } => (destination, remaining),
            };
            if j >= locations.len() || remaining == 0 {
                return Err(WorldError::UnknownLocation { agent: agent.id, location: j });
            }
        }
        let n = locations.len();
        let carried = agents.iter().map(|a| u64::from(a.load)).sum();
        Ok(WorldState {
            clock: 0,
            horizon,
            locations,
            counts: alloc::vec![0; n],
            hub_delivered: 0,
            agents,
            rng,
            replenished: carried,
            phase: Phase::Ready,
        })
    }

    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn is_finished(&self) -> bool {
        self.clock >= self.horizon
    }

    pub fn locations(&self) -> &[Location] {
        &self.locations
    }

    pub fn location(&self, j: usize) -> &Location {
        &self.locations[j]
    }

    /// Objects waiting at each location; the hub entry is always zero.
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn hub_delivered(&self) -> u64 {
        self.hub_delivered
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn agent(&self, id: usize) -> &AgentState {
        &self.agents[id]
    }

    /// Total objects ever placed into the world (audit counter).
    pub fn total_replenished(&self) -> u64 {
        self.replenished
    }

    /// Checks `delivered + carried + waiting == replenished`.
    pub fn is_conserved(&self) -> bool {
        let carried: u64 = self.agents.iter().map(|a| u64::from(a.load)).sum();
        let waiting: u64 = self.counts.iter().sum();
        self.hub_delivered + carried + waiting == self.replenished
    }

    /// Adds `n` objects to location `j` outside the Poisson process.
    /// They enter the audit counter like any replenishment.
    pub fn seed_objects(&mut self, j: usize, n: u64) {
        assert!(j != HUB && j < self.locations.len(), "cannot seed location {j}");
        self.counts[j] += n;
        self.replenished += n;
    }

    /// Records which cluster each agent currently serves.
    pub fn set_cluster(&mut self, agent: usize, cluster: Option<usize>) {
        self.agents[agent].cluster = cluster;
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        distance(&self.locations[a], &self.locations[b])
    }

    pub fn travel_time(&self, agent: usize, from: usize, to: usize) -> u64 {
        travel_ticks(self.distance(from, to), self.agents[agent].speed)
    }

    /// Adds a Poisson(λⱼ) batch to every non-hub location.
    pub fn replenish(&mut self) -> Result<(), WorldError> {
        if self.is_finished() {
            return Err(WorldError::HorizonReached(self.horizon));
        }
        for (count, loc) in self.counts.iter_mut().zip(&self.locations).skip(1) {
            let batch = poisson::sample(&mut self.rng, loc.rate);
            *count += batch;
            self.replenished += batch;
        }
        Ok(())
    }

    /// Picks up `min(count, free capacity)` objects for an agent standing at a
    /// non-hub location.
    pub fn arrive_pickup(&mut self, agent: usize) -> Result<Observation, WorldError> {
        let a = self.agents.get_mut(agent).ok_or(WorldError::UnknownAgent(agent))?;
        let j = match a.trip {
            Trip::AtLocation(HUB) => return Err(WorldError::PickupAtHub(agent)),
            Trip::AtLocation(j) => j,
            Trip::EnRoute { .. } => return Err(WorldError::NotIdle(agent)),
        };
        let arrival_count = self.counts[j];
        let picked = arrival_count.min(u64::from(a.free_capacity()));
        self.counts[j] -= picked;
        // picked <= free capacity, which fits in u32
        a.load += picked as u32;
        Ok(Observation {
            agent,
            location: j,
            time: self.clock + 1,
            arrival_count,
            picked,
            remaining: self.counts[j],
        })
    }

    /// Unloads an agent standing at the hub; returns the number delivered.
    pub fn deliver(&mut self, agent: usize) -> Result<u32, WorldError> {
        let a = self.agents.get_mut(agent).ok_or(WorldError::UnknownAgent(agent))?;
        if a.trip != Trip::AtLocation(HUB) {
            return Err(WorldError::NotAtHub(agent));
        }
        let load = core::mem::take(&mut a.load);
        self.hub_delivered += u64::from(load);
        Ok(load)
    }

    /// Phases 1-3 of a tick: replenish, move, pick up / deliver.
    pub fn advance(&mut self) -> Result<Vec<Observation>, WorldError> {
        if self.phase != Phase::Ready {
            return Err(WorldError::PhaseOrder);
        }
        self.replenish()?;
        for agent in &mut self.agents {
            if let Trip::EnRoute { destination, remaining } = agent.trip {
                agent.trip = if remaining <= 1 {
                    Trip::AtLocation(destination)
                } else {
                    Trip::EnRoute { destination, remaining: remaining - 1 }
                };
            }
        }
        let mut observations = Vec::new();
        for id in 0..self.agents.len() {
            match self.agents[id].trip {
                Trip::AtLocation(HUB) => {
                    self.deliver(id)?;
                }
                Trip::AtLocation(_) => observations.push(self.arrive_pickup(id)?),
                Trip::EnRoute { .. } => {}
            }
        }
        self.phase = Phase::Advanced;
        Ok(observations)
    }

    /// Ids of agents standing at a location, in ascending order.
    pub fn idle_agents(&self) -> impl Iterator<Item = usize> + '_ {
        self.agents
            .iter()
            .filter(|a| a.location().is_some())
            .map(|a| a.id)
    }

    /// Phases 4-5 of a tick: every idle agent adopts its decision, then the
    /// clock advances.
    ///
    /// Exactly one decision per idle agent is required. A destination equal
    /// to the current location keeps the agent there until the next tick. A
    /// destination at zero distance is reached without an en-route step.
    pub fn commit(&mut self, decisions: &[Decision]) -> Result<(), WorldError> {
        if self.phase != Phase::Advanced {
            return Err(WorldError::PhaseOrder);
        }
        let mut chosen: Vec<Option<usize>> = alloc::vec![None; self.agents.len()];
        for d in decisions {
            let agent = self.agents.get(d.agent).ok_or(WorldError::UnknownAgent(d.agent))?;
            if agent.location().is_none() {
                return Err(WorldError::NotIdle(d.agent));
            }
            if d.destination >= self.locations.len() {
                return Err(WorldError::UnknownLocation { agent: d.agent, location: d.destination });
            }
            if chosen[d.agent].replace(d.destination).is_some() {
                return Err(WorldError::DuplicateDecision(d.agent));
            }
        }
        if let Some(id) = self.idle_agents().find(|&id| chosen[id].is_none()) {
            return Err(WorldError::MissingDecision(id));
        }
        for (id, destination) in chosen.into_iter().enumerate() {
            let Some(destination) = destination else { continue };
            let here = self.agents[id].location().expect("validated idle");
            if destination == here {
                continue;
            }
            let ticks = self.travel_time(id, here, destination);
            self.agents[id].trip = if ticks == 0 {
                Trip::AtLocation(destination)
            } else {
                Trip::EnRoute { destination, remaining: ticks }
            };
        }
        self.clock += 1;
        self.phase = Phase::Ready;
        Ok(())
    }

    /// Runs one full tick under `controller` and returns its observations.
    pub fn step<C: Controller + ?Sized>(
        &mut self,
        controller: &mut C,
    ) -> Result<Vec<Observation>, WorldError> {
        let observations = self.advance()?;
        controller.observe(self, &observations)?;
        for id in 0..self.agents.len() {
            self.agents[id].cluster = controller.cluster_of(id);
        }
        let idle: Vec<usize> = self.idle_agents().collect();
        let mut decisions = Vec::with_capacity(idle.len());
        for id in idle {
            decisions.push(controller.decide(self, &self.agents[id]));
        }
        self.commit(&decisions)?;
        Ok(observations)
    }
}
