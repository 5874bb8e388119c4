//! Destination selection.
//!
//! All transporting policies share one scoring rule, Greedy Rate: the
//! expected number of objects delivered per tick for the trip
//! `here → j → hub`, including what the agent already carries. They differ in
//! which locations an agent may consider and whose estimates it uses.

use alloc::boxed::Box;
use core::fmt;
use core::str::FromStr;

use rand::Rng;

use crate::estimation::{EstimateStore, EstimationError};
use crate::partition::{Partition, PartitionError};
use crate::world::{AgentState, Observation, WorldState, HUB};

mod greo;
mod obp;
mod random;

pub use greo::{GreoController, Reservations};
pub use obp::ObpController;
pub use random::RandomController;

/// Ticks added to every trip denominator; a decision always costs its tick.
pub const DECISION_TICKS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PolicyError {
    #[error(transparent)]
    Estimation(#[from] EstimationError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("unknown policy {0:?}")]
    UnknownPolicy(alloc::string::String),
}

/// A destination chosen for an idle agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub agent: usize,
    pub destination: usize,
    /// Score of the chosen destination; diagnostic only.
    pub expected_rate: f64,
}

impl Decision {
    pub fn new(agent: usize, destination: usize, expected_rate: f64) -> Self {
        Decision { agent, destination, expected_rate }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PolicyKind {
    /// Online Balanced Partitioning.
    Obp,
    /// Greedy Rate with Expected Observation, plus a reconnaissance agent.
    GrEo,
    /// Random Transportation.
    Random,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 3] = [PolicyKind::Obp, PolicyKind::GrEo, PolicyKind::Random];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::Obp => "obp",
            PolicyKind::GrEo => "gr_eo",
            PolicyKind::Random => "random",
        }
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "obp" => Ok(PolicyKind::Obp),
            "gr_eo" | "greo" | "gr+eo" | "gr-eo" => Ok(PolicyKind::GrEo),
            "random" | "r" => Ok(PolicyKind::Random),
            _ => Err(PolicyError::UnknownPolicy(s.into())),
        }
    }
}

/// Tunables shared by the policies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyParams {
    /// Imbalance above which OBP repartitions.
    pub threshold: f64,
    /// Rate assumed for locations with no covered ticks.
    pub prior: f64,
    /// Minimum ticks between repartitions; zero disables the guard.
    pub cooldown: u64,
}

impl Default for PolicyParams {
    fn default() -> Self {
        PolicyParams { threshold: 0.2, prior: 1.0, cooldown: 20 }
    }
}

/// Drives the decisions of a [`WorldState`] tick by tick.
pub trait Controller {
    /// Called once per tick after pickups and deliveries, before decisions.
    fn observe(&mut self, world: &WorldState, observations: &[Observation]) -> Result<(), PolicyError>;

    /// Destination for an idle agent. Called in ascending agent id.
    fn decide(&mut self, world: &WorldState, agent: &AgentState) -> Decision;

    /// Cluster the agent currently serves, if the policy has clusters.
    fn cluster_of(&self, _agent: usize) -> Option<usize> {
        None
    }
}

/// Objects the agent expects to pick up at `j` when arriving at `arrival`:
/// the estimate accrued until then, capped by free capacity.
pub fn expected_pickup(agent: &AgentState, j: usize, arrival: u64, now: u64, store: &EstimateStore) -> f64 {
    debug_assert!(j != HUB);
    let ahead = arrival.saturating_sub(now) as f64;
    let accrued = store.est_count(j) + store.rates()[j] * ahead;
    accrued.min(f64::from(agent.free_capacity())).max(0.0)
}

/// Greedy Rate over `scope`. Returning to the hub competes with every
/// location; ties go to the lowest index, so the hub wins them.
pub fn greedy_rate_next<I>(world: &WorldState, agent: &AgentState, scope: I, store: &EstimateStore) -> Decision
where
    I: IntoIterator<Item = usize>,
{
    let here = agent.anchor();
    let now = world.clock();
    let load = f64::from(agent.load);
    let home = load / (world.travel_time(agent.id, here, HUB) as f64 + DECISION_TICKS);
    let mut best = Decision::new(agent.id, HUB, home);
    if agent.is_full() {
        return best;
    }
    for j in scope.into_iter().filter(|&j| j != HUB) {
        let out = world.travel_time(agent.id, here, j);
        let back = world.travel_time(agent.id, j, HUB);
        let gain = load + expected_pickup(agent, j, now + out, now, store);
        let score = gain / ((out + back) as f64 + DECISION_TICKS);
        if score > best.expected_rate || (score == best.expected_rate && j < best.destination) {
            best = Decision::new(agent.id, j, score);
        }
    }
    best
}

/// Greedy Rate restricted to the agent's own cluster, on its own estimates.
pub fn obp_decide(world: &WorldState, agent: &AgentState, partition: &Partition, store: &EstimateStore) -> Decision {
    match agent.cluster {
        Some(c) => greedy_rate_next(world, agent, partition.members(c), store),
        None => greedy_rate_next(world, agent, core::iter::empty(), store),
    }
}

/// GR+EO decision. Zero-capacity agents are reconnaissance agents and head
/// for the location observed longest ago. Transporting agents run Greedy Rate
/// over every location not reserved by someone else and reserve their pick.
pub fn greo_decide(
    world: &WorldState,
    agent: &AgentState,
    store: &EstimateStore,
    reservations: &mut Reservations,
) -> Decision {
    if agent.capacity == 0 {
        let stalest = (1..world.locations().len())
            .min_by_key(|&j| store.last_visit(j).map_or(0, |v| v.time + 1))
            .unwrap_or(HUB);
        return Decision::new(agent.id, stalest, 0.0);
    }
    let scope = (1..world.locations().len()).filter(|&j| reservations.is_open_for(j, agent.id));
    let decision = greedy_rate_next(world, agent, scope, store);
    if decision.destination != HUB && Some(decision.destination) != agent.location() {
        reservations.reserve(decision.destination, agent.id);
    }
    decision
}

/// Uniformly random location until full, then the hub.
pub fn random_decide<R: Rng + ?Sized>(world: &WorldState, agent: &AgentState, rng: &mut R) -> Decision {
    let sites = world.locations().len() - 1;
    if agent.is_full() || sites == 0 {
        return Decision::new(agent.id, HUB, 0.0);
    }
    Decision::new(agent.id, 1 + rng.random_range(0..sites), 0.0)
}

/// Controller for any [`PolicyKind`].
#[derive(Debug, Clone)]
pub enum PolicyController {
    Obp(Box<ObpController>),
    GrEo(GreoController),
    Random(RandomController),
}

impl PolicyController {
    pub fn new(
        kind: PolicyKind,
        world: &WorldState,
        params: PolicyParams,
        rng: crate::SimRng,
    ) -> Result<Self, PolicyError> {
        Ok(match kind {
            PolicyKind::Obp => PolicyController::Obp(Box::new(ObpController::new(world, params, rng)?)),
            PolicyKind::GrEo => PolicyController::GrEo(GreoController::new(world, params)?),
            PolicyKind::Random => PolicyController::Random(RandomController::new(rng)),
        })
    }

    /// Number of online repartitions so far (OBP only).
    pub fn repartitions(&self) -> usize {
        match self {
            PolicyController::Obp(c) => c.repartitions(),
            _ => 0,
        }
    }
}

impl Controller for PolicyController {
    fn observe(&mut self, world: &WorldState, observations: &[Observation]) -> Result<(), PolicyError> {
        match self {
            PolicyController::Obp(c) => c.observe(world, observations),
            PolicyController::GrEo(c) => c.observe(world, observations),
            PolicyController::Random(c) => c.observe(world, observations),
        }
    }

    fn decide(&mut self, world: &WorldState, agent: &AgentState) -> Decision {
        match self {
            PolicyController::Obp(c) => c.decide(world, agent),
            PolicyController::GrEo(c) => c.decide(world, agent),
            PolicyController::Random(c) => c.decide(world, agent),
        }
    }

    fn cluster_of(&self, agent: usize) -> Option<usize> {
        match self {
            PolicyController::Obp(c) => c.cluster_of(agent),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimation::Owner;
    use crate::geometry::Point;
    use crate::rng_stream;
    use crate::world::{Location, Trip};
    use alloc::vec::Vec;

    fn world(points: &[(f64, f64)], agents: Vec<AgentState>) -> WorldState {
        let mut locs = alloc::vec![Location::hub(Point::new(0.0, 0.0))];
        for (i, &(x, y)) in points.iter().enumerate() {
            locs.push(Location::new(i + 1, Point::new(x, y), 0.0));
        }
        WorldState::new(locs, agents, 100, rng_stream(0, 1)).unwrap()
    }

    fn store(n: usize, estimates: &[(usize, f64, f64)]) -> EstimateStore {
        let mut s = EstimateStore::new(Owner::Agent(0), n, 0.0).unwrap();
        for &(j, v, r) in estimates {
            s.set_estimate(j, v, r);
        }
        s
    }

    fn loaded(id: usize, load: u32, capacity: u32) -> AgentState {
        let mut a = AgentState::new(id, 1.0, capacity);
        a.load = load;
        a
    }

    #[test]
    fn expected_pickup_examples() {
        let s = store(2, &[(1, 5.0, 0.0)]);
        assert_eq!(expected_pickup(&loaded(0, 7, 10), 1, 3, 3, &s), 3.0);
        let s = store(2, &[(1, 0.0, 0.5)]);
        assert_eq!(expected_pickup(&loaded(0, 0, 10), 1, 14, 10, &s), 2.0);
        let s = store(2, &[(1, 9.0, 1.0)]);
        assert_eq!(expected_pickup(&loaded(0, 10, 10), 1, 14, 10, &s), 0.0);
    }

    #[test]
    fn full_agent_goes_home() {
        let mut a = loaded(0, 10, 10);
        a.trip = Trip::AtLocation(1);
        let w = world(&[(3.0, 0.0), (4.0, 0.0)], alloc::vec![a.clone()]);
        let s = store(3, &[(2, 100.0, 1.0)]);
        let d = greedy_rate_next(&w, &a, [1, 2], &s);
        assert_eq!(d.destination, HUB);
        let mut rng = rng_stream(0, 2);
        assert_eq!(random_decide(&w, &a, &mut rng).destination, HUB);
    }

    #[test]
    fn empty_scope_goes_home() {
        let a = loaded(0, 0, 10);
        let w = world(&[(3.0, 0.0)], alloc::vec![a.clone()]);
        let s = store(2, &[(1, 50.0, 1.0)]);
        assert_eq!(greedy_rate_next(&w, &a, core::iter::empty(), &s).destination, HUB);
        let p = Partition::from_assignment(w.locations(), 1, alloc::vec![0], s.rates()).unwrap();
        // no cluster assigned
        assert_eq!(obp_decide(&w, &a, &p, &s).destination, HUB);
    }

    #[test]
    fn greedy_picks_richer_of_equidistant() {
        // Both at distance 5 (speed 1): out 5, back 5, score = v / 11.
        let a = loaded(0, 0, 10);
        let w = world(&[(3.0, 4.0), (-3.0, 4.0)], alloc::vec![a.clone()]);
        let s = store(3, &[(1, 6.0, 0.0), (2, 2.0, 0.0)]);
        let d = greedy_rate_next(&w, &a, [1, 2], &s);
        assert_eq!(d.destination, 1);
        assert_eq!(d.expected_rate, 6.0 / 11.0);
        let s = store(3, &[(1, 2.0, 0.0), (2, 6.0, 0.0)]);
        assert_eq!(greedy_rate_next(&w, &a, [1, 2], &s).destination, 2);
    }

    #[test]
    fn greedy_ties_go_to_lowest_index() {
        let a = loaded(0, 0, 10);
        let w = world(&[(3.0, 4.0), (-3.0, 4.0)], alloc::vec![a.clone()]);
        let s = store(3, &[(1, 4.0, 0.0), (2, 4.0, 0.0)]);
        assert_eq!(greedy_rate_next(&w, &a, [2, 1], &s).destination, 1);
        let s = store(3, &[]);
        assert_eq!(greedy_rate_next(&w, &a, [2, 1], &s).destination, HUB);
    }

    #[test]
    fn single_location_cluster() {
        let mut a = loaded(0, 0, 10);
        a.cluster = Some(1);
        let w = world(&[(3.0, 4.0), (-3.0, 4.0)], alloc::vec![a.clone()]);
        let s = store(3, &[(1, 9.0, 0.0), (2, 1.0, 0.0)]);
        let p = Partition::from_assignment(w.locations(), 2, alloc::vec![0, 1], s.rates()).unwrap();
        assert_eq!(obp_decide(&w, &a, &p, &s).destination, 2);
    }

    #[test]
    fn reconnaissance_targets_stalest() {
        let recon = AgentState::new(2, 1.0, 0);
        let w = world(&[(1.0, 0.0), (2.0, 0.0), (3.0, 0.0)], alloc::vec![loaded(0, 0, 5), loaded(1, 0, 5), recon.clone()]);
        let mut s = EstimateStore::new(Owner::Shared, 4, 1.0).unwrap();
        let mut r = Reservations::new(4);
        let d = greo_decide(&w, &recon, &s, &mut r);
        assert_eq!(d.destination, 1);
        assert!(r.holders().iter().all(Option::is_none));
        let seen = |j, t| Observation { agent: 2, location: j, time: t, arrival_count: 0, picked: 0, remaining: 0 };
        s.incorporate(&seen(1, 5)).unwrap();
        s.incorporate(&seen(3, 2)).unwrap();
        assert_eq!(greo_decide(&w, &recon, &s, &mut r).destination, 2);
        s.incorporate(&seen(2, 7)).unwrap();
        assert_eq!(greo_decide(&w, &recon, &s, &mut r).destination, 3);
    }

    #[test]
    fn reservation_excludes_location() {
        let w = world(&[(3.0, 4.0), (-3.0, 4.0)], alloc::vec![loaded(0, 0, 10), loaded(1, 0, 10)]);
        let s = store(3, &[(1, 6.0, 0.0), (2, 2.0, 0.0)]);
        let mut r = Reservations::new(3);
        assert_eq!(greo_decide(&w, w.agent(0), &s, &mut r).destination, 1);
        assert_eq!(r.holder(1), Some(0));
        assert_eq!(greo_decide(&w, w.agent(1), &s, &mut r).destination, 2);
        assert_eq!(r.holder(2), Some(1));
    }

    #[test]
    fn random_single_location_is_forced() {
        let a = loaded(0, 0, 10);
        let w = world(&[(3.0, 4.0)], alloc::vec![a.clone()]);
        let mut rng = rng_stream(8, 2);
        assert!((0..100).all(|_| random_decide(&w, &a, &mut rng).destination == 1));
    }

    #[test]
    fn random_is_uniform() {
        let points: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 1.0)).collect();
        let a = loaded(0, 0, 10);
        let w = world(&points, alloc::vec![a.clone()]);
        let mut rng = rng_stream(21, 2);
        let n = 100_000;
        let mut freq = [0u32; 21];
        for _ in 0..n {
            freq[random_decide(&w, &a, &mut rng).destination] += 1;
        }
        assert_eq!(freq[0], 0);
        let p = 1.0 / 20.0;
        let sigma = libm::sqrt(n as f64 * p * (1.0 - p));
        for &f in &freq[1..] {
            assert!((f as f64 - n as f64 * p).abs() <= 3.0 * sigma, "frequency {f}");
        }
    }

    #[test]
    fn policy_names_round_trip() {
        for kind in PolicyKind::ALL {
            assert_eq!(kind.name().parse::<PolicyKind>().unwrap(), kind);
        }
        assert_eq!("GR+EO".parse::<PolicyKind>().unwrap(), PolicyKind::GrEo);
        assert!("cas".parse::<PolicyKind>().is_err());
    }
}
