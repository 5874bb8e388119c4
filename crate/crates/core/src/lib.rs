//! Discrete-time model of multi-agent continuous transportation.
//!
//! Agents repeatedly collect objects that replenish at fixed locations
//! according to independent Poisson processes and deliver them to a hub.
//! The crate holds the pure algorithmic parts of the simulator:
//!
//! * [`world`]: ground truth, pickup/delivery mechanics and the tick engine.
//! * [`estimation`]: per-viewer beliefs about counts and replenishment rates.
//! * [`partition`]: k-means clustering of locations and rate balancing.
//! * [`policy`]: destination selection (Online Balanced Partitioning, Greedy
//!   Rate with Expected Observation, and a random baseline).
//!
//! It is `no_std` (with `alloc`); IO, configuration and statistics live in the
//! `ctsim` harness crate.

#![no_std]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod estimation;
pub mod geometry;
pub mod partition;
pub mod poisson;
pub mod policy;
pub mod world;

pub use estimation::{EstimateStore, EstimationError, Owner};
pub use geometry::Point;
pub use partition::{Partition, PartitionError};
pub use policy::{Controller, Decision, PolicyKind, PolicyParams};
pub use world::{AgentState, Location, Observation, Trip, WorldError, WorldState, HUB};

/// Deterministic generator used for every random stream in the simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds the generator for `stream` of a given `seed`.
///
/// Distinct streams of one seed are statistically independent, so scenario
/// layout, replenishment and policy randomness never share draws.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
