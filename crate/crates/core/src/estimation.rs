//! Beliefs about object counts and replenishment rates.
//!
//! A store starts every location at an estimated count of zero and a preset
//! prior rate. Between visits the count estimate grows by the estimated rate
//! per tick. A visit reveals how many objects accumulated since the previous
//! incorporated visit, and the rate estimate becomes the running ratio of
//! objects replenished to ticks covered.

use alloc::vec::Vec;

use crate::world::{Observation, HUB};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EstimationError {
    #[error("prior rate must be finite and non-negative, got {0}")]
    InvalidPrior(f64),
    #[error("propagation interval must be at least one tick")]
    ZeroInterval,
    #[error("observations of the hub carry no replenishment information")]
    HubObservation,
    #[error("location {0} is not tracked by this store")]
    UnknownLocation(usize),
    #[error("observation of location {location} at t={time} precedes last incorporated visit at t={last}")]
    OutOfOrder { location: usize, time: u64, last: u64 },
}

/// Whose beliefs a store holds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Owner {
    Agent(usize),
    /// Union of all transportation agents' observations; feeds partitioning.
    Central,
    /// Common store of the GR+EO benchmark.
    Shared,
}

/// Most recent incorporated visit to a location.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Visit {
    pub remaining: u64,
    pub time: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimateStore {
    owner: Owner,
    prior: f64,
    est_count: Vec<f64>,
    est_rate: Vec<f64>,
    total_replenished: Vec<f64>,
    elapsed: Vec<u64>,
    last: Vec<Option<Visit>>,
}

impl EstimateStore {
    /// A fresh store over `n_locations` locations (hub included).
    pub fn new(owner: Owner, n_locations: usize, prior: f64) -> Result<Self, EstimationError> {
        if !(prior.is_finite() && prior >= 0.0) {
            return Err(EstimationError::InvalidPrior(prior));
        }
        let mut est_rate = alloc::vec![prior; n_locations];
        if let Some(hub) = est_rate.first_mut() {
            *hub = 0.0;
        }
        Ok(EstimateStore {
            owner,
            prior,
            est_count: alloc::vec![0.0; n_locations],
            est_rate,
            total_replenished: alloc::vec![0.0; n_locations],
            elapsed: alloc::vec![0; n_locations],
            last: alloc::vec![None; n_locations],
        })
    }

    pub fn owner(&self) -> Owner {
        self.owner
    }

    pub fn prior(&self) -> f64 {
        self.prior
    }

    pub fn len(&self) -> usize {
        self.est_count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.est_count.is_empty()
    }

    pub fn est_count(&self, j: usize) -> f64 {
        self.est_count[j]
    }

    /// Estimated rates indexed by location; the hub entry is zero.
    pub fn rates(&self) -> &[f64] {
        &self.est_rate
    }

    pub fn total_replenished(&self, j: usize) -> f64 {
        self.total_replenished[j]
    }

    pub fn elapsed(&self, j: usize) -> u64 {
        self.elapsed[j]
    }

    pub fn last_visit(&self, j: usize) -> Option<Visit> {
        self.last[j]
    }

    /// Overrides the count and rate estimates of one location. Used to set up
    /// scripted scenarios; the observation tallies are untouched.
    pub fn set_estimate(&mut self, j: usize, count: f64, rate: f64) {
        assert!(j != HUB, "hub estimates are fixed");
        assert!(count >= 0.0 && rate >= 0.0, "estimates must be non-negative");
        self.est_count[j] = count;
        self.est_rate[j] = rate;
    }

    /// Advances every count estimate by `rate · dt`.
    pub fn propagate(&mut self, dt: u64) -> Result<(), EstimationError> {
        if dt == 0 {
            return Err(EstimationError::ZeroInterval);
        }
        let dt = dt as f64;
        for (count, rate) in self.est_count.iter_mut().zip(&self.est_rate).skip(1) {
            *count += rate * dt;
        }
        Ok(())
    }

    /// Folds a visit into the tallies and resets the count estimate to what
    /// the visitor left behind.
    pub fn incorporate(&mut self, obs: &Observation) -> Result<(), EstimationError> {
        let j = obs.location;
        if j == HUB {
            return Err(EstimationError::HubObservation);
        }
        if j >= self.len() {
            return Err(EstimationError::UnknownLocation(j));
        }
        let (replenished, interval) = match self.last[j] {
            Some(prev) if obs.time < prev.time => {
                return Err(EstimationError::OutOfOrder { location: j, time: obs.time, last: prev.time });
            }
            Some(prev) => (obs.arrival_count.saturating_sub(prev.remaining), obs.time - prev.time),
            // Locations start empty, so a first visit covers [0, time].
            None => (obs.arrival_count, obs.time),
        };
        self.total_replenished[j] += replenished as f64;
        self.elapsed[j] += interval;
        self.est_rate[j] = self.rate_estimate(j);
        self.est_count[j] = obs.remaining as f64;
        self.last[j] = Some(Visit { remaining: obs.remaining, time: obs.time });
        Ok(())
    }

    /// Replenished objects per covered tick, or the prior before any coverage.
    pub fn rate_estimate(&self, j: usize) -> f64 {
        if j == HUB {
            return 0.0;
        }
        match self.elapsed[j] {
            0 => self.prior,
            n => self.total_replenished[j] / n as f64,
        }
    }
}
