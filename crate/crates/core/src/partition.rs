//! Spatial clustering of locations and rate balancing across clusters.
//!
//! Clusters start from k-means on positions (k-means++ seeding, Lloyd
//! iterations). Balancing then moves single locations between clusters while
//! doing so lowers the coefficient of variation of per-cluster estimated
//! replenishment rates.

use alloc::vec::Vec;

use rand::Rng;

use crate::geometry::{centroid, Point};
use crate::world::{AgentState, Location, HUB};

/// Upper bound on Lloyd iterations.
pub const MAX_LLOYD_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PartitionError {
    #[error("number of clusters must be at least one")]
    NoClusters,
    #[error("no non-hub locations to partition")]
    NoSites,
    #[error("{k} clusters requested for only {sites} locations")]
    TooManyClusters { k: usize, sites: usize },
    #[error("{agents} agents cannot be matched to {k} clusters")]
    AgentCount { agents: usize, k: usize },
    #[error("assignment has {got} entries for {sites} locations")]
    AssignmentLength { got: usize, sites: usize },
    #[error("cluster id {id} out of range for k = {k}")]
    ClusterId { id: usize, k: usize },
}

/// Assignment of every non-hub location to one of `k` clusters.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    k: usize,
    /// Non-hub location indices in ascending order.
    sites: Vec<usize>,
    /// Cluster of `sites[i]`.
    assign: Vec<usize>,
    centroids: Vec<Point>,
    /// Sum of estimated rates of each cluster's members.
    loads: Vec<f64>,
}

fn non_hub_sites(locations: &[Location]) -> Vec<usize> {
    locations.iter().map(|l| l.index).filter(|&j| j != HUB).collect()
}

fn cluster_loads(k: usize, sites: &[usize], assign: &[usize], rates: &[f64]) -> Vec<f64> {
    let mut loads = alloc::vec![0.0; k];
    for (&j, &c) in sites.iter().zip(assign) {
        loads[c] += rates[j];
    }
    loads
}

/// Index of the centroid nearest to `p`, lowest index on ties.
fn nearest(centroids: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (c, q) in centroids.iter().enumerate() {
        let d = p.distance_sq(*q);
        if d < best_d {
            best = c;
            best_d = d;
        }
    }
    best
}

impl Partition {
    /// Builds a partition from an explicit assignment (parallel to the
    /// non-hub locations in index order). Centroids are member means; an
    /// empty cluster is centred on the mean of all locations.
    pub fn from_assignment(
        locations: &[Location],
        k: usize,
        assign: Vec<usize>,
        rates: &[f64],
    ) -> Result<Self, PartitionError> {
        if k == 0 {
            return Err(PartitionError::NoClusters);
        }
        let sites = non_hub_sites(locations);
        if assign.len() != sites.len() {
            return Err(PartitionError::AssignmentLength { got: assign.len(), sites: sites.len() });
        }
        if let Some(&id) = assign.iter().find(|&&c| c >= k) {
            return Err(PartitionError::ClusterId { id, k });
        }
        let fallback = centroid(sites.iter().map(|&j| locations[j].position)).unwrap_or_default();
        let mut p = Partition {
            k,
            loads: cluster_loads(k, &sites, &assign, rates),
            centroids: alloc::vec![fallback; k],
            sites,
            assign,
        };
        p.recenter(locations);
        Ok(p)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn sites(&self) -> &[usize] {
        &self.sites
    }

    /// Cluster ids parallel to [`Partition::sites`].
    pub fn assignment(&self) -> &[usize] {
        &self.assign
    }

    pub fn centroids(&self) -> &[Point] {
        &self.centroids
    }

    pub fn loads(&self) -> &[f64] {
        &self.loads
    }

    pub fn cluster_of(&self, location: usize) -> Option<usize> {
        self.sites.binary_search(&location).ok().map(|i| self.assign[i])
    }

    /// Location indices belonging to cluster `c`.
    pub fn members(&self, c: usize) -> impl Iterator<Item = usize> + '_ {
        self.sites
            .iter()
            .zip(&self.assign)
            .filter(move |(_, &a)| a == c)
            .map(|(&j, _)| j)
    }

    /// Same assignment with loads recomputed from `rates`.
    pub fn with_rates(&self, rates: &[f64]) -> Partition {
        let mut p = self.clone();
        p.loads = cluster_loads(p.k, &p.sites, &p.assign, rates);
        p
    }

    /// Coefficient of variation of the cluster loads.
    pub fn imbalance(&self) -> f64 {
        imbalance(&self.loads)
    }

    /// Moves each non-empty cluster's centroid to its members' mean.
    fn recenter(&mut self, locations: &[Location]) {
        for c in 0..self.k {
            if let Some(m) = centroid(self.members(c).map(|j| locations[j].position)) {
                self.centroids[c] = m;
            }
        }
    }
}

/// Population standard deviation of `loads` over their mean; zero when the
/// mean is not positive.
pub fn imbalance(loads: &[f64]) -> f64 {
    if loads.is_empty() {
        return 0.0;
    }
    let n = loads.len() as f64;
    let mean = loads.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return 0.0;
    }
    let var = loads.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / n;
    libm::sqrt(var) / mean
}

/// k-means++ seeding: first centre uniform, then proportional to squared
/// distance from the nearest chosen centre.
fn seed_plus_plus<R: Rng + ?Sized>(points: &[Point], k: usize, rng: &mut R) -> Vec<Point> {
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    chosen.push(rng.random_range(0..points.len()));
    let mut d2: Vec<f64> = points.iter().map(|p| p.distance_sq(points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && target < acc {
                    pick = Some(i);
                    break;
                }
            }
            // Rounding can leave target at the very end of the mass.
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive total"))
        } else {
            // Every point coincides with a centre: fall back to an unused point.
            let unused: Vec<usize> = (0..points.len()).filter(|i| !chosen.contains(i)).collect();
            unused[rng.random_range(0..unused.len())]
        };
        chosen.push(next);
        for (w, p) in d2.iter_mut().zip(points) {
            *w = w.min(p.distance_sq(points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i]).collect()
}

/// Clusters the non-hub locations by position into `k` groups.
///
/// Lloyd iterations run until the assignment stops changing or
/// [`MAX_LLOYD_ITERATIONS`] is reached. Loads are computed from `rates`
/// (indexed by location).
pub fn kmeans_partition<R: Rng + ?Sized>(
    locations: &[Location],
    rates: &[f64],
    k: usize,
    rng: &mut R,
) -> Result<Partition, PartitionError> {
    if k == 0 {
        return Err(PartitionError::NoClusters);
    }
    let sites = non_hub_sites(locations);
    if sites.is_empty() {
        return Err(PartitionError::NoSites);
    }
    if k > sites.len() {
        return Err(PartitionError::TooManyClusters { k, sites: sites.len() });
    }
    let points: Vec<Point> = sites.iter().map(|&j| locations[j].position).collect();
    let mut centroids = seed_plus_plus(&points, k, rng);
    let mut assign = alloc::vec![usize::MAX; points.len()];
    for _ in 0..MAX_LLOYD_ITERATIONS {
        let next: Vec<usize> = points.iter().map(|&p| nearest(&centroids, p)).collect();
        let changed = next != assign;
        assign = next;
        for (c, slot) in centroids.iter_mut().enumerate() {
            let members = points.iter().zip(&assign).filter(|(_, &a)| a == c).map(|(p, _)| *p);
            if let Some(m) = centroid(members) {
                *slot = m;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(Partition {
        k,
        loads: cluster_loads(k, &sites, &assign, rates),
        sites,
        assign,
        centroids,
    })
}

/// True iff the partition's imbalance under `rates` exceeds `threshold`.
pub fn should_repartition(p: &Partition, rates: &[f64], threshold: f64) -> bool {
    p.with_rates(rates).imbalance() > threshold
}

/// Greedy single-location moves that lower imbalance.
///
/// Each round applies the move with the lowest resulting imbalance; ties go
/// to the smallest increase in distance to the receiving centroid, then to the
/// lowest location and cluster. Stops when no move lowers imbalance or after
/// `10 · n` moves. The returned imbalance never exceeds the input's.
pub fn balance_partition(p: &Partition, rates: &[f64], locations: &[Location]) -> Partition {
    let mut cur = p.with_rates(rates);
    let n = cur.sites.len();
    for _ in 0..10 * n {
        let base = cur.imbalance();
        // (imbalance, distance increase, site position, target cluster)
        let mut best: Option<(f64, f64, usize, usize)> = None;
        let mut trial = cur.assign.clone();
        for i in 0..n {
            let from = cur.assign[i];
            let pos = locations[cur.sites[i]].position;
            for to in (0..cur.k).filter(|&c| c != from) {
                trial[i] = to;
                let score = imbalance(&cluster_loads(cur.k, &cur.sites, &trial, rates));
                trial[i] = from;
                if score >= base {
                    continue;
                }
                let stretch = pos.distance(cur.centroids[to]) - pos.distance(cur.centroids[from]);
                let better = match best {
                    None => true,
                    Some((s, d, _, _)) => score < s || (score == s && stretch < d),
                };
                if better {
                    best = Some((score, stretch, i, to));
                }
            }
        }
        let Some((_, _, i, to)) = best else { break };
        cur.assign[i] = to;
        cur.loads = cluster_loads(cur.k, &cur.sites, &cur.assign, rates);
        cur.recenter(locations);
    }
    cur
}

/// Matches agents to clusters: in ascending id, each agent claims the nearest
/// unclaimed centroid (lowest cluster id on ties), measured from where the
/// agent stands or, if travelling, from its destination.
pub fn assign_agents(
    p: &Partition,
    agents: &[AgentState],
    locations: &[Location],
) -> Result<Vec<usize>, PartitionError> {
    if agents.len() != p.k {
        return Err(PartitionError::AgentCount { agents: agents.len(), k: p.k });
    }
    let mut order: Vec<&AgentState> = agents.iter().collect();
    order.sort_by_key(|a| a.id);
    let mut claimed = alloc::vec![false; p.k];
    let mut out = alloc::vec![0; agents.len()];
    for agent in order {
        let here = locations[agent.anchor()].position;
        let mut best: Option<(f64, usize)> = None;
        for (c, q) in p.centroids.iter().enumerate() {
            if claimed[c] {
                continue;
            }
            let d = here.distance_sq(*q);
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, c));
            }
        }
        let (_, c) = best.expect("k clusters for k agents");
        claimed[c] = true;
        let slot = agents.iter().position(|a| a.id == agent.id).expect("agent present");
        out[slot] = c;
    }
    Ok(out)
}
