use std::path::Path;

use ctsim_core::{PolicyKind, PolicyParams};
use serde::{Deserialize, Serialize};

use crate::{HarnessError, Result};

/// Transportation agents of a scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub count: usize,
    /// Distance units per tick.
    pub speed: f64,
    pub capacity: u32,
}

impl Default for AgentConfig {
    fn default() -> Self {
        AgentConfig { count: 4, speed: 5.0, capacity: 10 }
    }
}

/// Everything needed to build and run episodes. Every field is optional in
/// the JSON form and falls back to the default preset: 20 locations in a
/// 100×100 square, rates uniform in [0.05, 0.5], capacity 10, speed 5,
/// T = 2000, agent counts 1..=8 and 30 seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_locations: usize,
    /// Side length of the square the locations are scattered in.
    pub area: f64,
    pub rate_range: [f64; 2],
    /// Explicit per-location rates; overrides `rate_range`.
    pub rates: Option<Vec<f64>>,
    pub agents: AgentConfig,
    pub horizon: u64,
    /// Rate assumed for locations that have not been observed.
    pub prior: f64,
    /// Repartition threshold on the coefficient of variation of cluster loads.
    pub theta: f64,
    pub cooldown: u64,
    #[serde(with = "policy_name")]
    pub policy: PolicyKind,
    pub seed: u64,
    pub agent_counts: Vec<usize>,
    pub seeds: Vec<u64>,
    #[serde(with = "policy_names")]
    pub policies: Vec<PolicyKind>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        let params = PolicyParams::default();
        ScenarioConfig {
            n_locations: 20,
            area: 100.0,
            rate_range: [0.05, 0.5],
            rates: None,
            agents: AgentConfig::default(),
            horizon: 2000,
            prior: params.prior,
            theta: params.threshold,
            cooldown: params.cooldown,
            policy: PolicyKind::Obp,
            seed: 0,
            agent_counts: (1..=8).collect(),
            seeds: (0..30).collect(),
            policies: PolicyKind::ALL.to_vec(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| HarnessError::Io { path: path.into(), source })?;
        let cfg: ScenarioConfig =
            serde_json::from_str(&text).map_err(|source| HarnessError::Json { path: path.into(), source })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn params(&self) -> PolicyParams {
        PolicyParams { threshold: self.theta, prior: self.prior, cooldown: self.cooldown }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.n_locations == 0 {
            return fail("n_locations must be at least 1".into());
        }
        if !(self.area.is_finite() && self.area > 0.0) {
            return fail(format!("area must be positive, got {}", self.area));
        }
        let [lo, hi] = self.rate_range;
        if !(lo.is_finite() && hi.is_finite() && lo >= 0.0 && hi >= lo) {
            return fail(format!("rate_range must satisfy 0 <= min <= max, got [{lo}, {hi}]"));
        }
        if let Some(rates) = &self.rates {
            if rates.len() != self.n_locations {
                return fail(format!("{} explicit rates for {} locations", rates.len(), self.n_locations));
            }
            if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
                return fail("explicit rates must be finite and non-negative".into());
            }
        }
        if self.agents.count == 0 || self.agents.capacity == 0 {
            return fail("agent count and capacity must be at least 1".into());
        }
        if !(self.agents.speed.is_finite() && self.agents.speed > 0.0) {
            return fail(format!("agent speed must be positive, got {}", self.agents.speed));
        }
        if self.horizon == 0 {
            return fail("horizon must be at least 1".into());
        }
        if !(self.prior.is_finite() && self.prior >= 0.0) {
            return fail(format!("prior must be non-negative, got {}", self.prior));
        }
        if !(self.theta.is_finite() && self.theta > 0.0) {
            return fail(format!("theta must be positive, got {}", self.theta));
        }
        if self.agent_counts.contains(&0) {
            return fail("agent counts must be at least 1".into());
        }
        Ok(())
    }
}

mod policy_name {
    use ctsim_core::PolicyKind;
    use serde::{de::Error, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(kind: &PolicyKind, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(kind.name())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<PolicyKind, D::Error> {
        String::deserialize(d)?.parse().map_err(D::Error::custom)
    }
}

mod policy_names {
    use ctsim_core::PolicyKind;
    use serde::{de::Error, ser::SerializeSeq, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(kinds: &[PolicyKind], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(kinds.len()))?;
        for k in kinds {
            seq.serialize_element(k.name())?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<PolicyKind>, D::Error> {
        Vec::<String>::deserialize(d)?
            .iter()
            .map(|s| s.parse().map_err(D::Error::custom))
            .collect()
    }
}
