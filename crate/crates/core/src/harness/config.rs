use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};

use crate::clustering::ClusterParams;
use crate::error::{Error, Result};
use crate::model::{MatchMode, Weights, DEFAULT_DOMAINS};
use crate::privacy::{AggregationField, DEFAULT_PRIME, DEFAULT_SCALE};
use crate::routing::{Router, RoutingConfig};

/// Synthetic task arrivals. Two-element arrays are inclusive `[low, high]`
/// ranges sampled uniformly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskStreamConfig {
    pub tasks_per_round: usize,
    pub domains_per_task: [usize; 2],
    pub requirement_level: [f64; 2],
    pub difficulty: [f64; 2],
    pub workload: [f64; 2],
    pub subtasks: [usize; 2],
}

impl Default for TaskStreamConfig {
    fn default() -> Self {
        Self {
            tasks_per_round: 4,
            domains_per_task: [1, 3],
            requirement_level: [0.5, 1.0],
            difficulty: [0.4, 0.8],
            workload: [1.0, 3.0],
            subtasks: [1, 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrivacyConfig {
    /// Charged per sharing event. Infinite means a noise-free control.
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: f64,
    pub epsilon_max: f64,
    pub delta_max: f64,
    pub prime: u64,
    pub scale: u64,
}

impl Default for PrivacyConfig {
    fn default() -> Self {
        Self {
            epsilon: 1.0,
            delta: 1e-5,
            sensitivity: 1.0,
            epsilon_max: 50.0,
            delta_max: 1e-3,
            prime: DEFAULT_PRIME,
            scale: DEFAULT_SCALE,
        }
    }
}

impl PrivacyConfig {
    pub fn is_noise_free(&self) -> bool {
        self.epsilon == f64::INFINITY
    }
}

/// Everything needed to reproduce one episode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub n_agents: usize,
    pub seed: u64,
    #[serde(default = "default_domains")]
    pub domains: usize,
    #[serde(default, deserialize_with = "weights_with_theta")]
    pub weights: Weights,
    #[serde(default)]
    pub tasks: TaskStreamConfig,
    #[serde(default)]
    pub privacy: PrivacyConfig,
    #[serde(default)]
    pub routing: RoutingConfig,
    #[serde(default)]
    pub clustering: ClusterParams,
    #[serde(default = "default_router")]
    pub router: Router,
    #[serde(default = "default_rounds")]
    pub rounds: u64,
    /// Rounds between knowledge-sharing events.
    #[serde(default = "default_knowledge_period")]
    pub knowledge_period: u64,
    /// Rounds between re-clustering passes.
    #[serde(default = "default_recluster_period")]
    pub recluster_period: u64,
    /// Round at which the task stream moves to the other half of the domains.
    #[serde(default)]
    pub domain_shift_round: Option<u64>,
    /// Whether knowledge sharing runs at all.
    #[serde(default = "default_true")]
    pub sharing: bool,
    /// Weight of other clusters' aggregates relative to the own cluster's.
    #[serde(default = "default_inter_cluster_share")]
    pub inter_cluster_share: f64,
    #[serde(default = "default_memory_capacity")]
    pub memory_capacity: usize,
}

fn default_domains() -> usize {
    DEFAULT_DOMAINS
}
fn default_router() -> Router {
    Router::Hierarchical
}
fn default_rounds() -> u64 {
    100
}
fn default_knowledge_period() -> u64 {
    5
}
fn default_recluster_period() -> u64 {
    20
}
fn default_true() -> bool {
    true
}
fn default_inter_cluster_share() -> f64 {
    0.25
}
fn default_memory_capacity() -> usize {
    32
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightsInput {
    alpha: Option<f64>,
    beta: Option<f64>,
    gamma: Option<f64>,
    lambda1: Option<f64>,
    lambda2: Option<f64>,
    lambda3: Option<f64>,
    theta: Option<f64>,
    eta: Option<f64>,
    mu: Option<f64>,
    match_mode: Option<MatchMode>,
}

/// An explicit weights block must carry `theta`: the threshold only means
/// something on the scale of the similarity weights given alongside it.
fn weights_with_theta<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Weights, D::Error> {
    let w = WeightsInput::deserialize(d)?;
    let theta = w
        .theta
        .ok_or_else(|| serde::de::Error::custom("missing field `theta` in `weights`"))?;
    let def = Weights::default();
    Ok(Weights {
        alpha: w.alpha.unwrap_or(def.alpha),
        beta: w.beta.unwrap_or(def.beta),
        gamma: w.gamma.unwrap_or(def.gamma),
        lambda1: w.lambda1.unwrap_or(def.lambda1),
        lambda2: w.lambda2.unwrap_or(def.lambda2),
        lambda3: w.lambda3.unwrap_or(def.lambda3),
        theta,
        eta: w.eta.unwrap_or(def.eta),
        mu: w.mu.unwrap_or(def.mu),
        match_mode: w.match_mode.unwrap_or(def.match_mode),
    })
}

fn range_ok<T: PartialOrd + Copy>(r: [T; 2]) -> bool {
    r[0] <= r[1]
}

impl ScenarioConfig {
    /// Defaults everywhere except the mandatory fields.
    pub fn new(n_agents: usize, seed: u64) -> Self {
        Self {
            n_agents,
            seed,
            domains: DEFAULT_DOMAINS,
            weights: Weights::default(),
            tasks: TaskStreamConfig::default(),
            privacy: PrivacyConfig::default(),
            routing: RoutingConfig::default(),
            clustering: ClusterParams::default(),
            router: Router::Hierarchical,
            rounds: default_rounds(),
            knowledge_period: default_knowledge_period(),
            recluster_period: default_recluster_period(),
            domain_shift_round: None,
            sharing: true,
            inter_cluster_share: default_inter_cluster_share(),
            memory_capacity: default_memory_capacity(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every invariant; reports the first violation as a config error.
    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|e| match e {
            Error::Config(_) => e,
            other => Error::Config(other.to_string()),
        })
    }

    fn check(&self) -> Result<()> {
        if self.n_agents == 0 {
            return Err(Error::invalid("n_agents", "must be at least 1"));
        }
        if self.domains == 0 {
            return Err(Error::invalid("domains", "must be at least 1"));
        }
        self.weights.validate()?;
        self.routing.validate()?;
        if self.clustering.max_rounds == 0 {
            return Err(Error::invalid("clustering.max_rounds", "must be at least 1"));
        }
        if self.clustering.max_cluster_size == Some(0) {
            return Err(Error::invalid("clustering.max_cluster_size", "must be at least 1"));
        }

        let t = &self.tasks;
        if !range_ok(t.domains_per_task) || t.domains_per_task[0] == 0 {
            return Err(Error::invalid("tasks.domains_per_task", "must be an ordered range of positive counts"));
        }
        if t.domains_per_task[0] > self.domain_pool_size() {
            return Err(Error::invalid("tasks.domains_per_task", "lower bound exceeds the domain pool"));
        }
        let unit = |r: [f64; 2]| range_ok(r) && r[0] >= 0.0 && r[1] <= 1.0;
        if !unit(t.requirement_level) || t.requirement_level[1] <= 0.0 {
            return Err(Error::invalid("tasks.requirement_level", "must be an ordered range in [0,1] reaching above 0"));
        }
        if !unit(t.difficulty) {
            return Err(Error::invalid("tasks.difficulty", "must be an ordered range in [0,1]"));
        }
        if !(range_ok(t.workload) && t.workload[0] > 0.0 && t.workload[1].is_finite()) {
            return Err(Error::invalid("tasks.workload", "must be an ordered range of positive finite values"));
        }
        if !range_ok(t.subtasks) || t.subtasks[0] == 0 {
            return Err(Error::invalid("tasks.subtasks", "must be an ordered range of positive counts"));
        }

        let p = &self.privacy;
        if !(p.epsilon > 0.0) {
            return Err(Error::invalid("privacy.epsilon", format!("{} must be > 0", p.epsilon)));
        }
        if !(p.delta > 0.0 && p.delta < 1.0) {
            return Err(Error::invalid("privacy.delta", format!("{} must lie in (0,1)", p.delta)));
        }
        if !(p.sensitivity.is_finite() && p.sensitivity > 0.0) {
            return Err(Error::invalid("privacy.sensitivity", format!("{} must be finite and > 0", p.sensitivity)));
        }
        if !(p.epsilon_max > 0.0) {
            return Err(Error::invalid("privacy.epsilon_max", format!("{} must be > 0", p.epsilon_max)));
        }
        if !(p.delta_max > 0.0) {
            return Err(Error::invalid("privacy.delta_max", format!("{} must be > 0", p.delta_max)));
        }
        AggregationField::new(p.prime, p.scale).map_err(|e| Error::invalid("privacy.prime", e.to_string()))?;

        if self.knowledge_period == 0 {
            return Err(Error::invalid("knowledge_period", "must be at least 1"));
        }
        if self.recluster_period == 0 {
            return Err(Error::invalid("recluster_period", "must be at least 1"));
        }
        if let Some(r) = self.domain_shift_round {
            if self.domains < 2 {
                return Err(Error::invalid("domain_shift_round", "needs at least 2 domains"));
            }
            if r >= self.rounds {
                return Err(Error::invalid("domain_shift_round", "must fall before the last round"));
            }
        }
        if !(self.inter_cluster_share.is_finite() && self.inter_cluster_share >= 0.0) {
            return Err(Error::invalid("inter_cluster_share", "must be finite and >= 0"));
        }
        Ok(())
    }

    /// Domains tasks may draw from before any shift.
    pub fn domain_pool_size(&self) -> usize {
        if self.domain_shift_round.is_some() {
            self.domains / 2
        } else {
            self.domains
        }
    }

    pub fn subtask_range(&self) -> std::ops::RangeInclusive<usize> {
        self.tasks.subtasks[0]..=self.tasks.subtasks[1]
    }
}
