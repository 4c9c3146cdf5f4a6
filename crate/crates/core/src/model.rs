//! Domain types shared by every subsystem, plus the scalar scoring functions
//! used by cluster selection and agent selection.

use std::collections::{BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::privacy::PrivacyBudget;

pub type AgentId = usize;
pub type ClusterId = usize;
pub type TaskId = u64;

pub const DEFAULT_DOMAINS: usize = 8;

/// Per-agent expertise over task domains plus static resource capacities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapabilityProfile {
    pub expertise: Vec<f64>,
    pub cpu: f64,
    pub memory: f64,
    pub bandwidth: f64,
}

impl CapabilityProfile {
    /// Profile with the given expertise and unit resource scalars.
    pub fn new(expertise: Vec<f64>) -> Result<Self> {
        let profile = Self {
            expertise,
            cpu: 1.0,
            memory: 1.0,
            bandwidth: 1.0,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(x) = self
            .expertise
            .iter()
            .find(|x| !(0.0..=1.0).contains(*x))
        {
            return Err(Error::invalid("expertise", format!("coordinate {x} outside [0,1]")));
        }
        for (name, v) in [("cpu", self.cpu), ("memory", self.memory), ("bandwidth", self.bandwidth)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(name, format!("{v} is not finite and non-negative")));
            }
        }
        Ok(())
    }

    pub fn dims(&self) -> usize {
        self.expertise.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Succeeded,
    Failed,
}

/// Identifies a subtask by its parent task and position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubtaskKey {
    pub task: TaskId,
    pub index: usize,
}

/// Bounded task-history log; oldest records are evicted first.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskMemory {
    capacity: usize,
    records: VecDeque<(SubtaskKey, Outcome)>,
}

impl TaskMemory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            records: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, key: SubtaskKey, outcome: Outcome) {
        if self.capacity == 0 {
            return;
        }
        if self.records.len() == self.capacity {
            self.records.pop_front();
        }
        self.records.push_back((key, outcome));
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &(SubtaskKey, Outcome)> {
        self.records.iter()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub id: AgentId,
    pub profile: CapabilityProfile,
    /// Fraction of capacity committed, in [0,1].
    pub load: f64,
    pub neighbors: BTreeSet<AgentId>,
    pub memory: TaskMemory,
    pub budget: PrivacyBudget,
    pub position: (f64, f64),
}

impl Agent {
    pub fn new(id: AgentId, profile: CapabilityProfile, budget: PrivacyBudget) -> Self {
        Self {
            id,
            profile,
            load: 0.0,
            neighbors: BTreeSet::new(),
            memory: TaskMemory::new(32),
            budget,
            position: (0.0, 0.0),
        }
    }

    pub fn expertise(&self) -> &[f64] {
        &self.profile.expertise
    }

    pub fn idle_fraction(&self) -> f64 {
        1.0 - self.load
    }

    /// Commits `workload / capacity` more load, saturating at 1.
    pub fn commit(&mut self, workload: f64, capacity: f64) {
        self.load = (self.load + workload / capacity).clamp(0.0, 1.0);
    }
}

/// Looks up an agent by id. Agent tables are dense: `agents[i].id == i`.
pub fn agent(agents: &[Agent], id: AgentId) -> Result<&Agent> {
    agents.get(id).ok_or(Error::UnknownAgent(id))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subtask {
    pub parent: TaskId,
    pub index: usize,
    pub requirement: Vec<f64>,
    pub difficulty: f64,
    pub workload: f64,
}

impl Subtask {
    pub fn key(&self) -> SubtaskKey {
        SubtaskKey {
            task: self.parent,
            index: self.index,
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_demand(&self.requirement, self.difficulty, self.workload)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Task {
    pub id: TaskId,
    /// Agent at which the task arrives; routing traffic originates here.
    pub origin: AgentId,
    pub requirement: Vec<f64>,
    pub difficulty: f64,
    pub workload: f64,
    pub subtasks: Vec<Subtask>,
}

impl Task {
    pub fn new(id: TaskId, origin: AgentId, requirement: Vec<f64>, difficulty: f64, workload: f64) -> Result<Self> {
        validate_demand(&requirement, difficulty, workload)?;
        Ok(Self {
            id,
            origin,
            requirement,
            difficulty,
            workload,
            subtasks: Vec::new(),
        })
    }

    /// A task wrapping a single subtask, with the requirement of that subtask.
    pub fn from_subtask(origin: AgentId, subtask: Subtask) -> Self {
        Self {
            id: subtask.parent,
            origin,
            requirement: subtask.requirement.clone(),
            difficulty: subtask.difficulty,
            workload: subtask.workload,
            subtasks: vec![subtask],
        }
    }
}

fn validate_demand(requirement: &[f64], difficulty: f64, workload: f64) -> Result<()> {
    if requirement.iter().any(|x| !(0.0..=1.0).contains(x)) {
        return Err(Error::invalid("requirement", "coordinates must lie in [0,1]"));
    }
    if !requirement.iter().any(|&x| x > 0.0) {
        return Err(Error::invalid("requirement", "needs at least one positive coordinate"));
    }
    if !(0.0..=1.0).contains(&difficulty) {
        return Err(Error::invalid("difficulty", format!("{difficulty} outside [0,1]")));
    }
    if !(workload.is_finite() && workload > 0.0) {
        return Err(Error::invalid("workload", format!("{workload} must be positive")));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    pub id: ClusterId,
    /// Sorted ascending, no duplicates.
    pub members: Vec<AgentId>,
    pub head: AgentId,
    /// Mean member expertise.
    pub centroid: Vec<f64>,
}

impl Cluster {
    /// Builds a cluster from members, computing the centroid. The head is
    /// provisionally the lowest member id; callers re-elect as needed.
    pub fn from_members(id: ClusterId, mut members: Vec<AgentId>, agents: &[Agent]) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        let head = *members.first().ok_or(Error::EmptyCluster(id))?;
        let centroid = centroid_of(&members, agents)?;
        Ok(Self {
            id,
            members,
            head,
            centroid,
        })
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, id: AgentId) -> bool {
        self.members.binary_search(&id).is_ok()
    }
}

/// Mean expertise of the given agents.
pub fn centroid_of(members: &[AgentId], agents: &[Agent]) -> Result<Vec<f64>> {
    let first = members.first().ok_or(Error::NoAgents)?;
    let dims = agent(agents, *first)?.profile.dims();
    let mut sum = vec![0.0; dims];
    for &id in members {
        let e = agent(agents, id)?.expertise();
        check_dims(dims, e.len())?;
        for (s, x) in sum.iter_mut().zip(e) {
            *s += x;
        }
    }
    let n = members.len() as f64;
    Ok(sum.into_iter().map(|s| s / n).collect())
}

/// Complete graph over cluster heads.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetaGraph {
    pub nodes: Vec<ClusterId>,
    pub edges: Vec<(ClusterId, ClusterId)>,
}

impl MetaGraph {
    pub fn complete(mut nodes: Vec<ClusterId>) -> Self {
        nodes.sort_unstable();
        nodes.dedup();
        let mut edges = Vec::with_capacity(nodes.len() * nodes.len().saturating_sub(1) / 2);
        for (i, &a) in nodes.iter().enumerate() {
            for &b in &nodes[i + 1..] {
                edges.push((a, b));
            }
        }
        Self { nodes, edges }
    }
}

/// How a cluster's expertise is compared with a subtask requirement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Best cosine over members.
    #[default]
    MaxMember,
    /// Cosine against the cluster centroid.
    Centroid,
}

/// Coefficients for cluster scoring, cluster similarity, the join threshold
/// and the adaptation rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Weights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda3: f64,
    pub theta: f64,
    pub eta: f64,
    pub mu: f64,
    pub match_mode: MatchMode,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            beta: 0.5,
            gamma: 0.5,
            lambda1: 1.0,
            lambda2: 0.5,
            lambda3: 0.2,
            theta: 0.5,
            eta: 0.1,
            mu: 0.1,
            match_mode: MatchMode::MaxMember,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
            ("lambda1", self.lambda1),
            ("lambda2", self.lambda2),
            ("lambda3", self.lambda3),
            ("mu", self.mu),
        ];
        for (name, v) in non_negative {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(format!("weights.{name}"), format!("{v} must be finite and >= 0")));
            }
        }
        if !self.theta.is_finite() {
            return Err(Error::invalid("weights.theta", "must be finite"));
        }
        if !(self.eta.is_finite() && self.eta > 0.0) {
            return Err(Error::invalid("weights.eta", format!("{} must be finite and > 0", self.eta)));
        }
        Ok(())
    }
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let denom = norm(a) * norm(b);
    if denom == 0.0 {
        0.0
    } else {
        dot(a, b) / denom
    }
}

/// How well a cluster covers a subtask's requirement, in [0,1].
pub fn expertise_match(cluster: &Cluster, task: &Subtask, agents: &[Agent], mode: MatchMode) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(cluster.id));
    }
    match mode {
        MatchMode::MaxMember => {
            let mut best = f64::NEG_INFINITY;
            for &id in &cluster.members {
                let e = agent(agents, id)?.expertise();
                check_dims(task.requirement.len(), e.len())?;
                best = best.max(cosine(e, &task.requirement));
            }
            Ok(best)
        }
        MatchMode::Centroid => {
            check_dims(task.requirement.len(), cluster.centroid.len())?;
            Ok(cosine(&cluster.centroid, &task.requirement))
        }
    }
}

/// Mean idle fraction over members.
pub fn resource_availability(cluster: &Cluster, agents: &[Agent]) -> Result<f64> {
    Ok(1.0 - cluster_load(cluster, agents)?)
}

/// Mean member load.
pub fn cluster_load(cluster: &Cluster, agents: &[Agent]) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(cluster.id));
    }
    let mut total = 0.0;
    for &id in &cluster.members {
        total += agent(agents, id)?.load;
    }
    Ok(total / cluster.len() as f64)
}

/// Linear combination of match, availability and load.
pub fn score_terms(weights: &Weights, expertise_match: f64, availability: f64, load: f64) -> f64 {
    weights.alpha * expertise_match + weights.beta * availability - weights.gamma * load
}

pub fn score(cluster: &Cluster, task: &Subtask, weights: &Weights, agents: &[Agent]) -> Result<f64> {
    let m = expertise_match(cluster, task, agents, weights.match_mode)?;
    let load = cluster_load(cluster, agents)?;
    Ok(score_terms(weights, m, 1.0 - load, load))
}

/// Agent-level fit: expertise·requirement scaled by the idle fraction.
pub fn capability_score(agent: &Agent, task: &Subtask) -> Result<f64> {
    check_dims(task.requirement.len(), agent.profile.dims())?;
    Ok(dot(agent.expertise(), &task.requirement) * agent.idle_fraction())
}

/// Deterministic success rule: the requirement-weighted mean expertise must
/// reach the difficulty.
pub fn succeeds(agent: &Agent, task: &Subtask) -> bool {
    let l1: f64 = task.requirement.iter().map(|x| x.abs()).sum();
    l1 > 0.0 && dot(agent.expertise(), &task.requirement) / l1 >= task.difficulty
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;

    pub fn agent_with(id: AgentId, expertise: Vec<f64>, load: f64) -> Agent {
        let mut a = Agent::new(id, CapabilityProfile::new(expertise).unwrap(), PrivacyBudget::unbounded());
        a.load = load;
        a
    }

    pub fn subtask(requirement: Vec<f64>) -> Subtask {
        Subtask {
            parent: 0,
            index: 0,
            requirement,
            difficulty: 0.5,
            workload: 1.0,
        }
    }

    pub fn cluster(id: ClusterId, members: Vec<AgentId>, agents: &[Agent]) -> Cluster {
        Cluster::from_members(id, members, agents).unwrap()
    }
}
