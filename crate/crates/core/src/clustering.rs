//! Decentralized cluster formation.
//!
//! Every agent starts alone. In each sweep, agents (ascending id) score every
//! cluster with a weighted similarity and join the best one when it beats the
//! threshold; otherwise they stay alone or split off into a new singleton.
//! Centroids and heads are refreshed after each sweep, and formation stops at
//! the first sweep that moves nobody.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{agent, cosine, norm, Agent, AgentId, Cluster, ClusterId, MetaGraph, Weights};
use crate::simnet::Topology;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterParams {
    /// Hard cap on sweeps per formation call.
    pub max_rounds: usize,
    /// Largest cluster an agent may join; defaults to `ceil(4 * sqrt(n))`.
    pub max_cluster_size: Option<usize>,
}

impl Default for ClusterParams {
    fn default() -> Self {
        Self {
            max_rounds: 50,
            max_cluster_size: None,
        }
    }
}

impl ClusterParams {
    pub fn with_max_rounds(max_rounds: usize) -> Self {
        Self {
            max_rounds,
            ..Self::default()
        }
    }

    pub fn size_cap(&self, n: usize) -> usize {
        self.max_cluster_size
            .unwrap_or_else(|| (4.0 * (n as f64).sqrt()).ceil() as usize)
            .max(1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringState {
    clusters: BTreeMap<ClusterId, Cluster>,
    /// Indexed by agent id.
    assignment: Vec<ClusterId>,
    /// Sweeps performed by the last formation call.
    pub round: usize,
    next_id: ClusterId,
}

impl ClusteringState {
    /// Every agent in its own cluster, cluster id = agent id.
    pub fn singletons(agents: &[Agent]) -> Result<Self> {
        let partition: Vec<Vec<AgentId>> = agents.iter().map(|a| vec![a.id]).collect();
        Self::from_partition(&partition, agents)
    }

    /// Builds a state from explicit groups; cluster ids follow group order.
    pub fn from_partition(groups: &[Vec<AgentId>], agents: &[Agent]) -> Result<Self> {
        let mut assignment = vec![usize::MAX; agents.len()];
        let mut clusters = BTreeMap::new();
        for (cid, group) in groups.iter().enumerate() {
            for &id in group {
                agent(agents, id)?;
                if assignment[id] != usize::MAX {
                    return Err(Error::Invariant(format!("agent {id} appears in two clusters")));
                }
                assignment[id] = cid;
            }
            let mut cluster = Cluster::from_members(cid, group.clone(), agents)?;
            cluster.head = elect_head(&cluster, agents)?;
            clusters.insert(cid, cluster);
        }
        if let Some(id) = assignment.iter().position(|&c| c == usize::MAX) {
            return Err(Error::Invariant(format!("agent {id} is not in any cluster")));
        }
        Ok(Self {
            clusters,
            assignment,
            round: 0,
            next_id: groups.len(),
        })
    }

    pub fn clusters(&self) -> impl Iterator<Item = &Cluster> {
        self.clusters.values()
    }

    pub fn cluster(&self, id: ClusterId) -> Result<&Cluster> {
        self.clusters.get(&id).ok_or(Error::UnknownCluster(id))
    }

    pub fn cluster_of(&self, agent: AgentId) -> Result<&Cluster> {
        let cid = *self.assignment.get(agent).ok_or(Error::UnknownAgent(agent))?;
        self.cluster(cid)
    }

    pub fn assignment(&self) -> &[ClusterId] {
        &self.assignment
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Members of every cluster, in cluster-id order.
    pub fn partition(&self) -> Vec<Vec<AgentId>> {
        self.clusters.values().map(|c| c.members.clone()).collect()
    }

    /// Partition as a canonical set of sorted groups, independent of ids.
    pub fn canonical_partition(&self) -> Vec<Vec<AgentId>> {
        let mut p = self.partition();
        p.sort();
        p
    }

    pub fn similarity(&self, agent: &Agent, cluster: ClusterId, weights: &Weights, topology: &Topology, agents: &[Agent]) -> Result<f64> {
        similarity(agent, self.cluster(cluster)?, weights, topology, agents)
    }

    /// Checks the partition invariants against the agent table.
    pub fn validate(&self, agents: &[Agent]) -> Result<()> {
        if self.assignment.len() != agents.len() {
            return Err(Error::Invariant("assignment does not cover the agent table".into()));
        }
        let mut seen = 0;
        for (cid, c) in &self.clusters {
            if c.is_empty() {
                return Err(Error::Invariant(format!("cluster {cid} is empty")));
            }
            if !c.contains(c.head) {
                return Err(Error::Invariant(format!("head of cluster {cid} is not a member")));
            }
            for &m in &c.members {
                if self.assignment[m] != *cid {
                    return Err(Error::Invariant(format!("agent {m} disagrees with cluster {cid}")));
                }
            }
            seen += c.len();
        }
        if seen != agents.len() {
            return Err(Error::Invariant("clusters do not partition the agents".into()));
        }
        Ok(())
    }

    /// Recomputes every centroid and re-elects every head.
    pub fn refresh(&mut self, agents: &[Agent]) -> Result<()> {
        for c in self.clusters.values_mut() {
            let fresh = Cluster::from_members(c.id, std::mem::take(&mut c.members), agents)?;
            *c = fresh;
            c.head = elect_head(c, agents)?;
        }
        Ok(())
    }

    fn move_agent(&mut self, id: AgentId, to: Option<ClusterId>) {
        let from = self.assignment[id];
        let target = to.unwrap_or_else(|| {
            let fresh = self.next_id;
            self.next_id += 1;
            self.clusters.insert(
                fresh,
                Cluster {
                    id: fresh,
                    members: Vec::new(),
                    head: id,
                    centroid: Vec::new(),
                },
            );
            fresh
        });
        let source = self.clusters.get_mut(&from).expect("assignment points at a live cluster");
        if let Ok(pos) = source.members.binary_search(&id) {
            source.members.remove(pos);
        }
        if source.members.is_empty() {
            self.clusters.remove(&from);
        }
        let dest = self.clusters.get_mut(&target).expect("target cluster exists");
        if let Err(pos) = dest.members.binary_search(&id) {
            dest.members.insert(pos, id);
        }
        self.assignment[id] = target;
    }
}

fn mean_expertise(members: &[AgentId], dims: usize, agents: &[Agent]) -> Result<Vec<f64>> {
    let mut centroid = vec![0.0; dims];
    for &m in members {
        let e = agent(agents, m)?.expertise();
        if e.len() != dims {
            return Err(Error::DimensionMismatch {
                expected: dims,
                found: e.len(),
            });
        }
        for (c, x) in centroid.iter_mut().zip(e) {
            *c += x;
        }
    }
    for c in centroid.iter_mut() {
        *c /= members.len() as f64;
    }
    Ok(centroid)
}

/// Weighted sum of cosine to `centroid`, coverage of the centroid's gaps,
/// minus the mean latency to `others` normalized by the topology diameter.
fn score_against(agent_: &Agent, centroid: &[f64], others: &[AgentId], weights: &Weights, topology: &Topology) -> f64 {
    let dims = agent_.profile.dims();
    let task_similarity = cosine(agent_.expertise(), centroid);
    let complementarity = centroid
        .iter()
        .zip(agent_.expertise())
        .map(|(c, e)| (1.0 - c).max(0.0) * e)
        .sum::<f64>()
        / dims as f64;
    let diameter = topology.diameter();
    let latency: f64 = others.iter().map(|&m| topology.latency(agent_.id, m)).sum();
    let communication_cost = if diameter > 0.0 && !others.is_empty() {
        latency / others.len() as f64 / diameter
    } else {
        0.0
    };
    weights.lambda1 * task_similarity + weights.lambda2 * complementarity - weights.lambda3 * communication_cost
}

fn similarity_to_group(agent_: &Agent, others: &[AgentId], weights: &Weights, topology: &Topology, agents: &[Agent]) -> Result<f64> {
    let centroid = mean_expertise(others, agent_.profile.dims(), agents)?;
    Ok(score_against(agent_, &centroid, others, weights, topology))
}

/// Similarity of an agent to a cluster. When the agent belongs to the
/// cluster it is compared with the other members; a singleton's similarity
/// to itself is the join threshold.
pub fn similarity(agent_: &Agent, cluster: &Cluster, weights: &Weights, topology: &Topology, agents: &[Agent]) -> Result<f64> {
    if cluster.is_empty() {
        return Err(Error::EmptyCluster(cluster.id));
    }
    if cluster.contains(agent_.id) {
        if cluster.len() == 1 {
            return Ok(weights.theta);
        }
        let others: Vec<AgentId> = cluster.members.iter().copied().filter(|&m| m != agent_.id).collect();
        similarity_to_group(agent_, &others, weights, topology, agents)
    } else {
        similarity_to_group(agent_, &cluster.members, weights, topology, agents)
    }
}

/// Member with the largest expertise norm; lowest id on ties.
pub fn elect_head(cluster: &Cluster, agents: &[Agent]) -> Result<AgentId> {
    let mut best: Option<(f64, AgentId)> = None;
    for &id in &cluster.members {
        let n = norm(agent(agents, id)?.expertise());
        if best.is_none_or(|(b, bid)| n > b || (n == b && id < bid)) {
            best = Some((n, id));
        }
    }
    best.map(|(_, id)| id).ok_or(Error::EmptyCluster(cluster.id))
}

pub fn build_meta_graph(state: &ClusteringState) -> MetaGraph {
    MetaGraph::complete(state.clusters().map(|c| c.id).collect())
}

fn sweep(state: &mut ClusteringState, agents: &[Agent], weights: &Weights, topology: &Topology, cap: usize) -> Result<usize> {
    let mut changes = 0;
    for a in agents {
        let own = state.assignment[a.id];
        let mut best: Option<(f64, ClusterId)> = None;
        for (&cid, cluster) in &state.clusters {
            if cid != own && cluster.len() >= cap {
                continue;
            }
            let s = similarity(a, cluster, weights, topology, agents)?;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, cid));
            }
        }
        let (s, target) = best.expect("the agent's own cluster is always a candidate");
        if s > weights.theta {
            if target != own {
                state.move_agent(a.id, Some(target));
                changes += 1;
            }
        } else if state.clusters[&own].len() > 1 {
            state.move_agent(a.id, None);
            changes += 1;
        }
    }
    Ok(changes)
}

fn run_sweeps(mut state: ClusteringState, agents: &[Agent], weights: &Weights, params: &ClusterParams, topology: &Topology) -> Result<ClusteringState> {
    weights.validate()?;
    if params.max_rounds == 0 {
        return Err(Error::invalid("max_rounds", "must be at least 1"));
    }
    let cap = params.size_cap(agents.len());
    state.round = 0;
    while state.round < params.max_rounds {
        let changes = sweep(&mut state, agents, weights, topology, cap)?;
        state.round += 1;
        state.refresh(agents)?;
        if changes == 0 {
            break;
        }
    }
    Ok(state)
}

/// Runs formation from singletons until a sweep moves nobody or
/// `params.max_rounds` sweeps have run.
pub fn form_clusters(agents: &[Agent], weights: &Weights, params: &ClusterParams, topology: &Topology) -> Result<ClusteringState> {
    if agents.is_empty() {
        return Err(Error::NoAgents);
    }
    run_sweeps(ClusteringState::singletons(agents)?, agents, weights, params, topology)
}

/// Same as [`form_clusters`] but starting from an existing partition.
pub fn recluster(state: &ClusteringState, agents: &[Agent], weights: &Weights, params: &ClusterParams, topology: &Topology) -> Result<ClusteringState> {
    let mut start = state.clone();
    start.refresh(agents)?;
    run_sweeps(start, agents, weights, params, topology)
}
