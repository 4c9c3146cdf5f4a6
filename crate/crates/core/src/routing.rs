//! Task decomposition and assignment.
//!
//! [`route_hierarchical`] picks the best-scoring candidate cluster for each
//! subtask and then the most capable member inside it. The flat, centralized,
//! random and greedy routers are comparison baselines that ignore clusters.
//! Every router charges its traffic to the network ledger.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringState;
use crate::error::{Error, Result};
use crate::model::{agent, capability_score, score, Agent, AgentId, ClusterId, Subtask, Task, Weights};
use crate::simnet::{Category, Network};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RoutingConfig {
    /// Workload units an agent can hold before its load saturates.
    pub capacity: f64,
    /// Minimum centroid level for a domain to count as cluster expertise.
    pub tau_support: f64,
}

impl Default for RoutingConfig {
    fn default() -> Self {
        Self {
            capacity: 5.0,
            tau_support: 0.1,
        }
    }
}

impl RoutingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.capacity.is_finite() && self.capacity > 0.0) {
            return Err(Error::invalid("routing.capacity", format!("{} must be finite and > 0", self.capacity)));
        }
        if !self.tau_support.is_finite() {
            return Err(Error::invalid("routing.tau_support", "must be finite"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Router {
    Hierarchical,
    Flat,
    Centralized,
    Random,
    Greedy,
}

impl Router {
    pub const ALL: [Router; 5] = [
        Router::Hierarchical,
        Router::Flat,
        Router::Centralized,
        Router::Random,
        Router::Greedy,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Router::Hierarchical => "hierarchical",
            Router::Flat => "flat",
            Router::Centralized => "centralized",
            Router::Random => "random",
            Router::Greedy => "greedy",
        }
    }

    pub fn uses_clusters(self) -> bool {
        self == Router::Hierarchical
    }
}

impl fmt::Display for Router {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Pick {
    /// Index into the routed task's subtasks.
    pub subtask: usize,
    pub agent: AgentId,
    pub cluster: Option<ClusterId>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Assignment {
    pub picks: Vec<Pick>,
    /// Subtasks with no candidate cluster.
    pub unassigned: Vec<usize>,
}

impl Assignment {
    pub fn agent_for(&self, subtask: usize) -> Option<AgentId> {
        self.picks.iter().find(|p| p.subtask == subtask).map(|p| p.agent)
    }
}

/// Splits a task into subtasks. Each subtask keeps the parent difficulty,
/// takes a random non-empty slice of the parent's support (rescaled so its
/// largest coordinate is 1), and a share of the workload; shares sum to the
/// parent workload.
pub fn decompose<R: Rng + ?Sized>(task: &Task, rng: &mut R, range: RangeInclusive<usize>) -> Result<Vec<Subtask>> {
    if !task.subtasks.is_empty() {
        return Err(Error::invalid("task", format!("task {} is already decomposed", task.id)));
    }
    if range.is_empty() || *range.start() == 0 {
        return Err(Error::invalid("subtask range", "must be a non-empty range of positive counts"));
    }
    let n = rng.random_range(range);
    let support: Vec<usize> = (0..task.requirement.len()).filter(|&k| task.requirement[k] > 0.0).collect();
    let shares: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..1.5)).collect();
    let share_total: f64 = shares.iter().sum();
    let mut assigned = 0.0;
    let mut out = Vec::with_capacity(n);
    for (index, share) in shares.iter().enumerate() {
        let keep: Vec<usize> = loop {
            let picked: Vec<usize> = support.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if !picked.is_empty() {
                break picked;
            }
        };
        let mut requirement = vec![0.0; task.requirement.len()];
        for &k in &keep {
            requirement[k] = task.requirement[k];
        }
        let max = requirement.iter().copied().fold(0.0, f64::max);
        for r in requirement.iter_mut() {
            *r /= max;
        }
        let workload = if index + 1 == n {
            task.workload - assigned
        } else {
            task.workload * share / share_total
        };
        assigned += workload;
        out.push(Subtask {
            parent: task.id,
            index,
            requirement,
            difficulty: task.difficulty,
            workload,
        });
    }
    Ok(out)
}

/// Clusters whose centroid reaches `tau_support` on some domain the subtask
/// requires.
pub fn candidate_clusters(subtask: &Subtask, state: &ClusteringState, tau_support: f64) -> BTreeSet<ClusterId> {
    state
        .clusters()
        .filter(|c| {
            subtask
                .requirement
                .iter()
                .zip(&c.centroid)
                .any(|(&r, &centroid)| r > 0.0 && centroid >= tau_support)
        })
        .map(|c| c.id)
        .collect()
}

/// Highest capability score among `ids`, lowest id on ties.
fn most_capable<I: IntoIterator<Item = AgentId>>(ids: I, agents: &[Agent], subtask: &Subtask) -> Result<Option<AgentId>> {
    let mut best: Option<(f64, AgentId)> = None;
    for id in ids {
        let s = capability_score(agent(agents, id)?, subtask)?;
        if best.is_none_or(|(b, _)| s > b) {
            best = Some((s, id));
        }
    }
    Ok(best.map(|(_, id)| id))
}

fn commit(agents: &mut [Agent], id: AgentId, subtask: &Subtask, cfg: &RoutingConfig) {
    agents[id].commit(subtask.workload, cfg.capacity);
}

/// Cluster-then-agent routing. Loads are updated after each subtask so later
/// siblings see earlier commitments.
///
/// Traffic per assigned subtask: a query and a reply between the origin and
/// every candidate head (routing), a query and a reply between the winning
/// head and each of its members, and one assignment (intra-cluster).
pub fn route_hierarchical(
    task: &Task,
    state: &ClusteringState,
    agents: &mut [Agent],
    weights: &Weights,
    net: &mut Network,
    cfg: &RoutingConfig,
) -> Result<Assignment> {
    let mut out = Assignment::default();
    for (idx, st) in task.subtasks.iter().enumerate() {
        let candidates = candidate_clusters(st, state, cfg.tau_support);
        let mut best: Option<(f64, ClusterId)> = None;
        for &cid in &candidates {
            let cluster = state.cluster(cid)?;
            net.send(task.origin, cluster.head, Category::Routing)?;
            net.send(cluster.head, task.origin, Category::Routing)?;
            let s = score(cluster, st, weights, agents)?;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, cid));
            }
        }
        let Some((_, cid)) = best else {
            out.unassigned.push(idx);
            continue;
        };
        let cluster = state.cluster(cid)?;
        for &m in &cluster.members {
            net.send(cluster.head, m, Category::IntraCluster)?;
            net.send(m, cluster.head, Category::IntraCluster)?;
        }
        let chosen = most_capable(cluster.members.iter().copied(), agents, st)?.ok_or(Error::EmptyCluster(cid))?;
        net.send(cluster.head, chosen, Category::IntraCluster)?;
        commit(agents, chosen, st, cfg);
        out.picks.push(Pick {
            subtask: idx,
            agent: chosen,
            cluster: Some(cid),
        });
    }
    Ok(out)
}

/// Closed-form message count of [`route_hierarchical`] for one subtask.
pub fn hierarchical_messages(candidates: usize, winner_size: usize) -> u64 {
    if candidates == 0 {
        0
    } else {
        (2 * candidates + 2 * winner_size + 1) as u64
    }
}

/// Global argmax against the loads at call time, then commit.
fn snapshot_picks(task: &Task, agents: &[Agent]) -> Result<Vec<Pick>> {
    if agents.is_empty() {
        return Err(Error::NoAgents);
    }
    task.subtasks
        .iter()
        .enumerate()
        .map(|(idx, st)| {
            let chosen = most_capable(0..agents.len(), agents, st)?.ok_or(Error::NoAgents)?;
            Ok(Pick {
                subtask: idx,
                agent: chosen,
                cluster: None,
            })
        })
        .collect()
}

/// All-pairs baseline: the origin polls every agent for every subtask.
/// Traffic: 2n + 1 routing messages per subtask.
pub fn route_flat(task: &Task, agents: &mut [Agent], net: &mut Network, cfg: &RoutingConfig) -> Result<Assignment> {
    let picks = snapshot_picks(task, agents)?;
    for pick in &picks {
        for a in 0..agents.len() {
            net.send(task.origin, a, Category::Routing)?;
            net.send(a, task.origin, Category::Routing)?;
        }
        net.send(task.origin, pick.agent, Category::Routing)?;
        commit(agents, pick.agent, &task.subtasks[pick.subtask], cfg);
    }
    Ok(Assignment {
        picks,
        unassigned: Vec::new(),
    })
}

/// Agent that plays the orchestrator for the centralized baseline.
pub const COORDINATOR: AgentId = 0;

/// Once-per-round status sweep for the centralized baseline: every agent
/// reports its load to the coordinator. Returns the message count.
pub fn status_poll(agents: &[Agent], net: &mut Network) -> Result<u64> {
    for a in agents {
        net.send(a.id, COORDINATOR, Category::Routing)?;
    }
    Ok(agents.len() as u64)
}

/// Same choices as [`route_flat`], from the coordinator's status table.
/// Traffic is one assignment per subtask; status reports are charged by
/// [`status_poll`] once per round.
pub fn route_centralized(task: &Task, agents: &mut [Agent], net: &mut Network, cfg: &RoutingConfig) -> Result<Assignment> {
    let picks = snapshot_picks(task, agents)?;
    for pick in &picks {
        net.send(COORDINATOR, pick.agent, Category::Routing)?;
        commit(agents, pick.agent, &task.subtasks[pick.subtask], cfg);
    }
    Ok(Assignment {
        picks,
        unassigned: Vec::new(),
    })
}

/// Uniformly random agent per subtask; one assignment message each.
pub fn route_random<R: Rng + ?Sized>(task: &Task, agents: &mut [Agent], rng: &mut R, net: &mut Network, cfg: &RoutingConfig) -> Result<Assignment> {
    if agents.is_empty() {
        return Err(Error::NoAgents);
    }
    let mut out = Assignment::default();
    for (idx, st) in task.subtasks.iter().enumerate() {
        let chosen = rng.random_range(0..agents.len());
        net.send(task.origin, chosen, Category::Routing)?;
        commit(agents, chosen, st, cfg);
        out.picks.push(Pick {
            subtask: idx,
            agent: chosen,
            cluster: None,
        });
    }
    Ok(out)
}

/// Largest subtasks first, each to the currently most capable agent, with
/// loads updated between picks. Traffic as [`route_flat`].
pub fn route_greedy(task: &Task, agents: &mut [Agent], net: &mut Network, cfg: &RoutingConfig) -> Result<Assignment> {
    if agents.is_empty() {
        return Err(Error::NoAgents);
    }
    let mut order: Vec<usize> = (0..task.subtasks.len()).collect();
    order.sort_by(|&a, &b| task.subtasks[b].workload.total_cmp(&task.subtasks[a].workload));
    let mut out = Assignment::default();
    for idx in order {
        let st = &task.subtasks[idx];
        let chosen = most_capable(0..agents.len(), agents, st)?.ok_or(Error::NoAgents)?;
        for a in 0..agents.len() {
            net.send(task.origin, a, Category::Routing)?;
            net.send(a, task.origin, Category::Routing)?;
        }
        net.send(task.origin, chosen, Category::Routing)?;
        commit(agents, chosen, st, cfg);
        out.picks.push(Pick {
            subtask: idx,
            agent: chosen,
            cluster: None,
        });
    }
    Ok(out)
}

/// Dispatches to the configured router. `state` is required for the
/// hierarchical router only.
#[allow(clippy::too_many_arguments)]
pub fn route<R: Rng + ?Sized>(
    router: Router,
    task: &Task,
    state: Option<&ClusteringState>,
    agents: &mut [Agent],
    weights: &Weights,
    net: &mut Network,
    rng: &mut R,
    cfg: &RoutingConfig,
) -> Result<Assignment> {
    match router {
        Router::Hierarchical => {
            let state = state.ok_or_else(|| Error::Invariant("hierarchical routing needs a clustering state".into()))?;
            route_hierarchical(task, state, agents, weights, net, cfg)
        }
        Router::Flat => route_flat(task, agents, net, cfg),
        Router::Centralized => route_centralized(task, agents, net, cfg),
        Router::Random => route_random(task, agents, rng, net, cfg),
        Router::Greedy => route_greedy(task, agents, net, cfg),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::agent_with;
    use crate::simnet::Topology;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn net(n: usize) -> Network {
        Network::new(Topology::from_positions((0..n).map(|i| (i as f64 / n as f64, 0.5)).collect()))
    }

    fn task_with(requirements: &[Vec<f64>], workload: f64) -> Task {
        let mut t = Task::new(1, 0, requirements[0].clone(), 0.3, workload * requirements.len() as f64).unwrap();
        t.subtasks = requirements
            .iter()
            .enumerate()
            .map(|(i, r)| Subtask {
                parent: 1,
                index: i,
                requirement: r.clone(),
                difficulty: 0.3,
                workload,
            })
            .collect();
        t
    }

    #[test]
    fn decompose_degenerate_range() {
        let t = Task::new(3, 0, vec![0.0, 0.5, 0.0], 0.5, 2.0).unwrap();
        let subs = decompose(&t, &mut ChaCha8Rng::seed_from_u64(1), 1..=1).unwrap();
        assert_eq!(subs.len(), 1);
        assert_eq!(subs[0].requirement, vec![0.0, 1.0, 0.0]);
        assert_eq!(subs[0].workload, 2.0);
    }

    #[test]
    fn decompose_seed_42_support() {
        let t = Task::new(3, 0, vec![1.0, 1.0, 0.0, 0.0], 0.5, 2.0).unwrap();
        let subs = decompose(&t, &mut ChaCha8Rng::seed_from_u64(42), 2..=2).unwrap();
        assert_eq!(subs.len(), 2);
        for s in &subs {
            assert_eq!(&s.requirement[2..], &[0.0, 0.0]);
            assert!(s.requirement[..2].iter().any(|&x| x > 0.0));
            assert_eq!(s.difficulty, 0.5);
            s.validate().unwrap();
        }
    }

    #[test]
    fn decompose_rejects_decomposed_task() {
        let mut t = Task::new(3, 0, vec![1.0], 0.5, 2.0).unwrap();
        t.subtasks = decompose(&t, &mut ChaCha8Rng::seed_from_u64(1), 1..=3).unwrap();
        assert!(decompose(&t, &mut ChaCha8Rng::seed_from_u64(1), 1..=3).is_err());
    }

    #[test]
    fn candidate_predicate() {
        let agents = vec![
            agent_with(0, vec![1.0, 0.0], 0.0),
            agent_with(1, vec![0.0, 1.0], 0.0),
            agent_with(2, vec![0.05, 0.05], 0.0),
        ];
        let state = ClusteringState::from_partition(&[vec![0], vec![1], vec![2]], &agents).unwrap();
        let st = task_with(&[vec![1.0, 0.0]], 1.0).subtasks.remove(0);
        assert_eq!(candidate_clusters(&st, &state, 0.1), BTreeSet::from([0]));
        let st = task_with(&[vec![0.0, 1.0]], 1.0).subtasks.remove(0);
        assert!(!candidate_clusters(&st, &state, 0.1).contains(&0));

        let agents = vec![agent_with(0, vec![0.5, 0.5], 0.0)];
        let state = ClusteringState::from_partition(&[vec![0]], &agents).unwrap();
        assert_eq!(candidate_clusters(&st, &state, 0.1), BTreeSet::from([0]));
    }

    #[test]
    fn hierarchical_single_capable_agent() {
        let mut agents = vec![agent_with(0, vec![0.9, 0.1], 0.0)];
        let state = ClusteringState::from_partition(&[vec![0]], &agents).unwrap();
        let mut net = net(1);
        let t = task_with(&[vec![1.0, 0.0]], 1.0);
        let a = route_hierarchical(&t, &state, &mut agents, &Weights::default(), &mut net, &RoutingConfig::default()).unwrap();
        assert_eq!(a.agent_for(0), Some(0));
        assert_eq!(net.ledger.total(), hierarchical_messages(1, 1));
        assert!((agents[0].load - 0.2).abs() < 1e-12);
    }

    #[test]
    fn hierarchical_no_candidates() {
        let mut agents = vec![agent_with(0, vec![1.0, 0.0], 0.0)];
        let state = ClusteringState::from_partition(&[vec![0]], &agents).unwrap();
        let mut net = net(1);
        let t = task_with(&[vec![0.0, 1.0]], 1.0);
        let a = route_hierarchical(&t, &state, &mut agents, &Weights::default(), &mut net, &RoutingConfig::default()).unwrap();
        assert_eq!(a.unassigned, vec![0]);
        assert!(a.picks.is_empty());
        assert_eq!(net.ledger.category_total(Category::IntraCluster), 0);
        assert_eq!(agents[0].load, 0.0);
    }

    #[test]
    fn flat_message_count_and_tie_break() {
        let mut agents: Vec<_> = (0..5).map(|i| agent_with(i, vec![0.5, 0.5], 1.0)).collect();
        let mut net = net(5);
        let t = task_with(&[vec![1.0, 0.0]], 1.0);
        let a = route_flat(&t, &mut agents, &mut net, &RoutingConfig::default()).unwrap();
        assert_eq!(a.agent_for(0), Some(0));
        assert_eq!(net.ledger.total(), 2 * 5 + 1);
    }

    #[test]
    fn centralized_counts_and_matches_flat() {
        let base: Vec<_> = (0..10).map(|i| agent_with(i, vec![i as f64 / 10.0, 1.0 - i as f64 / 10.0], 0.0)).collect();
        let t = task_with(&[vec![1.0, 0.0], vec![0.0, 1.0]], 1.0);
        let mut a1 = base.clone();
        let mut n1 = net(10);
        let central = route_centralized(&t, &mut a1, &mut n1, &RoutingConfig::default()).unwrap();
        assert_eq!(n1.ledger.total(), 2);
        assert_eq!(status_poll(&a1, &mut n1).unwrap(), 10);
        assert_eq!(n1.ledger.total(), 12);
        let mut a2 = base;
        let flat = route_flat(&t, &mut a2, &mut net(10), &RoutingConfig::default()).unwrap();
        assert_eq!(central.picks, flat.picks);
        assert!(route_centralized(&t, &mut [], &mut net(1), &RoutingConfig::default()).is_err());
    }

    #[test]
    fn random_router_basics() {
        let t = task_with(&[vec![1.0], vec![1.0], vec![1.0]], 1.0);
        let mut one = vec![agent_with(0, vec![0.1], 0.0)];
        let a = route_random(&t, &mut one, &mut ChaCha8Rng::seed_from_u64(0), &mut net(1), &RoutingConfig::default()).unwrap();
        assert!(a.picks.iter().all(|p| p.agent == 0));

        let base: Vec<_> = (0..6).map(|i| agent_with(i, vec![0.5], 0.0)).collect();
        let run = |seed| {
            let mut agents = base.clone();
            route_random(&t, &mut agents, &mut ChaCha8Rng::seed_from_u64(seed), &mut net(6), &RoutingConfig::default()).unwrap()
        };
        assert_eq!(run(77), run(77));
    }

    #[test]
    fn greedy_interleaves_loads() {
        let cfg = RoutingConfig {
            capacity: 1.0,
            ..RoutingConfig::default()
        };
        let t = task_with(&[vec![1.0], vec![1.0]], 1.0);
        let mut agents = vec![agent_with(0, vec![0.8], 0.0), agent_with(1, vec![0.8], 0.0)];
        let g = route_greedy(&t, &mut agents, &mut net(2), &cfg).unwrap();
        let chosen: BTreeSet<_> = g.picks.iter().map(|p| p.agent).collect();
        assert_eq!(chosen.len(), 2);

        let mut agents = vec![agent_with(0, vec![0.8], 0.0), agent_with(1, vec![0.8], 0.0)];
        let f = route_flat(&t, &mut agents, &mut net(2), &cfg).unwrap();
        assert!(f.picks.iter().all(|p| p.agent == 0));
    }

    #[test]
    fn greedy_single_and_empty() {
        let base: Vec<_> = (0..4).map(|i| agent_with(i, vec![i as f64 / 4.0], 0.0)).collect();
        let t = task_with(&[vec![1.0]], 1.0);
        let g = route_greedy(&t, &mut base.clone(), &mut net(4), &RoutingConfig::default()).unwrap();
        let f = route_flat(&t, &mut base.clone(), &mut net(4), &RoutingConfig::default()).unwrap();
        assert_eq!(g, f);
        let mut empty = t.clone();
        empty.subtasks.clear();
        let g = route_greedy(&empty, &mut base.clone(), &mut net(4), &RoutingConfig::default()).unwrap();
        assert!(g.picks.is_empty() && g.unassigned.is_empty());
    }

    #[test]
    fn greedy_orders_by_workload() {
        let mut t = task_with(&[vec![1.0], vec![1.0]], 1.0);
        t.subtasks[1].workload = 3.0;
        let mut agents = vec![agent_with(0, vec![0.8], 0.0), agent_with(1, vec![0.7], 0.0)];
        let cfg = RoutingConfig {
            capacity: 3.0,
            ..RoutingConfig::default()
        };
        let g = route_greedy(&t, &mut agents, &mut net(2), &cfg).unwrap();
        assert_eq!(g.picks[0].subtask, 1);
        assert_eq!(g.agent_for(1), Some(0));
        assert_eq!(g.agent_for(0), Some(1));
    }
}
