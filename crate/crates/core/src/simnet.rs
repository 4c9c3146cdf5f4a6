//! Synchronous simulated network.
//!
//! Messages are unit-cost directed events. Every send is tallied in a
//! [`MessageLedger`] keyed by round and category, together with the summed
//! Euclidean latency of the hop. Latency never reorders anything.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clustering::ClusteringState;
use crate::error::{Error, Result};
use crate::model::AgentId;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    positions: Vec<(f64, f64)>,
    diameter: f64,
}

impl Topology {
    pub fn from_positions(positions: Vec<(f64, f64)>) -> Self {
        let mut diameter = 0.0f64;
        for (i, a) in positions.iter().enumerate() {
            for b in &positions[i + 1..] {
                diameter = diameter.max(dist(*a, *b));
            }
        }
        Self { positions, diameter }
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn position(&self, id: AgentId) -> (f64, f64) {
        self.positions[id]
    }

    pub fn positions(&self) -> &[(f64, f64)] {
        &self.positions
    }

    /// Euclidean distance between two agents.
    pub fn latency(&self, a: AgentId, b: AgentId) -> f64 {
        dist(self.positions[a], self.positions[b])
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    (a.0 - b.0).hypot(a.1 - b.1)
}

/// `n` points uniform in the unit square.
pub fn build_topology<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Topology {
    let positions = (0..n).map(|_| (rng.random::<f64>(), rng.random::<f64>())).collect();
    Topology::from_positions(positions)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Routing,
    IntraCluster,
    InterCluster,
    Election,
    Knowledge,
}

impl Category {
    pub const ALL: [Category; 5] = [
        Category::Routing,
        Category::IntraCluster,
        Category::InterCluster,
        Category::Election,
        Category::Knowledge,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Routing => "routing",
            Category::IntraCluster => "intra_cluster",
            Category::InterCluster => "inter_cluster",
            Category::Election => "election",
            Category::Knowledge => "knowledge",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Counter {
    pub count: u64,
    pub latency_sum: f64,
}

/// Per-round, per-category directed message counts.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLedger {
    round: u64,
    counters: BTreeMap<(u64, Category), Counter>,
}

impl MessageLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set_round(&mut self, round: u64) {
        self.round = round;
    }

    pub fn round(&self) -> u64 {
        self.round
    }

    pub fn record(&mut self, category: Category, latency: f64) {
        let c = self.counters.entry((self.round, category)).or_default();
        c.count += 1;
        c.latency_sum += latency;
    }

    /// Rows ordered by (round, category).
    pub fn rows(&self) -> impl Iterator<Item = (u64, Category, Counter)> + '_ {
        self.counters.iter().map(|(&(r, c), &v)| (r, c, v))
    }

    pub fn total(&self) -> u64 {
        self.counters.values().map(|c| c.count).sum()
    }

    pub fn category_total(&self, category: Category) -> u64 {
        self.counters
            .iter()
            .filter(|((_, c), _)| *c == category)
            .map(|(_, v)| v.count)
            .sum()
    }

    pub fn totals_by_category(&self) -> BTreeMap<Category, u64> {
        let mut out = BTreeMap::new();
        for ((_, c), v) in &self.counters {
            *out.entry(*c).or_insert(0) += v.count;
        }
        out
    }

    pub fn latency_total(&self) -> f64 {
        self.counters.values().map(|c| c.latency_sum).sum()
    }
}

/// Topology plus the ledger charged for every message.
#[derive(Debug, Clone)]
pub struct Network {
    pub topology: Topology,
    pub ledger: MessageLedger,
}

/// Result of delivering one logical message through cluster heads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Route {
    pub hops: usize,
    pub latency: f64,
}

/// Message counts from one knowledge-sharing round.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KnowledgeTraffic {
    /// Member-to-member sends inside clusters.
    pub intra: u64,
    /// Head-to-head sends across the meta-graph.
    pub inter: u64,
}

impl KnowledgeTraffic {
    pub fn total(&self) -> u64 {
        self.intra + self.inter
    }
}

impl Network {
    pub fn new(topology: Topology) -> Self {
        Self {
            topology,
            ledger: MessageLedger::new(),
        }
    }

    fn check(&self, id: AgentId) -> Result<()> {
        if id < self.topology.len() {
            Ok(())
        } else {
            Err(Error::UnknownAgent(id))
        }
    }

    /// One directed message. Self-sends count but add no latency.
    pub fn send(&mut self, src: AgentId, dst: AgentId, category: Category) -> Result<f64> {
        self.check(src)?;
        self.check(dst)?;
        let latency = self.topology.latency(src, dst);
        self.ledger.record(category, latency);
        Ok(latency)
    }

    /// Delivers a message from `src` to `dst` via cluster heads: one direct
    /// hop inside a cluster, otherwise src -> own head -> other head -> dst,
    /// skipping hops where an endpoint already is the head.
    pub fn route_via_heads(&mut self, state: &ClusteringState, src: AgentId, dst: AgentId) -> Result<Route> {
        let src_cluster = state.cluster_of(src)?;
        let dst_cluster = state.cluster_of(dst)?;
        let mut route = Route { hops: 0, latency: 0.0 };
        let mut hop = |net: &mut Network, a, b, cat| -> Result<()> {
            route.latency += net.send(a, b, cat)?;
            route.hops += 1;
            Ok(())
        };
        if src_cluster.id == dst_cluster.id {
            hop(self, src, dst, Category::IntraCluster)?;
        } else {
            if src != src_cluster.head {
                hop(self, src, src_cluster.head, Category::IntraCluster)?;
            }
            hop(self, src_cluster.head, dst_cluster.head, Category::InterCluster)?;
            if dst != dst_cluster.head {
                hop(self, dst_cluster.head, dst, Category::IntraCluster)?;
            }
        }
        Ok(route)
    }

    /// One hierarchical knowledge-sharing round: all-pairs directed sends
    /// inside every cluster, then all-pairs directed sends between heads.
    /// Traffic is charged to [`Category::Knowledge`].
    pub fn knowledge_round(&mut self, state: &ClusteringState) -> Result<KnowledgeTraffic> {
        let mut traffic = KnowledgeTraffic::default();
        for cluster in state.clusters() {
            for &a in &cluster.members {
                for &b in &cluster.members {
                    if a != b {
                        self.send(a, b, Category::Knowledge)?;
                        traffic.intra += 1;
                    }
                }
            }
        }
        let heads: Vec<AgentId> = state.clusters().map(|c| c.head).collect();
        for &a in &heads {
            for &b in &heads {
                if a != b {
                    self.send(a, b, Category::Knowledge)?;
                    traffic.inter += 1;
                }
            }
        }
        Ok(traffic)
    }

    /// Flat equivalent of [`Network::knowledge_round`]: all-pairs over everyone.
    pub fn flat_knowledge_round(&mut self, agents: &[AgentId]) -> Result<u64> {
        let mut sent = 0;
        for &a in agents {
            for &b in agents {
                if a != b {
                    self.send(a, b, Category::Knowledge)?;
                    sent += 1;
                }
            }
        }
        Ok(sent)
    }

    /// Star exchange through a coordinator: one upload and one download per agent.
    pub fn star_knowledge_round(&mut self, coordinator: AgentId, agents: &[AgentId]) -> Result<u64> {
        for &a in agents {
            self.send(a, coordinator, Category::Knowledge)?;
        }
        for &a in agents {
            self.send(coordinator, a, Category::Knowledge)?;
        }
        Ok(2 * agents.len() as u64)
    }

    /// Head election broadcast: every member proposes to every other member.
    pub fn election_round(&mut self, state: &ClusteringState) -> Result<u64> {
        let mut sent = 0;
        for cluster in state.clusters() {
            for &a in &cluster.members {
                for &b in &cluster.members {
                    if a != b {
                        self.send(a, b, Category::Election)?;
                        sent += 1;
                    }
                }
            }
        }
        Ok(sent)
    }
}

/// Closed-form message count of one hierarchical knowledge round.
pub fn knowledge_round_messages<I: IntoIterator<Item = usize>>(cluster_sizes: I) -> u64 {
    let mut clusters = 0u64;
    let mut intra = 0u64;
    for m in cluster_sizes {
        let m = m as u64;
        intra += m * m.saturating_sub(1);
        clusters += 1;
    }
    intra + clusters * clusters.saturating_sub(1)
}
