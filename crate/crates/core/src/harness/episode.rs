use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::scenario::{generate_scenario, rng_for, Stream};
use crate::clustering::{form_clusters, recluster, ClusteringState};
use crate::error::{Error, Result};
use crate::model::{succeeds, Agent, AgentId, Outcome, Subtask, Task};
use crate::privacy::{privatize, secure_aggregate, AggregationField, KnowledgeVector, PrivacyParams};
use crate::resources::{apply_knowledge, produce_knowledge, task_loss, update_capability, AdaptationParams};
use crate::routing::{decompose, route, status_poll, Router, COORDINATOR};
use crate::simnet::{Category, MessageLedger, Network};

/// Per-round counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round: u64,
    /// Subtasks from tasks arriving this round.
    pub released: u64,
    pub succeeded: u64,
    pub failed: u64,
    /// Subtasks dropped after their retry also found no candidate.
    pub unassigned: u64,
    /// Mean task loss of attempts finishing this round; NaN when none did.
    pub mean_task_loss: f64,
    pub clusters: usize,
    pub messages: u64,
}

impl RoundRecord {
    pub fn resolved(&self) -> u64 {
        self.succeeded + self.failed + self.unassigned
    }
}

/// Outcomes of the subtasks released in one round, whenever they resolved.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseOutcome {
    pub succeeded: u64,
    pub resolved: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub router: Router,
    /// Succeeded / resolved subtasks; 1.0 when nothing resolved.
    pub completion_rate: f64,
    pub unassigned_rate: f64,
    pub released: u64,
    pub succeeded: u64,
    pub failed: u64,
    pub unassigned: u64,
    pub messages: BTreeMap<Category, u64>,
    pub messages_total: u64,
    /// Mean latency of result deliveries back to task origins.
    pub mean_task_latency: f64,
    /// Mean task loss over the final fifth of the run.
    pub final_task_loss: f64,
    pub epsilon_spent: Vec<f64>,
    pub delta_spent: Vec<f64>,
    pub sharing_events: u64,
    pub rounds: Vec<RoundRecord>,
    /// Indexed by release round.
    pub by_release: Vec<ReleaseOutcome>,
}

impl RunMetrics {
    pub fn loss_trajectory(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.mean_task_loss).collect()
    }

    pub fn cluster_trajectory(&self) -> Vec<usize> {
        self.rounds.iter().map(|r| r.clusters).collect()
    }

    pub fn epsilon_spent_mean(&self) -> f64 {
        mean(&self.epsilon_spent)
    }
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

#[derive(Debug, Clone)]
pub struct EpisodeOutput {
    pub metrics: RunMetrics,
    pub ledger: MessageLedger,
    pub agents: Vec<Agent>,
    pub clustering: Option<ClusteringState>,
}

#[derive(Debug, Clone)]
struct Pending {
    origin: AgentId,
    released: u64,
    subtask: Subtask,
    retried_unassigned: bool,
    retried_failure: bool,
}

#[derive(Debug, Clone)]
struct Active {
    job: Pending,
    agent: AgentId,
    remaining: f64,
}

struct Simulation<'a> {
    config: &'a ScenarioConfig,
    agents: Vec<Agent>,
    net: Network,
    state: Option<ClusteringState>,
    tasks: Vec<Vec<Task>>,
    decompose_rng: ChaCha8Rng,
    router_rng: ChaCha8Rng,
    noise_rng: ChaCha8Rng,
    mask_rng: ChaCha8Rng,
    retries: Vec<Pending>,
    active: Vec<Active>,
    knowledge: Vec<KnowledgeVector>,
    adaptation: AdaptationParams,
    field: AggregationField,
    latency_sum: f64,
    deliveries: u64,
    sharing_events: u64,
    rounds: Vec<RoundRecord>,
    by_release: Vec<ReleaseOutcome>,
}

impl<'a> Simulation<'a> {
    fn new(config: &'a ScenarioConfig) -> Result<Self> {
        let scenario = generate_scenario(config)?;
        let mut sim = Self {
            config,
            knowledge: vec![KnowledgeVector::zeros(config.domains); scenario.agents.len()],
            agents: scenario.agents,
            net: Network::new(scenario.topology),
            state: None,
            tasks: scenario.tasks,
            decompose_rng: rng_for(config.seed, Stream::Decompose),
            router_rng: rng_for(config.seed, Stream::Router),
            noise_rng: rng_for(config.seed, Stream::Noise),
            mask_rng: rng_for(config.seed, Stream::Masks),
            retries: Vec::new(),
            active: Vec::new(),
            adaptation: AdaptationParams::new(config.weights.eta, config.weights.mu)?,
            field: AggregationField::new(config.privacy.prime, config.privacy.scale)?,
            latency_sum: 0.0,
            deliveries: 0,
            sharing_events: 0,
            rounds: Vec::new(),
            by_release: vec![ReleaseOutcome::default(); config.rounds as usize],
        };
        if config.router.uses_clusters() {
            let state = form_clusters(&sim.agents, &config.weights, &config.clustering, &sim.net.topology)?;
            sim.install_clusters(state)?;
        } else {
            let n = sim.agents.len();
            for a in sim.agents.iter_mut() {
                a.neighbors = (0..n).filter(|&b| b != a.id).collect();
            }
        }
        Ok(sim)
    }

    fn install_clusters(&mut self, state: ClusteringState) -> Result<()> {
        state.validate(&self.agents)?;
        self.net.election_round(&state)?;
        for c in state.clusters() {
            for &m in &c.members {
                self.agents[m].neighbors = c.members.iter().copied().filter(|&x| x != m).collect();
            }
        }
        self.state = Some(state);
        Ok(())
    }

    fn step(&mut self, round: u64) -> Result<()> {
        self.net.ledger.set_round(round);
        let before = self.net.ledger.total();
        let mut record = RoundRecord {
            round,
            released: 0,
            succeeded: 0,
            failed: 0,
            unassigned: 0,
            mean_task_loss: f64::NAN,
            clusters: self.state.as_ref().map_or(0, ClusteringState::len),
            messages: 0,
        };

        // Release and route.
        if self.config.router == Router::Centralized {
            status_poll(&self.agents, &mut self.net)?;
        }
        let mut jobs: Vec<Task> = Vec::new();
        let mut job_meta: Vec<Vec<Pending>> = Vec::new();
        for p in std::mem::take(&mut self.retries) {
            jobs.push(Task::from_subtask(p.origin, p.subtask.clone()));
            job_meta.push(vec![p]);
        }
        let arriving = std::mem::take(&mut self.tasks[round as usize]);
        for mut task in arriving {
            task.subtasks = decompose(&task, &mut self.decompose_rng, self.config.subtask_range())?;
            record.released += task.subtasks.len() as u64;
            job_meta.push(
                task.subtasks
                    .iter()
                    .map(|s| Pending {
                        origin: task.origin,
                        released: round,
                        subtask: s.clone(),
                        retried_unassigned: false,
                        retried_failure: false,
                    })
                    .collect(),
            );
            jobs.push(task);
        }
        for (task, meta) in jobs.iter().zip(job_meta) {
            let assignment = route(
                self.config.router,
                task,
                self.state.as_ref(),
                &mut self.agents,
                &self.config.weights,
                &mut self.net,
                &mut self.router_rng,
                &self.config.routing,
            )?;
            for pick in &assignment.picks {
                let job = meta[pick.subtask].clone();
                let remaining = job.subtask.workload;
                self.active.push(Active {
                    job,
                    agent: pick.agent,
                    remaining,
                });
            }
            for &idx in &assignment.unassigned {
                let mut job = meta[idx].clone();
                if job.retried_unassigned {
                    record.unassigned += 1;
                    self.by_release[job.released as usize].resolved += 1;
                } else {
                    job.retried_unassigned = true;
                    self.retries.push(job);
                }
            }
        }

        // Execute.
        let mut loss_total = 0.0;
        let mut finished = 0u64;
        let mut still_active = Vec::with_capacity(self.active.len());
        for mut work in std::mem::take(&mut self.active) {
            let speed = self.agents[work.agent].profile.cpu;
            work.remaining -= speed;
            if work.remaining > 1e-12 {
                still_active.push(work);
                continue;
            }
            let st = &work.job.subtask;
            let agent = &mut self.agents[work.agent];
            loss_total += task_loss(agent, st)?;
            finished += 1;
            let ok = succeeds(agent, st);
            let gained = produce_knowledge(agent, st)?;
            self.knowledge[work.agent].add_assign(&gained);
            update_capability(agent, st, &self.adaptation)?;
            agent.memory.push(st.key(), if ok { Outcome::Succeeded } else { Outcome::Failed });
            self.deliver(work.agent, work.job.origin)?;
            let outcome = &mut self.by_release[work.job.released as usize];
            if ok {
                record.succeeded += 1;
                outcome.succeeded += 1;
                outcome.resolved += 1;
            } else if work.job.retried_failure {
                record.failed += 1;
                outcome.resolved += 1;
            } else {
                let mut job = work.job;
                job.retried_failure = true;
                self.retries.push(job);
            }
        }
        self.active = still_active;
        self.recompute_loads();
        if finished > 0 {
            record.mean_task_loss = loss_total / finished as f64;
        }

        if self.config.sharing && (round + 1).is_multiple_of(self.config.knowledge_period) {
            self.share_knowledge()?;
        }
        if self.config.router.uses_clusters() && (round + 1).is_multiple_of(self.config.recluster_period) {
            let current = self.state.take().expect("hierarchical runs keep a clustering state");
            let next = recluster(&current, &self.agents, &self.config.weights, &self.config.clustering, &self.net.topology)?;
            self.install_clusters(next)?;
        }

        record.messages = self.net.ledger.total() - before;
        self.rounds.push(record);
        Ok(())
    }

    fn deliver(&mut self, from: AgentId, to: AgentId) -> Result<()> {
        let latency = match &self.state {
            Some(state) => self.net.route_via_heads(state, from, to)?.latency,
            None => self.net.send(from, to, Category::Routing)?,
        };
        self.latency_sum += latency;
        self.deliveries += 1;
        Ok(())
    }

    fn recompute_loads(&mut self) {
        let mut committed = vec![0.0; self.agents.len()];
        for w in &self.active {
            committed[w.agent] += w.job.subtask.workload;
        }
        for (a, c) in self.agents.iter_mut().zip(committed) {
            a.load = (c / self.config.routing.capacity).clamp(0.0, 1.0);
        }
    }

    /// Clip, charge, perturb, aggregate under masks, exchange, apply.
    fn share_knowledge(&mut self) -> Result<()> {
        let p = &self.config.privacy;
        let params = PrivacyParams::new(p.epsilon, p.delta, p.sensitivity)?;
        let mut released: Vec<Option<KnowledgeVector>> = Vec::with_capacity(self.agents.len());
        for a in self.agents.iter_mut() {
            let charged = p.is_noise_free() || a.budget.spend(p.epsilon, p.delta).is_ok();
            if charged {
                released.push(Some(privatize(&self.knowledge[a.id], &params, &mut self.noise_rng)));
                self.knowledge[a.id] = KnowledgeVector::zeros(self.config.domains);
            } else {
                released.push(None);
            }
        }
        if let Some(a) = self.agents.iter().find(|a| !a.budget.within_limits()) {
            return Err(Error::Invariant(format!("agent {} exceeded its privacy budget", a.id)));
        }
        self.sharing_events += 1;

        let groups: Vec<Vec<AgentId>> = match &self.state {
            Some(state) => state.partition(),
            None => vec![(0..self.agents.len()).collect()],
        };
        let mut aggregates = Vec::with_capacity(groups.len());
        for members in &groups {
            let contributions: Vec<KnowledgeVector> = members.iter().filter_map(|&m| released[m].clone()).collect();
            let w = 1.0 / contributions.len().max(1) as f64;
            let weighted: Vec<(KnowledgeVector, f64)> = contributions.into_iter().map(|k| (k, w)).collect();
            let agg = if weighted.is_empty() {
                KnowledgeVector::zeros(self.config.domains)
            } else {
                secure_aggregate(&weighted, &self.field, self.mask_rng.random())?
            };
            aggregates.push(agg);
        }

        match (&self.state, self.config.router) {
            (Some(state), _) => {
                self.net.knowledge_round(state)?;
            }
            (None, Router::Centralized) => {
                let everyone: Vec<AgentId> = (0..self.agents.len()).collect();
                self.net.star_knowledge_round(COORDINATOR, &everyone)?;
            }
            (None, _) => {
                let everyone: Vec<AgentId> = (0..self.agents.len()).collect();
                self.net.flat_knowledge_round(&everyone)?;
            }
        }

        let share = self.config.inter_cluster_share;
        let total = aggregates.iter().fold(KnowledgeVector::zeros(self.config.domains), |mut acc, k| {
            acc.add_assign(k);
            acc
        });
        let others = aggregates.len().saturating_sub(1);
        for (members, own) in groups.iter().zip(&aggregates) {
            let mut combined = own.clone();
            if others > 0 && share > 0.0 {
                for (c, (t, o)) in combined.0.iter_mut().zip(total.values().iter().zip(own.values())) {
                    *c += share * (t - o) / others as f64;
                }
            }
            for &m in members {
                apply_knowledge(&mut self.agents[m], &combined, &self.adaptation)?;
            }
        }
        Ok(())
    }

    fn finish(self) -> EpisodeOutput {
        let sum = |f: fn(&RoundRecord) -> u64| self.rounds.iter().map(f).sum::<u64>();
        let succeeded = sum(|r| r.succeeded);
        let failed = sum(|r| r.failed);
        let unassigned = sum(|r| r.unassigned);
        let resolved = succeeded + failed + unassigned;
        let (completion_rate, unassigned_rate) = if resolved == 0 {
            (1.0, 0.0)
        } else {
            (succeeded as f64 / resolved as f64, unassigned as f64 / resolved as f64)
        };
        let tail = (self.rounds.len() / 5).max(1);
        let tail_losses: Vec<f64> = self.rounds[self.rounds.len().saturating_sub(tail)..]
            .iter()
            .map(|r| r.mean_task_loss)
            .filter(|x| !x.is_nan())
            .collect();
        let final_task_loss = if tail_losses.is_empty() { f64::NAN } else { mean(&tail_losses) };
        let metrics = RunMetrics {
            router: self.config.router,
            completion_rate,
            unassigned_rate,
            released: sum(|r| r.released),
            succeeded,
            failed,
            unassigned,
            messages: self.net.ledger.totals_by_category(),
            messages_total: self.net.ledger.total(),
            mean_task_latency: if self.deliveries == 0 {
                0.0
            } else {
                self.latency_sum / self.deliveries as f64
            },
            final_task_loss,
            epsilon_spent: self.agents.iter().map(|a| a.budget.epsilon_spent()).collect(),
            delta_spent: self.agents.iter().map(|a| a.budget.delta_spent()).collect(),
            sharing_events: self.sharing_events,
            rounds: self.rounds,
            by_release: self.by_release,
        };
        EpisodeOutput {
            metrics,
            ledger: self.net.ledger,
            agents: self.agents,
            clustering: self.state,
        }
    }
}

/// Runs one episode and returns metrics plus the final ledger and agent table.
pub fn run_episode_full(config: &ScenarioConfig) -> Result<EpisodeOutput> {
    let mut sim = Simulation::new(config)?;
    for round in 0..config.rounds {
        sim.step(round)?;
    }
    Ok(sim.finish())
}

pub fn run_episode(config: &ScenarioConfig) -> Result<RunMetrics> {
    Ok(run_episode_full(config)?.metrics)
}
