use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};

use super::config::ScenarioConfig;
use crate::error::Result;
use crate::model::{Agent, CapabilityProfile, Task, TaskId, TaskMemory};
use crate::privacy::PrivacyBudget;
use crate::simnet::{build_topology, Topology};

/// Independent random streams derived from the scenario seed, so that
/// changing the router or the noise level leaves the task stream intact.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Stream {
    Topology = 1,
    Agents = 2,
    Tasks = 3,
    Decompose = 4,
    Router = 5,
    Noise = 6,
    Masks = 7,
}

pub(crate) fn rng_for(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub agents: Vec<Agent>,
    pub topology: Topology,
    /// Arriving tasks, one batch per round.
    pub tasks: Vec<Vec<Task>>,
}

/// Specialist expertise: two domains drawn from `pool` at a high level, the
/// rest low.
fn sample_expertise<R: Rng>(rng: &mut R, dims: usize, pool: usize) -> Vec<f64> {
    let high = Beta::new(5.0, 2.0).expect("valid shape");
    let low = Beta::new(1.0, 5.0).expect("valid shape");
    let picks = sample(rng, pool, pool.min(2)).into_vec();
    (0..dims)
        .map(|k| {
            if picks.contains(&k) {
                high.sample(rng)
            } else {
                low.sample(rng)
            }
        })
        .collect()
}

fn uniform<R: Rng>(rng: &mut R, r: [f64; 2]) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        rng.random_range(r[0]..=r[1])
    }
}

pub(crate) fn build_agents(config: &ScenarioConfig, topology: &Topology) -> Result<Vec<Agent>> {
    let mut rng = rng_for(config.seed, Stream::Agents);
    // With a scheduled shift, specialties sit in the pre-shift half only.
    let pool = config.domain_pool_size();
    (0..config.n_agents)
        .map(|id| {
            let profile = CapabilityProfile::new(sample_expertise(&mut rng, config.domains, pool))?;
            let budget = PrivacyBudget::new(config.privacy.epsilon_max, config.privacy.delta_max)?;
            let mut agent = Agent::new(id, profile, budget);
            agent.memory = TaskMemory::new(config.memory_capacity);
            agent.position = topology.position(id);
            Ok(agent)
        })
        .collect()
}

/// Domains that tasks released in `round` may require.
pub(crate) fn domain_pool(config: &ScenarioConfig, round: u64) -> std::ops::Range<usize> {
    match config.domain_shift_round {
        Some(shift) if round >= shift => config.domains / 2..config.domains,
        Some(_) => 0..config.domains / 2,
        None => 0..config.domains,
    }
}

pub(crate) fn build_tasks(config: &ScenarioConfig, per_round: usize, rounds: u64) -> Result<Vec<Vec<Task>>> {
    let mut rng = rng_for(config.seed, Stream::Tasks);
    let t = &config.tasks;
    let mut next_id: TaskId = 0;
    let mut out = Vec::with_capacity(rounds as usize);
    for round in 0..rounds {
        let pool = domain_pool(config, round);
        let width = pool.len();
        let mut batch = Vec::with_capacity(per_round);
        for _ in 0..per_round {
            let k = rng.random_range(t.domains_per_task[0].min(width)..=t.domains_per_task[1].min(width));
            let mut requirement = vec![0.0; config.domains];
            for d in sample(&mut rng, width, k) {
                // Levels of exactly zero would drop the domain from the support.
                requirement[pool.start + d] = uniform(&mut rng, t.requirement_level).max(f64::EPSILON);
            }
            let difficulty = uniform(&mut rng, t.difficulty);
            let workload = uniform(&mut rng, t.workload);
            let origin = rng.random_range(0..config.n_agents);
            batch.push(Task::new(next_id, origin, requirement, difficulty, workload)?);
            next_id += 1;
        }
        out.push(batch);
    }
    Ok(out)
}

/// Agents, topology and the full task stream for a config. Seed-deterministic.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    config.validate()?;
    let topology = build_topology(config.n_agents, &mut rng_for(config.seed, Stream::Topology));
    let agents = build_agents(config, &topology)?;
    let tasks = build_tasks(config, config.tasks.tasks_per_round, config.rounds)?;
    Ok(Scenario { agents, topology, tasks })
}
