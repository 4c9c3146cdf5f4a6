#![allow(dead_code)]

use hiercoord::model::{Agent, CapabilityProfile, Subtask, Task};
use hiercoord::privacy::PrivacyBudget;
use hiercoord::simnet::Topology;
use rand::Rng;

pub fn agent(id: usize, expertise: Vec<f64>, load: f64) -> Agent {
    let mut a = Agent::new(id, CapabilityProfile::new(expertise).unwrap(), PrivacyBudget::unbounded());
    a.load = load;
    a
}

pub fn random_agents<R: Rng>(rng: &mut R, n: usize, dims: usize) -> Vec<Agent> {
    (0..n)
        .map(|id| {
            let e = (0..dims).map(|_| rng.random::<f64>()).collect();
            agent(id, e, rng.random_range(0.0..0.9))
        })
        .collect()
}

pub fn random_topology<R: Rng>(rng: &mut R, n: usize) -> Topology {
    Topology::from_positions((0..n).map(|_| (rng.random(), rng.random())).collect())
}

/// Random requirement with at least one positive coordinate.
pub fn random_requirement<R: Rng>(rng: &mut R, dims: usize) -> Vec<f64> {
    loop {
        let r: Vec<f64> = (0..dims)
            .map(|_| if rng.random_bool(0.5) { rng.random_range(0.05..1.0) } else { 0.0 })
            .collect();
        if r.iter().any(|&x| x > 0.0) {
            return r;
        }
    }
}

pub fn subtask(parent: u64, index: usize, requirement: Vec<f64>, workload: f64) -> Subtask {
    Subtask {
        parent,
        index,
        requirement,
        difficulty: 0.5,
        workload,
    }
}

/// A task already split into the given subtasks.
pub fn task_from(origin: usize, subtasks: Vec<Subtask>) -> Task {
    let total: f64 = subtasks.iter().map(|s| s.workload).sum();
    let mut t = Task::new(subtasks[0].parent, origin, subtasks[0].requirement.clone(), 0.5, total).unwrap();
    t.subtasks = subtasks;
    t
}

/// Uniformly random partition of `0..n` into at most `k` non-empty groups.
pub fn random_partition<R: Rng>(rng: &mut R, n: usize, k: usize) -> Vec<Vec<usize>> {
    let k = k.clamp(1, n);
    let mut groups = vec![Vec::new(); k];
    for (i, g) in groups.iter_mut().enumerate() {
        g.push(i);
    }
    for a in k..n {
        groups[rng.random_range(0..k)].push(a);
    }
    groups
}
