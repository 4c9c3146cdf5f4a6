mod common;

use common::{random_agents, random_partition, random_requirement, subtask, task_from};
use hiercoord::clustering::ClusteringState;
use hiercoord::model::{Agent, MatchMode, Weights};
use hiercoord::routing::{route_hierarchical, RoutingConfig};
use hiercoord::simnet::{Category, Network, Topology};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        d / (na * nb)
    }
}

/// Exhaustive search over every (cluster, agent) pair, ordered by cluster
/// score, then capability, then lowest ids.
fn brute_force(
    groups: &[Vec<usize>],
    agents: &[Agent],
    req: &[f64],
    w: &Weights,
    tau: f64,
) -> Option<(usize, usize)> {
    let mut best: Option<((f64, f64), (usize, usize))> = None;
    for (g, members) in groups.iter().enumerate() {
        let dims = req.len();
        let centroid: Vec<f64> = (0..dims)
            .map(|k| members.iter().map(|&m| agents[m].profile.expertise[k]).sum::<f64>() / members.len() as f64)
            .collect();
        if !(0..dims).any(|k| req[k] > 0.0 && centroid[k] >= tau) {
            continue;
        }
        let matched = members
            .iter()
            .map(|&m| cos(&agents[m].profile.expertise, req))
            .fold(f64::NEG_INFINITY, f64::max);
        let load = members.iter().map(|&m| agents[m].load).sum::<f64>() / members.len() as f64;
        let s = w.alpha * matched + w.beta * (1.0 - load) - w.gamma * load;
        for &m in members {
            let cap: f64 = agents[m].profile.expertise.iter().zip(req).map(|(e, r)| e * r).sum::<f64>() * (1.0 - agents[m].load);
            let key = (s, cap);
            let better = match best {
                None => true,
                Some(((bs, bc), (bg, bm))) => {
                    s > bs || (s == bs && (g < bg || (g == bg && (cap > bc || (cap == bc && m < bm)))))
                }
            };
            if better {
                best = Some((key, (g, m)));
            }
        }
    }
    best.map(|(_, pick)| pick)
}

#[test]
fn hierarchical_choices_match_exhaustive_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = RoutingConfig::default();
    let mut mismatches = 0;
    for _ in 0..200 {
        let n = rng.random_range(1..=8);
        let dims = rng.random_range(1..=4);
        let k = rng.random_range(1..=3);
        let mut agents = random_agents(&mut rng, n, dims);
        let groups = random_partition(&mut rng, n, k);
        let state = ClusteringState::from_partition(&groups, &agents).unwrap();
        let w = Weights {
            match_mode: MatchMode::MaxMember,
            ..Weights::default()
        };
        let subs: Vec<_> = (0..rng.random_range(1..=4))
            .map(|i| subtask(1, i, random_requirement(&mut rng, dims), rng.random_range(0.5..2.0)))
            .collect();
        let task = task_from(0, subs);

        let mut oracle_agents = agents.clone();
        let mut expected = Vec::new();
        for st in &task.subtasks {
            let pick = brute_force(&groups, &oracle_agents, &st.requirement, &w, cfg.tau_support);
            if let Some((_, m)) = pick {
                oracle_agents[m].load = (oracle_agents[m].load + st.workload / cfg.capacity).min(1.0);
            }
            expected.push(pick);
        }

        let mut net = Network::new(Topology::from_positions(vec![(0.0, 0.0); n]));
        let got = route_hierarchical(&task, &state, &mut agents, &w, &mut net, &cfg).unwrap();
        for (idx, exp) in expected.iter().enumerate() {
            let actual = got.picks.iter().find(|p| p.subtask == idx).map(|p| {
                let cluster = state.cluster(p.cluster.unwrap()).unwrap();
                let g = groups.iter().position(|g| g.contains(&cluster.members[0])).unwrap();
                (g, p.agent)
            });
            if actual != *exp {
                mismatches += 1;
            }
        }
        for (a, b) in agents.iter().zip(&oracle_agents) {
            assert!((a.load - b.load).abs() < 1e-12);
        }
        assert!(net.ledger.category_total(Category::Knowledge) == 0);
    }
    assert_eq!(mismatches, 0);
}

#[test]
fn message_count_follows_query_reply_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let cfg = RoutingConfig::default();
    for _ in 0..100 {
        let n = rng.random_range(2..=12);
        let dims = 3;
        let mut agents = random_agents(&mut rng, n, dims);
        let groups = random_partition(&mut rng, n, 4);
        let state = ClusteringState::from_partition(&groups, &agents).unwrap();
        let st = subtask(1, 0, random_requirement(&mut rng, dims), 1.0);
        let candidates = hiercoord::routing::candidate_clusters(&st, &state, cfg.tau_support);
        let task = task_from(0, vec![st]);
        let mut net = Network::new(Topology::from_positions(vec![(0.0, 0.0); n]));
        let out = route_hierarchical(&task, &state, &mut agents, &Weights::default(), &mut net, &cfg).unwrap();
        let expected = match out.picks.first() {
            Some(p) => 2 * candidates.len() as u64 + 2 * state.cluster(p.cluster.unwrap()).unwrap().len() as u64 + 1,
            None => 0,
        };
        assert_eq!(net.ledger.total(), expected);
        assert_eq!(net.ledger.category_total(Category::Routing), 2 * candidates.len() as u64);
    }
}
