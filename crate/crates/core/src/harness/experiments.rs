use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::episode::{run_episode, ReleaseOutcome, RunMetrics};
use super::scenario::{build_agents, build_tasks, rng_for, Stream};
use crate::clustering::ClusteringState;
use crate::error::{Error, Result};
use crate::model::AgentId;
use crate::routing::{decompose, route, status_poll, Router, COORDINATOR};
use crate::simnet::{build_topology, Category, Network};

/// Runs `f` over `items`, in parallel when asked. Output order follows input
/// order either way.
fn map_items<T: Sync, U: Send>(items: &[T], parallel: bool, f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    /// Routing + knowledge rounds per population size.
    pub rounds: u64,
    /// One task arrives per this many agents each round.
    pub agents_per_task: usize,
}

impl Default for ScalingParams {
    fn default() -> Self {
        Self {
            rounds: 2,
            agents_per_task: 16,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub router: Router,
    pub n: usize,
    pub messages_total: u64,
    /// Member-level traffic; the whole population counts as one group for
    /// routers without clusters.
    pub messages_intra: u64,
    /// Head-level and origin-to-head traffic.
    pub messages_inter: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares of `ln y` against `ln x`.
pub fn fit_log_log(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::invalid("sizes", "need at least two sizes to fit a slope"));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("sizes", "need at least two distinct sizes"));
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(LogLogFit {
        slope,
        intercept: my - slope * mx,
        r2,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    pub fits: BTreeMap<Router, LogLogFit>,
}

/// Contiguous groups of `ceil(sqrt(n))` agents.
pub fn balanced_partition(n: usize) -> Vec<Vec<AgentId>> {
    let size = (n as f64).sqrt().ceil().max(1.0) as usize;
    (0..n).collect::<Vec<_>>().chunks(size).map(<[AgentId]>::to_vec).collect()
}

fn scaling_point(template: &ScenarioConfig, params: &ScalingParams, router: Router, n: usize) -> Result<ScalingRow> {
    let mut cfg = template.clone();
    cfg.n_agents = n;
    cfg.router = router;
    cfg.rounds = params.rounds;
    cfg.domain_shift_round = None;
    cfg.validate()?;
    let topology = build_topology(n, &mut rng_for(cfg.seed, Stream::Topology));
    let mut agents = build_agents(&cfg, &topology)?;
    let per_round = n.div_ceil(params.agents_per_task.max(1));
    let tasks = build_tasks(&cfg, per_round, params.rounds)?;
    let state = if router.uses_clusters() {
        Some(ClusteringState::from_partition(&balanced_partition(n), &agents)?)
    } else {
        None
    };
    let mut net = Network::new(topology);
    let mut decompose_rng = rng_for(cfg.seed, Stream::Decompose);
    let mut router_rng = rng_for(cfg.seed, Stream::Router);
    let everyone: Vec<AgentId> = (0..n).collect();
    let mut knowledge_intra = 0;
    let mut knowledge_inter = 0;
    for (round, batch) in tasks.into_iter().enumerate() {
        net.ledger.set_round(round as u64);
        if router == Router::Centralized {
            status_poll(&agents, &mut net)?;
        }
        for mut task in batch {
            task.subtasks = decompose(&task, &mut decompose_rng, cfg.subtask_range())?;
            route(router, &task, state.as_ref(), &mut agents, &cfg.weights, &mut net, &mut router_rng, &cfg.routing)?;
        }
        match (&state, router) {
            (Some(state), _) => {
                let t = net.knowledge_round(state)?;
                knowledge_intra += t.intra;
                knowledge_inter += t.inter;
            }
            (None, Router::Centralized) => knowledge_intra += net.star_knowledge_round(COORDINATOR, &everyone)?,
            (None, _) => knowledge_intra += net.flat_knowledge_round(&everyone)?,
        }
    }
    let total = net.ledger.total();
    let (intra, inter) = if state.is_some() {
        (
            knowledge_intra + net.ledger.category_total(Category::IntraCluster),
            knowledge_inter + net.ledger.category_total(Category::Routing) + net.ledger.category_total(Category::InterCluster),
        )
    } else {
        (total, 0)
    };
    debug_assert_eq!(intra + inter, total);
    Ok(ScalingRow {
        router,
        n,
        messages_total: total,
        messages_intra: intra,
        messages_inter: inter,
    })
}

/// Message totals per router and population size, with a log-log slope per
/// router. Hierarchical runs use balanced clusters of `ceil(sqrt(n))`.
pub fn scaling_experiment(
    sizes: &[usize],
    template: &ScenarioConfig,
    routers: &[Router],
    params: &ScalingParams,
    parallel: bool,
) -> Result<ScalingReport> {
    if sizes.is_empty() || routers.is_empty() {
        return Err(Error::invalid("sizes", "need at least one size and one router"));
    }
    let mut sorted_sizes = sizes.to_vec();
    sorted_sizes.sort_unstable();
    sorted_sizes.dedup();
    let mut sorted_routers = routers.to_vec();
    sorted_routers.sort_unstable();
    sorted_routers.dedup();
    let jobs: Vec<(Router, usize)> = sorted_routers
        .iter()
        .flat_map(|&r| sorted_sizes.iter().map(move |&n| (r, n)))
        .collect();
    let rows = map_items(&jobs, parallel, |&(r, n)| scaling_point(template, params, r, n))?;
    let mut fits = BTreeMap::new();
    if sorted_sizes.len() >= 2 {
        for &r in &sorted_routers {
            let pts: Vec<(f64, f64)> = rows
                .iter()
                .filter(|row| row.router == r)
                .map(|row| (row.n as f64, row.messages_total as f64))
                .collect();
            fits.insert(r, fit_log_log(&pts)?);
        }
    }
    Ok(ScalingReport { rows, fits })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyRow {
    pub epsilon: f64,
    pub delta: f64,
    pub completion_rate: f64,
    pub mean_task_loss: f64,
    pub epsilon_spent_mean: f64,
}

/// Config for one grid point: same seeds and schedule, noise set by `epsilon`.
/// Budget maxima scale with epsilon so every point allows the same number
/// of sharing events.
pub fn privacy_variant(base: &ScenarioConfig, epsilon: f64) -> ScenarioConfig {
    let mut cfg = base.clone();
    let events = base.privacy.epsilon_max / base.privacy.epsilon;
    cfg.privacy.epsilon = epsilon;
    cfg.privacy.epsilon_max = if epsilon.is_finite() {
        events * epsilon
    } else {
        f64::INFINITY
    };
    cfg
}

fn nan_mean(xs: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = xs.filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Completion and loss across an epsilon grid. `replicates` paired seeds
/// (`seed`, `seed + 1`, ...) are averaged at every grid point. Rows come back
/// sorted by epsilon, with infinity last.
pub fn privacy_sweep(epsilons: &[f64], base: &ScenarioConfig, replicates: usize, parallel: bool) -> Result<Vec<PrivacyRow>> {
    if epsilons.is_empty() {
        return Err(Error::invalid("epsilons", "need at least one value"));
    }
    if let Some(e) = epsilons.iter().find(|e| !(**e > 0.0)) {
        return Err(Error::invalid("epsilons", format!("{e} must be > 0")));
    }
    base.validate()?;
    let mut grid = epsilons.to_vec();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let replicates = replicates.max(1) as u64;
    let jobs: Vec<(f64, u64)> = grid
        .iter()
        .flat_map(|&e| (0..replicates).map(move |r| (e, r)))
        .collect();
    let runs = map_items(&jobs, parallel, |&(e, r)| {
        let mut cfg = privacy_variant(base, e);
        cfg.seed = base.seed.wrapping_add(r);
        run_episode(&cfg)
    })?;
    Ok(grid
        .iter()
        .enumerate()
        .map(|(i, &epsilon)| {
            let chunk: &[RunMetrics] = &runs[i * replicates as usize..(i + 1) * replicates as usize];
            let k = chunk.len() as f64;
            PrivacyRow {
                epsilon,
                delta: base.privacy.delta,
                completion_rate: chunk.iter().map(|m| m.completion_rate).sum::<f64>() / k,
                mean_task_loss: nan_mean(chunk.iter().map(|m| m.final_task_loss)),
                epsilon_spent_mean: chunk.iter().map(RunMetrics::epsilon_spent_mean).sum::<f64>() / k,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationParams {
    /// Tolerance below the pre-shift completion rate that counts as recovered.
    pub tolerance: f64,
    /// Rounds in the trailing completion window.
    pub window: u64,
    /// Rounds before the shift used for the baseline rate.
    pub baseline_rounds: u64,
}

impl Default for AdaptationParams {
    fn default() -> Self {
        Self {
            tolerance: 0.05,
            window: 5,
            baseline_rounds: 20,
        }
    }
}

/// Rounds after the shift until the completion rate of newly released work
/// climbs back to the pre-shift rate minus the tolerance. Outcomes count
/// against the round their task was released, so work already in flight at
/// the shift cannot mask the dip. `None` when the rate never recovers; zero
/// when no shift is configured.
pub fn recovery_rounds(metrics: &RunMetrics, shift: Option<u64>, params: &AdaptationParams) -> Option<u64> {
    let Some(shift) = shift else {
        return Some(0);
    };
    let shift = shift as usize;
    let rate = |rows: &[ReleaseOutcome]| {
        let resolved: u64 = rows.iter().map(|r| r.resolved).sum();
        let ok: u64 = rows.iter().map(|r| r.succeeded).sum();
        (resolved > 0).then(|| ok as f64 / resolved as f64)
    };
    let rows = &metrics.by_release;
    let start = shift.saturating_sub(params.baseline_rounds as usize);
    let baseline = rate(&rows[start..shift.min(rows.len())]).unwrap_or(1.0);
    let target = baseline - params.tolerance;
    for r in shift..rows.len() {
        let lo = (r + 1).saturating_sub(params.window as usize).max(shift);
        if rate(&rows[lo..=r]).is_some_and(|x| x >= target) {
            return Some((r - shift) as u64);
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdaptationRow {
    pub router: Router,
    pub sharing: bool,
    pub seed: u64,
    pub recovery_rounds: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptationReport {
    pub shift_round: Option<u64>,
    pub rows: Vec<AdaptationRow>,
}

impl AdaptationReport {
    /// Median recovery for one (router, sharing) arm; unrecovered runs count
    /// as the remaining horizon.
    pub fn median(&self, router: Router, sharing: bool, horizon: u64) -> Option<f64> {
        let mut v: Vec<u64> = self
            .rows
            .iter()
            .filter(|r| r.router == router && r.sharing == sharing)
            .map(|r| r.recovery_rounds.unwrap_or(horizon))
            .collect();
        if v.is_empty() {
            return None;
        }
        v.sort_unstable();
        let m = v.len() / 2;
        Some(if v.len().is_multiple_of(2) {
            (v[m - 1] + v[m]) as f64 / 2.0
        } else {
            v[m] as f64
        })
    }
}

/// Rounds-to-recover after a domain shift, per router, with knowledge sharing
/// on and off, over `seeds` paired seeds.
pub fn adaptation_experiment(
    config: &ScenarioConfig,
    routers: &[Router],
    seeds: usize,
    params: &AdaptationParams,
    parallel: bool,
) -> Result<AdaptationReport> {
    config.validate()?;
    let jobs: Vec<(Router, bool, u64)> = routers
        .iter()
        .flat_map(|&r| [true, false].into_iter().map(move |s| (r, s)))
        .flat_map(|(r, s)| (0..seeds.max(1) as u64).map(move |k| (r, s, config.seed.wrapping_add(k))))
        .collect();
    let rows = map_items(&jobs, parallel, |&(router, sharing, seed)| {
        let mut cfg = config.clone();
        cfg.router = router;
        cfg.sharing = sharing;
        cfg.seed = seed;
        let metrics = run_episode(&cfg)?;
        Ok(AdaptationRow {
            router,
            sharing,
            seed,
            recovery_rounds: recovery_rounds(&metrics, cfg.domain_shift_round, params),
        })
    })?;
    Ok(AdaptationReport {
        shift_round: config.domain_shift_round,
        rows,
    })
}
