use std::path::PathBuf;

use hiercoord::harness::{
    adaptation_experiment, recovery_rounds, run_episode, run_episode_full, RecoveryParams, RunMetrics, ScenarioConfig,
};
use hiercoord::simnet::Category;
use hiercoord::Router;

fn reference(router: Router, seed: u64) -> ScenarioConfig {
    let mut cfg = ScenarioConfig::new(64, seed);
    cfg.router = router;
    cfg
}

fn as_json(m: &RunMetrics) -> String {
    serde_json::to_string_pretty(m).unwrap()
}

#[test]
fn zero_tasks_complete_by_convention() {
    for router in Router::ALL {
        let mut cfg = ScenarioConfig::new(12, 3);
        cfg.router = router;
        cfg.rounds = 12;
        cfg.tasks.tasks_per_round = 0;
        let m = run_episode(&cfg).unwrap();
        assert_eq!(m.completion_rate, 1.0);
        assert_eq!(m.released, 0);
        for (cat, count) in &m.messages {
            if *count > 0 {
                let allowed = matches!(cat, Category::Election | Category::Knowledge)
                    || (router == Router::Centralized && *cat == Category::Routing);
                assert!(allowed, "{router}: {cat:?} = {count}");
            }
        }
    }
}

#[test]
fn single_agent_single_task() {
    let mut cfg = ScenarioConfig::new(1, 5);
    cfg.domains = 1;
    cfg.rounds = 3;
    cfg.tasks.tasks_per_round = 1;
    cfg.tasks.difficulty = [0.0, 0.0];
    cfg.tasks.subtasks = [1, 1];
    let out = run_episode_full(&cfg).unwrap();
    assert_eq!(out.metrics.completion_rate, 1.0);
    assert_eq!(out.metrics.messages.get(&Category::InterCluster).copied().unwrap_or(0), 0);
    assert!(out.metrics.succeeded >= 1);
}

#[test]
fn same_config_same_metrics() {
    for router in Router::ALL {
        let mut cfg = ScenarioConfig::new(24, 11);
        cfg.router = router;
        cfg.rounds = 40;
        assert_eq!(as_json(&run_episode(&cfg).unwrap()), as_json(&run_episode(&cfg).unwrap()));
    }
}

#[test]
fn metrics_agree_with_ledger() {
    for router in Router::ALL {
        let mut cfg = ScenarioConfig::new(20, 2);
        cfg.router = router;
        cfg.rounds = 30;
        let out = run_episode_full(&cfg).unwrap();
        let m = &out.metrics;
        assert_eq!(m.messages_total, out.ledger.total());
        assert_eq!(m.messages, out.ledger.totals_by_category());
        // formation-time elections precede the first round record
        let election_before_start = if router.uses_clusters() {
            out.ledger.rows().filter(|(r, c, _)| *r == 0 && *c == Category::Election).map(|(_, _, c)| c.count).sum::<u64>()
        } else {
            0
        };
        let per_round: u64 = m.rounds.iter().map(|r| r.messages).sum();
        assert_eq!(per_round + election_before_start, m.messages_total);
        assert!(m.succeeded + m.failed + m.unassigned <= m.released);
        assert!((0.0..=1.0).contains(&m.completion_rate));
        assert!((0.0..=1.0).contains(&m.unassigned_rate));
        let by_release: u64 = m.by_release.iter().map(|r| r.resolved).sum();
        assert_eq!(by_release, m.succeeded + m.failed + m.unassigned);
    }
}

#[test]
fn budget_spend_echoes_sharing_events() {
    let mut cfg = ScenarioConfig::new(16, 4);
    cfg.rounds = 30;
    let m = run_episode(&cfg).unwrap();
    assert_eq!(m.sharing_events, 6);
    for (&e, &d) in m.epsilon_spent.iter().zip(&m.delta_spent) {
        assert_eq!(e, 6.0);
        assert!((d - 6e-5).abs() < 1e-18);
    }
}

#[test]
fn exhausted_budgets_stop_spending() {
    let mut cfg = ScenarioConfig::new(16, 4);
    cfg.rounds = 60;
    cfg.privacy.epsilon_max = 2.5;
    let m = run_episode(&cfg).unwrap();
    assert_eq!(m.sharing_events, 12);
    assert!(m.epsilon_spent.iter().all(|&e| e == 2.0));
}

#[test]
fn noise_free_control_spends_nothing() {
    let mut cfg = ScenarioConfig::new(16, 4);
    cfg.rounds = 20;
    cfg.privacy.epsilon = f64::INFINITY;
    let m = run_episode(&cfg).unwrap();
    assert!(m.epsilon_spent.iter().all(|&e| e == 0.0));
}

#[test]
fn golden_reference_run() {
    let mut cfg = ScenarioConfig::new(32, 7);
    cfg.rounds = 50;
    let got = as_json(&run_episode(&cfg).unwrap()) + "\n";
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/reference_run.json");
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, &got).unwrap();
    }
    let want = std::fs::read_to_string(&path).expect("golden file; regenerate with UPDATE_GOLDEN=1");
    assert!(got == want, "reference run drifted from {}; rerun with UPDATE_GOLDEN=1 if intended", path.display());
}

#[test]
fn hierarchical_beats_random_assignment() {
    let mean = |router| (0..10).map(|s| run_episode(&reference(router, s)).unwrap().completion_rate).sum::<f64>() / 10.0;
    let h = mean(Router::Hierarchical);
    let r = mean(Router::Random);
    assert!(h > r + 0.05, "hierarchical {h} random {r}");
}

#[test]
fn sharing_speeds_recovery_after_a_shift() {
    let mut cfg = reference(Router::Hierarchical, 0);
    cfg.domain_shift_round = Some(50);
    let report = adaptation_experiment(&cfg, &[Router::Hierarchical], 10, &RecoveryParams::default(), true).unwrap();
    assert_eq!(report.shift_round, Some(50));
    assert_eq!(report.rows.len(), 20);
    let on = report.median(Router::Hierarchical, true, 50).unwrap();
    let off = report.median(Router::Hierarchical, false, 50).unwrap();
    assert!(on <= off, "sharing {on} vs none {off}");
}

#[test]
fn no_shift_means_no_recovery_time() {
    let m = run_episode(&reference(Router::Hierarchical, 1)).unwrap();
    assert_eq!(recovery_rounds(&m, None, &RecoveryParams::default()), Some(0));
}
