//! Recovery after a domain shift, with and without knowledge sharing.

use hiercoord::harness::{adaptation_experiment, RecoveryParams};
use hiercoord::{Result, Router, ScenarioConfig};

fn main() -> Result<()> {
    let mut config = ScenarioConfig::new(64, 7);
    config.domain_shift_round = Some(50);
    let routers = [Router::Hierarchical, Router::Random];
    let report = adaptation_experiment(&config, &routers, 5, &RecoveryParams::default(), true)?;
    let horizon = config.rounds - 50;
    for router in routers {
        for sharing in [true, false] {
            let median = report.median(router, sharing, horizon).unwrap_or(f64::NAN);
            println!("{:<13}sharing={sharing:<6}median recovery {median} rounds", router.as_str());
        }
    }
    Ok(())
}
