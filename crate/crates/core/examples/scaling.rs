//! Message totals against population size, with log-log slopes.

use hiercoord::harness::{scaling_experiment, ScalingParams};
use hiercoord::{Result, Router, ScenarioConfig};

fn main() -> Result<()> {
    let sizes = [64, 128, 256, 512, 1024];
    let report = scaling_experiment(&sizes, &ScenarioConfig::new(8, 1), &Router::ALL, &ScalingParams::default(), true)?;
    for row in &report.rows {
        println!("{:<13}n={:<5}{:>9} messages", row.router.as_str(), row.n, row.messages_total);
    }
    for (router, fit) in &report.fits {
        println!("{:<13}slope {:.3}  r2 {:.4}", router.as_str(), fit.slope, fit.r2);
    }
    Ok(())
}
