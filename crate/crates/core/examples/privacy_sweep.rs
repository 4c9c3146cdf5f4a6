//! Completion and task loss across a grid of per-event epsilon.

use hiercoord::harness::privacy_sweep;
use hiercoord::{Result, ScenarioConfig};

fn main() -> Result<()> {
    let grid = [0.1, 0.5, 1.0, 2.0, 5.0, f64::INFINITY];
    let rows = privacy_sweep(&grid, &ScenarioConfig::new(64, 7), 3, true)?;
    println!("{:>8}{:>12}{:>10}{:>12}", "epsilon", "completion", "loss", "spent");
    for r in rows {
        println!("{:>8}{:>12.4}{:>10.4}{:>12.2}", r.epsilon, r.completion_rate, r.mean_task_loss, r.epsilon_spent_mean);
    }
    Ok(())
}
