//! One hierarchical episode on a generated scenario.

use hiercoord::{run_episode, Result, ScenarioConfig};

fn main() -> Result<()> {
    let config = ScenarioConfig::new(64, 7);
    let m = run_episode(&config)?;
    println!("router      {}", m.router.as_str());
    println!("completion  {:.4}", m.completion_rate);
    println!("subtasks    {} released, {} succeeded, {} failed, {} unassigned", m.released, m.succeeded, m.failed, m.unassigned);
    println!("messages    {}", m.messages_total);
    for (category, count) in &m.messages {
        println!("  {:<14}{count}", category.as_str());
    }
    println!("final loss  {:.4}", m.final_task_loss);
    Ok(())
}
