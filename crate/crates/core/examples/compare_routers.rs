//! Completion and message cost of every router on the same task stream.

use hiercoord::{run_episode, Result, Router, ScenarioConfig};

fn main() -> Result<()> {
    println!("{:<13}{:>11}{:>10}", "router", "completion", "messages");
    for router in Router::ALL {
        let mut config = ScenarioConfig::new(64, 7);
        config.router = router;
        let m = run_episode(&config)?;
        println!("{:<13}{:>11.4}{:>10}", router.as_str(), m.completion_rate, m.messages_total);
    }
    Ok(())
}
