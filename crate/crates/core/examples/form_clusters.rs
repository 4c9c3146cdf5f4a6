//! Cluster formation on scenario agents, with heads and the meta-graph.

use hiercoord::clustering::{build_meta_graph, form_clusters};
use hiercoord::harness::generate_scenario;
use hiercoord::{Result, ScenarioConfig};

fn main() -> Result<()> {
    let config = ScenarioConfig::new(32, 3);
    let scenario = generate_scenario(&config)?;
    let state = form_clusters(&scenario.agents, &config.weights, &config.clustering, &scenario.topology)?;
    println!("{} clusters after {} sweeps", state.len(), state.round);
    for c in state.clusters() {
        let centroid: Vec<String> = c.centroid.iter().map(|x| format!("{x:.2}")).collect();
        println!("cluster {:>3}  head {:>2}  members {:?}  centroid [{}]", c.id, c.head, c.members, centroid.join(" "));
    }
    println!("meta-graph edges: {}", build_meta_graph(&state).edges.len());
    Ok(())
}
