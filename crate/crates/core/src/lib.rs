//! Deterministic simulator for hierarchical multi-agent coordination.
//!
//! Agents self-organize into clusters with elected heads, tasks are routed
//! through the cluster hierarchy, and agents share what they learn through
//! differentially private, securely aggregated knowledge vectors. Every
//! message is counted so the communication cost of each coordination scheme
//! can be measured against the flat and centralized baselines.

pub mod cli;
pub mod clustering;
pub mod error;
pub mod harness;
pub mod model;
pub mod privacy;
pub mod resources;
pub mod routing;
pub mod simnet;

pub use error::{Error, Result};
pub use harness::{run_episode, run_episode_full, RunMetrics, ScenarioConfig};
pub use routing::Router;
