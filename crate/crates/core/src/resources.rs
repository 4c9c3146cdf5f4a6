//! Capability adaptation: agents move their expertise toward the demands of
//! tasks they work on, and absorb aggregated cluster knowledge.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{check_dims, Agent, Subtask, Weights};
use crate::privacy::KnowledgeVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdaptationParams {
    /// Step size for the loss-descent update.
    pub eta: f64,
    /// Rate at which aggregated knowledge is folded into expertise.
    pub mu: f64,
}

impl AdaptationParams {
    pub fn new(eta: f64, mu: f64) -> Result<Self> {
        if !(eta.is_finite() && eta > 0.0) {
            return Err(Error::invalid("eta", format!("{eta} must be finite and > 0")));
        }
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::invalid("mu", format!("{mu} must be finite and >= 0")));
        }
        Ok(Self { eta, mu })
    }
}

impl From<&Weights> for AdaptationParams {
    fn from(w: &Weights) -> Self {
        Self { eta: w.eta, mu: w.mu }
    }
}

/// Squared error between expertise and requirement over the required domains.
pub fn task_loss(agent: &Agent, subtask: &Subtask) -> Result<f64> {
    check_dims(subtask.requirement.len(), agent.profile.dims())?;
    Ok(agent
        .expertise()
        .iter()
        .zip(&subtask.requirement)
        .filter(|(_, &r)| r > 0.0)
        .map(|(e, r)| (e - r) * (e - r))
        .sum())
}

pub fn loss_gradient(agent: &Agent, subtask: &Subtask) -> Result<Vec<f64>> {
    check_dims(subtask.requirement.len(), agent.profile.dims())?;
    Ok(agent
        .expertise()
        .iter()
        .zip(&subtask.requirement)
        .map(|(e, &r)| if r > 0.0 { 2.0 * (e - r) } else { 0.0 })
        .collect())
}

/// One descent step on the task loss, clamped to the unit box. Resource
/// scalars are left alone.
pub fn update_capability(agent: &mut Agent, subtask: &Subtask, params: &AdaptationParams) -> Result<()> {
    let grad = loss_gradient(agent, subtask)?;
    for (e, g) in agent.profile.expertise.iter_mut().zip(grad) {
        *e = (*e - params.eta * g).clamp(0.0, 1.0);
    }
    Ok(())
}

pub fn apply_knowledge(agent: &mut Agent, aggregate: &KnowledgeVector, params: &AdaptationParams) -> Result<()> {
    check_dims(agent.profile.dims(), aggregate.dims())?;
    for (e, k) in agent.profile.expertise.iter_mut().zip(aggregate.values()) {
        *e = (*e + params.mu * k).clamp(0.0, 1.0);
    }
    Ok(())
}

/// The gap between demand and (pre-update) expertise on the subtask support;
/// zero off the support.
pub fn produce_knowledge(agent: &Agent, subtask: &Subtask) -> Result<KnowledgeVector> {
    check_dims(subtask.requirement.len(), agent.profile.dims())?;
    Ok(KnowledgeVector(
        agent
            .expertise()
            .iter()
            .zip(&subtask.requirement)
            .map(|(e, &r)| if r > 0.0 { r - e } else { 0.0 })
            .collect(),
    ))
}
