use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::norm;

/// A shareable real vector, one coordinate per task domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnowledgeVector(pub Vec<f64>);

impl KnowledgeVector {
    pub fn zeros(dims: usize) -> Self {
        Self(vec![0.0; dims])
    }

    pub fn dims(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn add_assign(&mut self, other: &KnowledgeVector) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a += b;
        }
    }
}

/// Per-release privacy parameters. `sensitivity` is the L2 clipping bound.
///
/// An infinite epsilon is accepted and means "no noise"; it is used as the
/// non-private control in sweeps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyParams {
    pub epsilon: f64,
    pub delta: f64,
    pub sensitivity: f64,
}

impl PrivacyParams {
    pub fn new(epsilon: f64, delta: f64, sensitivity: f64) -> Result<Self> {
        let p = Self {
            epsilon,
            delta,
            sensitivity,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon", format!("{} must be > 0", self.epsilon)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::invalid("delta", format!("{} must lie in (0,1)", self.delta)));
        }
        if !(self.sensitivity.is_finite() && self.sensitivity > 0.0) {
            return Err(Error::invalid("sensitivity", format!("{} must be finite and > 0", self.sensitivity)));
        }
        Ok(())
    }
}

/// Scales `k` onto the L2 ball of radius `sensitivity` if it lies outside.
pub fn clip(k: &KnowledgeVector, sensitivity: f64) -> KnowledgeVector {
    let n = k.norm();
    if n <= sensitivity {
        k.clone()
    } else {
        let s = sensitivity / n;
        KnowledgeVector(k.0.iter().map(|x| x * s).collect())
    }
}

/// Per-coordinate standard deviation of the Gaussian mechanism:
/// `sensitivity * sqrt(2 ln(1.25/δ)) / ε`.
pub fn noise_scale(params: &PrivacyParams) -> f64 {
    params.sensitivity * (2.0 * (1.25 / params.delta).ln()).sqrt() / params.epsilon
}

/// Clips `k` to the sensitivity bound and adds independent Gaussian noise to
/// every coordinate.
pub fn privatize<R: Rng + ?Sized>(k: &KnowledgeVector, params: &PrivacyParams, rng: &mut R) -> KnowledgeVector {
    let mut out = clip(k, params.sensitivity);
    let std = noise_scale(params);
    if std > 0.0 {
        let normal = Normal::new(0.0, std).expect("validated params give a finite std");
        for x in out.0.iter_mut() {
            *x += normal.sample(rng);
        }
    }
    out
}
