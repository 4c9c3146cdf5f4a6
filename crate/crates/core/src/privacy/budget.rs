use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    /// The value if `x` were added, without mutating.
    pub fn peek_add(&self, x: f64) -> f64 {
        let mut c = *self;
        c.add(x);
        c.value()
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("budget refused: spending ({epsilon}, {delta}) would exceed ({epsilon_max}, {delta_max})")]
pub struct BudgetRefusal {
    pub epsilon: f64,
    pub delta: f64,
    pub epsilon_max: f64,
    pub delta_max: f64,
}

/// Cumulative (ε, δ) ledger under basic additive composition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrivacyBudget {
    epsilon_spent: CompensatedSum,
    delta_spent: CompensatedSum,
    epsilon_max: f64,
    delta_max: f64,
    events: u64,
}

impl PrivacyBudget {
    pub fn new(epsilon_max: f64, delta_max: f64) -> Result<Self> {
        if !(epsilon_max > 0.0) {
            return Err(Error::invalid("epsilon_max", format!("{epsilon_max} must be > 0")));
        }
        if !(delta_max > 0.0) {
            return Err(Error::invalid("delta_max", format!("{delta_max} must be > 0")));
        }
        Ok(Self {
            epsilon_spent: CompensatedSum::default(),
            delta_spent: CompensatedSum::default(),
            epsilon_max,
            delta_max,
            events: 0,
        })
    }

    /// A ledger that never refuses; spends are still recorded.
    pub fn unbounded() -> Self {
        Self::new(f64::INFINITY, f64::INFINITY).expect("infinite maxima are positive")
    }

    pub fn epsilon_spent(&self) -> f64 {
        self.epsilon_spent.value()
    }

    pub fn delta_spent(&self) -> f64 {
        self.delta_spent.value()
    }

    pub fn epsilon_max(&self) -> f64 {
        self.epsilon_max
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    /// Number of accepted spends.
    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn can_spend(&self, epsilon: f64, delta: f64) -> bool {
        epsilon >= 0.0
            && delta >= 0.0
            && self.epsilon_spent.peek_add(epsilon) <= self.epsilon_max
            && self.delta_spent.peek_add(delta) <= self.delta_max
    }

    /// Charges one release. On refusal the ledger is left untouched.
    pub fn spend(&mut self, epsilon: f64, delta: f64) -> Result<(), BudgetRefusal> {
        if !self.can_spend(epsilon, delta) {
            return Err(BudgetRefusal {
                epsilon,
                delta,
                epsilon_max: self.epsilon_max,
                delta_max: self.delta_max,
            });
        }
        self.epsilon_spent.add(epsilon);
        self.delta_spent.add(delta);
        self.events += 1;
        Ok(())
    }

    pub fn within_limits(&self) -> bool {
        self.epsilon_spent() <= self.epsilon_max && self.delta_spent() <= self.delta_max
    }
}
