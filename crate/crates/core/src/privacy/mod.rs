//! Privacy-preserving knowledge sharing.
//!
//! Agents clip and perturb their knowledge vectors with the Gaussian
//! mechanism, pay for each release from an additive (ε, δ) budget, and the
//! perturbed vectors are summed inside a prime field under pairwise masks so
//! that no individual submission is visible to the aggregator.

mod budget;
mod field;
mod gaussian;

pub use budget::{BudgetRefusal, CompensatedSum, PrivacyBudget};
pub use field::{
    aggregate_submissions, masked_submissions, secure_aggregate, AggregationField, FieldElement, DEFAULT_PRIME,
    DEFAULT_SCALE,
};
pub use gaussian::{clip, noise_scale, privatize, KnowledgeVector, PrivacyParams};
