//! Sequential search, evaluation and selection of candidates from two
//! categories.
//!
//! A recruiter fills one slot. Each period it either evaluates a pool
//! candidate, drawing a Bernoulli signal about the candidate's qualification,
//! or searches, which brings a new candidate of category A or B (or nobody).
//! The first candidate whose posterior reaches the category threshold is
//! hired. The crate computes the myopic and index rules for this problem,
//! the probability that each category is eventually hired, and how those
//! probabilities move when search is tilted toward one category.

pub mod cli;
pub mod error;
pub mod evaluator;
pub mod experiments;
pub mod indices;
pub mod model;
pub mod policies;
pub mod scenario_io;

pub use error::{Error, Result};
pub use evaluator::{compare, exact_outcome, monte_carlo, Comparison, McEstimate, OutcomeDistribution, Verdict};
pub use model::{CandidateState, Category, CategoryParams, NumericalConfig, Policy, Scenario, Signal};
