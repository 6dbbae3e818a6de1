use thiserror::Error;

use crate::evaluator::OutcomeDistribution;
use crate::model::{Category, Violation};

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Both likelihoods of the history are exactly zero.
    #[error("impossible history: category {category} with {n1} positive and {n0} negative signals")]
    ImpossibleHistory { category: Category, n1: u32, n0: u32 },

    /// The truncated lattice cannot certify an index to the requested tolerance.
    #[error("horizon insufficient: truncation bound {bound:.3e} exceeds index tolerance {tol:.3e} at depth {depth}")]
    HorizonInsufficient { bound: f64, tol: f64, depth: u32 },

    /// Unresolved probability mass after `horizon_cap` evaluations exceeds `prob_tol`.
    #[error("insufficient horizon: unresolved mass {:.3e} exceeds tolerance", .achieved.truncation_mass)]
    InsufficientHorizon { achieved: Box<OutcomeDistribution> },

    #[error("oracle inapplicable: {0}")]
    OracleInapplicable(String),

    #[error("illegal action: {0}")]
    IllegalAction(String),

    #[error("invalid scenario: {}", fmt_violations(.0))]
    InvalidScenario(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{0}")]
    Parse(String),

    #[error("sweep has {points} grid points, cap is {cap}")]
    SweepTooLarge { points: usize, cap: usize },
}

fn fmt_violations(v: &[Violation]) -> String {
    v.iter()
        .map(|x| x.message.as_str())
        .collect::<Vec<_>>()
        .join("; ")
}
