//! Semi-integral points of bounded height on split toric varieties over ℚ.
//!
//! The crate covers fans and their Picard data, the classification of torus points as
//! Campana/Darmon-type points, Batyrev–Tschinkel heights, the fan polynomials that
//! regularize the local height transforms, local densities and the predicted leading
//! constant, and a counting harness comparing brute-force counts with the prediction.

pub mod arith;
pub mod densities;
pub mod enumerate;
pub mod fan;
pub mod fan_functions;
pub mod fanfile;
pub mod fit;
pub mod heights;
pub mod library;
pub mod linalg;
pub mod picard;
pub mod points;
pub mod poly;

pub use fan::{Fan, OrbifoldWeights, PlFunction, RawFan, Weight};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FanError {
    #[error("invalid fan: {}", .0.iter().map(|i| i.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<fan::FanIssue>),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("expected {expected} orbit weights, got {got}")]
    WeightCount { expected: usize, got: usize },
    #[error("Picard group has torsion (elementary divisors {0})")]
    Torsion(String),
    #[error("divergent integral: {0}")]
    Divergent(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("fan must be complete and regular")]
    NotSmoothComplete,
    #[error("search space of {estimate:.3e} candidates exceeds the budget of {budget:.3e}")]
    BudgetExceeded { estimate: f64, budget: f64 },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

impl FanError {
    /// Process exit code: 2 for invalid input, 3 for a refused search, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            FanError::Invalid(_)
            | FanError::Parse(_)
            | FanError::WeightCount { .. }
            | FanError::NotSmoothComplete
            | FanError::InvalidConfig(_) => 2,
            FanError::BudgetExceeded { .. } => 3,
            _ => 1,
        }
    }
}
