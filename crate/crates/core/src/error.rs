use thiserror::Error;

use crate::curve::CurveViolation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid curve: {}", format_violations(.0))]
    InvalidCurve(Vec<CurveViolation>),

    #[error("differential has a vanishing denominator at x = {x}; use the branch-local expansion")]
    BranchPointEvaluation { x: String },

    #[error("beta vector shape {got:?} does not match curve shape {expected:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },

    #[error("exponent requested for a branch point paired with itself ({0})")]
    SamePoint(usize),

    #[error("path passes within {distance:.3e} of branch point {branch} (clearance {clearance:.3e})")]
    ClearanceViolation {
        branch: usize,
        distance: f64,
        clearance: f64,
    },

    #[error("sheet continuation step fell below {min_step:.3e} near x = {x}")]
    StepUnderflow { x: String, min_step: f64 },

    #[error("cycle lattice has rank {rank}, expected {expected}")]
    RankDeficiency { rank: usize, expected: usize },

    #[error("a-period matrix is ill conditioned (condition number {condition:.3e})")]
    IllConditioned { condition: f64 },

    #[error("adaptive quadrature did not converge (error estimate {estimate:.3e} after {intervals} intervals)")]
    QuadratureFailure { estimate: f64, intervals: usize },

    #[error("imaginary part of the period matrix is not positive definite")]
    NotPositiveDefinite,

    #[error("period matrix is not symmetric (residual {0:.3e})")]
    NotSymmetric(f64),

    #[error("theta truncation radius {radius:.3} exceeds the cap")]
    TruncationOverflow { radius: f64 },

    #[error("theta value {value:.3e} is below the vanishing threshold")]
    NearVanishing { value: f64 },

    #[error("points coincide")]
    CoincidentPoints,

    #[error("straight path between the points passes too close to branch point {0}")]
    PathClearance(usize),

    #[error("expansion fit diverged (residual {0:.3e})")]
    FitDiverged(f64),

    #[error("homology construction changed under perturbation ({0})")]
    BasisJump(String),

    #[error("deformation path collides branch points at waypoint {0}")]
    PathCollision(usize),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("hypothesis not satisfied: {0}")]
    Hypothesis(String),
}

impl Error {
    /// Errors caused by bad user input rather than numerical trouble.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidCurve(_)
                | Error::ShapeMismatch { .. }
                | Error::SamePoint(_)
                | Error::Config(_)
                | Error::PathCollision(_)
        )
    }
}

fn format_violations(v: &[CurveViolation]) -> String {
    v.iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
