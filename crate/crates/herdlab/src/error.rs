//! Crate-wide error type with machine-readable codes for the CLI.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("non-finite state: {0}")]
    InvalidState(String),

    #[error("hand transform is singular for offset {0} (requires L > 0)")]
    SingularTransform(f64),

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("obstacle coincides with robot position (distance {0:.3e})")]
    CoincidentObstacle(f64),

    #[error("need three position samples, have {0}")]
    InsufficientHistory(usize),

    #[error("victim never reacted before the safety floor at {floor} m")]
    NoReaction { floor: f64 },

    #[error("no silent bearing found; detector appears degenerate")]
    DegenerateSector,

    #[error("track lines are rank deficient (all parallel)")]
    RankDeficient,

    #[error("need at least two tracks, have {0}")]
    InsufficientData(usize),

    #[error("no reacting samples collected within {trials} trials")]
    EmptyDataset { trials: usize },

    #[error("{n} samples are too few to fit a model (minimum {min})")]
    UnderDetermined { n: usize, min: usize },

    #[error("dual solver did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("outside the closed-form regime: {0}")]
    OutOfRegime(String),

    #[error("degenerate trajectory: all points coincide")]
    DegenerateTrajectory,

    #[error("trap is inside the unavailable region; attack refused")]
    TrapInfeasible,

    #[error("feasible candidate set empty for {0} consecutive iterations")]
    StalledAttack(usize),

    #[error("scenario validation failed:\n{}", .0.join("\n"))]
    Validation(Vec<String>),

    #[error("stage {stage} requires missing artifact {path}")]
    MissingArtifact { stage: String, path: String },

    #[error("unsupported document version {found:?} (expected {expected:?})")]
    Version { found: String, expected: String },

    #[error("empty parameter grid")]
    EmptyGrid,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable machine-readable code, used by the CLI on abort.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidState(_) => "invalid_state",
            Error::SingularTransform(_) => "singular_transform",
            Error::ContractViolation(_) => "contract_violation",
            Error::CoincidentObstacle(_) => "coincident_obstacle",
            Error::InsufficientHistory(_) => "insufficient_history",
            Error::NoReaction { .. } => "no_reaction",
            Error::DegenerateSector => "degenerate_sector",
            Error::RankDeficient => "rank_deficient",
            Error::InsufficientData(_) => "insufficient_data",
            Error::EmptyDataset { .. } => "empty_dataset",
            Error::UnderDetermined { .. } => "under_determined",
            Error::NoConvergence(_) => "no_convergence",
            Error::InvalidInput(_) => "invalid_input",
            Error::OutOfRegime(_) => "out_of_regime",
            Error::DegenerateTrajectory => "degenerate_trajectory",
            Error::TrapInfeasible => "trap_infeasible",
            Error::StalledAttack(_) => "stalled_attack",
            Error::Validation(_) => "validation",
            Error::MissingArtifact { .. } => "missing_artifact",
            Error::Version { .. } => "version",
            Error::EmptyGrid => "empty_grid",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}
