use thiserror::Error;

/// Errors produced by instance construction, route evaluation and the
/// classical solvers.
#[derive(Debug, Error)]
pub enum CoreError {
    /// The route violates a structural invariant (bad edge index, visit
    /// rule violation, wrong endpoints for the variant).
    #[error("structural error: {0}")]
    Structural(String),

    /// The instance lacks data the problem variant requires (e.g. demands
    /// for a capacitated variant) or carries inconsistent dimensions.
    #[error("spec mismatch: {0}")]
    SpecMismatch(String),

    /// Invalid instance data (missing pair, non-finite or negative
    /// attribute, bad dimension).
    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    /// Invalid problem parameters.
    #[error("invalid spec: {0}")]
    InvalidSpec(String),

    /// Two independent calibration estimates disagreed by more than 10%.
    #[error("calibration unstable: {0}")]
    CalibrationUnstable(String),

    /// No edge selection satisfies the variant's hard constraints.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// A constructive solver could not produce a feasible route.
    #[error("no feasible route: {0}")]
    NoFeasibleRoute(String),

    /// Objective/preference dimensions do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },

    /// A point submitted for hypervolume does not dominate the reference.
    #[error("reference dominated: point {point:?} exceeds reference {reference:?}")]
    ReferenceDominated { point: Vec<f64>, reference: Vec<f64> },

    /// Malformed serialized data.
    #[error("schema error: {0}")]
    Schema(String),
}
