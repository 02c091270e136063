use thiserror::Error;

use crate::model::Role;

/// Errors produced anywhere in the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("malformed JSON: {0}")]
    MalformedJson(String),
    #[error("qudit index {index} out of range for {num_qudits} qudits")]
    IndexOutOfRange { index: usize, num_qudits: usize },
    #[error("gate {gate} is not allowed in a {variant} instance")]
    GateVariantMismatch { gate: String, variant: String },
    #[error("invalid clause #{clause}: {reason}")]
    InvalidClause { clause: usize, reason: String },
    #[error("qudit {qudit} is used with roles {roles:?}")]
    RoleConflict { qudit: usize, roles: Vec<Role> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("a witness is required for this instance")]
    WitnessMissing,
    #[error("witness has {found} bits but the instance has {expected} witness qudits")]
    WitnessLengthMismatch { expected: usize, found: usize },
    #[error("gate target {target} out of range for a {num_qubits}-qubit register")]
    TargetOutOfRange { target: usize, num_qubits: usize },
    #[error("gate {gate} does not belong to the gate set of {target}")]
    GateSetMismatch { gate: String, target: String },
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("projection is only defined for direct products")]
    NotAProduct,
    #[error("working dimension {dimension} exceeds the budget of {budget}")]
    DimensionBudgetExceeded { dimension: u128, budget: usize },
    #[error("iterative eigensolver did not converge after {0} iterations")]
    NoConvergence(usize),
}

pub type Result<T> = std::result::Result<T, Error>;
