use thiserror::Error;

use crate::model::Violation;

#[derive(Debug, Error)]
pub enum PimError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step {step}: {violation}")]
    Constraint { step: usize, violation: Violation },

    #[error("program rejected with {} violation(s), first: {}", .0.len(), .0[0])]
    Invalid(Vec<Violation>),

    #[error("no free column in {}", match .partition { Some(p) => format!("partition {p}"), None => "row".to_string() })]
    Capacity { partition: Option<usize> },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unknown operand `{0}`")]
    UnknownOperand(String),

    #[error("verification budget exceeded: {cases} cases requested, budget {budget}")]
    Budget { cases: u128, budget: u128 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = PimError> = std::result::Result<T, E>;
