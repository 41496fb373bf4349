use thiserror::Error;

use crate::tableau::Violation;

/// Errors produced by the integrators, diagnostics and region checks.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("inconsistent tableau: {}", join_violations(.0))]
    InvalidTableau(Vec<Violation>),

    #[error("unknown scheme `{name}` (known: {})", .known.join(", "))]
    UnknownScheme { name: String, known: Vec<String> },

    #[error("domain error in species {species}, cell {cell}: {reason} (value {value:e})")]
    Domain {
        species: usize,
        cell: usize,
        value: f64,
        reason: &'static str,
    },

    #[error("shape mismatch: expected {expected}, got {found}")]
    Shape { expected: String, found: String },

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonNotConverged { iterations: usize, residual: f64 },

    #[error("singular Newton matrix at iteration {iteration}")]
    SingularJacobian { iteration: usize },

    #[error("step {step} failed: {source}")]
    StepFailed {
        step: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature did not reach tolerance on [{from}, {to}]")]
    Quadrature { from: f64, to: f64 },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

impl Error {
    /// Short machine-readable category, used by the CLI for its exit line.
    pub fn category(&self) -> &'static str {
        match self {
            Error::InvalidTableau(_) => "tableau",
            Error::UnknownScheme { .. } => "lookup",
            Error::Domain { .. } => "domain",
            Error::Shape { .. } => "shape",
            Error::NewtonNotConverged { .. } | Error::SingularJacobian { .. } => "newton",
            Error::StepFailed { source, .. } => source.category(),
            Error::InvalidArgument(_) => "argument",
            Error::Quadrature { .. } => "quadrature",
            Error::DivisionByZero(_) => "division",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
