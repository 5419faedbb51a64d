use thiserror::Error;

use crate::bloch::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("singular correlation matrix (|det T| = {det:e})")]
    SingularCorrelation { det: f64 },

    #[error("correlation matrix is not symmetric (max |T - T^T| = {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("correlation matrix does not describe a physical state (min eigenvalue {min_eigenvalue:e})")]
    Unphysical { min_eigenvalue: f64 },

    #[error("invalid POVM: {}", format_violations(.0))]
    InvalidPovm(Vec<Violation>),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("quadrature failure: {0}")]
    Quadrature(String),

    #[error("POVM sampler exhausted {attempts} attempts without a feasible draw")]
    RetriesExhausted { attempts: usize },
}

impl Error {
    /// Numerical failures, as opposed to rejected inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Quadrature(_) | Error::RetriesExhausted { .. })
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join("; ")
}
