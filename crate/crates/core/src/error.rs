use thiserror::Error;

use crate::estimation::FittedModel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value} for {family} family")]
    InvalidParameter {
        family: &'static str,
        name: &'static str,
        value: f64,
    },

    #[error("invalid weight: {0}")]
    InvalidWeight(String),

    #[error("not available: {0}")]
    NotAvailable(String),

    #[error("insufficient data: need at least {needed} effective observations, found {available}")]
    InsufficientData { needed: usize, available: usize },

    #[error("observation {value} lies outside the support of the {family} family")]
    OutsideSupport { family: &'static str, value: f64 },

    #[error("optimizer did not converge from any start (best mean log-likelihood {})", .best.mean_loglik)]
    NonConvergence { best: Box<FittedModel> },

    #[error("length mismatch: {left} vs {right}")]
    Dimension { left: usize, right: usize },

    #[error("degenerate variance: log-likelihood ratio {lr_total} with zero spread")]
    DegenerateVariance { lr_total: f64 },

    #[error("non-finite log-likelihood at observation {index}")]
    NonFiniteLogLikelihood { index: usize },

    #[error("degenerate mixture: every observation has zero density under both components")]
    DegenerateMixture,

    #[error("quadrature failed: {0}")]
    Quadrature(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("usage: {0}")]
    Usage(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for failures caused by the data or the statistics rather than by
    /// how the tool was invoked.
    pub fn is_statistical(&self) -> bool {
        matches!(
            self,
            Error::InsufficientData { .. }
                | Error::OutsideSupport { .. }
                | Error::NonConvergence { .. }
                | Error::DegenerateVariance { .. }
                | Error::NonFiniteLogLikelihood { .. }
                | Error::DegenerateMixture
                | Error::Quadrature(_)
                | Error::NotAvailable(_)
        )
    }
}
