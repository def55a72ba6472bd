//! Model confidence sets for weighted and local likelihood.

pub mod cli;
pub mod confidence_set;
pub mod densities;
pub mod error;
pub mod estimation;
pub mod harness;
pub mod metrics;
pub mod mixture;
pub mod optimize;
pub mod quadrature;
pub mod vuong;

pub use confidence_set::{build_local_mcs, build_mcs, ConfidenceSet};
pub use densities::{
    Density, FamilyKind, Interval, ModelSpec, ParamFamily, TwoComponentMixture, WeightSpec,
    WeightedFamily,
};
pub use error::{Error, Result};
pub use estimation::{fit_qmle, mean_log_density, Dataset, FittedModel, OptimizerOptions};
pub use mixture::{
    beta_budget, build_mixture_set, optimal_alpha, psi_hat, MixtureCandidate, MixtureSet,
};
pub use vuong::{critical_value, decide, t_statistic, PairStatistic, TestOutcome};
