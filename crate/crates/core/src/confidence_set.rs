//! Weighted and local model confidence sets.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::densities::{FamilyKind, Interval, ModelSpec, WeightSpec};
use crate::error::{Error, Result};
use crate::estimation::{fit_qmle, Dataset, FittedModel, OptimizerOptions};
use crate::vuong::{self, TestOutcome};

#[derive(Clone, Debug, Serialize)]
pub struct ConfidenceSet {
    pub alpha: f64,
    /// Present for local sets; the result only speaks about this region.
    pub region: Option<Interval>,
    pub n: usize,
    /// Number of successfully fitted candidates; the Bonferroni `k`.
    pub k: usize,
    pub critical: Option<f64>,
    pub fits: Vec<FittedModel>,
    pub outcomes: Vec<TestOutcome>,
    /// Indices into `fits` of the accepted models.
    pub members: Vec<usize>,
    pub warnings: Vec<String>,
}

impl ConfidenceSet {
    pub fn member_fits(&self) -> impl Iterator<Item = &FittedModel> {
        self.members.iter().map(|&i| &self.fits[i])
    }

    pub fn member_labels(&self) -> Vec<String> {
        self.member_fits().map(|f| f.label()).collect()
    }

    pub fn member_families(&self) -> Vec<FamilyKind> {
        self.member_fits().map(|f| f.spec.family).collect()
    }

    /// JSON view: members, per-model statistics and the fitted models.
    pub fn to_json(&self) -> Value {
        let table: Vec<Value> = self
            .outcomes
            .iter()
            .map(|o| {
                let fit = &self.fits[o.model_index];
                json!({
                    "hypothesis": format!("H0{}", o.model_index + 1),
                    "model": fit.label(),
                    "min_t": o.min_t,
                    "critical": self.critical,
                    "accepted": o.accepted,
                    "t_row": o.t_row,
                })
            })
            .collect();
        json!({
            "alpha": self.alpha,
            "region": self.region,
            "n": self.n,
            "k": self.k,
            "critical": self.critical,
            "members": self.member_labels(),
            "table": table,
            "models": self.fits.iter().map(|f| &f.spec).collect::<Vec<_>>(),
            "fits": self.fits,
            "warnings": self.warnings,
        })
    }

    /// Rows `(hypothesis, statistic, conclusion)`, one per fitted model.
    pub fn table_rows(&self) -> Vec<(String, f64, &'static str)> {
        self.outcomes
            .iter()
            .map(|o| {
                (
                    format!("H0: {}", self.fits[o.model_index].label()),
                    o.min_t,
                    if o.accepted { "accepted" } else { "rejected" },
                )
            })
            .collect()
    }
}

/// Fits every candidate and keeps the models not rejected at level `alpha`.
///
/// Candidates that fail to fit, or whose fitted log-likelihood is not finite
/// at every observation, are dropped with a warning and `k` shrinks.
pub fn build_mcs(
    candidates: &[ModelSpec],
    data: &Dataset,
    alpha: f64,
    opts: &OptimizerOptions,
) -> Result<ConfidenceSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Usage(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if candidates.is_empty() {
        return Err(Error::Usage("no candidate models".to_string()));
    }
    let results: Vec<Result<FittedModel>> = candidates
        .par_iter()
        .map(|spec| fit_qmle(spec, data, opts))
        .collect();

    let mut fits = Vec::new();
    let mut warnings = Vec::new();
    let mut first_error = None;
    for (spec, result) in candidates.iter().zip(results) {
        match result {
            Ok(fit) => match fit.loglik_per_obs.iter().position(|v| !v.is_finite()) {
                None => fits.push(fit),
                Some(index) => warnings.push(format!(
                    "{}: excluded, {}",
                    spec.label(),
                    Error::NonFiniteLogLikelihood { index }
                )),
            },
            Err(e) => {
                warnings.push(format!("{}: excluded, {e}", spec.label()));
                first_error.get_or_insert(e);
            }
        }
    }
    if fits.is_empty() {
        return Err(first_error.unwrap_or(Error::NonFiniteLogLikelihood { index: 0 }));
    }

    let k = fits.len();
    let (outcomes, critical) = if k == 1 {
        warnings
            .push("only one candidate could be fitted; it is accepted without a test".to_string());
        let only = TestOutcome {
            model_index: 0,
            t_row: Vec::new(),
            min_t: f64::INFINITY,
            critical: f64::NAN,
            accepted: true,
        };
        (vec![only], None)
    } else {
        let outcomes = vuong::decide(&fits, alpha)?;
        let critical = outcomes[0].critical;
        (outcomes, Some(critical))
    };
    let members = outcomes
        .iter()
        .filter(|o| o.accepted)
        .map(|o| o.model_index)
        .collect();
    Ok(ConfidenceSet {
        alpha,
        region: None,
        n: data.len(),
        k,
        critical,
        fits,
        outcomes,
        members,
        warnings,
    })
}

/// Local confidence set on `region`: every family is fitted to the
/// observations in the region and normalized by their empirical frequency.
pub fn build_local_mcs(
    families: &[FamilyKind],
    data: &Dataset,
    region: Interval,
    alpha: f64,
    opts: &OptimizerOptions,
) -> Result<ConfidenceSet> {
    let inside = data.count_in(&region);
    let needed = families
        .iter()
        .map(|f| f.param_dim() + 1)
        .max()
        .unwrap_or(1);
    if inside == 0 {
        return Err(Error::InsufficientData {
            needed,
            available: 0,
        });
    }
    let specs: Vec<ModelSpec> = families
        .iter()
        .map(|&f| ModelSpec::new(f, WeightSpec::indicator(region)))
        .collect();
    let mut set = build_mcs(&specs, data, alpha, opts)?;
    set.region = Some(region);
    Ok(set)
}
