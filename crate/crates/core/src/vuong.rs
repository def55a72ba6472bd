//! Pairwise Vuong-type statistics with a dimension penalty, Bonferroni
//! critical values, and the per-model accept/reject rule.

use serde::{Deserialize, Serialize};

use crate::densities::standard_normal_quantile;
use crate::error::{Error, Result};
use crate::estimation::FittedModel;

/// Comparison of model `i` against model `j`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairStatistic {
    pub i: usize,
    pub j: usize,
    /// `L_n(i) − L_n(j)`.
    pub lr_total: f64,
    /// `dim θ(i) − dim θ(j)`.
    pub penalty: f64,
    pub a_hat: f64,
    pub t_value: f64,
    /// `lr_total / n`, the estimate of the expected log-ratio.
    pub mean_lr: f64,
}

impl PairStatistic {
    /// The same comparison seen from `j`.
    pub fn reversed(&self) -> Self {
        Self {
            i: self.j,
            j: self.i,
            lr_total: -self.lr_total,
            penalty: -self.penalty,
            a_hat: self.a_hat,
            t_value: if self.t_value == 0.0 {
                0.0
            } else {
                -self.t_value
            },
            mean_lr: -self.mean_lr,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub model_index: usize,
    pub t_row: Vec<PairStatistic>,
    pub min_t: f64,
    pub critical: f64,
    pub accepted: bool,
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Dimension {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            available: a.len(),
        });
    }
    Ok(())
}

/// `Â_n² = (1/n) Σ d_l² − ((1/n) Σ d_l)²` with `d_l = ln f_i(x_l) − ln f_j(x_l)`.
pub fn a_hat_squared(log_f_i: &[f64], log_f_j: &[f64]) -> Result<f64> {
    check_lengths(log_f_i, log_f_j)?;
    Ok(moments(log_f_i, log_f_j).1)
}

/// Returns `(Σ d, Â_n²)`. The variance is shift invariant, so the ratios are
/// centered on the first one before squaring to limit cancellation.
fn moments(log_f_i: &[f64], log_f_j: &[f64]) -> (f64, f64) {
    let n = log_f_i.len() as f64;
    let shift = log_f_i[0] - log_f_j[0];
    let (mut sum, mut sum_shifted, mut sum_sq) = (0.0, 0.0, 0.0);
    for (a, b) in log_f_i.iter().zip(log_f_j) {
        let d = a - b;
        sum += d;
        let s = d - shift;
        sum_shifted += s;
        sum_sq += s * s;
    }
    let mean = sum_shifted / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (sum, var)
}

/// `T_ij` from per-observation log-likelihoods of two fits on one sample.
pub fn pair_statistic(
    i: usize,
    j: usize,
    log_f_i: &[f64],
    log_f_j: &[f64],
    dim_i: usize,
    dim_j: usize,
) -> Result<PairStatistic> {
    check_lengths(log_f_i, log_f_j)?;
    for (index, (a, b)) in log_f_i.iter().zip(log_f_j).enumerate() {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::NonFiniteLogLikelihood { index });
        }
    }
    let n = log_f_i.len() as f64;
    let (lr_total, a2) = moments(log_f_i, log_f_j);
    let penalty = dim_i as f64 - dim_j as f64;
    let scale = log_f_i
        .iter()
        .zip(log_f_j)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    // Spread indistinguishable from rounding noise counts as zero.
    let a_hat = if a2 <= (1e-12 * scale).powi(2) {
        0.0
    } else {
        a2.sqrt()
    };
    let t_value = if a_hat > 0.0 {
        (lr_total - penalty) / (n.sqrt() * a_hat)
    } else if lr_total.abs() <= 1e-12 * scale * n {
        0.0
    } else {
        return Err(Error::DegenerateVariance { lr_total });
    };
    Ok(PairStatistic {
        i,
        j,
        lr_total,
        penalty,
        a_hat,
        t_value,
        mean_lr: lr_total / n,
    })
}

/// `T_ij` for two fitted models. The indices in the result are 0 and 1.
pub fn t_statistic(fit_i: &FittedModel, fit_j: &FittedModel) -> Result<PairStatistic> {
    pair_statistic(
        0,
        1,
        &fit_i.loglik_per_obs,
        &fit_j.loglik_per_obs,
        fit_i.param_dim(),
        fit_j.param_dim(),
    )
}

/// Upper `α/(k−1)` point of the standard normal; `H_0i` is rejected when some
/// `T_ij` falls below its negative.
pub fn critical_value(alpha: f64, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::Domain(format!("need at least two models, got {k}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(-standard_normal_quantile(alpha / (k - 1) as f64))
}

/// Accept/reject for every model from per-observation log-likelihoods.
pub fn decide_loglik(logliks: &[&[f64]], dims: &[usize], alpha: f64) -> Result<Vec<TestOutcome>> {
    let k = logliks.len();
    if dims.len() != k {
        return Err(Error::Dimension {
            left: k,
            right: dims.len(),
        });
    }
    let critical = critical_value(alpha, k)?;
    let mut rows: Vec<Vec<PairStatistic>> = vec![Vec::with_capacity(k - 1); k];
    for i in 0..k {
        for j in (i + 1)..k {
            let s = pair_statistic(i, j, logliks[i], logliks[j], dims[i], dims[j])?;
            rows[j].push(s.reversed());
            rows[i].push(s);
        }
    }
    Ok(rows
        .into_iter()
        .enumerate()
        .map(|(i, mut row)| {
            row.sort_by_key(|s| s.j);
            let min_t = row.iter().map(|s| s.t_value).fold(f64::INFINITY, f64::min);
            TestOutcome {
                model_index: i,
                t_row: row,
                min_t,
                critical,
                accepted: min_t >= -critical,
            }
        })
        .collect())
}

/// Runs hypothesis test (3) for every fitted model.
pub fn decide(fits: &[FittedModel], alpha: f64) -> Result<Vec<TestOutcome>> {
    let logliks: Vec<&[f64]> = fits.iter().map(|f| f.loglik_per_obs.as_slice()).collect();
    let dims: Vec<usize> = fits.iter().map(|f| f.param_dim()).collect();
    if let Some(w) = fits
        .windows(2)
        .find(|w| w[0].loglik_per_obs.len() != w[1].loglik_per_obs.len())
    {
        return Err(Error::Dimension {
            left: w[0].loglik_per_obs.len(),
            right: w[1].loglik_per_obs.len(),
        });
    }
    decide_loglik(&logliks, &dims, alpha)
}
