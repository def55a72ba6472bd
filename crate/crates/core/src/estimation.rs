//! Empirical estimators and quasi-maximum-likelihood fitting.
//!
//! The QMLE maximizes the sample log-likelihood of a (possibly misspecified)
//! weighted family. For indicator weights only observations inside the region
//! enter the likelihood; the constant `−ln P̂_h(X ∈ A)` is added to each of
//! those observations afterwards and does not move the maximizer.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::densities::{FamilyKind, Interval, ModelSpec, ParamFamily, WeightSpec, WeightedFamily};
use crate::error::{Error, Result};
use crate::optimize::{self, NelderMeadOptions};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Observations `x_1..x_n` with a sorted copy kept for the ECDF.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    sorted: Vec<f64>,
}

impl Dataset {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData {
                needed: 1,
                available: 0,
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Domain(format!(
                "observation {i} is not finite ({})",
                values[i]
            )));
        }
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { values, sorted })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `Ĥ(t) = (1/n) #{x_i ≤ t}`.
    pub fn ecdf(&self, t: f64) -> f64 {
        self.count_at_or_below(t) as f64 / self.len() as f64
    }

    fn count_at_or_below(&self, t: f64) -> usize {
        self.sorted.partition_point(|&v| v <= t)
    }

    /// Number of observations in `(lower, upper]`.
    pub fn count_in(&self, region: &Interval) -> usize {
        self.count_at_or_below(region.upper) - self.count_at_or_below(region.lower)
    }

    /// Empirical probability `P̂_h(X ∈ region)`.
    pub fn region_mass(&self, region: &Interval) -> f64 {
        self.count_in(region) as f64 / self.len() as f64
    }

    pub fn subset(&self, region: &Interval) -> Vec<f64> {
        self.values
            .iter()
            .copied()
            .filter(|v| region.contains(*v))
            .collect()
    }
}

/// `(1/n) Σ ln f_w(x_i; θ)`; `-∞` as soon as one observation has zero
/// weighted density.
pub fn mean_log_density(
    wf: &WeightedFamily,
    data: &Dataset,
    empirical_norm: Option<f64>,
) -> Result<f64> {
    let ln_norm = wf.normalizer(empirical_norm)?.ln();
    let total: f64 = data
        .values()
        .iter()
        .map(|&x| wf.ln_pdf_normalized(x, ln_norm))
        .sum();
    Ok(total / data.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerOptions {
    /// Nelder-Mead iterations per start.
    pub max_iter: usize,
    /// Relative objective change that counts as converged.
    pub tol: f64,
    /// Total number of starts: the moment-based one plus perturbed restarts.
    pub restarts: usize,
    /// Seed for the restart perturbations.
    pub seed: u64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            tol: 1e-8,
            restarts: 5,
            seed: 0,
        }
    }
}

/// A family fitted by QMLE, with everything needed for pairwise tests.
#[derive(Clone, Debug, PartialEq)]
pub struct FittedModel {
    /// The candidate with `params` set to the estimate.
    pub spec: ModelSpec,
    pub family: WeightedFamily,
    /// Normalizer `N` used in `loglik_per_obs`.
    pub norm_constant: f64,
    /// `ln f_w(x_i; θ̂)` for observations inside the weight's region and 0
    /// for observations it excludes.
    pub loglik_per_obs: Vec<f64>,
    pub loglik_total: f64,
    /// `loglik_total / n` with `n` the full sample size.
    pub mean_loglik: f64,
    pub n_effective: usize,
    pub converged: bool,
    pub n_restarts_used: usize,
}

impl FittedModel {
    pub fn theta_hat(&self) -> &[f64] {
        self.family.base.params()
    }

    pub fn param_dim(&self) -> usize {
        self.family.base.param_dim()
    }

    pub fn label(&self) -> String {
        self.spec.label()
    }

    /// Evaluate a fixed weighted family on `data` as if it had been fitted.
    /// `empirical_norm` defaults to `P̂_h(X ∈ A)` for indicator weights.
    pub fn evaluate(
        wf: WeightedFamily,
        data: &Dataset,
        empirical_norm: Option<f64>,
    ) -> Result<Self> {
        let norm = match (wf.weight, empirical_norm) {
            (WeightSpec::IndicatorRegion { region }, None) => {
                let mass = data.region_mass(&region);
                if mass == 0.0 {
                    return Err(Error::InsufficientData {
                        needed: wf.base.param_dim() + 1,
                        available: 0,
                    });
                }
                mass
            }
            _ => wf.normalizer(empirical_norm)?,
        };
        let ln_norm = norm.ln();
        let region = wf.weight.region();
        let mut n_effective = 0;
        let loglik_per_obs: Vec<f64> = data
            .values()
            .iter()
            .map(|&x| match region {
                Some(r) if !r.contains(x) => 0.0,
                _ => {
                    n_effective += 1;
                    wf.ln_pdf_normalized(x, ln_norm)
                }
            })
            .collect();
        let loglik_total: f64 = loglik_per_obs.iter().sum();
        let params = [wf.base.params()[0], wf.base.params()[1]];
        Ok(Self {
            spec: ModelSpec::new(wf.base.kind(), wf.weight).with_params(params),
            family: wf,
            norm_constant: norm,
            mean_loglik: loglik_total / data.len() as f64,
            loglik_total,
            loglik_per_obs,
            n_effective,
            converged: true,
            n_restarts_used: 0,
        })
    }

    /// Same estimate, per-observation values recomputed with another
    /// normalizer. Only meaningful for empirically normalized weights.
    pub fn with_normalizer(&self, data: &Dataset, norm: f64) -> Result<Self> {
        let mut out = Self::evaluate(self.family, data, Some(norm))?;
        out.converged = self.converged;
        out.n_restarts_used = self.n_restarts_used;
        Ok(out)
    }
}

impl Serialize for FittedModel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let mut st = s.serialize_struct("FittedModel", 9)?;
        st.serialize_field("label", &self.label())?;
        st.serialize_field("model", &self.spec)?;
        st.serialize_field("theta_hat", self.theta_hat())?;
        st.serialize_field("norm_constant", &self.norm_constant)?;
        st.serialize_field("loglik_total", &self.loglik_total)?;
        st.serialize_field("mean_loglik", &self.mean_loglik)?;
        st.serialize_field("n_effective", &self.n_effective)?;
        st.serialize_field("converged", &self.converged)?;
        st.serialize_field("n_restarts_used", &self.n_restarts_used)?;
        st.end()
    }
}

/// Maps unconstrained optimizer coordinates to a parameter vector.
fn to_params(kind: FamilyKind, u: &[f64]) -> [f64; 2] {
    let positive = kind.positive_params();
    [
        if positive[0] { u[0].exp() } else { u[0] },
        if positive[1] { u[1].exp() } else { u[1] },
    ]
}

fn to_unconstrained(kind: FamilyKind, p: [f64; 2]) -> [f64; 2] {
    let positive = kind.positive_params();
    [
        if positive[0] { p[0].ln() } else { p[0] },
        if positive[1] { p[1].ln() } else { p[1] },
    ]
}

struct Moments {
    mean: f64,
    var: f64,
    median: f64,
    mad: f64,
    mean_abs_dev: f64,
}

fn moments(xs: &[f64]) -> Moments {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = median_sorted(&sorted);
    let mut dev: Vec<f64> = sorted.iter().map(|x| (x - median).abs()).collect();
    let mean_abs_dev = dev.iter().sum::<f64>() / n;
    dev.sort_by(f64::total_cmp);
    let mad = median_sorted(&dev);
    Moments {
        mean,
        var,
        median,
        mad,
        mean_abs_dev,
    }
}

fn median_sorted(s: &[f64]) -> f64 {
    let m = s.len() / 2;
    if s.len() % 2 == 1 {
        s[m]
    } else {
        0.5 * (s[m - 1] + s[m])
    }
}

/// Starting point from sample moments, shifted for length-biased data where
/// the biased family has a known closed form.
fn initial_params(kind: FamilyKind, weight: &WeightSpec, xs: &[f64]) -> [f64; 2] {
    let lb = matches!(weight, WeightSpec::LengthBiased);
    let m = moments(xs);
    let spread = m.var.sqrt();
    let p = match kind {
        FamilyKind::Normal => [m.median, m.var],
        FamilyKind::Cauchy => [m.median, if m.mad > 0.0 { m.mad } else { spread }],
        FamilyKind::Logistic => [m.median, spread * 3f64.sqrt() / std::f64::consts::PI],
        FamilyKind::Laplace => [m.median, m.mean_abs_dev],
        FamilyKind::Gamma => {
            let shape = m.mean * m.mean / m.var;
            let shape = if lb { (shape - 1.0).max(0.1) } else { shape };
            [shape, m.var / m.mean]
        }
        FamilyKind::Weibull => {
            let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let lm = moments(&logs);
            let shape = std::f64::consts::PI / (lm.var.sqrt() * 6f64.sqrt());
            [shape, (lm.mean + EULER_GAMMA / shape).exp()]
        }
        FamilyKind::Lognormal => {
            let logs: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
            let lm = moments(&logs);
            let mu = if lb { lm.mean - lm.var } else { lm.mean };
            [mu, lm.var]
        }
    };
    // Keep the start inside the domain even for awkward samples.
    let guard = |v: f64, fallback: f64| {
        if v.is_finite() && v > 0.0 {
            v
        } else {
            fallback
        }
    };
    let positive = kind.positive_params();
    [
        if positive[0] { guard(p[0], 1.0) } else { p[0] },
        if positive[1] { guard(p[1], 1.0) } else { p[1] },
    ]
}

/// Negative log-likelihood over the effective observations, in unconstrained
/// coordinates. Region normalizers are constant and left out.
struct Objective<'a> {
    kind: FamilyKind,
    weight: WeightSpec,
    xs: &'a [f64],
    sum_ln_x: f64,
}

impl Objective<'_> {
    fn value(&self, u: &[f64]) -> f64 {
        let Ok(f) = ParamFamily::new(self.kind, to_params(self.kind, u)) else {
            return f64::INFINITY;
        };
        let mut total: f64 = self.xs.iter().map(|&x| f.ln_pdf(x)).sum();
        if self.weight == WeightSpec::LengthBiased {
            let Ok(mean) = f.mean() else {
                return f64::INFINITY;
            };
            total += self.sum_ln_x - self.xs.len() as f64 * mean.ln();
        }
        if total.is_finite() {
            -total
        } else {
            f64::INFINITY
        }
    }
}

/// Quasi-maximum-likelihood fit of `spec` to `data`.
///
/// Multi-start Nelder-Mead in log-transformed coordinates: one start from
/// sample moments and `opts.restarts - 1` perturbed copies. The best start
/// wins (first found on ties) and is polished by one more run.
pub fn fit_qmle(spec: &ModelSpec, data: &Dataset, opts: &OptimizerOptions) -> Result<FittedModel> {
    let kind = spec.family;
    let dim = kind.param_dim();
    let xs: Vec<f64> = match spec.weight.region() {
        Some(region) => data.subset(&region),
        None => data.values().to_vec(),
    };
    if xs.len() < dim + 1 {
        return Err(Error::InsufficientData {
            needed: dim + 1,
            available: xs.len(),
        });
    }
    let support = kind.support();
    if let Some(&bad) = xs.iter().find(|x| !support.contains(**x)) {
        return Err(Error::OutsideSupport {
            family: kind.name(),
            value: bad,
        });
    }
    if xs.iter().all(|&x| x == xs[0]) {
        return Err(Error::InsufficientData {
            needed: dim + 1,
            available: 1,
        });
    }
    // Validates the weight/family combination up front.
    let probe = initial_params(kind, &spec.weight, &xs);
    WeightedFamily::new(ParamFamily::new(kind, probe)?, spec.weight)?;

    let objective = Objective {
        kind,
        weight: spec.weight,
        sum_ln_x: if spec.weight == WeightSpec::LengthBiased {
            xs.iter().map(|x| x.ln()).sum()
        } else {
            0.0
        },
        xs: &xs,
    };
    let f = |u: &[f64]| objective.value(u);

    let u0 = to_unconstrained(kind, probe);
    let m = moments(&xs);
    let loc_scale = if m.var > 0.0 { m.var.sqrt() } else { 1.0 };
    let positive = kind.positive_params();
    let step: Vec<f64> = positive
        .iter()
        .map(|&p| if p { 0.25 } else { 0.25 * loc_scale })
        .collect();
    let jitter: Vec<f64> = positive
        .iter()
        .map(|&p| if p { 0.5 } else { 0.5 * loc_scale })
        .collect();

    let nm = NelderMeadOptions {
        max_iter: opts.max_iter,
        ftol: opts.tol,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_starts = opts.restarts.max(1);
    let mut best: Option<optimize::Minimum> = None;
    let mut any_converged = false;
    for start in 0..n_starts {
        let x0: Vec<f64> = if start == 0 {
            u0.to_vec()
        } else {
            u0.iter()
                .zip(&jitter)
                .map(|(u, j)| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    u + j * z
                })
                .collect()
        };
        let run = optimize::minimize(f, &x0, &step, &nm);
        any_converged |= run.converged && run.value.is_finite();
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one start");
    if best.value.is_finite() {
        let small: Vec<f64> = step.iter().map(|s| 0.05 * s).collect();
        let polish = optimize::minimize(f, &best.x, &small, &nm);
        if polish.value <= best.value {
            any_converged |= polish.converged;
            best = polish;
        }
    }

    let params = to_params(kind, &best.x);
    let wf = WeightedFamily::new(ParamFamily::new(kind, params)?, spec.weight)?;
    let mut fitted = FittedModel::evaluate(wf, data, None)?;
    fitted.n_restarts_used = n_starts;
    fitted.converged = best.converged;
    if !(any_converged && best.value.is_finite()) {
        fitted.converged = false;
        return Err(Error::NonConvergence {
            best: Box::new(fitted),
        });
    }
    Ok(fitted)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ecdf_counts() {
        let d = Dataset::new(vec![3.0, 1.0, 2.0]).unwrap();
        assert!((d.ecdf(2.0) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.ecdf(0.5), 0.0);
        assert_eq!(d.ecdf(3.0), 1.0);
        assert_eq!(d.ecdf(f64::INFINITY), 1.0);
        assert_eq!(d.region_mass(&Interval::new(1.0, 3.0).unwrap()), 2.0 / 3.0);
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(Dataset::new(vec![]).is_err());
        assert!(Dataset::new(vec![1.0, f64::NAN]).is_err());
        assert!(Dataset::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn mean_log_density_cases() {
        let d = Dataset::new(vec![-4.0]).unwrap();
        let lap = WeightedFamily::unweighted(ParamFamily::laplace(-4.0, 0.5).unwrap());
        assert!(mean_log_density(&lap, &d, None).unwrap().abs() < 1e-15);

        let d = Dataset::new(vec![1.0, std::f64::consts::E]).unwrap();
        let ln = WeightedFamily::unweighted(ParamFamily::lognormal(0.0, 1.0).unwrap());
        // ln f(1) = −½ln2π ; ln f(e) = −1 − ½ln2π − ½
        let c = 0.5 * (2.0 * std::f64::consts::PI).ln();
        let expected = (-c + (-1.0 - c - 0.5)) / 2.0;
        assert!((mean_log_density(&ln, &d, None).unwrap() - expected).abs() < 1e-14);

        let local = WeightedFamily::new(
            ParamFamily::normal(0.0, 1.0).unwrap(),
            WeightSpec::indicator(Interval::above(10.0)),
        )
        .unwrap();
        assert_eq!(
            mean_log_density(&local, &d, Some(0.5)).unwrap(),
            f64::NEG_INFINITY
        );
    }

    #[test]
    fn normal_closed_form() {
        let data = WeightedFamily::unweighted(ParamFamily::normal(3.0, 4.0).unwrap())
            .sample(200, 5)
            .unwrap();
        let d = Dataset::new(data.clone()).unwrap();
        let fit = fit_qmle(
            &ModelSpec::new(FamilyKind::Normal, WeightSpec::Identity),
            &d,
            &OptimizerOptions::default(),
        )
        .unwrap();
        let n = data.len() as f64;
        let mean = data.iter().sum::<f64>() / n;
        let var = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        assert!(fit.converged);
        assert!(((fit.theta_hat()[0] - mean) / mean).abs() < 1e-4);
        assert!(((fit.theta_hat()[1] - var) / var).abs() < 1e-4);
        assert!((fit.loglik_total - fit.loglik_per_obs.iter().sum::<f64>()).abs() < 1e-9);
        assert!((fit.mean_loglik - fit.loglik_total / n).abs() < 1e-12);
    }

    #[test]
    fn insufficient_and_degenerate_data() {
        let spec = ModelSpec::new(FamilyKind::Gamma, WeightSpec::Identity);
        let opts = OptimizerOptions::default();
        let two = Dataset::new(vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            fit_qmle(&spec, &two, &opts),
            Err(Error::InsufficientData { .. })
        ));
        let flat = Dataset::new(vec![2.0; 10]).unwrap();
        assert!(matches!(
            fit_qmle(&spec, &flat, &opts),
            Err(Error::InsufficientData { .. })
        ));
        let neg = Dataset::new(vec![-1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            fit_qmle(&spec, &neg, &opts),
            Err(Error::OutsideSupport { .. })
        ));
    }

    #[test]
    fn local_fit_only_uses_region() {
        let d = Dataset::new(vec![-3.0, -2.5, -2.0, -1.0, 5.0, 6.0, 7.0]).unwrap();
        let spec = ModelSpec::new(
            FamilyKind::Normal,
            WeightSpec::indicator(Interval::at_or_below(0.0)),
        );
        let fit = fit_qmle(&spec, &d, &OptimizerOptions::default()).unwrap();
        assert_eq!(fit.n_effective, 4);
        assert_eq!(&fit.loglik_per_obs[4..], &[0.0, 0.0, 0.0]);
        assert!((fit.norm_constant - 4.0 / 7.0).abs() < 1e-15);
        assert!((fit.theta_hat()[0] + 2.125).abs() < 1e-4);
    }

    #[test]
    fn fitting_is_deterministic() {
        let d = Dataset::new(
            WeightedFamily::unweighted(ParamFamily::weibull(1.5, 2.0).unwrap())
                .sample(100, 3)
                .unwrap(),
        )
        .unwrap();
        let spec = ModelSpec::new(FamilyKind::Gamma, WeightSpec::Identity);
        let a = fit_qmle(&spec, &d, &OptimizerOptions::default()).unwrap();
        let b = fit_qmle(&spec, &d, &OptimizerOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
