//! Mixture model confidence sets: local sets on a two-region partition and
//! the convex weight `α^opt` for each cross pair of their members.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::confidence_set::{build_local_mcs, ConfidenceSet};
use crate::densities::{Density, FamilyKind, Interval, NormalizedDensity};
use crate::error::{Error, Result};
use crate::estimation::{Dataset, FittedModel, OptimizerOptions};
use crate::metrics::{self, DEFAULT_QUAD_TOL};

const GRID_POINTS: usize = 200;
const GOLDEN_TOL: f64 = 1e-6;
const FLAT_TOL: f64 = 1e-12;

/// Largest per-partition level `β = 1 − (1 − α)^{1/m}` keeping joint
/// coverage at `1 − α`.
pub fn beta_budget(alpha: f64, m: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if m == 0 {
        return Err(Error::Domain("need at least one partition".to_string()));
    }
    // 1 − exp(ln(1 − α)/m) without cancellation for small α
    Ok(-((-alpha).ln_1p() / m as f64).exp_m1())
}

/// `Ψ̂(a) = (1/n) Σ ln(a f(x_l) + (1 − a) g(x_l))` from density values.
pub fn psi_hat(a: f64, f_vals: &[f64], g_vals: &[f64]) -> f64 {
    let total: f64 = f_vals
        .iter()
        .zip(g_vals)
        .map(|(&f, &g)| mix(a, f, g).ln())
        .sum();
    total / f_vals.len() as f64
}

#[inline]
fn mix(a: f64, f: f64, g: f64) -> f64 {
    // written so that a = 0 and a = 1 reproduce g and f exactly
    if a == 1.0 {
        f
    } else if a == 0.0 {
        g
    } else {
        a * f + (1.0 - a) * g
    }
}

/// Maximizer of `Ψ̂` over `[0, 1]`.
///
/// Observations where both densities vanish carry no information about the
/// weight and are skipped. A flat `Ψ̂` yields 0.5.
pub fn optimal_alpha(f_vals: &[f64], g_vals: &[f64]) -> Result<f64> {
    if f_vals.len() != g_vals.len() {
        return Err(Error::Dimension {
            left: f_vals.len(),
            right: g_vals.len(),
        });
    }
    let (f, g): (Vec<f64>, Vec<f64>) = f_vals
        .iter()
        .zip(g_vals)
        .filter(|(f, g)| **f > 0.0 || **g > 0.0)
        .map(|(f, g)| (*f, *g))
        .unzip();
    if f.is_empty() {
        return Err(Error::DegenerateMixture);
    }
    if let Some(bad) = f.iter().chain(&g).find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!(
            "density value {bad} is not a finite non-negative number"
        )));
    }

    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| i as f64 / (GRID_POINTS - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&a| psi_hat(a, &f, &g)).collect();
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if min.is_finite() && max - min <= FLAT_TOL {
        return Ok(0.5);
    }

    // Ψ̂ is concave, so the sign of the slope at an endpoint settles it.
    let n = f.len() as f64;
    let slope_at_one: f64 = f.iter().zip(&g).map(|(f, g)| 1.0 - g / f).sum::<f64>() / n;
    if slope_at_one >= 0.0 {
        return Ok(1.0);
    }
    let slope_at_zero: f64 = f.iter().zip(&g).map(|(f, g)| f / g - 1.0).sum::<f64>() / n;
    if slope_at_zero <= 0.0 {
        return Ok(0.0);
    }

    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });
    let lo = grid[best.saturating_sub(1)];
    let hi = grid[(best + 1).min(GRID_POINTS - 1)];
    let a = golden_section_max(|a| psi_hat(a, &f, &g), lo, hi, GOLDEN_TOL);
    Ok(a.clamp(0.0, 1.0))
}

fn golden_section_max<F: Fn(f64) -> f64>(f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = f(x1);
        }
    }
    0.5 * (lo + hi)
}

/// `α f + (1 − α) g` for two normalized component densities.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureDensity {
    pub alpha: f64,
    pub f: NormalizedDensity,
    pub g: NormalizedDensity,
}

impl Density for MixtureDensity {
    fn pdf(&self, x: f64) -> f64 {
        mix(self.alpha, self.f.pdf(x), self.g.pdf(x))
    }

    fn mass_range(&self, tail: f64) -> (f64, f64) {
        let (a, b) = self.f.mass_range(tail);
        let (c, d) = self.g.mass_range(tail);
        (a.min(c), b.max(d))
    }

    fn landmarks(&self) -> Vec<f64> {
        let mut out = self.f.landmarks();
        out.extend(self.g.landmarks());
        out
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureCandidate {
    pub f: FittedModel,
    pub g: FittedModel,
    pub alpha_opt: f64,
    pub psi_at_opt: f64,
    pub hellinger: Option<f64>,
    pub l2: Option<f64>,
    pub kl: Option<f64>,
}

impl MixtureCandidate {
    pub fn label(&self) -> String {
        format!("{} + {}", self.f.spec.family, self.g.spec.family)
    }

    /// Each component is normalized by its own mass on its region, so the
    /// mixture integrates to one.
    pub fn density(&self) -> Result<MixtureDensity> {
        Ok(MixtureDensity {
            alpha: self.alpha_opt,
            f: self.f.family.density()?,
            g: self.g.family.density()?,
        })
    }

    fn build(
        f: &FittedModel,
        g: &FittedModel,
        data: &Dataset,
        reference: Option<&dyn Density>,
    ) -> Result<Self> {
        let fd = f.family.density()?;
        let gd = g.family.density()?;
        let f_vals: Vec<f64> = data.values().iter().map(|&x| fd.pdf(x)).collect();
        let g_vals: Vec<f64> = data.values().iter().map(|&x| gd.pdf(x)).collect();
        let alpha_opt = optimal_alpha(&f_vals, &g_vals)?;
        let mut out = Self {
            f: f.clone(),
            g: g.clone(),
            alpha_opt,
            psi_at_opt: psi_hat(alpha_opt, &f_vals, &g_vals),
            hellinger: None,
            l2: None,
            kl: None,
        };
        if let Some(h) = reference {
            let m = out.density()?;
            out.hellinger = Some(metrics::hellinger(h, &m, DEFAULT_QUAD_TOL)?);
            out.l2 = Some(metrics::l2_distance(h, &m, DEFAULT_QUAD_TOL)?);
            out.kl = Some(metrics::kl_divergence(h, &m, DEFAULT_QUAD_TOL)?);
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureSet {
    pub alpha: f64,
    pub beta: f64,
    pub beta_budget: f64,
    pub partition: f64,
    pub regions: [Interval; 2],
    pub local_sets: [ConfidenceSet; 2],
    pub candidates: Vec<MixtureCandidate>,
    pub warnings: Vec<String>,
}

impl MixtureSet {
    pub fn to_json(&self) -> Value {
        json!({
            "alpha": self.alpha,
            "beta": self.beta,
            "beta_budget": self.beta_budget,
            "partition": self.partition,
            "regions": self.regions,
            "local_sets": [self.local_sets[0].to_json(), self.local_sets[1].to_json()],
            "candidates": self.candidates.iter().map(|c| json!({
                "label": c.label(),
                "f": c.f.spec,
                "g": c.g.spec,
                "alpha_opt": c.alpha_opt,
                "psi_at_opt": c.psi_at_opt,
                "hellinger": c.hellinger,
                "l2": c.l2,
                "kl": c.kl,
            })).collect::<Vec<_>>(),
            "distance_convention": "hellinger = sqrt(int (sqrt f - sqrt g)^2), l2 = sqrt(int (f - g)^2)",
            "warnings": self.warnings,
        })
    }
}

/// Local sets at level `β` on `(−∞, partition]` and `(partition, ∞)`, then
/// `α^opt` on the full sample for every pair of members. Distances against
/// `reference` are attached when it is given.
#[allow(clippy::too_many_arguments)]
pub fn build_mixture_set(
    u1: &[FamilyKind],
    u2: &[FamilyKind],
    data: &Dataset,
    partition: f64,
    alpha: f64,
    beta: Option<f64>,
    opts: &OptimizerOptions,
    reference: Option<&dyn Density>,
) -> Result<MixtureSet> {
    let budget = beta_budget(alpha, 2)?;
    let beta = beta.unwrap_or(budget);
    let mut warnings = Vec::new();
    if !(beta > 0.0 && beta <= budget * (1.0 + 1e-12)) {
        return Err(Error::Usage(format!(
            "beta must lie in (0, {budget:.6}] for alpha = {alpha}, got {beta}"
        )));
    }
    if (beta - budget).abs() <= 1e-12 * budget {
        warnings.push(format!(
            "beta equals the budget bound {budget:.6}; the strict form of the coverage bound is not met"
        ));
    }
    if partition.is_nan() {
        return Err(Error::Usage("partition point is NaN".to_string()));
    }
    let regions = [Interval::at_or_below(partition), Interval::above(partition)];
    let first = build_local_mcs(u1, data, regions[0], beta, opts)?;
    let second = build_local_mcs(u2, data, regions[1], beta, opts)?;
    for (set, region) in [(&first, regions[0]), (&second, regions[1])] {
        warnings.extend(set.warnings.iter().map(|w| format!("{region}: {w}")));
    }

    let pairs: Vec<(&FittedModel, &FittedModel)> = first
        .member_fits()
        .flat_map(|f| second.member_fits().map(move |g| (f, g)))
        .collect();
    let candidates = pairs
        .par_iter()
        .map(|(f, g)| MixtureCandidate::build(f, g, data, reference))
        .collect::<Result<Vec<_>>>()?;

    Ok(MixtureSet {
        alpha,
        beta,
        beta_budget: budget,
        partition,
        regions,
        local_sets: [first, second],
        candidates,
        warnings,
    })
}
