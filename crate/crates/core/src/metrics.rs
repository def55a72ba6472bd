//! Divergences and distances between densities on the real line.
//!
//! Integrals run over a finite range holding all but `TAIL_MASS` of each
//! density's probability, split at every density's landmarks.
//!
//! Hellinger and L² follow the unscaled convention
//! `H(f, g) = (∫(√f − √g)²)^{1/2}` (range `[0, √2]`) and
//! `L²(f, g) = (∫(f − g)²)^{1/2}`.

use std::cell::Cell;

use crate::densities::Density;
use crate::error::{Error, Result};
use crate::quadrature::integrate;

pub const DEFAULT_QUAD_TOL: f64 = 1e-6;
pub const TAIL_MASS: f64 = 1e-10;

/// Integration range and breakpoints shared by a set of densities.
pub fn integration_domain(densities: &[&dyn Density]) -> Result<(f64, f64, Vec<f64>)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    let mut breaks = Vec::new();
    for d in densities {
        let (a, b) = d.mass_range(TAIL_MASS);
        lo = lo.min(a);
        hi = hi.max(b);
        breaks.extend(d.landmarks());
    }
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::Quadrature(format!(
            "could not bracket the probability mass (range [{lo}, {hi}])"
        )));
    }
    breaks.retain(|x| x.is_finite());
    Ok((lo, hi, breaks))
}

/// `∫ h ln(h/f)`; `+∞` when `f` vanishes somewhere `h` does not.
pub fn kl_divergence(h: &dyn Density, f: &dyn Density, quad_tol: f64) -> Result<f64> {
    let (lo, hi, breaks) = integration_domain(&[h, f])?;
    let singular = Cell::new(false);
    let r = integrate(
        |x| {
            let hx = h.pdf(x);
            if hx <= 0.0 {
                return 0.0;
            }
            let fx = f.pdf(x);
            if fx <= 0.0 {
                singular.set(true);
                return 0.0;
            }
            hx * (hx.ln() - fx.ln())
        },
        lo,
        hi,
        &breaks,
        quad_tol,
    )?;
    if singular.get() {
        return Ok(f64::INFINITY);
    }
    Ok(r.value)
}

/// `∫(√f − √g)²`.
pub fn hellinger_squared(f: &dyn Density, g: &dyn Density, quad_tol: f64) -> Result<f64> {
    let (lo, hi, breaks) = integration_domain(&[f, g])?;
    let r = integrate(
        |x| (f.pdf(x).sqrt() - g.pdf(x).sqrt()).powi(2),
        lo,
        hi,
        &breaks,
        quad_tol,
    )?;
    Ok(r.value.max(0.0))
}

pub fn hellinger(f: &dyn Density, g: &dyn Density, quad_tol: f64) -> Result<f64> {
    Ok(hellinger_squared(f, g, quad_tol)?.sqrt())
}

/// `∫(f − g)²`.
pub fn l2_squared(f: &dyn Density, g: &dyn Density, quad_tol: f64) -> Result<f64> {
    let (lo, hi, breaks) = integration_domain(&[f, g])?;
    let r = integrate(|x| (f.pdf(x) - g.pdf(x)).powi(2), lo, hi, &breaks, quad_tol)?;
    Ok(r.value.max(0.0))
}

pub fn l2_distance(f: &dyn Density, g: &dyn Density, quad_tol: f64) -> Result<f64> {
    Ok(l2_squared(f, g, quad_tol)?.sqrt())
}

/// `∫ f` over the bulk of `f`.
pub fn total_mass(f: &dyn Density, quad_tol: f64) -> Result<f64> {
    let (lo, hi, breaks) = integration_domain(&[f])?;
    Ok(integrate(|x| f.pdf(x), lo, hi, &breaks, quad_tol)?.value)
}

/// `points` equally spaced grid values `(x, f_1(x), …, f_m(x))` on `[lo, hi]`.
pub fn density_grid(
    densities: &[&dyn Density],
    lo: f64,
    hi: f64,
    points: usize,
) -> Result<Vec<Vec<f64>>> {
    if points < 2 || !(lo < hi) {
        return Err(Error::Domain(format!(
            "grid needs at least 2 points on a non-empty range, got {points} on [{lo}, {hi}]"
        )));
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let x = if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            };
            std::iter::once(x)
                .chain(densities.iter().map(|d| d.pdf(x)))
                .collect()
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::densities::ParamFamily;

    #[test]
    fn gaussian_closed_forms() {
        let f = ParamFamily::normal(0.0, 1.0).unwrap();
        let g = ParamFamily::normal(1.0, 1.0).unwrap();
        let h = hellinger(&f, &g, DEFAULT_QUAD_TOL).unwrap();
        let l = l2_distance(&f, &g, DEFAULT_QUAD_TOL).unwrap();
        let kl = kl_divergence(&f, &g, DEFAULT_QUAD_TOL).unwrap();
        let h_exact = (2.0 * (1.0 - (-0.125f64).exp())).sqrt();
        let l_exact = ((1.0 - (-0.25f64).exp()) / std::f64::consts::PI.sqrt()).sqrt();
        assert!((h - h_exact).abs() < 1e-7, "{h}");
        assert!((l - l_exact).abs() < 1e-7, "{l}");
        assert!((kl - 0.5).abs() < 1e-6, "{kl}");
    }

    #[test]
    fn self_distance_is_zero() {
        let f = ParamFamily::gamma(0.7, 2.0).unwrap();
        assert!(kl_divergence(&f, &f, DEFAULT_QUAD_TOL).unwrap().abs() < 1e-12);
        assert_eq!(hellinger(&f, &f, DEFAULT_QUAD_TOL).unwrap(), 0.0);
        assert_eq!(l2_distance(&f, &f, DEFAULT_QUAD_TOL).unwrap(), 0.0);
    }

    #[test]
    fn kl_infinite_without_absolute_continuity() {
        let h = ParamFamily::normal(0.0, 1.0).unwrap();
        let f = ParamFamily::gamma(2.0, 1.0).unwrap();
        assert_eq!(
            kl_divergence(&h, &f, DEFAULT_QUAD_TOL).unwrap(),
            f64::INFINITY
        );
    }

    #[test]
    fn grid_endpoints() {
        let f = ParamFamily::normal(0.0, 1.0).unwrap();
        let g = density_grid(&[&f], -1.0, 1.0, 5).unwrap();
        assert_eq!(g.len(), 5);
        assert_eq!(g[0][0], -1.0);
        assert_eq!(g[4][0], 1.0);
        assert!((g[2][1] - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }
}
