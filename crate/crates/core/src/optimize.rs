//! Derivative-free Nelder-Mead minimizer for small unconstrained problems.
//!
//! Box constraints are handled by the caller through reparameterization
//! (log transform of positive parameters), so the simplex moves freely.

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions {
    pub max_iter: usize,
    /// Relative spread of objective values across the simplex.
    pub ftol: f64,
    /// Simplex diameter, relative to `1 + |x_best|`.
    pub xtol: f64,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            max_iter: 500,
            ftol: 1e-8,
            xtol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    /// The relative objective criterion was met.
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn eval<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn objective_settled(best: f64, worst: f64, ftol: f64) -> bool {
    if !(best.is_finite() && worst.is_finite()) {
        return false;
    }
    2.0 * (worst - best).abs() <= ftol * (best.abs() + worst.abs()) + f64::MIN_POSITIVE
}

/// Minimize `f` starting from `x0`, with an initial simplex offset by `steps`
/// along each axis.
pub fn minimize<F: Fn(&[f64]) -> f64>(
    f: F,
    x0: &[f64],
    steps: &[f64],
    opts: &NelderMeadOptions,
) -> Minimum {
    let dim = x0.len();
    assert_eq!(dim, steps.len(), "one step per coordinate");

    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((x0.to_vec(), eval(&f, x0)));
    for i in 0..dim {
        let mut x = x0.to_vec();
        x[i] += steps[i];
        let v = eval(&f, &x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let mut converged;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let best = simplex[0].1;
        let worst = simplex[dim].1;
        converged = objective_settled(best, worst, opts.ftol);
        let scale = 1.0 + simplex[0].0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let diameter = simplex[1..]
            .iter()
            .flat_map(|(x, _)| x.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()))
            .fold(0.0f64, f64::max);
        if (converged && diameter <= opts.xtol * scale) || iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; dim];
        for (x, _) in &simplex[..dim] {
            for (c, v) in centroid.iter_mut().zip(x) {
                *c += v / dim as f64;
            }
        }
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&simplex[dim].0)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(REFLECT);
        let fr = eval(&f, &xr);
        if fr < best {
            let xe = along(REFLECT * EXPAND);
            let fe = eval(&f, &xe);
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc, accept) = if fr < worst {
            let xc = along(REFLECT * CONTRACT);
            let fc = eval(&f, &xc);
            (xc, fc, fc <= fr)
        } else {
            let xc = along(-CONTRACT);
            let fc = eval(&f, &xc);
            (xc, fc, fc < worst)
        };
        if accept {
            simplex[dim] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for (x, v) in simplex.iter_mut().skip(1) {
            for (xi, ai) in x.iter_mut().zip(&anchor) {
                *xi = ai + SHRINK * (*xi - ai);
            }
            *v = eval(&f, x);
        }
    }

    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}
