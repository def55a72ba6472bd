//! Parametric density families, weight functions and weighted densities.
//!
//! A weighted density has the form
//!
//! ```text
//! f_w(x; θ) = δ(x) / N · f(x; θ)
//! ```
//!
//! where `δ` is a non-negative weight and `N` normalizes it: `E_f[δ(X)]` when it
//! has a closed form (length-biased weights), or an empirical probability
//! `P̂_h(X ∈ A)` for indicator weights restricting attention to a region `A`.
//!
//! Every family here has two parameters. Positive parameters (scales, shapes,
//! variances) are validated on construction.

use std::f64::consts::{FRAC_1_PI, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use statrs::function::{erf, gamma};

use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Probabilities whose quantiles are used as integration breakpoints.
const LANDMARK_PROBS: [f64; 11] = [
    1e-8,
    1e-4,
    0.01,
    0.1,
    0.25,
    0.5,
    0.75,
    0.9,
    0.99,
    0.9999,
    0.999_999_99,
];

/// Half-open interval `(lower, upper]`. Either end may be infinite.
///
/// The half-open convention makes the empirical mass of a region a difference
/// of two ECDF values, and lets `(-∞, c]` and `(c, ∞)` partition the line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lower: f64,
    pub upper: f64,
}

impl Interval {
    pub const REAL_LINE: Interval = Interval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };
    pub const POSITIVE: Interval = Interval {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_nan() || upper.is_nan() || lower >= upper {
            return Err(Error::Domain(format!(
                "interval ({lower}, {upper}] is empty or malformed"
            )));
        }
        Ok(Self { lower, upper })
    }

    /// `(-∞, point]`
    pub fn at_or_below(point: f64) -> Self {
        Self {
            lower: f64::NEG_INFINITY,
            upper: point,
        }
    }

    /// `(point, ∞)`
    pub fn above(point: f64) -> Self {
        Self {
            lower: point,
            upper: f64::INFINITY,
        }
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        x > self.lower && x <= self.upper
    }

    pub fn is_real_line(&self) -> bool {
        self.lower == f64::NEG_INFINITY && self.upper == f64::INFINITY
    }

    /// Clamp `x` into the closure of the interval.
    pub fn clamp(&self, x: f64) -> f64 {
        x.max(self.lower).min(self.upper)
    }
}

impl std::fmt::Display for Interval {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let close = if self.upper.is_infinite() { ")" } else { "]" };
        write!(f, "({}, {}{}", self.lower, self.upper, close)
    }
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    lower: Option<f64>,
    upper: Option<f64>,
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawInterval {
            lower: self.lower.is_finite().then_some(self.lower),
            upper: self.upper.is_finite().then_some(self.upper),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawInterval::deserialize(d)?;
        Interval::new(
            raw.lower.unwrap_or(f64::NEG_INFINITY),
            raw.upper.unwrap_or(f64::INFINITY),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    Normal,
    Cauchy,
    Logistic,
    Laplace,
    Gamma,
    Weibull,
    Lognormal,
}

impl FamilyKind {
    pub const ALL: [FamilyKind; 7] = [
        FamilyKind::Normal,
        FamilyKind::Cauchy,
        FamilyKind::Logistic,
        FamilyKind::Laplace,
        FamilyKind::Gamma,
        FamilyKind::Weibull,
        FamilyKind::Lognormal,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Normal => "normal",
            FamilyKind::Cauchy => "cauchy",
            FamilyKind::Logistic => "logistic",
            FamilyKind::Laplace => "laplace",
            FamilyKind::Gamma => "gamma",
            FamilyKind::Weibull => "weibull",
            FamilyKind::Lognormal => "lognormal",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        FamilyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(name.trim()))
            .ok_or_else(|| Error::Usage(format!("unknown family `{name}`")))
    }

    /// Parameter names in storage order.
    pub fn param_names(self) -> [&'static str; 2] {
        match self {
            FamilyKind::Normal | FamilyKind::Lognormal => ["mu", "sigma2"],
            FamilyKind::Cauchy | FamilyKind::Logistic | FamilyKind::Laplace => {
                ["location", "scale"]
            }
            FamilyKind::Gamma | FamilyKind::Weibull => ["shape", "scale"],
        }
    }

    /// Which parameters must be strictly positive.
    pub fn positive_params(self) -> [bool; 2] {
        match self {
            FamilyKind::Gamma | FamilyKind::Weibull => [true, true],
            _ => [false, true],
        }
    }

    pub fn param_dim(self) -> usize {
        2
    }

    pub fn support(self) -> Interval {
        if self.has_positive_support() {
            Interval::POSITIVE
        } else {
            Interval::REAL_LINE
        }
    }

    pub fn has_positive_support(self) -> bool {
        matches!(
            self,
            FamilyKind::Gamma | FamilyKind::Weibull | FamilyKind::Lognormal
        )
    }
}

impl std::fmt::Display for FamilyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A member of a two-parameter family, with its log normalizing constant
/// cached so that repeated evaluation in a likelihood loop stays cheap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParamFamily {
    kind: FamilyKind,
    params: [f64; 2],
    ln_const: f64,
}

impl ParamFamily {
    pub fn new(kind: FamilyKind, params: [f64; 2]) -> Result<Self> {
        let names = kind.param_names();
        for ((&value, name), positive) in params.iter().zip(names).zip(kind.positive_params()) {
            if !value.is_finite() || (positive && value <= 0.0) {
                return Err(Error::InvalidParameter {
                    family: kind.name(),
                    name,
                    value,
                });
            }
        }
        let [a, b] = params;
        let ln_const = match kind {
            FamilyKind::Normal | FamilyKind::Lognormal => -0.5 * (LN_2PI + b.ln()),
            FamilyKind::Cauchy => -(PI * b).ln(),
            FamilyKind::Logistic => -b.ln(),
            FamilyKind::Laplace => -(2.0 * b).ln(),
            FamilyKind::Gamma => -a * b.ln() - gamma::ln_gamma(a),
            FamilyKind::Weibull => a.ln() - a * b.ln(),
        };
        Ok(Self {
            kind,
            params,
            ln_const,
        })
    }

    pub fn normal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(FamilyKind::Normal, [mu, sigma2])
    }
    pub fn cauchy(location: f64, scale: f64) -> Result<Self> {
        Self::new(FamilyKind::Cauchy, [location, scale])
    }
    pub fn logistic(location: f64, scale: f64) -> Result<Self> {
        Self::new(FamilyKind::Logistic, [location, scale])
    }
    pub fn laplace(location: f64, scale: f64) -> Result<Self> {
        Self::new(FamilyKind::Laplace, [location, scale])
    }
    pub fn gamma(shape: f64, scale: f64) -> Result<Self> {
        Self::new(FamilyKind::Gamma, [shape, scale])
    }
    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::new(FamilyKind::Weibull, [shape, scale])
    }
    pub fn lognormal(mu: f64, sigma2: f64) -> Result<Self> {
        Self::new(FamilyKind::Lognormal, [mu, sigma2])
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn param_dim(&self) -> usize {
        self.kind.param_dim()
    }

    pub fn support(&self) -> Interval {
        self.kind.support()
    }

    /// Log density; `-∞` off the support (including the excluded endpoint 0
    /// of positive families).
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let [a, b] = self.params;
        let c = self.ln_const;
        match self.kind {
            FamilyKind::Normal => {
                if x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                let d = x - a;
                c - d * d / (2.0 * b)
            }
            FamilyKind::Cauchy => {
                if x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                let z = (x - a) / b;
                c - (z * z).ln_1p()
            }
            FamilyKind::Logistic => {
                let z = ((x - a) / b).abs();
                c - z - 2.0 * (-z).exp().ln_1p()
            }
            FamilyKind::Laplace => c - (x - a).abs() / b,
            FamilyKind::Gamma => {
                if x <= 0.0 || x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                c + (a - 1.0) * x.ln() - x / b
            }
            FamilyKind::Weibull => {
                if x <= 0.0 || x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                c + (a - 1.0) * x.ln() - (x / b).powf(a)
            }
            FamilyKind::Lognormal => {
                if x <= 0.0 || x.is_infinite() {
                    return f64::NEG_INFINITY;
                }
                let lx = x.ln();
                let d = lx - a;
                c - lx - d * d / (2.0 * b)
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let [a, b] = self.params;
        match self.kind {
            FamilyKind::Normal => normal_cdf((x - a) / b.sqrt()),
            FamilyKind::Cauchy => 0.5 + ((x - a) / b).atan() * FRAC_1_PI,
            FamilyKind::Logistic => 1.0 / (1.0 + (-(x - a) / b).exp()),
            FamilyKind::Laplace => {
                let z = (x - a) / b;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            FamilyKind::Gamma => {
                if x <= 0.0 {
                    0.0
                } else if x.is_infinite() {
                    1.0
                } else {
                    gamma::gamma_lr(a, x / b)
                }
            }
            FamilyKind::Weibull => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / b).powf(a)).exp_m1()
                }
            }
            FamilyKind::Lognormal => {
                if x <= 0.0 {
                    0.0
                } else {
                    normal_cdf((x.ln() - a) / b.sqrt())
                }
            }
        }
    }

    /// Upper tail `P(X > x)`, computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        let [a, b] = self.params;
        match self.kind {
            FamilyKind::Normal => normal_cdf(-(x - a) / b.sqrt()),
            FamilyKind::Cauchy => 0.5 - ((x - a) / b).atan() * FRAC_1_PI,
            FamilyKind::Logistic => 1.0 / (1.0 + ((x - a) / b).exp()),
            FamilyKind::Laplace => {
                let z = (x - a) / b;
                if z < 0.0 {
                    1.0 - 0.5 * z.exp()
                } else {
                    0.5 * (-z).exp()
                }
            }
            FamilyKind::Gamma => {
                if x <= 0.0 {
                    1.0
                } else if x.is_infinite() {
                    0.0
                } else {
                    gamma::gamma_ur(a, x / b)
                }
            }
            FamilyKind::Weibull => {
                if x <= 0.0 {
                    1.0
                } else {
                    (-(x / b).powf(a)).exp()
                }
            }
            FamilyKind::Lognormal => {
                if x <= 0.0 {
                    1.0
                } else {
                    normal_cdf(-(x.ln() - a) / b.sqrt())
                }
            }
        }
    }

    /// Probability mass of `(lower, upper]`.
    pub fn mass(&self, region: &Interval) -> f64 {
        let upper_tail = self.sf(region.lower) - self.sf(region.upper);
        let lower_tail = self.cdf(region.upper) - self.cdf(region.lower);
        // Pick the representation that subtracts the smaller numbers.
        if self.cdf(region.lower) > 0.5 {
            upper_tail.max(0.0)
        } else {
            lower_tail.max(0.0)
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let support = self.support();
        if p <= 0.0 {
            return support.lower;
        }
        if p >= 1.0 {
            return support.upper;
        }
        let [a, b] = self.params;
        match self.kind {
            FamilyKind::Normal => a + b.sqrt() * standard_normal_quantile(p),
            FamilyKind::Cauchy => a + b * (PI * (p - 0.5)).tan(),
            FamilyKind::Logistic => a + b * (p / (1.0 - p)).ln(),
            FamilyKind::Laplace => {
                if p < 0.5 {
                    a + b * (2.0 * p).ln()
                } else {
                    a - b * (2.0 * (1.0 - p)).ln()
                }
            }
            FamilyKind::Gamma => self.positive_quantile(p),
            FamilyKind::Weibull => b * (-(-p).ln_1p()).powf(1.0 / a),
            FamilyKind::Lognormal => (a + b.sqrt() * standard_normal_quantile(p)).exp(),
        }
    }

    /// Bisection on `ln x`, comparing against whichever tail of `p` is
    /// smaller so both extremes keep full relative precision.
    fn positive_quantile(&self, p: f64) -> f64 {
        let below = |x: f64| {
            if p <= 0.5 {
                self.cdf(x) < p
            } else {
                self.sf(x) > 1.0 - p
            }
        };
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        while !below(lo.exp()) {
            lo *= 2.0;
            if lo < -1400.0 {
                return 0.0;
            }
        }
        while below(hi.exp()) {
            hi *= 2.0;
            if hi > 1400.0 {
                return f64::INFINITY;
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi || hi - lo <= 1e-15 * mid.abs().max(1.0) {
                break;
            }
            if below(mid.exp()) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    }

    /// `E_f(X)` in closed form.
    pub fn mean(&self) -> Result<f64> {
        let [a, b] = self.params;
        match self.kind {
            FamilyKind::Normal | FamilyKind::Logistic | FamilyKind::Laplace => Ok(a),
            FamilyKind::Gamma => Ok(a * b),
            FamilyKind::Weibull => Ok(b * gamma::gamma(1.0 + 1.0 / a)),
            FamilyKind::Lognormal => Ok((a + 0.5 * b).exp()),
            FamilyKind::Cauchy => Err(Error::NotAvailable(
                "the cauchy family has no mean".to_string(),
            )),
        }
    }

    pub fn sampler(&self) -> FamilySampler {
        let [a, b] = self.params;
        let inner = match self.kind {
            FamilyKind::Normal => {
                SamplerInner::Normal(rand_distr::Normal::new(a, b.sqrt()).expect("validated"))
            }
            FamilyKind::Cauchy => {
                SamplerInner::Cauchy(rand_distr::Cauchy::new(a, b).expect("validated"))
            }
            FamilyKind::Logistic => SamplerInner::Logistic {
                location: a,
                scale: b,
            },
            FamilyKind::Laplace => SamplerInner::Laplace {
                location: a,
                scale: b,
            },
            FamilyKind::Gamma => {
                SamplerInner::Gamma(rand_distr::Gamma::new(a, b).expect("validated"))
            }
            FamilyKind::Weibull => {
                SamplerInner::Weibull(rand_distr::Weibull::new(b, a).expect("validated"))
            }
            FamilyKind::Lognormal => {
                SamplerInner::Lognormal(rand_distr::LogNormal::new(a, b.sqrt()).expect("validated"))
            }
        };
        FamilySampler(inner)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let sampler = self.sampler();
        (0..n).map(|_| sampler.sample(rng)).collect()
    }
}

/// Draws from a [`ParamFamily`]; built once per batch.
#[derive(Clone, Copy, Debug)]
pub struct FamilySampler(SamplerInner);

#[derive(Clone, Copy, Debug)]
enum SamplerInner {
    Normal(rand_distr::Normal<f64>),
    Cauchy(rand_distr::Cauchy<f64>),
    Logistic { location: f64, scale: f64 },
    Laplace { location: f64, scale: f64 },
    Gamma(rand_distr::Gamma<f64>),
    Weibull(rand_distr::Weibull<f64>),
    Lognormal(rand_distr::LogNormal<f64>),
}

impl Distribution<f64> for FamilySampler {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match &self.0 {
            SamplerInner::Normal(d) => d.sample(rng),
            SamplerInner::Cauchy(d) => d.sample(rng),
            SamplerInner::Logistic { location, scale } => {
                let u: f64 = Open01.sample(rng);
                location + scale * (u / (1.0 - u)).ln()
            }
            SamplerInner::Laplace { location, scale } => {
                let u: f64 = Open01.sample(rng);
                if u < 0.5 {
                    location + scale * (2.0 * u).ln()
                } else {
                    location - scale * (2.0 * (1.0 - u)).ln()
                }
            }
            SamplerInner::Gamma(d) => d.sample(rng),
            SamplerInner::Weibull(d) => d.sample(rng),
            SamplerInner::Lognormal(d) => d.sample(rng),
        }
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erf::erfc(-z / std::f64::consts::SQRT_2)
}

pub(crate) fn standard_normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erf::erfc_inv(2.0 * p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// `E_f[δ(X)]` evaluated in closed form under the model.
    AnalyticUnderF,
    /// A probability under the true density, estimated from the sample.
    EmpiricalUnderH,
}

/// The weight function `δ` and how it is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSpec {
    #[default]
    Identity,
    /// `δ(x) = x`, normalized by `E_f(X)`.
    LengthBiased,
    /// `δ(x) = I_A(x)`, normalized by `P̂_h(X ∈ A)`.
    IndicatorRegion { region: Interval },
}

impl WeightSpec {
    pub fn indicator(region: Interval) -> Self {
        WeightSpec::IndicatorRegion { region }
    }

    pub fn normalizer(&self) -> Normalizer {
        match self {
            WeightSpec::Identity | WeightSpec::LengthBiased => Normalizer::AnalyticUnderF,
            WeightSpec::IndicatorRegion { .. } => Normalizer::EmpiricalUnderH,
        }
    }

    /// `ln δ(x)`.
    #[inline]
    pub fn ln_weight(&self, x: f64) -> f64 {
        match self {
            WeightSpec::Identity => 0.0,
            WeightSpec::LengthBiased => {
                if x > 0.0 {
                    x.ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            WeightSpec::IndicatorRegion { region } => {
                if region.contains(x) {
                    0.0
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn region(&self) -> Option<Interval> {
        match self {
            WeightSpec::IndicatorRegion { region } => Some(*region),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        match self {
            WeightSpec::Identity => "identity".to_string(),
            WeightSpec::LengthBiased => "length_biased".to_string(),
            WeightSpec::IndicatorRegion { region } => format!("indicator{region}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedFamily {
    pub base: ParamFamily,
    pub weight: WeightSpec,
}

impl WeightedFamily {
    pub fn new(base: ParamFamily, weight: WeightSpec) -> Result<Self> {
        if weight == WeightSpec::LengthBiased {
            if !base.kind().has_positive_support() {
                return Err(Error::InvalidWeight(format!(
                    "length-biased weight needs a positive-support family, got {}",
                    base.kind()
                )));
            }
            base.mean()?;
        }
        Ok(Self { base, weight })
    }

    pub fn unweighted(base: ParamFamily) -> Self {
        Self {
            base,
            weight: WeightSpec::Identity,
        }
    }

    /// The normalizer `N`. Analytic weights compute it from the model;
    /// empirical weights take it from the caller.
    pub fn normalizer(&self, empirical: Option<f64>) -> Result<f64> {
        match self.weight {
            WeightSpec::Identity => Ok(1.0),
            WeightSpec::LengthBiased => self.base.mean(),
            WeightSpec::IndicatorRegion { .. } => match empirical {
                Some(p) if p > 0.0 && p.is_finite() => Ok(p),
                Some(p) => Err(Error::Domain(format!(
                    "region normalizer must be positive, got {p}"
                ))),
                None => Err(Error::NotAvailable(
                    "indicator weights need an empirical normalizer".to_string(),
                )),
            },
        }
    }

    /// `ln δ(x) − ln N + ln f(x)`, `-∞` where `δ(x) f(x) = 0`.
    #[inline]
    pub fn ln_pdf_normalized(&self, x: f64, ln_norm: f64) -> f64 {
        let lw = self.weight.ln_weight(x);
        if lw == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        let lf = self.base.ln_pdf(x);
        if lf == f64::NEG_INFINITY {
            return f64::NEG_INFINITY;
        }
        lw - ln_norm + lf
    }

    /// Weighted log density at `x`. `empirical` is required for indicator
    /// weights and ignored otherwise.
    pub fn weighted_log_pdf(&self, x: f64, empirical: Option<f64>) -> Result<f64> {
        let norm = self.normalizer(empirical)?;
        Ok(self.ln_pdf_normalized(x, norm.ln()))
    }

    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    /// Exact draws. Length-biased lognormal, gamma and Weibull are sampled
    /// through their closed-form identities.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::Domain("sample size must be at least 1".to_string()));
        }
        match self.weight {
            WeightSpec::Identity => Ok(self.base.sample_with(rng, n)),
            WeightSpec::LengthBiased => {
                let [a, b] = [self.base.params[0], self.base.params[1]];
                match self.base.kind() {
                    // LN(μ, σ²) length-biased is LN(μ + σ², σ²)
                    FamilyKind::Lognormal => {
                        Ok(ParamFamily::lognormal(a + b, b)?.sample_with(rng, n))
                    }
                    // Gamma(α, λ) length-biased is Gamma(α + 1, λ)
                    FamilyKind::Gamma => Ok(ParamFamily::gamma(a + 1.0, b)?.sample_with(rng, n)),
                    // (X/γ)^β ~ Gamma(1 + 1/β, 1)
                    FamilyKind::Weibull => {
                        let g = rand_distr::Gamma::new(1.0 + 1.0 / a, 1.0).expect("validated");
                        Ok((0..n).map(|_| b * g.sample(rng).powf(1.0 / a)).collect())
                    }
                    other => Err(Error::NotAvailable(format!(
                        "no length-biased sampler for {other}"
                    ))),
                }
            }
            WeightSpec::IndicatorRegion { .. } => Err(Error::NotAvailable(
                "sampling from indicator-weighted families".to_string(),
            )),
        }
    }

    /// A proper density view. Indicator weights are normalized by the
    /// model's own mass on the region so the result integrates to one.
    pub fn density(&self) -> Result<NormalizedDensity> {
        let norm = match self.weight {
            WeightSpec::IndicatorRegion { region } => {
                let m = self.base.mass(&region);
                if m <= 0.0 {
                    return Err(Error::Domain(format!(
                        "{} places no mass on {region}",
                        self.base.kind()
                    )));
                }
                m
            }
            _ => self.normalizer(None)?,
        };
        Ok(NormalizedDensity {
            family: *self,
            norm,
        })
    }
}

/// A weighted family together with the constant that makes it integrate to 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormalizedDensity {
    pub family: WeightedFamily,
    pub norm: f64,
}

/// Pointwise density with enough shape information to integrate it.
pub trait Density: Send + Sync {
    fn pdf(&self, x: f64) -> f64;

    /// An interval holding all but `tail` of the probability mass.
    fn mass_range(&self, tail: f64) -> (f64, f64);

    /// Points where an integrand involving this density should be split:
    /// kinks, support edges and quantiles spanning the bulk.
    fn landmarks(&self) -> Vec<f64> {
        Vec::new()
    }
}

impl Density for ParamFamily {
    fn pdf(&self, x: f64) -> f64 {
        ParamFamily::pdf(self, x)
    }

    fn mass_range(&self, tail: f64) -> (f64, f64) {
        let support = self.support();
        let lo = self.quantile(0.5 * tail);
        let hi = self.quantile(1.0 - 0.5 * tail);
        (lo.max(support.lower), hi.min(support.upper))
    }

    fn landmarks(&self) -> Vec<f64> {
        let mut out: Vec<f64> = LANDMARK_PROBS.iter().map(|&p| self.quantile(p)).collect();
        if self.kind.has_positive_support() {
            out.push(0.0);
        }
        if self.kind == FamilyKind::Laplace {
            out.push(self.params[0]);
        }
        out
    }
}

impl Density for NormalizedDensity {
    fn pdf(&self, x: f64) -> f64 {
        self.family.ln_pdf_normalized(x, self.norm.ln()).exp()
    }

    fn mass_range(&self, tail: f64) -> (f64, f64) {
        let base = &self.family.base;
        match self.family.weight {
            WeightSpec::Identity => base.mass_range(tail),
            WeightSpec::LengthBiased => length_biased_equivalent(base).mass_range(tail),
            WeightSpec::IndicatorRegion { region } => {
                // Base mass outside the range is at most tail * m, so the
                // truncated density loses at most `tail` there.
                let (lo, hi) = base.mass_range(tail * self.norm);
                (region.clamp(lo), region.clamp(hi))
            }
        }
    }

    fn landmarks(&self) -> Vec<f64> {
        let base = &self.family.base;
        match self.family.weight {
            WeightSpec::Identity => base.landmarks(),
            WeightSpec::LengthBiased => length_biased_equivalent(base).landmarks(),
            WeightSpec::IndicatorRegion { region } => {
                let mut out: Vec<f64> = base
                    .landmarks()
                    .into_iter()
                    .filter(|x| region.contains(*x))
                    .collect();
                out.extend(
                    [region.lower, region.upper]
                        .into_iter()
                        .filter(|x| x.is_finite()),
                );
                out
            }
        }
    }
}

/// A family with the same bulk as the length-biased version of `base`, used
/// only to place integration breakpoints.
fn length_biased_equivalent(base: &ParamFamily) -> ParamFamily {
    let [a, b] = [base.params[0], base.params[1]];
    let shifted = match base.kind() {
        FamilyKind::Lognormal => ParamFamily::lognormal(a + b, b),
        FamilyKind::Gamma => ParamFamily::gamma(a + 1.0, b),
        _ => Ok(*base),
    };
    shifted.unwrap_or(*base)
}

/// `w·f₁ + (1−w)·f₂` for two fixed families; the true density of the
/// two-mode simulation is of this form.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoComponentMixture {
    pub weight: f64,
    pub first: ParamFamily,
    pub second: ParamFamily,
}

impl TwoComponentMixture {
    pub fn new(weight: f64, first: ParamFamily, second: ParamFamily) -> Result<Self> {
        if !(0.0..=1.0).contains(&weight) {
            return Err(Error::Domain(format!(
                "mixture weight {weight} outside [0, 1]"
            )));
        }
        Ok(Self {
            weight,
            first,
            second,
        })
    }

    /// `1/3 · Laplace(−4, 0.5) + 2/3 · Logistic(6, 1)`.
    pub fn two_mode_reference() -> Self {
        Self {
            weight: 1.0 / 3.0,
            first: ParamFamily::laplace(-4.0, 0.5).expect("valid"),
            second: ParamFamily::logistic(6.0, 1.0).expect("valid"),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.weight * self.first.pdf(x) + (1.0 - self.weight) * self.second.pdf(x)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.weight * self.first.cdf(x) + (1.0 - self.weight) * self.second.cdf(x)
    }

    pub fn mean(&self) -> Result<f64> {
        Ok(self.weight * self.first.mean()? + (1.0 - self.weight) * self.second.mean()?)
    }

    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, n)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let first = self.first.sampler();
        let second = self.second.sampler();
        (0..n)
            .map(|_| {
                if rng.random::<f64>() < self.weight {
                    first.sample(rng)
                } else {
                    second.sample(rng)
                }
            })
            .collect()
    }
}

impl Density for TwoComponentMixture {
    fn pdf(&self, x: f64) -> f64 {
        TwoComponentMixture::pdf(self, x)
    }

    fn mass_range(&self, tail: f64) -> (f64, f64) {
        let (a, b) = self.first.mass_range(tail);
        let (c, d) = self.second.mass_range(tail);
        (a.min(c), b.max(d))
    }

    fn landmarks(&self) -> Vec<f64> {
        let mut out = self.first.landmarks();
        out.extend(self.second.landmarks());
        out
    }
}

/// Candidate model as written in configuration files:
///
/// ```json
/// {"family":"lognormal","params":{"mu":2,"sigma2":0.5},"weight":{"kind":"length_biased"}}
/// ```
///
/// `params` is optional for candidates that are going to be fitted.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub family: FamilyKind,
    pub weight: WeightSpec,
    pub params: Option<[f64; 2]>,
}

impl ModelSpec {
    pub fn new(family: FamilyKind, weight: WeightSpec) -> Self {
        Self {
            family,
            weight,
            params: None,
        }
    }

    pub fn with_params(mut self, params: [f64; 2]) -> Self {
        self.params = Some(params);
        self
    }

    pub fn label(&self) -> String {
        match self.weight {
            WeightSpec::Identity => self.family.name().to_string(),
            WeightSpec::LengthBiased => format!("length_biased_{}", self.family),
            WeightSpec::IndicatorRegion { region } => format!("{}|{region}", self.family),
        }
    }

    /// Fixed weighted family built from the given parameters.
    pub fn weighted_family(&self) -> Result<WeightedFamily> {
        let params = self
            .params
            .ok_or_else(|| Error::Usage(format!("model `{}` has no parameters", self.label())))?;
        WeightedFamily::new(ParamFamily::new(self.family, params)?, self.weight)
    }
}

#[derive(Serialize, Deserialize)]
struct RawModelSpec {
    family: FamilyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    params: Option<serde_json::Map<String, serde_json::Value>>,
    #[serde(default)]
    weight: WeightSpec,
}

impl Serialize for ModelSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let params = self.params.map(|p| {
            self.family
                .param_names()
                .iter()
                .zip(p)
                .map(|(n, v)| (n.to_string(), serde_json::Value::from(v)))
                .collect()
        });
        RawModelSpec {
            family: self.family,
            params,
            weight: self.weight,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ModelSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = RawModelSpec::deserialize(d)?;
        let params = match raw.params {
            None => None,
            Some(map) => {
                let names = raw.family.param_names();
                if let Some(extra) = map.keys().find(|k| !names.contains(&k.as_str())) {
                    return Err(D::Error::custom(format!(
                        "unknown parameter `{extra}` for {} (expected {names:?})",
                        raw.family
                    )));
                }
                let mut out = [0.0; 2];
                for (slot, name) in out.iter_mut().zip(names) {
                    *slot = map.get(name).and_then(|v| v.as_f64()).ok_or_else(|| {
                        D::Error::custom(format!("missing numeric parameter `{name}`"))
                    })?;
                }
                Some(out)
            }
        };
        Ok(ModelSpec {
            family: raw.family,
            weight: raw.weight,
            params,
        })
    }
}
