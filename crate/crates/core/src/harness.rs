//! Monte Carlo studies: a global confidence set over replicated samples
//! (length-biased lognormal preset) and the two-region mixture study on the
//! two-mode reference density.
//!
//! Each replication draws from its own ChaCha8 stream derived from
//! `(seed, n, rep)`, so results do not depend on scheduling or worker count.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::confidence_set::{build_local_mcs, build_mcs};
use crate::densities::{
    Density, FamilyKind, Interval, ModelSpec, TwoComponentMixture, WeightSpec, WeightedFamily,
};
use crate::error::{Error, Result};
use crate::estimation::{Dataset, OptimizerOptions};
use crate::metrics::{self, DEFAULT_QUAD_TOL};
use crate::mixture::{self, beta_budget, MixtureDensity};
use crate::vuong::critical_value;

/// Overrides the number of worker threads when set.
pub const WORKERS_ENV: &str = "WMCS_WORKERS";

pub const EXAMPLE2_REGION_A: [FamilyKind; 4] = [
    FamilyKind::Normal,
    FamilyKind::Cauchy,
    FamilyKind::Logistic,
    FamilyKind::Laplace,
];
pub const EXAMPLE2_REGION_B: [FamilyKind; 3] = [
    FamilyKind::Gamma,
    FamilyKind::Weibull,
    FamilyKind::Lognormal,
];
const HIST_BINS: usize = 60;
const GRID_POINTS: usize = 801;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Experiment {
    Example1,
    Example2,
    Custom,
}

impl Experiment {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "example1" => Ok(Self::Example1),
            "example2" => Ok(Self::Example2),
            "custom" => Ok(Self::Custom),
            other => Err(Error::Usage(format!(
                "unknown experiment `{other}` (expected example1, example2 or custom)"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub alpha: f64,
    /// Per-region level for the mixture study; defaults to the budget bound.
    pub beta: Option<f64>,
    pub seed: u64,
    pub optimizer: OptimizerOptions,
    /// Compute Hellinger and L² distances in the mixture study.
    pub distances: bool,
    #[serde(skip)]
    pub output_dir: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
    /// Data-generating model for custom studies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub truth: Option<ModelSpec>,
    /// Candidates for custom studies.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<ModelSpec>,
}

impl ExperimentConfig {
    pub fn example1() -> Self {
        Self {
            experiment: Experiment::Example1,
            sample_sizes: vec![50, 200, 300],
            replications: 1000,
            alpha: 0.05,
            beta: None,
            seed: 0,
            optimizer: OptimizerOptions::default(),
            distances: true,
            output_dir: None,
            workers: None,
            truth: None,
            candidates: Vec::new(),
        }
    }

    pub fn example2() -> Self {
        Self {
            experiment: Experiment::Example2,
            sample_sizes: vec![1000],
            beta: Some(0.025),
            ..Self::example1()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::Usage("replications must be at least 1".to_string()));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.iter().any(|&n| n < 10) {
            return Err(Error::Usage("sample sizes must be at least 10".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Usage(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.experiment == Experiment::Custom
            && (self.truth.is_none() || self.candidates.len() < 2)
        {
            return Err(Error::Usage(
                "custom experiments need a truth model and at least two candidates".to_string(),
            ));
        }
        Ok(())
    }
}

fn rng_for(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

fn worker_pool(workers: Option<usize>) -> Result<rayon::ThreadPool> {
    let from_env = std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok());
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers.or(from_env).unwrap_or(0))
        .build()
        .map_err(|e| Error::Usage(format!("cannot start worker pool: {e}")))
}

fn set_label(labels: &[String]) -> String {
    format!("{{{}}}", labels.join("; "))
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

// ---------------------------------------------------------------------------
// Global confidence set over replications

#[derive(Clone, Debug, Serialize)]
pub struct SizeRow {
    pub n: usize,
    pub replications_used: usize,
    pub failed_replications: usize,
    /// Replication mean of each model's minimum statistic.
    pub mean_statistic: Vec<f64>,
    pub acceptance_rate: Vec<f64>,
    /// The threshold applied to the mean statistics.
    pub accepted: Vec<bool>,
    pub confidence_set: Vec<String>,
    /// Most frequent per-replication set and its frequency.
    pub modal_set: Vec<String>,
    pub modal_frequency: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GlobalStudy {
    pub truth: ModelSpec,
    pub models: Vec<String>,
    pub alpha: f64,
    pub critical: f64,
    pub rows: Vec<SizeRow>,
}

struct GlobalRep {
    min_t: Vec<f64>,
    accepted: Vec<bool>,
}

/// The length-biased lognormal study: truth LB-LN(2, 0.5), candidates the
/// length-biased lognormal, gamma and Weibull families.
pub fn example1_models() -> (ModelSpec, Vec<ModelSpec>) {
    let truth =
        ModelSpec::new(FamilyKind::Lognormal, WeightSpec::LengthBiased).with_params([2.0, 0.5]);
    let candidates = [
        FamilyKind::Lognormal,
        FamilyKind::Gamma,
        FamilyKind::Weibull,
    ]
    .iter()
    .map(|&f| ModelSpec::new(f, WeightSpec::LengthBiased))
    .collect();
    (truth, candidates)
}

pub fn run_example1(cfg: &ExperimentConfig) -> Result<GlobalStudy> {
    let (truth, candidates) = example1_models();
    run_global_study(&truth, &candidates, cfg)
}

/// Replicated global confidence sets for samples drawn from `truth`.
pub fn run_global_study(
    truth: &ModelSpec,
    candidates: &[ModelSpec],
    cfg: &ExperimentConfig,
) -> Result<GlobalStudy> {
    cfg.validate()?;
    let truth_family = truth.weighted_family()?;
    let k = candidates.len();
    let critical = critical_value(cfg.alpha, k)?;
    let models: Vec<String> = candidates.iter().map(|c| c.label()).collect();
    let pool = worker_pool(cfg.workers)?;

    let mut rows = Vec::new();
    for &n in &cfg.sample_sizes {
        let reps: Vec<Option<GlobalRep>> = pool.install(|| {
            (0..cfg.replications)
                .into_par_iter()
                .map(|rep| {
                    global_rep(&truth_family, candidates, n, rep, cfg)
                        .ok()
                        .flatten()
                })
                .collect()
        });
        let ok: Vec<&GlobalRep> = reps.iter().flatten().collect();
        if ok.is_empty() {
            return Err(Error::InsufficientData {
                needed: 1,
                available: 0,
            });
        }
        let used = ok.len();
        let mean_statistic: Vec<f64> = (0..k)
            .map(|i| mean(ok.iter().map(|r| r.min_t[i])))
            .collect();
        let acceptance_rate: Vec<f64> = (0..k)
            .map(|i| ok.iter().filter(|r| r.accepted[i]).count() as f64 / used as f64)
            .collect();
        let accepted: Vec<bool> = mean_statistic.iter().map(|&t| t >= -critical).collect();
        let confidence_set = (0..k)
            .filter(|&i| accepted[i])
            .map(|i| models[i].clone())
            .collect();

        let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for r in &ok {
            *counts.entry(r.accepted.clone()).or_default() += 1;
        }
        // ties go to the larger set, then to the first in key order
        let (modal, modal_count) = counts
            .iter()
            .max_by(|a, b| {
                a.1.cmp(b.1)
                    .then(
                        a.0.iter()
                            .filter(|x| **x)
                            .count()
                            .cmp(&b.0.iter().filter(|x| **x).count()),
                    )
                    .then(b.0.cmp(a.0))
            })
            .map(|(k, v)| (k.clone(), *v))
            .expect("non-empty");
        rows.push(SizeRow {
            n,
            replications_used: used,
            failed_replications: cfg.replications - used,
            mean_statistic,
            acceptance_rate,
            accepted,
            confidence_set,
            modal_set: (0..k)
                .filter(|&i| modal[i])
                .map(|i| models[i].clone())
                .collect(),
            modal_frequency: modal_count as f64 / used as f64,
        });
    }
    Ok(GlobalStudy {
        truth: truth.clone(),
        models,
        alpha: cfg.alpha,
        critical,
        rows,
    })
}

fn global_rep(
    truth: &WeightedFamily,
    candidates: &[ModelSpec],
    n: usize,
    rep: usize,
    cfg: &ExperimentConfig,
) -> Result<Option<GlobalRep>> {
    let mut rng = rng_for(cfg.seed, n, rep);
    let data = Dataset::new(truth.sample_with(&mut rng, n)?)?;
    let set = build_mcs(candidates, &data, cfg.alpha, &cfg.optimizer)?;
    if set.k != candidates.len() {
        return Ok(None);
    }
    Ok(Some(GlobalRep {
        min_t: set.outcomes.iter().map(|o| o.min_t).collect(),
        accepted: set.outcomes.iter().map(|o| o.accepted).collect(),
    }))
}

// ---------------------------------------------------------------------------
// Two-region mixture study

#[derive(Clone, Debug, Serialize)]
pub struct LocalTable {
    pub region: Interval,
    pub models: Vec<String>,
    pub critical: f64,
    pub mean_statistic: Vec<f64>,
    pub acceptance_rate: Vec<f64>,
    pub accepted: Vec<bool>,
    pub confidence_set: Vec<String>,
    /// Fraction of replications whose own local set equals `confidence_set`.
    pub set_frequency: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct PairRow {
    pub f: String,
    pub g: String,
    pub alpha_opt: f64,
    pub hellinger: Option<f64>,
    pub l2: Option<f64>,
}

impl PairRow {
    pub fn label(&self) -> String {
        format!("{} + {}", self.f, self.g)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SingleDataset {
    pub local_sets: [Vec<String>; 2],
    pub candidates: Vec<PairRow>,
}

#[derive(Clone, Debug, Serialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
    pub density: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct DensityGrid {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize)]
pub struct MixtureStudy {
    pub n: usize,
    pub alpha: f64,
    pub beta: f64,
    pub beta_budget: f64,
    pub partition: f64,
    pub replications_used: usize,
    pub failed_replications: usize,
    pub local: [LocalTable; 2],
    /// Replication means over every pair of the two local sets.
    pub mixture: Vec<PairRow>,
    /// The first replication analysed on its own.
    pub single_dataset: SingleDataset,
    pub histogram: Vec<HistogramBin>,
    pub densities: DensityGrid,
}

struct MixtureRep {
    min_t: [Vec<f64>; 2],
    accepted: [Vec<bool>; 2],
    families: [Vec<WeightedFamily>; 2],
    /// Indexed `[i][j]` by model on each region.
    alpha_opt: Vec<Vec<f64>>,
}

fn mixture_rep(
    truth: &TwoComponentMixture,
    n: usize,
    rep: usize,
    beta: f64,
    cfg: &ExperimentConfig,
) -> Result<Option<MixtureRep>> {
    let mut rng = rng_for(cfg.seed, n, rep);
    let data = Dataset::new(truth.sample_with(&mut rng, n))?;
    let regions = [Interval::at_or_below(0.0), Interval::above(0.0)];
    let first = build_local_mcs(&EXAMPLE2_REGION_A, &data, regions[0], beta, &cfg.optimizer)?;
    let second = build_local_mcs(&EXAMPLE2_REGION_B, &data, regions[1], beta, &cfg.optimizer)?;
    if first.k != EXAMPLE2_REGION_A.len() || second.k != EXAMPLE2_REGION_B.len() {
        return Ok(None);
    }
    let values = |set: &crate::confidence_set::ConfidenceSet| -> Result<Vec<Vec<f64>>> {
        set.fits
            .iter()
            .map(|f| {
                let d = f.family.density()?;
                Ok(data.values().iter().map(|&x| d.pdf(x)).collect())
            })
            .collect()
    };
    let f_vals = values(&first)?;
    let g_vals = values(&second)?;
    let alpha_opt = f_vals
        .iter()
        .map(|f| {
            g_vals
                .iter()
                .map(|g| mixture::optimal_alpha(f, g))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(MixtureRep {
        min_t: [
            first.outcomes.iter().map(|o| o.min_t).collect(),
            second.outcomes.iter().map(|o| o.min_t).collect(),
        ],
        accepted: [
            first.outcomes.iter().map(|o| o.accepted).collect(),
            second.outcomes.iter().map(|o| o.accepted).collect(),
        ],
        families: [
            first.fits.iter().map(|f| f.family).collect(),
            second.fits.iter().map(|f| f.family).collect(),
        ],
        alpha_opt,
    }))
}

fn local_table(
    reps: &[&MixtureRep],
    side: usize,
    families: &[FamilyKind],
    region: Interval,
    critical: f64,
) -> LocalTable {
    let k = families.len();
    let used = reps.len() as f64;
    let models: Vec<String> = families.iter().map(|f| f.name().to_string()).collect();
    let mean_statistic: Vec<f64> = (0..k)
        .map(|i| mean(reps.iter().map(|r| r.min_t[side][i])))
        .collect();
    let acceptance_rate = (0..k)
        .map(|i| reps.iter().filter(|r| r.accepted[side][i]).count() as f64 / used)
        .collect();
    let accepted: Vec<bool> = mean_statistic.iter().map(|&t| t >= -critical).collect();
    let set_frequency = reps.iter().filter(|r| r.accepted[side] == accepted).count() as f64 / used;
    LocalTable {
        region,
        confidence_set: (0..k)
            .filter(|&i| accepted[i])
            .map(|i| models[i].clone())
            .collect(),
        models,
        critical,
        mean_statistic,
        acceptance_rate,
        accepted,
        set_frequency,
    }
}

fn two_mode_truth() -> TwoComponentMixture {
    TwoComponentMixture::two_mode_reference()
}

/// Sample from the two-mode reference used by the mixture study.
pub fn example2_sample(seed: u64, n: usize, rep: usize) -> Vec<f64> {
    let mut rng = rng_for(seed, n, rep);
    two_mode_truth().sample_with(&mut rng, n)
}

pub fn run_example2(cfg: &ExperimentConfig) -> Result<MixtureStudy> {
    cfg.validate()?;
    let truth = two_mode_truth();
    let n = cfg.sample_sizes[0];
    let budget = beta_budget(cfg.alpha, 2)?;
    let beta = cfg.beta.unwrap_or(budget);
    if !(beta > 0.0 && beta <= budget * (1.0 + 1e-12)) {
        return Err(Error::Usage(format!(
            "beta must lie in (0, {budget:.6}] for alpha = {}, got {beta}",
            cfg.alpha
        )));
    }
    let critical = [
        critical_value(beta, EXAMPLE2_REGION_A.len())?,
        critical_value(beta, EXAMPLE2_REGION_B.len())?,
    ];
    let regions = [Interval::at_or_below(0.0), Interval::above(0.0)];
    let pool = worker_pool(cfg.workers)?;

    let reps: Vec<Option<MixtureRep>> = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| mixture_rep(&truth, n, rep, beta, cfg).ok().flatten())
            .collect()
    });
    let ok: Vec<&MixtureRep> = reps.iter().flatten().collect();
    if ok.is_empty() {
        return Err(Error::InsufficientData {
            needed: 1,
            available: 0,
        });
    }
    let local = [
        local_table(&ok, 0, &EXAMPLE2_REGION_A, regions[0], critical[0]),
        local_table(&ok, 1, &EXAMPLE2_REGION_B, regions[1], critical[1]),
    ];

    let pairs: Vec<(usize, usize)> = (0..EXAMPLE2_REGION_A.len())
        .filter(|&i| local[0].accepted[i])
        .flat_map(|i| {
            (0..EXAMPLE2_REGION_B.len())
                .filter(|&j| local[1].accepted[j])
                .map(move |j| (i, j))
        })
        .collect();
    let mixture = pairs
        .iter()
        .map(|&(i, j)| -> Result<PairRow> {
            let alpha_opt = mean(ok.iter().map(|r| r.alpha_opt[i][j]));
            let (hellinger, l2) = if cfg.distances {
                let d: Vec<(f64, f64)> = pool.install(|| {
                    ok.par_iter()
                        .map(|r| {
                            let m = MixtureDensity {
                                alpha: r.alpha_opt[i][j],
                                f: r.families[0][i].density()?,
                                g: r.families[1][j].density()?,
                            };
                            Ok((
                                metrics::hellinger(&truth, &m, DEFAULT_QUAD_TOL)?,
                                metrics::l2_distance(&truth, &m, DEFAULT_QUAD_TOL)?,
                            ))
                        })
                        .collect::<Result<Vec<_>>>()
                })?;
                (
                    Some(mean(d.iter().map(|x| x.0))),
                    Some(mean(d.iter().map(|x| x.1))),
                )
            } else {
                (None, None)
            };
            Ok(PairRow {
                f: EXAMPLE2_REGION_A[i].name().to_string(),
                g: EXAMPLE2_REGION_B[j].name().to_string(),
                alpha_opt,
                hellinger,
                l2,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // The first replication on its own, as a single simulated dataset.
    let data = Dataset::new(example2_sample(cfg.seed, n, 0))?;
    let reference: Option<&dyn Density> = if cfg.distances { Some(&truth) } else { None };
    let single = mixture::build_mixture_set(
        &EXAMPLE2_REGION_A,
        &EXAMPLE2_REGION_B,
        &data,
        0.0,
        cfg.alpha,
        Some(beta),
        &cfg.optimizer,
        reference,
    )?;
    let single_dataset = SingleDataset {
        local_sets: [
            single.local_sets[0]
                .member_families()
                .iter()
                .map(|f| f.name().to_string())
                .collect(),
            single.local_sets[1]
                .member_families()
                .iter()
                .map(|f| f.name().to_string())
                .collect(),
        ],
        candidates: single
            .candidates
            .iter()
            .map(|c| PairRow {
                f: c.f.spec.family.name().to_string(),
                g: c.g.spec.family.name().to_string(),
                alpha_opt: c.alpha_opt,
                hellinger: c.hellinger,
                l2: c.l2,
            })
            .collect(),
    };

    let lo = data.sorted()[0].floor();
    let hi = data.sorted()[n - 1].ceil();
    let histogram = histogram(&data, lo, hi, HIST_BINS);
    let mixtures: Vec<MixtureDensity> = single
        .candidates
        .iter()
        .map(|c| c.density())
        .collect::<Result<_>>()?;
    let mut columns = vec!["x".to_string(), "truth".to_string()];
    columns.extend(single.candidates.iter().map(|c| c.label()));
    let mut handles: Vec<&dyn Density> = vec![&truth];
    handles.extend(mixtures.iter().map(|m| m as &dyn Density));
    let densities = DensityGrid {
        columns,
        rows: metrics::density_grid(&handles, lo, hi, GRID_POINTS)?,
    };

    Ok(MixtureStudy {
        n,
        alpha: cfg.alpha,
        beta,
        beta_budget: budget,
        partition: 0.0,
        replications_used: ok.len(),
        failed_replications: cfg.replications - ok.len(),
        local,
        mixture,
        single_dataset,
        histogram,
        densities,
    })
}

fn histogram(data: &Dataset, lo: f64, hi: f64, bins: usize) -> Vec<HistogramBin> {
    let width = (hi - lo) / bins as f64;
    let mut counts = vec![0usize; bins];
    for &x in data.values() {
        let b = (((x - lo) / width).floor() as usize).min(bins - 1);
        counts[b] += 1;
    }
    let n = data.len() as f64;
    counts
        .into_iter()
        .enumerate()
        .map(|(b, count)| HistogramBin {
            lower: lo + width * b as f64,
            upper: if b + 1 == bins {
                hi
            } else {
                lo + width * (b + 1) as f64
            },
            count,
            density: count as f64 / (n * width),
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Output

#[derive(Clone, Debug, Serialize)]
#[serde(untagged)]
pub enum StudyResult {
    Global(GlobalStudy),
    Mixture(Box<MixtureStudy>),
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub config: ExperimentConfig,
    pub result: StudyResult,
}

/// Runs the configured study and writes its files when `output_dir` is set.
pub fn run(cfg: &ExperimentConfig) -> Result<Summary> {
    let result = match cfg.experiment {
        Experiment::Example1 => StudyResult::Global(run_example1(cfg)?),
        Experiment::Custom => {
            let truth = cfg
                .truth
                .as_ref()
                .ok_or_else(|| Error::Usage("custom study needs a truth model".to_string()))?;
            StudyResult::Global(run_global_study(truth, &cfg.candidates, cfg)?)
        }
        Experiment::Example2 => StudyResult::Mixture(Box::new(run_example2(cfg)?)),
    };
    let summary = Summary {
        config: cfg.clone(),
        result,
    };
    if let Some(dir) = &cfg.output_dir {
        write_outputs(&summary, dir)?;
    }
    Ok(summary)
}

fn fmt4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        v.to_string()
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt4).unwrap_or_default()
}

fn conclusion(accepted: bool) -> &'static str {
    if accepted {
        "accepted"
    } else {
        "rejected"
    }
}

fn write_csv(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn local_rows(t: &LocalTable) -> Vec<Vec<String>> {
    (0..t.models.len())
        .map(|i| {
            vec![
                format!("H0{}: {}", i + 1, t.models[i]),
                fmt4(t.mean_statistic[i]),
                conclusion(t.accepted[i]).to_string(),
                fmt4(t.acceptance_rate[i]),
            ]
        })
        .collect()
}

pub fn write_outputs(summary: &Summary, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir)?;
    match &summary.result {
        StudyResult::Global(study) => {
            let mut t1 = Vec::new();
            let mut t2 = Vec::new();
            for row in &study.rows {
                for (i, model) in study.models.iter().enumerate() {
                    t1.push(vec![
                        row.n.to_string(),
                        format!("H0{}: {model}", i + 1),
                        fmt4(row.mean_statistic[i]),
                        conclusion(row.accepted[i]).to_string(),
                        fmt4(row.acceptance_rate[i]),
                    ]);
                }
                t2.push(vec![
                    row.n.to_string(),
                    set_label(&row.confidence_set),
                    set_label(&row.modal_set),
                    fmt4(row.modal_frequency),
                ]);
            }
            write_csv(
                &dir.join("table1.csv"),
                &[
                    "n",
                    "hypothesis",
                    "statistic",
                    "conclusion",
                    "acceptance_rate",
                ],
                t1,
            )?;
            write_csv(
                &dir.join("table2.csv"),
                &["n", "confidence_set", "modal_set", "modal_frequency"],
                t2,
            )?;
        }
        StudyResult::Mixture(study) => {
            let header = ["hypothesis", "statistic", "conclusion", "acceptance_rate"];
            write_csv(
                &dir.join("table3.csv"),
                &header,
                local_rows(&study.local[0]),
            )?;
            write_csv(
                &dir.join("table4.csv"),
                &header,
                local_rows(&study.local[1]),
            )?;
            write_csv(
                &dir.join("table5.csv"),
                &["combining_models", "alpha_opt", "hellinger", "l2"],
                study
                    .mixture
                    .iter()
                    .map(|p| {
                        vec![
                            p.label(),
                            fmt4(p.alpha_opt),
                            fmt_opt(p.hellinger),
                            fmt_opt(p.l2),
                        ]
                    })
                    .collect(),
            )?;
            write_csv(
                &dir.join("fig1_hist.csv"),
                &["lower", "upper", "count", "density"],
                study
                    .histogram
                    .iter()
                    .map(|b| {
                        vec![
                            format!("{:.6}", b.lower),
                            format!("{:.6}", b.upper),
                            b.count.to_string(),
                            format!("{:.6}", b.density),
                        ]
                    })
                    .collect(),
            )?;
            let header: Vec<&str> = study.densities.columns.iter().map(|s| s.as_str()).collect();
            write_csv(
                &dir.join("fig1_densities.csv"),
                &header,
                study
                    .densities
                    .rows
                    .iter()
                    .map(|r| r.iter().map(|v| format!("{v:.8}")).collect())
                    .collect(),
            )?;
        }
    }
    fs::write(
        dir.join("summary.json"),
        serde_json::to_string_pretty(summary)?,
    )?;
    Ok(())
}
