//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::confidence_set::{build_local_mcs, build_mcs, ConfidenceSet};
use crate::densities::{
    Density, FamilyKind, Interval, ModelSpec, TwoComponentMixture, WeightedFamily,
};
use crate::error::{Error, Result};
use crate::estimation::{fit_qmle, Dataset, OptimizerOptions};
use crate::harness::{self, Experiment, ExperimentConfig};
use crate::metrics::{self, DEFAULT_QUAD_TOL};
use crate::mixture::{build_mixture_set, MixtureDensity};

#[derive(Debug, Parser)]
#[command(
    name = "wmcs",
    version,
    about = "Weighted, local and mixture model confidence sets"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit every model by quasi-maximum likelihood.
    Fit(FitArgs),
    /// Weighted model confidence set.
    Mcs(McsArgs),
    /// Local model confidence set on a region.
    LocalMcs(LocalArgs),
    /// Mixture model confidence set over a two-region partition.
    MixtureMcs(MixtureArgs),
    /// Hellinger, L² and KL distances between fixed densities.
    Distances(DistanceArgs),
    /// Run a Monte Carlo study and write its tables.
    Simulate(SimulateArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Newline-separated numbers, or CSV when --column is given.
    #[arg(long)]
    pub input: PathBuf,
    /// CSV column holding the observations.
    #[arg(long)]
    pub column: Option<String>,
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long, default_value_t = 5)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl OptimizerArgs {
    fn options(&self) -> Result<OptimizerOptions> {
        if self.max_iter == 0 || self.restarts == 0 || !(self.tol > 0.0) {
            return Err(Error::Usage(
                "--max-iter and --restarts must be positive and --tol must be > 0".to_string(),
            ));
        }
        Ok(OptimizerOptions {
            max_iter: self.max_iter,
            tol: self.tol,
            restarts: self.restarts,
            seed: self.seed,
        })
    }
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON file with the candidate models.
    #[arg(long)]
    pub models: PathBuf,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct McsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long)]
    pub models: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct LocalArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Candidate families; weights in the file are replaced by the region indicator.
    #[arg(long)]
    pub models: PathBuf,
    /// Region `LOWER,UPPER` meaning (LOWER, UPPER]; `-inf` and `inf` allowed.
    #[arg(long, allow_hyphen_values = true)]
    pub region: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MixtureArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Split point: regions (-inf, P] and (P, inf).
    #[arg(long, allow_hyphen_values = true)]
    pub partition: f64,
    /// Candidates for the lower region (default: normal, cauchy, logistic, laplace).
    #[arg(long)]
    pub models_lower: Option<PathBuf>,
    /// Candidates for the upper region (default: gamma, weibull, lognormal).
    #[arg(long)]
    pub models_upper: Option<PathBuf>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Per-region level; defaults to 1 - (1 - alpha)^(1/2).
    #[arg(long)]
    pub beta: Option<f64>,
    /// Reference density for distances: a model JSON file or `two-mode`.
    #[arg(long)]
    pub reference: Option<String>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct DistanceArgs {
    /// Models with parameters, or JSON written by fit, mcs, local-mcs or mixture-mcs.
    #[arg(long)]
    pub models: PathBuf,
    /// Reference density: a model JSON file or `two-mode`. Without it all pairs are compared.
    #[arg(long)]
    pub reference: Option<String>,
    /// Write density values on `LOWER,UPPER,POINTS` instead of distances.
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    #[arg(long, default_value_t = DEFAULT_QUAD_TOL)]
    pub quad_tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value = "example1")]
    pub experiment: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub replications: Option<usize>,
    /// Comma-separated sample sizes.
    #[arg(long, value_delimiter = ',')]
    pub sample_sizes: Option<Vec<usize>>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub beta: Option<f64>,
    /// Truth model for the custom experiment.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Candidates for the custom experiment.
    #[arg(long)]
    pub models: Option<PathBuf>,
    /// Skip the Hellinger and L² computations.
    #[arg(long)]
    pub no_distances: bool,
    /// Worker threads (also settable through WMCS_WORKERS).
    #[arg(long)]
    pub workers: Option<usize>,
    /// Directory for the output tables.
    #[arg(long, default_value = ".")]
    pub output: PathBuf,
}

// ---------------------------------------------------------------------------
// Input

/// Reads observations from a plain list or a CSV column. Blank lines and
/// lines starting with `#` are skipped.
pub fn ingest(path: &Path, column: Option<&str>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    let values = match column {
        None => parse_plain(&text)?,
        Some(col) => parse_csv_column(&text, col)?,
    };
    if values.is_empty() {
        return Err(Error::Usage(format!("{}: no observations", path.display())));
    }
    Dataset::new(values)
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{}` is not a number", s.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{}` is not finite", s.trim()),
        });
    }
    Ok(v)
}

fn parse_plain(text: &str) -> Result<Vec<f64>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| {
            let t = l.trim();
            !t.is_empty() && !t.starts_with('#')
        })
        .map(|(i, l)| parse_number(l, i + 1))
        .collect()
}

fn parse_csv_column(text: &str, column: &str) -> Result<Vec<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    let index = headers
        .iter()
        .position(|h| h == column)
        .ok_or_else(|| Error::Usage(format!("no column `{column}` in CSV header")))?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = record.get(index).ok_or_else(|| Error::Parse {
            line,
            message: format!("missing column `{column}`"),
        })?;
        out.push(parse_number(field, line)?);
    }
    Ok(out)
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ModelFile {
    List(Vec<ModelSpec>),
    Wrapped { models: Vec<ModelSpec> },
}

pub fn read_models(path: &Path) -> Result<Vec<ModelSpec>> {
    let text = std::fs::read_to_string(path)?;
    let parsed: ModelFile = serde_json::from_str(&text)
        .map_err(|e| Error::Usage(format!("{}: not a model list ({e})", path.display())))?;
    Ok(match parsed {
        ModelFile::List(m) | ModelFile::Wrapped { models: m } => m,
    })
}

fn parse_region(s: &str) -> Result<Interval> {
    let parts: Vec<&str> = s.split(',').collect();
    let bad = || Error::Usage(format!("region `{s}` must look like LOWER,UPPER"));
    if parts.len() != 2 {
        return Err(bad());
    }
    let lower: f64 = parts[0].trim().parse().map_err(|_| bad())?;
    let upper: f64 = parts[1].trim().parse().map_err(|_| bad())?;
    Interval::new(lower, upper).map_err(|e| Error::Usage(e.to_string()))
}

/// A density to compare against, named in a fixed form.
enum Reference {
    TwoMode(TwoComponentMixture),
    Model(Box<dyn Density>, String),
}

impl Reference {
    fn density(&self) -> &dyn Density {
        match self {
            Reference::TwoMode(m) => m,
            Reference::Model(d, _) => d.as_ref(),
        }
    }

    fn label(&self) -> String {
        match self {
            Reference::TwoMode(_) => "two-mode".to_string(),
            Reference::Model(_, l) => l.clone(),
        }
    }
}

fn read_reference(s: &str) -> Result<Reference> {
    if s == "two-mode" {
        return Ok(Reference::TwoMode(TwoComponentMixture::two_mode_reference()));
    }
    let text = std::fs::read_to_string(s)?;
    let spec: ModelSpec =
        serde_json::from_str(&text).map_err(|e| Error::Usage(format!("{s}: not a model ({e})")))?;
    let d = spec.weighted_family()?.density()?;
    Ok(Reference::Model(Box::new(d), spec.label()))
}

// ---------------------------------------------------------------------------
// Output

fn emit(out: &OutputArgs, json: &Value, csv_rows: (Vec<&str>, Vec<Vec<String>>)) -> Result<()> {
    let text = match out.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(json)?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&csv_rows.0)?;
            for r in csv_rows.1 {
                w.write_record(&r)?;
            }
            String::from_utf8(w.into_inner().map_err(|e| Error::Io(e.into_error()))?)
                .expect("csv output is utf-8")
        }
    };
    match &out.output {
        Some(path) => std::fs::write(path, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn f4(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.4}")
    } else {
        v.to_string()
    }
}

fn opt4(v: Option<f64>) -> String {
    v.map(f4).unwrap_or_default()
}

fn set_csv(set: &ConfidenceSet) -> (Vec<&'static str>, Vec<Vec<String>>) {
    (
        vec!["hypothesis", "statistic", "conclusion"],
        set.table_rows()
            .into_iter()
            .map(|(h, t, c)| vec![h, f4(t), c.to_string()])
            .collect(),
    )
}

// ---------------------------------------------------------------------------
// Densities read back from files

/// A density named in a file: either one model or a two-component mixture.
struct NamedDensity {
    label: String,
    density: Box<dyn Density>,
}

#[derive(Deserialize)]
struct MixtureEntry {
    f: ModelSpec,
    g: ModelSpec,
    alpha_opt: f64,
}

fn densities_from_json(value: &Value) -> Result<Vec<NamedDensity>> {
    let model = |spec: ModelSpec| -> Result<NamedDensity> {
        let d = spec.weighted_family()?.density()?;
        Ok(NamedDensity {
            label: spec.label(),
            density: Box::new(d),
        })
    };
    if let Some(candidates) = value.get("candidates") {
        let entries: Vec<MixtureEntry> = serde_json::from_value(candidates.clone())?;
        return entries
            .into_iter()
            .map(|e| {
                let m = MixtureDensity {
                    alpha: e.alpha_opt,
                    f: e.f.weighted_family()?.density()?,
                    g: e.g.weighted_family()?.density()?,
                };
                Ok(NamedDensity {
                    label: format!("{} + {}", e.f.family, e.g.family),
                    density: Box::new(m),
                })
            })
            .collect();
    }
    let specs: Vec<ModelSpec> = match value.get("models") {
        Some(models) => serde_json::from_value(models.clone())?,
        None => serde_json::from_value(value.clone())?,
    };
    specs.into_iter().map(model).collect()
}

// ---------------------------------------------------------------------------
// Commands

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(a) => fit(a),
        Command::Mcs(a) => mcs(a),
        Command::LocalMcs(a) => local_mcs(a),
        Command::MixtureMcs(a) => mixture_mcs(a),
        Command::Distances(a) => distances(a),
        Command::Simulate(a) => simulate(a),
    }
}

fn load_data(a: &DataArgs) -> Result<Dataset> {
    let data = ingest(&a.input, a.column.as_deref())?;
    eprintln!(
        "read {} observations from {}",
        data.len(),
        a.input.display()
    );
    Ok(data)
}

fn check_level(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::Usage(format!(
            "--{name} must lie in (0, 1), got {v}"
        )))
    }
}

fn fit(a: FitArgs) -> Result<()> {
    let data = load_data(&a.data)?;
    let models = read_models(&a.models)?;
    let opts = a.optimizer.options()?;
    let fits = models
        .iter()
        .map(|m| fit_qmle(m, &data, &opts))
        .collect::<Result<Vec<_>>>()?;
    let json = json!({
        "n": data.len(),
        "models": fits.iter().map(|f| &f.spec).collect::<Vec<_>>(),
        "fits": fits,
    });
    let rows = fits
        .iter()
        .map(|f| {
            vec![
                f.label(),
                f4(f.theta_hat()[0]),
                f4(f.theta_hat()[1]),
                f4(f.loglik_total),
                f4(f.mean_loglik),
                f.converged.to_string(),
            ]
        })
        .collect();
    emit(
        &a.out,
        &json,
        (
            vec![
                "model",
                "param1",
                "param2",
                "loglik_total",
                "mean_loglik",
                "converged",
            ],
            rows,
        ),
    )
}

fn mcs(a: McsArgs) -> Result<()> {
    check_level("alpha", a.alpha)?;
    let data = load_data(&a.data)?;
    let models = read_models(&a.models)?;
    let set = build_mcs(&models, &data, a.alpha, &a.optimizer.options()?)?;
    report_warnings(&set.warnings);
    emit(&a.out, &set.to_json(), set_csv(&set))
}

fn local_mcs(a: LocalArgs) -> Result<()> {
    check_level("alpha", a.alpha)?;
    let region = parse_region(&a.region)?;
    let data = load_data(&a.data)?;
    let families: Vec<FamilyKind> = read_models(&a.models)?.iter().map(|m| m.family).collect();
    let set = build_local_mcs(&families, &data, region, a.alpha, &a.optimizer.options()?)?;
    report_warnings(&set.warnings);
    emit(&a.out, &set.to_json(), set_csv(&set))
}

fn families_or(path: &Option<PathBuf>, default: &[FamilyKind]) -> Result<Vec<FamilyKind>> {
    match path {
        Some(p) => Ok(read_models(p)?.iter().map(|m| m.family).collect()),
        None => Ok(default.to_vec()),
    }
}

fn mixture_mcs(a: MixtureArgs) -> Result<()> {
    check_level("alpha", a.alpha)?;
    if let Some(b) = a.beta {
        check_level("beta", b)?;
    }
    let data = load_data(&a.data)?;
    let lower = families_or(&a.models_lower, &harness::EXAMPLE2_REGION_A)?;
    let upper = families_or(&a.models_upper, &harness::EXAMPLE2_REGION_B)?;
    let reference = a.reference.as_deref().map(read_reference).transpose()?;
    let set = build_mixture_set(
        &lower,
        &upper,
        &data,
        a.partition,
        a.alpha,
        a.beta,
        &a.optimizer.options()?,
        reference.as_ref().map(|r| r.density()),
    )?;
    report_warnings(&set.warnings);
    let rows = set
        .candidates
        .iter()
        .map(|c| vec![c.label(), f4(c.alpha_opt), opt4(c.hellinger), opt4(c.l2)])
        .collect();
    emit(
        &a.out,
        &set.to_json(),
        (
            vec!["combining_models", "alpha_opt", "hellinger", "l2"],
            rows,
        ),
    )
}

fn distances(a: DistanceArgs) -> Result<()> {
    if !(a.quad_tol > 0.0) {
        return Err(Error::Usage("--quad-tol must be positive".to_string()));
    }
    let text = std::fs::read_to_string(&a.models)?;
    let value: Value = serde_json::from_str(&text)?;
    let named = densities_from_json(&value)?;
    if named.is_empty() {
        return Err(Error::Usage("no densities in the models file".to_string()));
    }
    let reference = a.reference.as_deref().map(read_reference).transpose()?;

    if let Some(grid) = &a.grid {
        let parts: Vec<&str> = grid.split(',').collect();
        let bad = || Error::Usage(format!("grid `{grid}` must look like LOWER,UPPER,POINTS"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let points: usize = parts[2].trim().parse().map_err(|_| bad())?;
        let mut columns = vec!["x".to_string()];
        let mut handles: Vec<&dyn Density> = Vec::new();
        if let Some(r) = &reference {
            columns.push(r.label());
            handles.push(r.density());
        }
        for d in &named {
            columns.push(d.label.clone());
            handles.push(d.density.as_ref());
        }
        let rows = metrics::density_grid(&handles, lo, hi, points)?;
        let json = json!({ "columns": columns, "rows": rows });
        let csv_rows = rows
            .iter()
            .map(|r| r.iter().map(|v| format!("{v:.8}")).collect())
            .collect();
        return emit(
            &a.out,
            &json,
            (columns.iter().map(|s| s.as_str()).collect(), csv_rows),
        );
    }

    let mut entries = Vec::new();
    match &reference {
        Some(r) => {
            for d in &named {
                let h = metrics::hellinger(r.density(), d.density.as_ref(), a.quad_tol)?;
                let l = metrics::l2_distance(r.density(), d.density.as_ref(), a.quad_tol)?;
                let kl = metrics::kl_divergence(r.density(), d.density.as_ref(), a.quad_tol)?;
                entries.push((r.label(), d.label.clone(), h, l, Some(kl)));
            }
        }
        None => {
            for (i, x) in named.iter().enumerate() {
                for y in &named[i + 1..] {
                    let h = metrics::hellinger(x.density.as_ref(), y.density.as_ref(), a.quad_tol)?;
                    let l =
                        metrics::l2_distance(x.density.as_ref(), y.density.as_ref(), a.quad_tol)?;
                    entries.push((x.label.clone(), y.label.clone(), h, l, None));
                }
            }
        }
    }
    let json = json!({
        "distance_convention": "hellinger = sqrt(int (sqrt f - sqrt g)^2), l2 = sqrt(int (f - g)^2)",
        "distances": entries.iter().map(|(a, b, h, l, kl)| json!({
            "reference": a, "model": b, "hellinger": h, "l2": l, "kl": kl,
        })).collect::<Vec<_>>(),
    });
    let rows = entries
        .iter()
        .map(|(a, b, h, l, kl)| vec![a.clone(), b.clone(), f4(*h), f4(*l), opt4(*kl)])
        .collect();
    emit(
        &a.out,
        &json,
        (vec!["reference", "model", "hellinger", "l2", "kl"], rows),
    )
}

fn simulate(a: SimulateArgs) -> Result<()> {
    let experiment = Experiment::parse(&a.experiment)?;
    let mut cfg = match experiment {
        Experiment::Example2 => ExperimentConfig::example2(),
        _ => ExperimentConfig::example1(),
    };
    cfg.experiment = experiment;
    cfg.seed = a.seed;
    cfg.optimizer.seed = a.seed;
    if let Some(r) = a.replications {
        cfg.replications = r;
    }
    if let Some(n) = a.sample_sizes {
        cfg.sample_sizes = n;
    }
    if let Some(alpha) = a.alpha {
        cfg.alpha = alpha;
    }
    if a.beta.is_some() {
        cfg.beta = a.beta;
    }
    cfg.distances = !a.no_distances;
    cfg.workers = a.workers;
    cfg.output_dir = Some(a.output.clone());
    if experiment == Experiment::Custom {
        let truth = a.truth.as_ref().ok_or_else(|| {
            Error::Usage("--truth is required for the custom experiment".to_string())
        })?;
        let text = std::fs::read_to_string(truth)?;
        let spec: ModelSpec = serde_json::from_str(&text)
            .map_err(|e| Error::Usage(format!("{}: not a model ({e})", truth.display())))?;
        // fail early on models that cannot be sampled
        WeightedFamily::sample(&spec.weighted_family()?, 1, 0)?;
        cfg.truth = Some(spec);
        let models = a.models.as_ref().ok_or_else(|| {
            Error::Usage("--models is required for the custom experiment".to_string())
        })?;
        cfg.candidates = read_models(models)?;
    }
    harness::run(&cfg)?;
    eprintln!("wrote results to {}", a.output.display());
    Ok(())
}

fn report_warnings(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Exit status for an error: 1 for statistical failures, 2 otherwise.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_statistical() {
        1
    } else {
        2
    }
}
