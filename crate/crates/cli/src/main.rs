//! Batch front end for the clustering library: fit a dataset, sweep the
//! trade-off parameter, compare ablation variants, generate synthetic data,
//! and benchmark scaling.
//!
//! Exit codes are a stable contract: 0 on success, 2 for usage or input
//! errors (bad flags, unreadable or inconsistent data), 3 for solver
//! failures at runtime.

mod report;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use omvcdr::dataset::{
    generate_synthetic, load_dataset, save_dataset, zscore_normalize, DatasetError,
    MultiViewDataset, SyntheticSpec,
};
use omvcdr::solver::{fit, FitResult, SolverConfig, SolverError, Variant};
use report::{dataset_id, ConfigEcho, MetricsReport, RunReport, REPORT_SCHEMA, SUMMARY_CELL_HEADER};

/// Workers for grid and ablation fits are capped by this environment
/// variable; unset means one worker per core.
const THREADS_ENV: &str = "OMVCDR_THREADS";

#[derive(Parser)]
#[command(
    name = "omvcdr",
    about = "One-step multi-view clustering with diverse representation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cluster a dataset once and write a JSON report plus predicted labels.
    Fit(FitArgs),
    /// Fit across a grid of lambda values (and optionally several seeds).
    Grid(GridArgs),
    /// Compare the ablation variants under a shared configuration.
    Ablate(AblateArgs),
    /// Generate a synthetic labeled dataset on disk.
    Synth(SynthArgs),
    /// Time fixed-iteration fits across dataset sizes.
    Bench(BenchArgs),
}

/// Flags shared by every command that runs the solver on a dataset.
#[derive(Args)]
struct SolveArgs {
    /// Path to the dataset manifest.
    #[arg(long)]
    data: PathBuf,
    /// Number of clusters.
    #[arg(long)]
    k: usize,
    /// Number of latent spaces.
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Comma-separated latent dimensions (default: k, 2k, ..., mk capped at
    /// the smallest view dimension).
    #[arg(long, value_delimiter = ',')]
    dims: Vec<usize>,
    /// Standardize each feature to zero mean and unit variance first.
    #[arg(long)]
    normalize: bool,
    /// Iteration cap for each fit.
    #[arg(long, default_value_t = 100)]
    max_iters: usize,
    /// Relative objective-change stopping threshold; 0 disables early stop.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Trade-off between reconstruction and the clustering penalty.
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value = "full")]
    variant: Variant,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Report path; predicted labels go next to it as <stem>.labels.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    solve: SolveArgs,
    /// Comma-separated lambda values (default: powers of two from 2^-5 to
    /// 2^5).
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    #[arg(long, default_value = "full")]
    variant: Variant,
    /// Comma-separated seeds; each (lambda, seed) pair is fit once.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Output directory for per-run reports and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    solve: SolveArgs,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    seeds: Vec<u64>,
    /// Output directory for per-run reports and summary.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Sample count.
    #[arg(long)]
    n: usize,
    /// Cluster count.
    #[arg(long)]
    k: usize,
    /// Comma-separated feature dimension per view.
    #[arg(long, value_delimiter = ',')]
    view_dims: Vec<usize>,
    /// Inter-centroid distance in the latent space.
    #[arg(long, default_value_t = 10.0)]
    separation: f64,
    /// Standard deviation of the additive feature noise.
    #[arg(long, default_value_t = 0.5)]
    noise_sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Directory receiving manifest.toml, view CSVs, and labels.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset sizes to time.
    #[arg(long, value_delimiter = ',', default_value = "2500,5000,10000,20000")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    #[arg(long, default_value_t = 3)]
    m: usize,
    /// Feature dimensions of the generated views.
    #[arg(long, value_delimiter = ',', default_value = "20,15")]
    view_dims: Vec<usize>,
    /// Fixed iteration count per fit (early stopping is disabled).
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Timing CSV path.
    #[arg(long)]
    out: PathBuf,
}

enum CliError {
    /// Bad flags or unusable input data — exit 2.
    Usage(String),
    /// The solver or an output path failed at runtime — exit 3.
    Runtime(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Runtime(msg) => f.write_str(msg),
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig { .. } | SolverError::TooFewSamples { .. } => {
                CliError::Usage(e.to_string())
            }
            other => CliError::Runtime(other.to_string()),
        }
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", parent.display())))?;
    }
    fs::write(path, contents)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Fit(args) => cmd_fit(args),
        Command::Grid(args) => cmd_grid(args),
        Command::Ablate(args) => cmd_ablate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Bench(args) => cmd_bench(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

/// Dataset plus the solver configuration shared by a command's fits.
struct Prepared {
    dataset: MultiViewDataset,
    dataset_id: String,
    config: SolverConfig,
    normalize: bool,
}

fn prepare(solve: &SolveArgs, lambda: f64, seed: u64) -> Result<Prepared, CliError> {
    let mut dataset = load_dataset(&solve.data)?;
    if solve.normalize {
        dataset = zscore_normalize(&dataset);
    }
    let config = SolverConfig {
        k: solve.k,
        m: solve.m,
        latent_dims: solve.dims.clone(),
        lambda,
        max_iters: solve.max_iters,
        rel_tol: solve.tol,
        seed,
    };
    // Validate (and surface the capping warning) before any fit starts.
    let (_, capped) = config.resolve_latent_dims(dataset.min_view_dim())?;
    if capped {
        eprintln!(
            "warning: default latent dimensions were capped at the smallest \
             view dimension ({})",
            dataset.min_view_dim()
        );
    }
    let dataset_id = dataset_id(&dataset);
    Ok(Prepared {
        dataset,
        dataset_id,
        config,
        normalize: solve.normalize,
    })
}

/// Run one fit and assemble its report. The wall clock covers the solver
/// only, not dataset loading or output writing.
fn run_fit(
    prepared: &Prepared,
    config: &SolverConfig,
    variant: Variant,
) -> Result<(FitResult, RunReport), CliError> {
    let started = Instant::now();
    let result = fit(&prepared.dataset, config, variant)?;
    let wall_time_seconds = started.elapsed().as_secs_f64();

    let effective = variant.effective_config(config)?;
    let (latent_dims, _) = effective.resolve_latent_dims(prepared.dataset.min_view_dim())?;
    let report = RunReport {
        schema: REPORT_SCHEMA,
        dataset_id: prepared.dataset_id.clone(),
        variant: variant.name().to_string(),
        config: ConfigEcho {
            k: effective.k,
            m: effective.m,
            latent_dims,
            lambda: effective.lambda,
            max_iters: effective.max_iters,
            rel_tol: effective.rel_tol,
            seed: effective.seed,
            normalize: prepared.normalize,
        },
        metrics: MetricsReport::evaluate(&prepared.dataset, &result),
        objective_trace: result.objective_trace.clone(),
        iterations: result.iterations_run,
        converged: result.converged,
        degenerate_weights: result.degenerate_weights,
        wall_time_seconds,
        seed: effective.seed,
    };
    Ok((result, report))
}

fn labels_file(result: &FitResult) -> String {
    let mut text = String::new();
    for &label in result.partition.labels() {
        text.push_str(&label.to_string());
        text.push('\n');
    }
    text
}

fn cmd_fit(args: FitArgs) -> Result<(), CliError> {
    let prepared = prepare(&args.solve, args.lambda, args.seed)?;
    let (result, report) = run_fit(&prepared, &prepared.config, args.variant)?;

    let stem = args
        .out
        .file_stem()
        .ok_or_else(|| CliError::Usage(format!("--out {} has no file name", args.out.display())))?
        .to_string_lossy()
        .into_owned();
    let labels_path = args.out.with_file_name(format!("{stem}.labels.csv"));
    write_output(&args.out, &report.to_json())?;
    write_output(&labels_path, &labels_file(&result))?;
    println!(
        "fit: {} iterations, converged = {}, report at {}",
        report.iterations,
        report.converged,
        args.out.display()
    );
    Ok(())
}

/// Run a batch of (label, variant, config-tweak) jobs in parallel and write
/// per-run reports plus a summary CSV in the given deterministic order.
fn run_batch(
    prepared: &Prepared,
    jobs: Vec<(String, Variant, SolverConfig)>,
    summary_prefix_header: &str,
    summary_prefix: impl Fn(usize) -> String,
    out_dir: &Path,
) -> Result<(), CliError> {
    let pool = worker_pool()?;
    let reports: Vec<(String, RunReport)> = pool.install(|| {
        jobs.par_iter()
            .map(|(name, variant, config)| {
                let (_, report) = run_fit(prepared, config, *variant)?;
                Ok((name.clone(), report))
            })
            .collect::<Result<_, CliError>>()
    })?;

    let mut summary = format!("{summary_prefix_header},{SUMMARY_CELL_HEADER}\n");
    for (row, (name, report)) in reports.iter().enumerate() {
        write_output(&out_dir.join(format!("{name}.json")), &report.to_json())?;
        summary.push_str(&format!(
            "{},{}\n",
            summary_prefix(row),
            report.summary_cells()
        ));
    }
    write_output(&out_dir.join("summary.csv"), &summary)?;
    println!(
        "{} runs complete, summary at {}",
        reports.len(),
        out_dir.join("summary.csv").display()
    );
    Ok(())
}

fn worker_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(raw) = std::env::var(THREADS_ENV) {
        let workers: usize = raw.parse().map_err(|_| {
            CliError::Usage(format!("{THREADS_ENV}={raw:?} is not a worker count"))
        })?;
        if workers == 0 {
            return Err(CliError::Usage(format!("{THREADS_ENV} must be at least 1")));
        }
        builder = builder.num_threads(workers);
    }
    builder
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))
}

fn default_lambda_grid() -> Vec<f64> {
    (-5..=5).map(|exp| 2f64.powi(exp)).collect()
}

fn cmd_grid(args: GridArgs) -> Result<(), CliError> {
    let lambdas = if args.lambdas.is_empty() {
        default_lambda_grid()
    } else {
        args.lambdas.clone()
    };
    let prepared = prepare(&args.solve, lambdas[0], args.seeds[0])?;

    let mut jobs = Vec::new();
    let mut prefixes = Vec::new();
    for &lambda in &lambdas {
        for &seed in &args.seeds {
            let config = SolverConfig {
                lambda,
                seed,
                ..prepared.config.clone()
            };
            jobs.push((format!("fit_lambda{lambda}_seed{seed}"), args.variant, config));
            prefixes.push(format!("{lambda},{seed}"));
        }
    }
    run_batch(
        &prepared,
        jobs,
        "lambda,seed",
        |row| prefixes[row].clone(),
        &args.out,
    )
}

fn cmd_ablate(args: AblateArgs) -> Result<(), CliError> {
    let prepared = prepare(&args.solve, args.lambda, args.seeds[0])?;

    let mut jobs = Vec::new();
    let mut prefixes = Vec::new();
    for variant in Variant::ALL {
        for &seed in &args.seeds {
            let config = SolverConfig {
                seed,
                ..prepared.config.clone()
            };
            jobs.push((format!("fit_{}_seed{seed}", variant.name()), variant, config));
            prefixes.push(format!("{},{seed}", variant.name()));
        }
    }
    run_batch(
        &prepared,
        jobs,
        "variant,seed",
        |row| prefixes[row].clone(),
        &args.out,
    )
}

fn cmd_synth(args: SynthArgs) -> Result<(), CliError> {
    let spec = SyntheticSpec {
        n: args.n,
        k: args.k,
        view_dims: args.view_dims.clone(),
        separation: args.separation,
        noise_sigma: args.noise_sigma,
        seed: args.seed,
    };
    let dataset = generate_synthetic(&spec)?;
    let manifest = save_dataset(&dataset, &args.out)?;
    println!("synthetic dataset written, manifest at {}", manifest.display());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), CliError> {
    if args.sizes.is_empty() {
        return Err(CliError::Usage("--sizes must list at least one size".into()));
    }
    let mut csv = String::from("n,seconds\n");
    for &n in &args.sizes {
        let dataset = generate_synthetic(&SyntheticSpec {
            n,
            k: args.k,
            view_dims: args.view_dims.clone(),
            separation: 8.0,
            noise_sigma: 0.5,
            seed: args.seed,
        })?;
        let config = SolverConfig {
            k: args.k,
            m: args.m,
            latent_dims: Vec::new(),
            lambda: args.lambda,
            max_iters: args.iters,
            rel_tol: 0.0, // fixed-iteration mode: no early stop
            seed: args.seed,
        };
        let started = Instant::now();
        fit(&dataset, &config, Variant::Full)?;
        let seconds = started.elapsed().as_secs_f64();
        println!("n = {n}: {seconds:.3} s for {} iterations", args.iters);
        csv.push_str(&format!("{n},{seconds}\n"));
    }
    write_output(&args.out, &csv)?;
    Ok(())
}
