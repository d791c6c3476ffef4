use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use pssc::bench::{run_benchmark, BenchmarkGrid, Method};
use pssc::io::{self, BenchmarkDocument, Meta, ResultDocument, RunEcho};
use pssc::metrics::{misclassification, ssr_error};
use pssc::rng::{derive_seed, stream};
use pssc::synth::{generate_subspaces, intersection_for_ratio, sample_points};
use pssc::{validate_dataset, HyperParams, SpectralMode};

/// Probabilistic sparse subspace clustering with delayed association.
#[derive(Parser, Debug)]
#[command(name = "pssc", version, args_override_self = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Draw points from a random union of intersecting subspaces.
    Generate(GenerateArgs),
    /// Cluster the columns of a CSV matrix.
    Cluster(ClusterArgs),
    /// Run a seeded benchmark grid on synthetic data.
    Benchmark(BenchmarkArgs),
    /// Score a label file against ground truth.
    Metrics(MetricsArgs),
}

/// Every subcommand also takes `--config FILE` holding `key = value` lines
/// named like the long flags; command-line flags win over the file.
#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct GenerateArgs {
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value_t = 200)]
    ambient: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    /// Intersection dimension as a fraction of `dim`.
    #[arg(long, default_value_t = 0.0)]
    intersect: f64,
    /// Points per subspace.
    #[arg(long, default_value_t = 100)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory; receives X.csv and labels.txt.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct HyperArgs {
    /// Sparsity scale: lambda0 = mu / alpha.
    #[arg(long)]
    alpha: Option<f64>,
    /// lambda0 / lambda1.
    #[arg(long)]
    ratio: Option<f64>,
    /// Maximum outer iterations.
    #[arg(long)]
    tmax: Option<usize>,
    /// Coordinate-descent tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
    /// k-means restarts.
    #[arg(long)]
    restarts: Option<usize>,
    /// full or incremental.
    #[arg(long)]
    spectral_mode: Option<SpectralMode>,
}

impl HyperArgs {
    fn params(&self, seed: u64) -> HyperParams {
        let d = HyperParams::default();
        HyperParams {
            alpha: self.alpha.unwrap_or(d.alpha),
            lambda_ratio: self.ratio.unwrap_or(d.lambda_ratio),
            t_max: self.tmax.unwrap_or(d.t_max),
            solver_tol: self.tol.unwrap_or(d.solver_tol),
            solver_max_sweeps: self.max_sweeps.unwrap_or(d.solver_max_sweeps),
            kmeans_restarts: self.restarts.unwrap_or(d.kmeans_restarts),
            seed,
            spectral_mode: self.spectral_mode.unwrap_or(d.spectral_mode),
        }
    }
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct ClusterArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    clusters: usize,
    #[arg(long, default_value = "pssc")]
    method: Method,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Use the columns as given instead of scaling them to unit length.
    #[arg(long)]
    no_normalize: bool,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Result JSON path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    labels_out: Option<PathBuf>,
    /// Writes the final coefficient matrix as CSV.
    #[arg(long)]
    coefficients_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BenchmarkArgs {
    #[arg(long, value_delimiter = ',', default_value = "2")]
    clusters: Vec<usize>,
    /// Intersection ratios as fractions.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    intersect: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "pssc,ssc")]
    methods: Vec<Method>,
    #[arg(long, default_value_t = 20)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    ambient: usize,
    #[arg(long, default_value_t = 10)]
    dim: usize,
    #[arg(long, default_value_t = 100)]
    points: usize,
    /// Length of the extra pssc run without the early stopping rules; 0 skips it.
    #[arg(long, default_value_t = 20)]
    trace_iterations: usize,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long)]
    workers: Option<usize>,
    #[command(flatten)]
    hyper: HyperArgs,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MetricsArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    truth: PathBuf,
    /// Defaults to one more than the largest label seen.
    #[arg(long)]
    clusters: Option<usize>,
    /// Coefficient matrix CSV; adds the sparse recovery error.
    #[arg(long)]
    coefficients: Option<PathBuf>,
}

type RunResult = Result<(), Box<dyn std::error::Error>>;

fn generate(args: GenerateArgs) -> RunResult {
    let s = intersection_for_ratio(args.dim, args.intersect);
    let model = generate_subspaces(
        args.clusters,
        args.ambient,
        args.dim,
        s,
        args.points,
        derive_seed(args.seed, &[stream::MODEL]),
    )?;
    let (x, labels) = sample_points(&model, derive_seed(args.seed, &[stream::SAMPLE]))?;
    io::write_matrix(&args.out.join("X.csv"), x.values())?;
    io::write_labels(&args.out.join("labels.txt"), &labels)?;
    Ok(())
}

fn cluster(args: ClusterArgs) -> RunResult {
    let x = validate_dataset(io::read_raw_matrix(&args.input)?, args.clusters, !args.no_normalize)?;
    let params = args.hyper.params(args.seed);
    params.validate()?;
    let result = args.method.run(&x, args.clusters, &params)?;
    let echo = RunEcho {
        method: args.method,
        clusters: args.clusters,
        normalize: !args.no_normalize,
        hyper: params,
    };
    let doc = ResultDocument::new(&result, echo, Meta::now(args.seed));
    match &args.out {
        Some(path) => io::write_result(path, &doc)?,
        None => println!("{}", doc.to_json()?),
    }
    if let Some(path) = &args.labels_out {
        io::write_labels(path, &result.labels)?;
    }
    if let Some(path) = &args.coefficients_out {
        io::write_matrix(path, &result.coefficients.z)?;
    }
    Ok(())
}

fn benchmark(args: BenchmarkArgs) -> RunResult {
    let grid = BenchmarkGrid {
        clusters: args.clusters,
        ratios: args.intersect,
        methods: args.methods,
        trials: args.trials,
        ambient_dim: args.ambient,
        dim: args.dim,
        points_per_subspace: args.points,
        trace_iterations: (args.trace_iterations > 0).then_some(args.trace_iterations),
    };
    let workers = args
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    let table = run_benchmark(&grid, args.seed, &args.hyper.params(args.seed), workers)?;
    if !table.failures.is_empty() {
        eprintln!("warning: {} trial runs failed; see failures.csv", table.failures.len());
    }
    let doc = BenchmarkDocument {
        table,
        meta: Meta::now(args.seed),
    };
    io::write_benchmark(&args.out, &doc)?;
    Ok(())
}

fn metrics(args: MetricsArgs) -> RunResult {
    let pred = io::read_labels(&args.pred)?;
    let truth = io::read_labels(&args.truth)?;
    let clusters = args
        .clusters
        .unwrap_or_else(|| pred.iter().chain(&truth).max().map_or(1, |m| m + 1));
    println!(
        "misclassification={}",
        io::format_f64(misclassification(&pred, &truth, clusters)?)
    );
    if let Some(path) = &args.coefficients {
        let z = io::read_raw_matrix(path)?;
        println!("ssr={}", io::format_f64(ssr_error(&z, &truth, clusters)?));
    }
    Ok(())
}

fn config_flags(path: &Path) -> Result<Vec<OsString>, Box<dyn std::error::Error>> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut flags = Vec::new();
    for (key, value) in io::parse_config(&text)? {
        let flag = format!("--{}", key.replace('_', "-"));
        match value.as_str() {
            "true" => flags.push(flag.into()),
            "false" => {}
            _ => {
                flags.push(flag.into());
                flags.push(value.into());
            }
        }
    }
    Ok(flags)
}

/// Removes `--config FILE` from `argv` and splices the file's entries in
/// right after the subcommand, ahead of every flag given on the command line.
fn expand_config(mut argv: Vec<OsString>) -> Result<Vec<OsString>, Box<dyn std::error::Error>> {
    let Some(pos) = argv
        .iter()
        .position(|a| a == "--config" || a.to_string_lossy().starts_with("--config="))
    else {
        return Ok(argv);
    };
    let arg = argv.remove(pos).to_string_lossy().into_owned();
    let path = match arg.strip_prefix("--config=") {
        Some(p) => PathBuf::from(p),
        None if pos < argv.len() => PathBuf::from(argv.remove(pos)),
        None => return Err("--config needs a file path".into()),
    };
    let flags = config_flags(&path)?;
    let sub = argv
        .iter()
        .skip(1)
        .position(|a| !a.to_string_lossy().starts_with('-'))
        .map_or(argv.len(), |i| i + 2);
    argv.splice(sub.min(argv.len())..sub.min(argv.len()), flags);
    Ok(argv)
}

fn main() -> ExitCode {
    let argv = match expand_config(std::env::args_os().collect()) {
        Ok(argv) => argv,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Cluster(a) => cluster(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Metrics(a) => metrics(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
