mod commands;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use drens::embed::{EmbedConfig, HeatKernel, Kernel, Method};
use drens::ingest::Substance;
use drens::simgen::{Relationship, NOISE_LEVELS};

#[derive(Parser)]
#[command(
    name = "drens",
    version,
    about = "Dimensionality-reduction ensembles for random-forest classification"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Write simulated datasets as CSV.
    Simulate(SimulateArgs),
    /// Fit embeddings and write their scores (and optionally scatter plots).
    Embed(EmbedArgs),
    /// Build an ensemble feature matrix from several embeddings.
    Ensemble(EnsembleArgs),
    /// Run the head-to-head benchmark and write reports and charts.
    Bench(BenchArgs),
    /// Draw a figure from a scores CSV or a report JSON.
    Plot(PlotArgs),
}

fn parse_noise(s: &str) -> Result<f64, String> {
    let allowed = || {
        let list: Vec<String> = NOISE_LEVELS.iter().map(|v| v.to_string()).collect();
        format!("noise must be one of {{{}}}", list.join(","))
    };
    let v: f64 = s.parse().map_err(|_| allowed())?;
    if NOISE_LEVELS.contains(&v) {
        Ok(v)
    } else {
        Err(allowed())
    }
}

#[derive(Args)]
struct SimulateArgs {
    /// Write every cell of the 3 x 3 grid, 10 repetitions each.
    #[arg(long, conflicts_with_all = ["relationship", "noise"])]
    all: bool,
    #[arg(long, required_unless_present = "all")]
    relationship: Option<Relationship>,
    /// Noise variance: 0.25, 0.5 or 0.75.
    #[arg(long, value_parser = parse_noise, required_unless_present = "all")]
    noise: Option<f64>,
    #[arg(long, default_value_t = drens::simgen::DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum DatasetName {
    #[value(name = "breast_cancer", alias = "breast-cancer")]
    BreastCancer,
    Drug,
}

#[derive(Args)]
struct InputArgs {
    /// Table CSV with a `name:kind` header (as written by `simulate`).
    #[arg(long = "in", conflicts_with = "dataset", required_unless_present = "dataset")]
    input: Option<PathBuf>,
    /// Named raw dataset instead of `--in`.
    #[arg(long, value_enum)]
    dataset: Option<DatasetName>,
    /// Raw dataset file (defaults to the copy under data/).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "cocaine")]
    substance: Substance,
}

#[derive(Clone, Copy, ValueEnum)]
enum KernelArg {
    Rbf,
    Linear,
}

fn parse_heat(s: &str) -> Result<HeatKernel, String> {
    match s {
        "adaptive" => Ok(HeatKernel::Adaptive),
        "binary" => Ok(HeatKernel::Binary),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|t| *t > 0.0)
            .map(HeatKernel::Fixed)
            .ok_or_else(|| format!("heat must be `adaptive`, `binary` or a positive number, got `{other}`")),
    }
}

/// Embedding parameters; defaults follow the reference settings.
#[derive(Args)]
struct EmbedParams {
    /// Output dimensions for every method.
    #[arg(long, default_value_t = 2)]
    ndim: usize,
    /// Neighbours for LLE, HLLE and LE.
    #[arg(long, default_value_t = 12)]
    k: usize,
    /// LLE regularization relative to the local Gram trace.
    #[arg(long, default_value_t = 1e-3)]
    reg: f64,
    /// Neighbours for ISOMAP.
    #[arg(long, default_value_t = 12)]
    isomap_k: usize,
    /// kPCA kernel.
    #[arg(long, value_enum, default_value = "rbf")]
    kernel: KernelArg,
    /// RBF inverse width for kPCA, as in exp(-kpar * |x - y|^2).
    #[arg(long, default_value_t = 0.2)]
    kpar: f64,
    #[arg(long, default_value_t = 80.0)]
    perplexity: f64,
    #[arg(long, default_value_t = 1000)]
    tsne_iters: usize,
    #[arg(long, default_value_t = 200.0)]
    learning_rate: f64,
    /// LE edge weights: `adaptive`, `binary` or a fixed heat parameter.
    #[arg(long, value_parser = parse_heat, default_value = "adaptive")]
    heat: HeatKernel,
}

impl EmbedParams {
    fn config(&self, seed: u64) -> EmbedConfig {
        let mut cfg = EmbedConfig::default().with_dims(self.ndim).with_seed(seed);
        cfg.spectral.isomap_k = self.isomap_k;
        cfg.spectral.kpca_sigma = self.kpar;
        cfg.spectral.kpca_kernel = match self.kernel {
            KernelArg::Rbf => Kernel::Rbf,
            KernelArg::Linear => Kernel::Linear,
        };
        cfg.local.k = self.k;
        cfg.local.lle_reg_tol = self.reg;
        cfg.local.tsne_perplexity = self.perplexity;
        cfg.local.tsne_iters = self.tsne_iters;
        cfg.local.tsne_learning_rate = self.learning_rate;
        cfg.local.le_heat = self.heat;
        cfg
    }
}

#[derive(Clone)]
struct MethodList(Vec<Method>);

fn parse_methods(s: &str) -> Result<MethodList, String> {
    if s == "all" {
        return Ok(MethodList(Method::ALL.to_vec()));
    }
    let mut out: Vec<Method> = s
        .split(',')
        .map(|p| p.trim().parse::<Method>().map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    out.sort();
    out.dedup();
    Ok(MethodList(out))
}

#[derive(Args)]
struct EmbedArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Method name, comma-separated list, or `all`.
    #[arg(long, value_parser = parse_methods)]
    method: MethodList,
    /// Scores CSV (one method) or output directory (several).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Scatter plot SVG (one method) or directory for per-method plots.
    #[arg(long)]
    svg: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: EmbedParams,
}

#[derive(Args)]
struct EnsembleArgs {
    #[command(flatten)]
    input: InputArgs,
    /// `large`, `small`, or a comma-separated method list.
    #[arg(long, default_value = "small")]
    selection: String,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    params: EmbedParams,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_enum, conflicts_with = "simulated", required_unless_present = "simulated")]
    dataset: Option<DatasetName>,
    /// Run the full 3 x 3 simulation grid.
    #[arg(long)]
    simulated: bool,
    /// Raw dataset file (defaults to the copy under data/).
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value = "cocaine")]
    substance: Substance,
    /// Rows per simulated dataset.
    #[arg(long, default_value_t = drens::simgen::DEFAULT_N)]
    n: usize,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "bench_out")]
    out: PathBuf,
    /// Single methods to compare (name list or `all`).
    #[arg(long, value_parser = parse_methods, default_value = "all")]
    methods: MethodList,
    #[arg(long)]
    no_large: bool,
    #[arg(long)]
    no_small: bool,
    #[arg(long)]
    no_baseline: bool,
    /// Stratify the 70/30 split by outcome.
    #[arg(long)]
    stratify: bool,
    #[arg(long, default_value_t = 500)]
    trees: usize,
    /// Features tried per split (default floor(sqrt(p))).
    #[arg(long)]
    mtry: Option<usize>,
    #[arg(long, default_value_t = 1)]
    min_node_size: usize,
    #[command(flatten)]
    params: EmbedParams,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PlotKind {
    Scatter2d,
    AccuracyBars,
    ImportanceBars,
}

#[derive(Args)]
struct PlotArgs {
    #[arg(long, value_enum)]
    kind: PlotKind,
    /// Scores CSV (scatter2d) or report JSON (bar charts).
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Colour scatter points by the outcome column.
    #[arg(long)]
    color_by_outcome: bool,
    /// Model whose importances are drawn.
    #[arg(long, default_value = "full")]
    model: String,
    #[arg(long)]
    title: Option<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("error: cannot start {jobs} worker threads: {e}");
            return ExitCode::FAILURE;
        }
    }
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Embed(a) => commands::embed(a),
        Command::Ensemble(a) => commands::ensemble(a),
        Command::Bench(a) => commands::bench(a),
        Command::Plot(a) => commands::plot(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
