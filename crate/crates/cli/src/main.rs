//! `elnet`: Elastic Net solving, regularization paths, model tuning and
//! timing tables on top of the semi-smooth Newton augmented Lagrangian
//! solver.

mod cmds;
mod config;
mod io;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use config::parse_count;

#[derive(Parser)]
#[command(name = "elnet", version, about = "Elastic Net solver and model-selection toolkit")]
struct Cli {
    /// Flat key=value config file; explicit flags override its entries.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads for cross-validation folds (0 = rayon default).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset and write it to a directory.
    Gen(GenArgs),
    /// Solve one Elastic Net instance.
    Solve(SolveArgs),
    /// Sweep a lambda grid with warm starts and score each point.
    Path(PathArgs),
    /// Path sweeps over several alpha values plus k-fold cross-validation.
    Tune(TuneArgs),
    /// Timing table over scenario cells with mean and standard error.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Convergence tolerance on the KKT residuals.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    sigma0: Option<f64>,
    #[arg(long = "sigma-factor")]
    sigma_factor: Option<f64>,
    #[arg(long = "sigma-max")]
    sigma_max: Option<f64>,
    /// Armijo slope fraction in (0, 1/2).
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long = "max-outer", visible_alias = "max-iter")]
    max_outer: Option<usize>,
    #[arg(long = "max-inner")]
    max_inner: Option<usize>,
    /// Dimension above which the Newton systems switch to conjugate gradients.
    #[arg(long = "cg-threshold", value_parser = parse_count)]
    cg_threshold: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct DataFlags {
    /// Dataset directory written by `gen` (A.bin + b.txt).
    #[arg(long)]
    data: Option<PathBuf>,
    /// Design matrix file (.bin or .csv); pairs with --b.
    #[arg(long)]
    a: Option<PathBuf>,
    /// Response vector file, one value per line.
    #[arg(long)]
    b: Option<PathBuf>,
    /// LIBSVM-format file holding labels and features.
    #[arg(long)]
    libsvm: Option<PathBuf>,
    /// Expand features into all monomials up to this total degree.
    #[arg(long = "poly-degree")]
    poly_degree: Option<usize>,
    /// Refuse polynomial expansions beyond this many columns.
    #[arg(long = "max-expand-cols", value_parser = parse_count)]
    max_expand_cols: Option<usize>,
}

#[derive(Args)]
struct GenArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Scenario preset: sim1, sim2 or sim3.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long, value_parser = parse_count)]
    m: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    n: Option<usize>,
    #[arg(long, value_parser = parse_count)]
    n0: Option<usize>,
    #[arg(long = "x-star")]
    x_star: Option<f64>,
    #[arg(long)]
    snr: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the design matrix as A.csv.
    #[arg(long)]
    csv: bool,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    data: DataFlags,
    #[arg(long)]
    lambda1: Option<f64>,
    #[arg(long)]
    lambda2: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    clambda: Option<f64>,
    /// Loss scaling convention: unit or per-observation.
    #[arg(long = "loss-scale")]
    loss_scale: Option<String>,
    /// Cross-check the objective against the proximal-gradient oracle.
    #[arg(long = "oracle-check")]
    oracle_check: bool,
    #[arg(long = "oracle-max-iters", value_parser = parse_count)]
    oracle_max_iters: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct PathArgs {
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    data: DataFlags,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long = "n-lambda", value_parser = parse_count)]
    n_lambda: Option<usize>,
    #[arg(long = "c-min")]
    c_min: Option<f64>,
    /// Truncate the sweep once this many features are active.
    #[arg(long = "max-active", value_parser = parse_count)]
    max_active: Option<usize>,
    /// Re-run the sweep cold-started and report the worst objective gap.
    #[arg(long = "cold-check")]
    cold_check: bool,
    /// Emit per-criterion (c_lambda, value) files for external plotting.
    #[arg(long = "plot-data")]
    plot_data: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct TuneArgs {
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    data: DataFlags,
    /// Mixing values to sweep, e.g. 0.9,0.8,0.6.
    #[arg(long = "alpha-list", value_delimiter = ',')]
    alpha_list: Option<Vec<f64>>,
    #[arg(long = "n-lambda", value_parser = parse_count)]
    n_lambda: Option<usize>,
    #[arg(long = "c-min")]
    c_min: Option<f64>,
    #[arg(long = "max-active", value_parser = parse_count)]
    max_active: Option<usize>,
    /// Folds for cross-validation (0 disables the cv criterion).
    #[arg(long = "cv-folds", value_parser = parse_count)]
    cv_folds: Option<usize>,
    /// Criteria to report and choose by: gcv,ebic,cv.
    #[arg(long)]
    criteria: Option<String>,
    #[arg(long = "plot-data")]
    plot_data: bool,
    #[command(flatten)]
    solver: SolverFlags,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    out: PathBuf,
    /// Scenario presets, e.g. sim1 or sim1,sim2,sim3.
    #[arg(long)]
    preset: Option<String>,
    /// Feature counts per cell, e.g. 1e4,1e5.
    #[arg(long = "n-list", value_delimiter = ',', value_parser = parse_count)]
    n_list: Option<Vec<usize>>,
    /// Replications per cell (fresh data each).
    #[arg(long, value_parser = parse_count)]
    reps: Option<usize>,
    /// Replications on which the proximal-gradient baseline is timed.
    #[arg(long = "oracle-reps", value_parser = parse_count)]
    oracle_reps: Option<usize>,
    /// Iteration cap for the baseline; hitting it flags its time as a lower bound.
    #[arg(long = "oracle-max-iters", value_parser = parse_count)]
    oracle_max_iters: Option<usize>,
    /// Override the preset's number of observations.
    #[arg(long, value_parser = parse_count)]
    m: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
}

fn main() {
    let code = real_main();
    std::process::exit(code);
}

fn real_main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };

    if let Some(threads) = cli.threads {
        if threads > 0 {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    }

    let file = match &cli.config {
        Some(path) => match config::ConfigFile::load(path) {
            Ok(f) => f,
            Err(e) => {
                eprintln!("error: {e:#}");
                return 1;
            }
        },
        None => config::ConfigFile::default(),
    };

    let result = match &cli.command {
        Command::Gen(args) => cmds::gen(args, &file),
        Command::Solve(args) => cmds::solve(args, &file),
        Command::Path(args) => cmds::path(args, &file),
        Command::Tune(args) => cmds::tune(args, &file),
        Command::Bench(args) => cmds::bench(args, &file),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}
