//! Command-line front end: reproduces the simulation tables and exposes
//! each computation as a subcommand emitting CSV or JSON.

use clap::{Args, Parser, Subcommand, ValueEnum};
use fwer::corr_model::{
    build_block_equicorrelated, build_equicorrelated, build_identity, build_nearly_independent,
    CorrelationModel,
};
use fwer::fwer::{block_lower_bound, estimate_fwer_mc, fwer_corrected, fwer_independence};
use fwer::gaussian::bonferroni_cutoff;
use fwer::matrix::SquareMatrix;
use fwer::mills::{make_orthant_problem, mills_bounds, within_regime};
use fwer::sampler::derive_seed;
use serde::Serialize;
use std::fmt::Write as _;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "fwer",
    about = "Family-wise error rate of Bonferroni's procedure under structured Gaussian correlation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Reproduce the simulation table over a (beta, alpha) grid
    Table(TableArgs),
    /// Monte Carlo FWER estimate for one correlation model
    Estimate(EstimateArgs),
    /// Corrected FWER approximation (independence series + correction)
    Correct(CorrectArgs),
    /// Closed-form bounds
    #[command(subcommand)]
    Bound(BoundCommand),
    /// Off-diagonal summaries of a correlation model
    Diagnose(DiagnoseArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelKind {
    Identity,
    Equicorrelated,
    Block,
    NearlyIndependent,
}

#[derive(Args)]
struct ModelArgs {
    /// Correlation structure
    #[arg(long, value_enum)]
    model: ModelKind,

    /// Dimension (required except for --model block)
    #[arg(long)]
    n: Option<usize>,

    /// Correlation parameter (equicorrelated / block)
    #[arg(long)]
    rho: Option<f64>,

    #[arg(long)]
    block_size: Option<usize>,

    #[arg(long)]
    num_blocks: Option<usize>,

    /// Decay exponent for the nearly independent model
    #[arg(long)]
    beta: Option<f64>,

    /// Magnitude constant: off-diagonal is scale * n^(-beta)
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
}

impl ModelArgs {
    fn build(&self) -> Result<CorrelationModel, String> {
        let need_n = |n: &Option<usize>| {
            n.ok_or_else(|| "--n is required for this model".to_string())
        };
        match self.model {
            ModelKind::Identity => {
                build_identity(need_n(&self.n)?).map_err(|e| e.to_string())
            }
            ModelKind::Equicorrelated => {
                let rho = self
                    .rho
                    .ok_or_else(|| "--rho is required for --model equicorrelated".to_string())?;
                build_equicorrelated(need_n(&self.n)?, rho).map_err(|e| e.to_string())
            }
            ModelKind::Block => {
                let b = self
                    .block_size
                    .ok_or_else(|| "--block-size is required for --model block".to_string())?;
                let m = self
                    .num_blocks
                    .ok_or_else(|| "--num-blocks is required for --model block".to_string())?;
                let rho = self
                    .rho
                    .ok_or_else(|| "--rho is required for --model block".to_string())?;
                if let Some(n) = self.n {
                    if n != b * m {
                        return Err(format!(
                            "--n {n} contradicts --block-size {b} x --num-blocks {m}"
                        ));
                    }
                }
                build_block_equicorrelated(b, m, rho).map_err(|e| e.to_string())
            }
            ModelKind::NearlyIndependent => {
                let beta = self
                    .beta
                    .ok_or_else(|| "--beta is required for --model nearly-independent".to_string())?;
                build_nearly_independent(need_n(&self.n)?, beta, self.scale)
                    .map_err(|e| e.to_string())
            }
        }
    }
}

#[derive(Args)]
struct TableArgs {
    #[arg(long, default_value_t = 5000)]
    n: usize,

    #[arg(long, value_delimiter = ',', default_values_t = vec![0.4, 0.6, 0.8, 1.0])]
    betas: Vec<f64>,

    #[arg(long, value_delimiter = ',', default_values_t = vec![0.01, 0.05, 0.1, 0.2])]
    alphas: Vec<f64>,

    #[arg(long, default_value_t = 10_000)]
    replications: usize,

    #[arg(long = "K", default_value_t = 15)]
    k: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Magnitude constant of the nearly independent off-diagonal
    #[arg(long, default_value_t = 1.0)]
    scale: f64,

    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,

    /// Write full-precision output here; stdout then shows a rounded table
    #[arg(long)]
    output: Option<std::path::PathBuf>,

    /// Worker threads ("auto" or a count); overrides the THREADS env var
    #[arg(long, default_value = "auto")]
    threads: String,

    /// Display rounding for the stdout preview when --output is used
    #[arg(long, default_value_t = 4)]
    digits: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    model: ModelArgs,

    #[arg(long)]
    alpha: f64,

    #[arg(long, default_value_t = 10_000)]
    replications: usize,

    #[arg(long, default_value_t = 42)]
    seed: u64,

    #[arg(long, default_value = "auto")]
    threads: String,
}

#[derive(Args)]
struct CorrectArgs {
    #[arg(long)]
    alpha: f64,

    #[arg(long)]
    n: usize,

    /// Mean off-diagonal correlation; alternative to --beta
    #[arg(long, conflicts_with = "beta")]
    rho_bar: Option<f64>,

    #[arg(long)]
    beta: Option<f64>,

    #[arg(long, default_value_t = 1.0)]
    scale: f64,

    #[arg(long = "K", default_value_t = 15)]
    k: usize,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Savage's multivariate Mill's ratio bounds on P(X > a 1_k)
    Mills(MillsArgs),
    /// FWER bound for the block-equicorrelated construction
    Block(BlockBoundArgs),
}

#[derive(Args)]
struct MillsArgs {
    /// Common threshold (the orthant corner a 1_k)
    #[arg(long)]
    a: f64,

    #[arg(long, default_value_t = 1)]
    dim: usize,

    /// Equicorrelation of the underlying vector
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
}

#[derive(Args)]
struct BlockBoundArgs {
    /// Block size n (the construction has dimension n^2)
    #[arg(long)]
    n: usize,

    #[arg(long)]
    alpha: f64,

    #[arg(long)]
    rho: f64,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    model: ModelArgs,
}

#[derive(Serialize)]
struct TableRow {
    beta: f64,
    alpha: f64,
    fwer_mc: f64,
    fwer_independence: f64,
    fwer_corrected: f64,
    std_error: f64,
    replications: usize,
    seed: u64,
}

const CSV_HEADER: &str =
    "beta,alpha,fwer_mc,fwer_independence,fwer_corrected,std_error,replications,seed";

/// 17 significant digits: enough for exact f64 round-trips.
fn full(x: f64) -> String {
    format!("{x:.16e}")
}

fn rows_to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.beta,
            r.alpha,
            full(r.fwer_mc),
            full(r.fwer_independence),
            full(r.fwer_corrected),
            full(r.std_error),
            r.replications,
            r.seed
        );
    }
    out
}

fn rows_to_preview(rows: &[TableRow], digits: usize) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>6} {:>6} {:>12} {:>12} {:>12} {:>12}",
        "beta", "alpha", "mc", "indep", "corrected", "std_err"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>6} {:>6} {:>12.digits$} {:>12.digits$} {:>12.digits$} {:>12.digits$}",
            r.beta, r.alpha, r.fwer_mc, r.fwer_independence, r.fwer_corrected, r.std_error
        );
    }
    out
}

fn resolve_threads(flag: &str) -> Result<Option<usize>, String> {
    let value = if flag != "auto" {
        flag.to_string()
    } else if let Ok(env) = std::env::var("THREADS") {
        env
    } else {
        return Ok(None);
    };
    if value == "auto" {
        return Ok(None);
    }
    value
        .parse::<usize>()
        .map(Some)
        .map_err(|_| format!("invalid thread count: {value}"))
}

/// Run `f` on a pool of the requested size (or the default pool).
fn with_threads<T: Send>(
    flag: &str,
    f: impl FnOnce() -> Result<T, String> + Send,
) -> Result<T, String> {
    match resolve_threads(flag)? {
        None => f(),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t)
                .build()
                .map_err(|e| e.to_string())?;
            pool.install(f)
        }
    }
}

fn run_table(args: &TableArgs) -> Result<(), String> {
    if args.replications == 0 {
        return Err("--replications must be positive".into());
    }
    let rows = with_threads(&args.threads, || {
        let mut rows = Vec::new();
        for &beta in &args.betas {
            for &alpha in &args.alphas {
                let model = build_nearly_independent(args.n, beta, args.scale)
                    .map_err(|e| e.to_string())?;
                let cfg = bonferroni_cutoff(args.n, alpha)
                    .and_then(|c| c.with_k(args.k))
                    .map_err(|e| e.to_string())?;
                let cell_seed = derive_seed(args.seed, beta.to_bits() ^ alpha.to_bits());
                let mc = estimate_fwer_mc(&model, &cfg, args.replications, cell_seed)
                    .map_err(|e| e.to_string())?;
                let rho_bar = model.mean_offdiag().map_err(|e| e.to_string())?;
                let corrected = fwer_corrected(&cfg, rho_bar).map_err(|e| e.to_string())?;
                rows.push(TableRow {
                    beta,
                    alpha,
                    fwer_mc: mc.estimate,
                    fwer_independence: fwer_independence(args.n, cfg.alpha_n),
                    fwer_corrected: corrected.total,
                    std_error: mc.std_error,
                    replications: args.replications,
                    seed: args.seed,
                });
            }
        }
        Ok(rows)
    })?;

    let payload = match args.format {
        OutputFormat::Csv => rows_to_csv(&rows),
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())?;
            s.push('\n');
            s
        }
    };
    match &args.output {
        Some(path) => {
            std::fs::write(path, &payload).map_err(|e| e.to_string())?;
            print!("{}", rows_to_preview(&rows, args.digits));
        }
        None => print!("{payload}"),
    }
    Ok(())
}

fn run_estimate(args: &EstimateArgs) -> Result<(), String> {
    if args.replications == 0 {
        return Err("--replications must be positive".into());
    }
    let model = args.model.build()?;
    let cfg = bonferroni_cutoff(model.dim(), args.alpha).map_err(|e| e.to_string())?;
    let est = with_threads(&args.threads, || {
        estimate_fwer_mc(&model, &cfg, args.replications, args.seed).map_err(|e| e.to_string())
    })?;
    println!(
        "{}",
        serde_json::to_string_pretty(&est).map_err(|e| e.to_string())?
    );
    Ok(())
}

fn run_correct(args: &CorrectArgs) -> Result<(), String> {
    let rho_bar = match (args.rho_bar, args.beta) {
        (Some(r), _) => r,
        (None, Some(beta)) => build_nearly_independent(args.n, beta, args.scale)
            .and_then(|m| m.mean_offdiag())
            .map_err(|e| e.to_string())?,
        (None, None) => return Err("provide either --rho-bar or --beta".into()),
    };
    let cfg = bonferroni_cutoff(args.n, args.alpha)
        .and_then(|c| c.with_k(args.k))
        .map_err(|e| e.to_string())?;
    let out = fwer_corrected(&cfg, rho_bar).map_err(|e| e.to_string())?;
    if out.outside_regime() {
        eprintln!(
            "warning: c^2 |rho_bar| / 2 = {:.3} exceeds 0.5; the correction is outside \
             its asymptotic regime",
            0.5 * out.c * out.c * out.rho_bar.abs()
        );
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&out).map_err(|e| e.to_string())?
    );
    Ok(())
}

#[derive(Serialize)]
struct MillsReport {
    lower: f64,
    upper: f64,
    leading: f64,
    correction: f64,
    vacuous: bool,
    delta: Vec<f64>,
}

fn run_bound_mills(args: &MillsArgs) -> Result<(), String> {
    if args.dim == 0 {
        return Err("--dim must be positive".into());
    }
    let mut v = SquareMatrix::identity(args.dim);
    for i in 0..args.dim {
        for j in 0..args.dim {
            if i != j {
                v.set(i, j, args.rho);
            }
        }
    }
    if !within_regime(&v) {
        eprintln!(
            "warning: |rho| = {} exceeds 0.2; outside the near-independence regime",
            args.rho.abs()
        );
    }
    let a = vec![args.a; args.dim];
    let problem = make_orthant_problem(&a, &v).map_err(|e| e.to_string())?;
    let bounds = mills_bounds(&problem).map_err(|e| e.to_string())?;
    let report = MillsReport {
        lower: bounds.lower,
        upper: bounds.upper,
        leading: bounds.leading,
        correction: bounds.correction,
        vacuous: bounds.vacuous,
        delta: problem.delta.clone(),
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
    );
    Ok(())
}

#[derive(Serialize)]
struct BlockBoundReport {
    bound: f64,
    asymptote: f64,
    n_block: usize,
    dimension: usize,
    alpha: f64,
    rho: f64,
}

fn run_bound_block(args: &BlockBoundArgs) -> Result<(), String> {
    let bound = block_lower_bound(args.n, args.alpha, args.rho).map_err(|e| e.to_string())?;
    let report = BlockBoundReport {
        bound,
        asymptote: args.alpha * (1.0 - args.rho),
        n_block: args.n,
        dimension: args.n * args.n,
        alpha: args.alpha,
        rho: args.rho,
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
    );
    Ok(())
}

#[derive(Serialize)]
struct DiagnoseReport {
    mean_offdiag: f64,
    rms_offdiag: f64,
    max_abs_offdiag: f64,
}

fn run_diagnose(args: &DiagnoseArgs) -> Result<(), String> {
    let model = args.model.build()?;
    let report = if model.dim() < 2 {
        DiagnoseReport {
            mean_offdiag: 0.0,
            rms_offdiag: 0.0,
            max_abs_offdiag: 0.0,
        }
    } else {
        DiagnoseReport {
            mean_offdiag: model.mean_offdiag().map_err(|e| e.to_string())?,
            rms_offdiag: model.rms_offdiag().map_err(|e| e.to_string())?,
            max_abs_offdiag: model.max_abs_offdiag().map_err(|e| e.to_string())?,
        }
    };
    println!(
        "{}",
        serde_json::to_string_pretty(&report).map_err(|e| e.to_string())?
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Table(args) => run_table(args),
        Command::Estimate(args) => run_estimate(args),
        Command::Correct(args) => run_correct(args),
        Command::Bound(BoundCommand::Mills(args)) => run_bound_mills(args),
        Command::Bound(BoundCommand::Block(args)) => run_bound_block(args),
        Command::Diagnose(args) => run_diagnose(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
