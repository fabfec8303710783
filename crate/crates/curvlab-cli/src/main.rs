//! `curvlab` command line: tensor generation, spectral checks, theorem-level
//! experiments, and the counterexample search.
//!
//! Exit codes: 0 = verdict pass (or generation/report success), 2 = verdict
//! fail, 1 = usage or runtime error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use curvlab::error::CurvError;
use curvlab::experiments::{
    equivalence_experiment, falsification_search, osserman_perturbation_corpus,
    write_equivalence_report, write_falsifier_report, CheckParams, FalsifierMeta, ReportFormat,
    SearchMethod,
};
use curvlab::generators::{
    complex_space_form, constant_curvature, make_clifford_structures, perturb, random_curvature,
    single_plane, CliffordSystem, CorpusSpec,
};
use curvlab::io::{load_tensor, save_tensor, save_tensor_sparse};
use curvlab::spectral::{
    derivative_sweep, duality_report, osserman_report, sample_unit_sphere, ClusterTol,
    DEFAULT_CHECK_TOL,
};
use curvlab::CurvatureTensor64;

#[derive(Parser)]
#[command(
    name = "curvlab",
    version,
    about = "Algebraic curvature tensors: Jacobi spectra, Osserman and duality checks",
    after_help = "Exit codes: 0 = pass/success, 2 = verdict fail, 1 = error."
)]
struct Cli {
    /// Worker threads for per-sample computations (env: CURVLAB_THREADS)
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a tensor file
    Gen(GenArgs),
    /// Run one checker against a tensor file
    #[command(subcommand)]
    Check(CheckCommand),
    /// Corpus-level experiments
    #[command(subcommand)]
    Experiment(ExperimentCommand),
    /// Search for a tensor satisfying duality while violating the Osserman
    /// condition (the equivalence theorem predicts failure)
    Falsify(FalsifyArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Tensor family: constant | complex | clifford | random | plane | perturbed
    #[arg(long = "type", value_name = "KIND")]
    kind: String,
    /// Dimension
    #[arg(long)]
    n: usize,
    /// Curvature of the space form (constant)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// Base coefficient (complex, clifford)
    #[arg(long, default_value_t = 1.0)]
    lambda0: f64,
    /// Structure coefficient (complex)
    #[arg(long, default_value_t = 1.0)]
    lambda1: f64,
    /// Number of Clifford structures, 1..=3 (clifford)
    #[arg(long, default_value_t = 1)]
    m: usize,
    /// Comma-separated structure coefficients (clifford)
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    /// Seed for random data (random, perturbed noise, clifford basis)
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Frobenius norm of the random tensor (random)
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Base tensor file (perturbed)
    #[arg(long)]
    base: Option<PathBuf>,
    /// Perturbation size (perturbed)
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    /// Output tensor file
    #[arg(short, long)]
    out: PathBuf,
    /// Write the sparse-ijkl variant instead of dense
    #[arg(long)]
    sparse: bool,
}

#[derive(Subcommand)]
enum CheckCommand {
    /// Constancy of the Jacobi spectrum over the unit sphere
    Osserman(OssermanArgs),
    /// Eigenvector duality between base points
    Duality(DualityArgs),
    /// Finite-difference vs analytic eigenvalue branch derivatives
    Derivative(DerivativeArgs),
}

#[derive(Args)]
struct CheckCommon {
    /// Tensor file (dense or sparse JSON)
    tensor: PathBuf,
    /// Project the input onto the symmetry subspace instead of rejecting it
    #[arg(long)]
    project: bool,
    /// Absolute eigenvalue clustering gap (default: 1e-6 of the spectral range)
    #[arg(long)]
    cluster_tol: Option<f64>,
    /// Machine-readable JSON report
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-sample / per-eigenpair CSV
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct OssermanArgs {
    #[command(flatten)]
    common: CheckCommon,
    /// Sphere sample size
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verdict tolerance on the profile spread
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tolerance: f64,
}

#[derive(Args)]
struct DualityArgs {
    #[command(flatten)]
    common: CheckCommon,
    /// Sphere sample size
    #[arg(long, default_value_t = 200)]
    samples: usize,
    /// Sampling seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Verdict tolerance on the max residual
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tolerance: f64,
    /// Random probes per eigenspace beyond its orthonormal basis
    #[arg(long, default_value_t = 4)]
    probes: usize,
}

#[derive(Args)]
struct DerivativeArgs {
    #[command(flatten)]
    common: CheckCommon,
    /// Number of random (X, Y, branch) trials
    #[arg(long, default_value_t = 50)]
    trials: usize,
    /// Trial seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Finite-difference step, in (0, 1e-2]
    #[arg(long, default_value_t = 1e-4)]
    step: f64,
    /// Absolute tolerance on |fd - analytic| (default: 10 |t| h)
    #[arg(long)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum ExperimentCommand {
    /// Score every corpus tensor with both checkers and test verdict agreement
    Equivalence(EquivalenceArgs),
}

#[derive(Args)]
struct EquivalenceArgs {
    /// Corpus file: JSON array of tensor descriptors
    #[arg(long, conflicts_with = "standard")]
    corpus: Option<PathBuf>,
    /// Use the built-in 100-tensor corpus (Osserman families, eps in {0, 0.1})
    #[arg(long)]
    standard: bool,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
    tolerance: f64,
    #[arg(long, default_value_t = 4)]
    probes: usize,
    /// Report file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, default_value = "json")]
    format: String,
}

#[derive(Args)]
struct FalsifyArgs {
    /// Dimension, 3..=6
    #[arg(long, default_value_t = 4)]
    n: usize,
    /// Osserman-deviation floor
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Objective evaluation budget
    #[arg(long, default_value_t = 10_000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// random-restart | coordinate-descent
    #[arg(long, default_value = "random-restart")]
    method: String,
    /// Report file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format
    #[arg(long, default_value = "json")]
    format: String,
    /// Also write the best candidate as a tensor file
    #[arg(long)]
    save_candidate: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };

    if let Err(msg) = configure_threads(cli.threads) {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }

    match run(cli.command) {
        Ok(true) => ExitCode::from(0),
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn configure_threads(flag: Option<usize>) -> Result<(), String> {
    let requested = match flag {
        Some(k) => Some(k),
        None => match std::env::var("CURVLAB_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| format!("CURVLAB_THREADS must be a positive integer, got `{v}`"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(k) = requested {
        if k == 0 {
            return Err("thread count must be positive".into());
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn run(command: Command) -> Result<bool, CurvError> {
    match command {
        Command::Gen(args) => run_gen(args),
        Command::Check(CheckCommand::Osserman(args)) => run_osserman(args),
        Command::Check(CheckCommand::Duality(args)) => run_duality(args),
        Command::Check(CheckCommand::Derivative(args)) => run_derivative(args),
        Command::Experiment(ExperimentCommand::Equivalence(args)) => run_equivalence(args),
        Command::Falsify(args) => run_falsify(args),
    }
}

fn run_gen(args: GenArgs) -> Result<bool, CurvError> {
    let tensor: CurvatureTensor64 = match args.kind.as_str() {
        "constant" => constant_curvature(args.n, args.lambda),
        "plane" => single_plane(args.n),
        "complex" => complex_space_form(args.n, args.lambda0, args.lambda1)?,
        "clifford" => {
            let lambdas = if args.lambdas.is_empty() {
                vec![1.0; args.m]
            } else {
                args.lambdas.clone()
            };
            let structures = make_clifford_structures(args.n, args.m, args.seed)?;
            let sys = CliffordSystem::new(args.n, structures, args.lambda0, lambdas)?;
            curvlab::generators::clifford_osserman(&sys)?
        }
        "random" => {
            if args.scale <= 0.0 {
                return Err(CurvError::InvalidParameter("--scale must be positive".into()));
            }
            random_curvature(args.n, args.seed, args.scale)
        }
        "perturbed" => {
            let base_path = args.base.as_ref().ok_or_else(|| {
                CurvError::InvalidParameter("--type perturbed needs --base <tensor file>".into())
            })?;
            let base: CurvatureTensor64 = load_tensor(base_path, false)?;
            if base.n() != args.n {
                return Err(CurvError::DimensionMismatch { expected: args.n, got: base.n() });
            }
            let noise = random_curvature(args.n, args.seed, 1.0);
            perturb(&base, &noise, args.eps)?
        }
        other => {
            return Err(CurvError::InvalidParameter(format!(
                "unknown tensor type `{other}` (constant, complex, clifford, random, plane, perturbed)"
            )))
        }
    };
    if args.sparse {
        save_tensor_sparse(&args.out, &tensor)?;
    } else {
        save_tensor(&args.out, &tensor)?;
    }
    println!(
        "wrote {} tensor (n = {}, |R|_F = {:.6}) to {}",
        args.kind,
        tensor.n(),
        tensor.frobenius_norm(),
        args.out.display()
    );
    Ok(true)
}

fn cluster_tol_of(flag: Option<f64>) -> ClusterTol<f64> {
    match flag {
        Some(t) => ClusterTol::Abs(t),
        None => ClusterTol::Auto,
    }
}

fn check_samples(samples: usize) -> Result<(), CurvError> {
    if samples == 0 {
        return Err(CurvError::InvalidParameter("--samples must be at least 1".into()));
    }
    Ok(())
}

fn write_out(path: &Path, value: &serde_json::Value) -> Result<(), CurvError> {
    fs::write(path, serde_json::to_string_pretty(value)? + "\n")?;
    Ok(())
}

fn run_osserman(args: OssermanArgs) -> Result<bool, CurvError> {
    check_samples(args.samples)?;
    let tensor: CurvatureTensor64 = load_tensor(&args.common.tensor, args.common.project)?;
    let sample = sample_unit_sphere(tensor.n(), args.samples, args.seed);
    let tol = cluster_tol_of(args.common.cluster_tol);
    let report = osserman_report(&tensor, &sample, tol, args.tolerance)?;

    println!("check osserman: {}", args.common.tensor.display());
    println!("  samples: {} (seed {}), regular: {}", report.samples, args.seed, report.regular_count);
    println!("  profile spread: {:.6e}", report.profile_spread);
    println!("  coefficient spread: {:.6e}", report.coeff_spread);
    println!(
        "  verdict: {} (tolerance {:.1e})",
        if report.verdict { "PASS" } else { "FAIL" },
        args.tolerance
    );

    if let Some(out) = &args.common.out {
        let value = serde_json::json!({
            "check": "osserman",
            "tensor": args.common.tensor.display().to_string(),
            "samples": args.samples,
            "seed": args.seed,
            "tolerance": args.tolerance,
            "spread": report.profile_spread,
            "coeff_spread": report.coeff_spread,
            "regular_count": report.regular_count,
            "verdict": report.verdict,
            "witness": serde_json::to_value(&report.witness)?,
        });
        write_out(out, &value)?;
    }
    if let Some(csv) = &args.common.csv {
        fs::write(csv, report.to_csv())?;
    }
    Ok(report.verdict)
}

fn run_duality(args: DualityArgs) -> Result<bool, CurvError> {
    check_samples(args.samples)?;
    let tensor: CurvatureTensor64 = load_tensor(&args.common.tensor, args.common.project)?;
    let sample = sample_unit_sphere(tensor.n(), args.samples, args.seed);
    let tol = cluster_tol_of(args.common.cluster_tol);
    let report = duality_report(&tensor, &sample, tol, args.tolerance, args.probes)?;

    println!("check duality: {}", args.common.tensor.display());
    println!(
        "  samples: {} (seed {}), probes per eigenspace: {}, records: {}",
        report.samples,
        args.seed,
        args.probes,
        report.records.len()
    );
    println!("  max residual: {:.6e}", report.max_residual);
    println!(
        "  verdict: {} (tolerance {:.1e})",
        if report.verdict { "PASS" } else { "FAIL" },
        args.tolerance
    );

    if let Some(out) = &args.common.out {
        let value = serde_json::json!({
            "check": "duality",
            "tensor": args.common.tensor.display().to_string(),
            "samples": args.samples,
            "seed": args.seed,
            "probes": args.probes,
            "tolerance": args.tolerance,
            "max_residual": report.max_residual,
            "verdict": report.verdict,
            "witness": serde_json::to_value(&report.witness)?,
        });
        write_out(out, &value)?;
    }
    if let Some(csv) = &args.common.csv {
        fs::write(csv, report.to_csv())?;
    }
    Ok(report.verdict)
}

fn run_derivative(args: DerivativeArgs) -> Result<bool, CurvError> {
    if args.trials == 0 {
        return Err(CurvError::InvalidParameter("--trials must be at least 1".into()));
    }
    let tensor: CurvatureTensor64 = load_tensor(&args.common.tensor, args.common.project)?;
    let tol = cluster_tol_of(args.common.cluster_tol);
    let sweep =
        derivative_sweep(&tensor, args.trials, args.seed, args.step, args.tolerance, tol)?;

    println!("check derivative: {}", args.common.tensor.display());
    println!(
        "  trials: {} (seed {}), completed: {}, crossings rejected: {}, skipped: {}",
        sweep.trials, args.seed, sweep.completed, sweep.rejected_crossing, sweep.skipped
    );
    println!("  step: {:.1e}", sweep.step);
    println!("  max |fd - analytic|: {:.6e}", sweep.max_abs_diff);
    println!(
        "  verdict: {} (tolerance {:.6e})",
        if sweep.verdict { "PASS" } else { "FAIL" },
        sweep.tolerance
    );

    if let Some(out) = &args.common.out {
        let value = serde_json::json!({
            "check": "derivative",
            "tensor": args.common.tensor.display().to_string(),
            "trials": sweep.trials,
            "seed": args.seed,
            "step": sweep.step,
            "tolerance": sweep.tolerance,
            "max_abs_diff": sweep.max_abs_diff,
            "completed": sweep.completed,
            "rejected_crossing": sweep.rejected_crossing,
            "skipped": sweep.skipped,
            "verdict": sweep.verdict,
        });
        write_out(out, &value)?;
    }
    if let Some(csv) = &args.common.csv {
        fs::write(csv, sweep.to_csv())?;
    }
    Ok(sweep.verdict)
}

fn run_equivalence(args: EquivalenceArgs) -> Result<bool, CurvError> {
    check_samples(args.samples)?;
    let corpus: CorpusSpec = if args.standard {
        osserman_perturbation_corpus(&[0.0, 0.1], 0..5)
    } else {
        let path = args.corpus.as_ref().ok_or_else(|| {
            CurvError::InvalidParameter("pass --corpus <file> or --standard".into())
        })?;
        serde_json::from_str(&fs::read_to_string(path)?)?
    };
    let params = CheckParams::<f64> {
        samples: args.samples,
        seed: args.seed,
        cluster_tol: ClusterTol::Auto,
        tolerance: args.tolerance,
        probes_per_eigenspace: args.probes,
    };
    let rows = equivalence_experiment(&corpus, &params);

    let agreeing = rows.iter().filter(|r| r.agree).count();
    let errored = rows.iter().filter(|r| r.error.is_some()).count();
    println!("experiment equivalence: {} tensors", rows.len());
    println!("  samples per tensor: {} (seed {})", args.samples, args.seed);
    println!("  agreement: {agreeing}/{} rows", rows.len());
    if errored > 0 {
        println!("  errored rows: {errored}");
    }
    for row in rows.iter().filter(|r| !r.agree || r.error.is_some()).take(10) {
        match &row.error {
            Some(e) => println!("  [error] {}: {e}", row.tensor_id),
            None => println!(
                "  [disagree] {}: osserman {} vs duality {}",
                row.tensor_id, row.osserman_verdict, row.duality_verdict
            ),
        }
    }

    if let Some(out) = &args.out {
        let format: ReportFormat =
            args.format.parse().map_err(CurvError::InvalidParameter)?;
        write_equivalence_report(&rows, out, format)?;
    }
    Ok(agreeing == rows.len() && errored == 0)
}

fn run_falsify(args: FalsifyArgs) -> Result<bool, CurvError> {
    let method: SearchMethod = args.method.parse().map_err(CurvError::InvalidParameter)?;
    let result = falsification_search::<f64>(args.n, args.delta, args.budget, args.seed, method)?;

    println!("falsify: n = {}, delta = {}, budget = {}, seed = {}", args.n, args.delta, args.budget, args.seed);
    println!("  method: {method}");
    println!("  evaluations: {}, restarts: {}", result.evaluations, result.restarts);
    println!(
        "  best duality residual subject to spread >= {}: {:.6e} (spread {:.6e})",
        args.delta, result.best_residual, result.best_spread
    );
    println!(
        "  verified with {} samples (seed {})",
        result.verification.samples, result.verification.seed
    );

    if let Some(out) = &args.out {
        let format: ReportFormat =
            args.format.parse().map_err(CurvError::InvalidParameter)?;
        let meta = FalsifierMeta {
            n: args.n,
            delta: args.delta,
            budget: args.budget,
            seed: args.seed,
            method,
        };
        write_falsifier_report(&result, &meta, out, format)?;
    }
    if let Some(path) = &args.save_candidate {
        save_tensor(path, &result.candidate)?;
    }
    // the search reports what it found; finding no counterexample is the
    // expected outcome, not a failure
    Ok(true)
}
