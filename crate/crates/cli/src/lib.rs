//! Command-line front end: solve systems, print constants and bounds, run the
//! synthetic sweeps and the tightness demo.

pub mod error;
pub mod io;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use importance_sgd::experiments::{
    default_lambda_grid, emit_results, run_sweep, tightness_demo, CaseSpec, StepRule, DEFAULT_SEED,
};
use importance_sgd::kaczmarz::{kaczmarz_bound, run_kaczmarz, KaczmarzConfig, KaczmarzStats, KaczmarzVariant};
use importance_sgd::numerics::{dist_sq, norm_sq, DenseMatrix};
use importance_sgd::problem::{weighted_solution, Problem};
use importance_sgd::sgd::{fmt_real, iter_bound, run, BoundCurve, IterBound, RunRecord, SgdConfig, StepSize};
use importance_sgd::weighting::WeightScheme;

pub use error::{CliError, CliResult};

#[derive(Debug, Parser)]
#[command(name = "isgd", version, about = "Importance-sampled SGD and randomized Kaczmarz")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a solver on `A x ≈ b` and write its error trace.
    Solve(SolveArgs),
    /// Print smoothness, conditioning and residual constants with iteration bounds.
    Stats(StatsArgs),
    /// Tabulate an expected-error bound curve.
    Bounds(BoundsArgs),
    /// Run the synthetic λ sweeps and write curves.csv, iters.csv and plot.gp.
    Experiment(ExperimentArgs),
    /// First-hit counts on the N+1 component tightness instance.
    Tightness(TightnessArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Sgd,
    KaczmarzWeighted,
    KaczmarzUniform,
    KaczmarzHybrid,
}

#[derive(Debug, Args)]
pub struct SystemArgs {
    /// Matrix file (Matrix Market or CSV).
    #[arg(long)]
    pub matrix: PathBuf,
    /// Right-hand side (one value per line, or Matrix Market).
    #[arg(long)]
    pub rhs: PathBuf,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, value_enum, default_value = "sgd")]
    pub method: Method,
    /// Bias parameter of w(i) = λ + (1 − λ) L_i / L̄.
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
    /// Fixed SGD step size γ.
    #[arg(long, conflicts_with = "epsilon")]
    pub step_size: Option<f64>,
    /// Target accuracy; derives γ from the step-size rule of the chosen weights.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Kaczmarz relaxation parameter.
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Stop once the full gradient norm is at most δ (0 disables).
    #[arg(long, default_value_t = 0.0)]
    pub delta: f64,
    /// Trace CSV (`iteration,error_sq`).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also print distances to both least-squares and weighted solutions.
    #[arg(long)]
    pub both_distances: bool,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub system: SystemArgs,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 0.5)]
    pub lambda: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantName {
    Weighted,
    Uniform,
    Hybrid,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long)]
    pub sup_l: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub sigma_sq: f64,
    /// Initial squared error; for Kaczmarz defaults to ‖x_ref‖² (start at 0).
    #[arg(long)]
    pub eps0: Option<f64>,
    #[arg(long, default_value_t = 100)]
    pub k_max: usize,
    /// Kaczmarz bound instead of the SGD one (needs --matrix, --rhs, --c).
    #[arg(long, value_enum)]
    pub variant: Option<VariantName>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long, requires = "rhs")]
    pub matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    pub rhs: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StepRuleName {
    ExactWeighted,
    PartialBiasBound,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// 1 to 5, or `all`.
    #[arg(long, default_value = "all")]
    pub case: String,
    #[arg(long, default_value_t = 100)]
    pub trials: usize,
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',')]
    pub lambda_grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 50_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 10)]
    pub cols: usize,
    #[arg(long, value_enum, default_value = "exact-weighted")]
    pub step_rule: StepRuleName,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Skip the gnuplot script.
    #[arg(long)]
    pub no_plot: bool,
}

#[derive(Debug, Args)]
pub struct TightnessArgs {
    #[arg(long, default_value_t = 99)]
    pub n_big: usize,
    #[arg(long, default_value_t = 10_000)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the instance as a least-squares system (matrix CSV).
    #[arg(long, requires = "export_rhs")]
    pub export_matrix: Option<PathBuf>,
    #[arg(long, requires = "export_matrix")]
    pub export_rhs: Option<PathBuf>,
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> CliResult<()> {
    match cli.command {
        Command::Solve(a) => cmd_solve(&a, out),
        Command::Stats(a) => cmd_stats(&a, out),
        Command::Bounds(a) => cmd_bounds(&a, out),
        Command::Experiment(a) => cmd_experiment(&a, out),
        Command::Tightness(a) => cmd_tightness(&a, out),
    }
}

fn write_file(path: &Path, contents: &[u8]) -> CliResult<()> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn load_system(s: &SystemArgs) -> CliResult<(DenseMatrix, Vec<f64>)> {
    let a = io::read_matrix(&s.matrix)?;
    let b = io::read_rhs(&s.rhs)?;
    if b.len() != a.rows() {
        return Err(CliError::Usage(format!(
            "{} has {} rows but {} has {} entries",
            s.matrix.display(),
            a.rows(),
            s.rhs.display(),
            b.len()
        )));
    }
    Ok((a, b))
}

fn wr(out: &mut dyn Write, line: String) -> CliResult<()> {
    writeln!(out, "{line}").map_err(|source| CliError::Write {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

pub fn cmd_solve(args: &SolveArgs, out: &mut dyn Write) -> CliResult<()> {
    let (a, b) = load_system(&args.system)?;
    let record: RunRecord = match args.method {
        Method::Sgd => {
            if args.c.is_some() {
                return Err(CliError::Usage("--c applies to the Kaczmarz methods only".into()));
            }
            let step = match (args.step_size, args.epsilon) {
                (Some(g), None) => StepSize::Fixed(g),
                (None, Some(e)) => StepSize::Target(e),
                _ => return Err(CliError::Usage("sgd needs exactly one of --step-size or --epsilon".into())),
            };
            let prob = Problem::from_least_squares(&a, &b)?;
            let mut cfg = SgdConfig::new(WeightScheme::PartiallyBiasedL(args.lambda), step, args.max_iters, args.seed);
            cfg.grad_tol = args.delta;
            run(&prob, &cfg)?
        }
        m => {
            if args.step_size.is_some() || args.epsilon.is_some() {
                return Err(CliError::Usage(
                    "Kaczmarz methods take --c, not --step-size or --epsilon".into(),
                ));
            }
            let variant = match m {
                Method::KaczmarzWeighted => KaczmarzVariant::Weighted(args.c.unwrap_or(1.0)),
                Method::KaczmarzUniform => KaczmarzVariant::Uniform(args.c.unwrap_or(1.0)),
                _ => KaczmarzVariant::Hybrid(args.c.unwrap_or(0.25)),
            };
            run_kaczmarz(&a, &b, &KaczmarzConfig::new(variant, args.max_iters, args.seed))?
        }
    };
    for w in &record.warnings {
        eprintln!("warning: {w}");
    }
    if let Some(path) = &args.out {
        let mut buf = Vec::new();
        record
            .write_csv(&mut buf)
            .expect("writing to a vector cannot fail");
        write_file(path, &buf)?;
    }
    wr(out, format!("gamma: {}", fmt_real(record.gamma)))?;
    wr(out, format!("iterations: {}", record.iterations_run))?;
    if let Some(k) = record.hit_tolerance_at {
        wr(out, format!("gradient tolerance reached at: {k}"))?;
    }
    wr(out, format!("final_error_sq: {}", fmt_real(record.final_error_sq())))?;
    if args.both_distances {
        let x_lsq = Problem::from_least_squares(&a, &b)?.stats()?.x_star;
        wr(out, format!("distance_sq_to_lsq: {}", fmt_real(dist_sq(&record.final_x, &x_lsq))))?;
        match weighted_solution(&a, &b) {
            Ok(x_w) => wr(out, format!("distance_sq_to_weighted_lsq: {}", fmt_real(dist_sq(&record.final_x, &x_w))))?,
            Err(e) => wr(out, format!("distance_sq_to_weighted_lsq: undefined ({e})"))?,
        }
    }
    let x: Vec<String> = record.final_x.iter().map(|v| fmt_real(*v)).collect();
    wr(out, format!("x: {}", x.join(",")))?;
    Ok(())
}

fn fmt_count(k: u64) -> String {
    if k == u64::MAX {
        "unbounded".to_string()
    } else {
        k.to_string()
    }
}

pub fn cmd_stats(args: &StatsArgs, out: &mut dyn Write) -> CliResult<()> {
    let (a, b) = load_system(&args.system)?;
    let ks = KaczmarzStats::compute(&a, &b)?;
    let s = Problem::from_least_squares(&a, &b)?.stats()?;
    let l_min = s.lipschitz.iter().copied().fold(f64::INFINITY, f64::min);
    wr(out, format!("n: {}", a.rows()))?;
    wr(out, format!("d: {}", a.cols()))?;
    wr(out, format!("L_min: {}", fmt_real(l_min)))?;
    wr(out, format!("L_mean: {}", fmt_real(s.l_bar)))?;
    wr(out, format!("L_max: {}", fmt_real(s.sup_l)))?;
    wr(out, format!("mu: {}", fmt_real(s.mu)))?;
    wr(out, format!("sigma_sq: {}", fmt_real(s.sigma_sq)))?;
    wr(out, format!("K(A): {}", fmt_real(ks.cond_k)))?;
    match ks.cond_k_normalized {
        Some(k) => wr(out, format!("K(D^-1 A): {}", fmt_real(k)))?,
        None => wr(out, "K(D^-1 A): undefined (zero row)".to_string())?,
    }
    let eps0 = norm_sq(&s.x_star);
    let eps = args.epsilon;
    let bounds = [
        ("sup_l", IterBound::SupL { sup_l: s.sup_l, sigma_sq: s.sigma_sq }),
        ("mean_l", IterBound::MeanL { l_bar: s.l_bar, sigma_sq: s.sigma_sq }),
        (
            "partial_bias",
            IterBound::PartialBias {
                lambda: args.lambda,
                l_bar: s.l_bar,
                sup_l: s.sup_l,
                inf_l: s.inf_l,
                sigma_sq: s.sigma_sq,
            },
        ),
        ("bach_moulines", IterBound::BachMoulines { l_sq_bar: s.l_sq_bar, sigma_sq: s.sigma_sq }),
    ];
    wr(out, format!("eps0: {}", fmt_real(eps0)))?;
    wr(out, format!("epsilon: {}", fmt_real(eps)))?;
    for (name, which) in bounds {
        let k = iter_bound(which, s.mu, eps, eps0)?;
        let label = if name == "partial_bias" { format!("iters_partial_bias(lambda={})", args.lambda) } else { format!("iters_{name}") };
        wr(out, format!("{label}: {}", fmt_count(k)))?;
    }
    Ok(())
}

pub fn cmd_bounds(args: &BoundsArgs, out: &mut dyn Write) -> CliResult<()> {
    let mut csv = String::from("iteration,bound\n");
    if let Some(v) = args.variant {
        let (Some(matrix), Some(rhs), Some(c)) = (&args.matrix, &args.rhs, args.c) else {
            return Err(CliError::Usage("--variant needs --matrix, --rhs and --c".into()));
        };
        let (a, b) = load_system(&SystemArgs {
            matrix: matrix.clone(),
            rhs: rhs.clone(),
        })?;
        let variant = match v {
            VariantName::Weighted => KaczmarzVariant::Weighted(c),
            VariantName::Uniform => KaczmarzVariant::Uniform(c),
            VariantName::Hybrid => KaczmarzVariant::Hybrid(c),
        };
        let stats = KaczmarzStats::compute(&a, &b)?;
        let bound = kaczmarz_bound(variant, &stats)?;
        let eps0 = match args.eps0 {
            Some(e) => e,
            None => norm_sq(stats.reference(variant.default_reference())?),
        };
        wr(out, format!("rate: {}", fmt_real(bound.rate)))?;
        wr(out, format!("horizon: {}", fmt_real(bound.horizon)))?;
        for k in 0..=args.k_max {
            csv.push_str(&format!("{k},{}\n", fmt_real(bound.eval(k, eps0))));
        }
    } else {
        let (Some(gamma), Some(mu), Some(sup_l), Some(eps0)) = (args.gamma, args.mu, args.sup_l, args.eps0) else {
            return Err(CliError::Usage("the SGD bound needs --gamma, --mu, --sup-l and --eps0".into()));
        };
        let curve = BoundCurve::new(gamma, mu, sup_l, args.sigma_sq, eps0)?;
        wr(out, format!("rate: {}", fmt_real(curve.rate())))?;
        wr(out, format!("horizon: {}", fmt_real(curve.horizon())))?;
        for k in 0..=args.k_max {
            csv.push_str(&format!("{k},{}\n", fmt_real(curve.eval(k))));
        }
    }
    match &args.out {
        Some(p) => write_file(p, csv.as_bytes()),
        None => out.write_all(csv.as_bytes()).map_err(|source| CliError::Write {
            path: PathBuf::from("<stdout>"),
            source,
        }),
    }
}

fn parse_cases(s: &str) -> CliResult<Vec<u8>> {
    if s.eq_ignore_ascii_case("all") {
        return Ok((1..=5).collect());
    }
    match s.parse::<u8>() {
        Ok(c) if (1..=5).contains(&c) => Ok(vec![c]),
        _ => Err(CliError::Usage(format!("--case must be 1..5 or all, got {s:?}"))),
    }
}

pub fn cmd_experiment(args: &ExperimentArgs, out: &mut dyn Write) -> CliResult<()> {
    let cases = parse_cases(&args.case)?;
    let mut results = Vec::new();
    for case_id in cases {
        let spec = CaseSpec {
            case_id,
            n: args.rows,
            d: args.cols,
            trials: args.trials,
            lambda_grid: args.lambda_grid.clone().unwrap_or_else(default_lambda_grid),
            eps_target: args.epsilon,
            max_iters: args.max_iters,
            seed_base: args.seed,
            step_rule: match args.step_rule {
                StepRuleName::ExactWeighted => StepRule::ExactWeighted,
                StepRuleName::PartialBiasBound => StepRule::PartialBiasBound,
            },
            ..CaseSpec::standard(case_id)
        };
        let r = run_sweep(&spec)?;
        for (i, l) in r.lambdas.iter().enumerate() {
            let flag = if r.censored[i] { " (censored)" } else { "" };
            wr(
                out,
                format!("case {case_id} lambda {l}: mean iterations {}{flag}", fmt_real(r.mean_iters_to_eps[i])),
            )?;
        }
        results.push(r);
    }
    let files = emit_results(&results, &args.out_dir, !args.no_plot)?;
    wr(out, format!("wrote {}", files.curves.display()))?;
    wr(out, format!("wrote {}", files.iters.display()))?;
    if let Some(p) = files.plot {
        wr(out, format!("wrote {}", p.display()))?;
    }
    Ok(())
}

/// The tightness instance as a least-squares system whose `n/2`-scaled rows
/// reproduce its components.
pub fn tightness_system(n_big: usize) -> CliResult<(DenseMatrix, Vec<f64>)> {
    let prob = Problem::tightness_instance(n_big, 1.0)?;
    let n = prob.len() as f64;
    let mut rows = Vec::with_capacity(prob.len());
    let mut rhs = Vec::with_capacity(prob.len());
    for c in prob.components() {
        let s = (c.scale / n).sqrt();
        rows.push(c.z.iter().map(|v| s * v).collect::<Vec<_>>());
        rhs.push(s * c.offset);
    }
    Ok((DenseMatrix::from_rows(&rows)?, rhs))
}

pub fn cmd_tightness(args: &TightnessArgs, out: &mut dyn Write) -> CliResult<()> {
    let r = tightness_demo(args.n_big, args.trials, args.seed)?;
    wr(out, format!("N: {}", r.n_big))?;
    wr(out, format!("trials: {}", r.trials))?;
    wr(out, format!("uniform_mean_first_hit: {}", fmt_real(r.uniform_mean)))?;
    wr(out, format!("uniform_expected: {}", r.n_big + 1))?;
    wr(out, format!("biased_mean_first_hit: {}", fmt_real(r.biased_mean)))?;
    wr(out, format!("biased_probability: {}", fmt_real(r.biased_prob)))?;
    if let (Some(mp), Some(rp)) = (&args.export_matrix, &args.export_rhs) {
        let (a, b) = tightness_system(args.n_big)?;
        write_file(mp, io::matrix_to_csv(&a).as_bytes())?;
        write_file(rp, io::vector_to_lines(&b).as_bytes())?;
    }
    Ok(())
}
