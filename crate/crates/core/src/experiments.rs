//! Seeded multi-trial sweeps over the partially biased family on synthetic
//! least-squares cases, the tightness demo, and CSV output.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{dist_sq, DenseMatrix, RngStream};
use crate::problem::Problem;
use crate::sampling::AliasTable;
use crate::sgd::{checkpoint_schedule, drive, fmt_real, step_size_sup_l, step_size_partial_bias};
use crate::weighting::{effective_constants, WeightScheme, WeightTable};

/// Seed used when none is given.
pub const DEFAULT_SEED: u64 = 20_140_901;

/// How `γ` is chosen for each λ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StepRule {
    /// The partially biased rule driven by the worst-case factors
    /// `min(L̄/(1−λ), sup L/λ)` and `max(1/λ, L̄/((1−λ) inf L))`.
    PartialBiasBound,
    /// The basic rule fed the exact constants `sup L_(w)` and `σ²_(w)` of the
    /// λ-weights on the instance at hand.
    #[default]
    ExactWeighted,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSpec {
    /// 1 to 5.
    pub case_id: u8,
    pub n: usize,
    pub d: usize,
    pub trials: usize,
    pub lambda_grid: Vec<f64>,
    pub eps_target: f64,
    pub max_iters: usize,
    pub seed_base: u64,
    pub step_rule: StepRule,
    /// Curves are logged at powers of two and at multiples of this.
    pub curve_every: usize,
}

impl CaseSpec {
    /// 1000×10, 100 trials, λ ∈ {0, 0.1, …, 1}, ε = 0.1, cutoff 50 000.
    pub fn standard(case_id: u8) -> Self {
        CaseSpec {
            case_id,
            n: 1000,
            d: 10,
            trials: 100,
            lambda_grid: default_lambda_grid(),
            eps_target: 0.1,
            max_iters: 50_000,
            seed_base: DEFAULT_SEED,
            step_rule: StepRule::default(),
            curve_every: 1000,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=5).contains(&self.case_id) {
            return Err(Error::Parameter(format!("case must be 1..=5, got {}", self.case_id)));
        }
        if self.n == 0 || self.d == 0 {
            return Err(Error::Parameter("n and d must be positive".into()));
        }
        if self.lambda_grid.iter().any(|l| !(0.0..=1.0).contains(l)) {
            return Err(Error::Parameter("lambda grid values must lie in [0, 1]".into()));
        }
        if !(self.eps_target > 0.0) || !self.eps_target.is_finite() {
            return Err(Error::Parameter(format!("epsilon must be positive, got {}", self.eps_target)));
        }
        Ok(())
    }

    /// Standard deviation of the entries of row `j` (0-based).
    fn row_sd(&self, j: usize) -> f64 {
        match self.case_id {
            1 if j + 1 == self.n => 10.0,
            1 | 2 => 1.0,
            _ => ((j + 1) as f64).sqrt(),
        }
    }

    fn noise_sd(&self) -> f64 {
        match self.case_id {
            3 => 20.0,
            4 => 10.0,
            _ => 0.1,
        }
    }
}

/// `0, 0.1, …, 1`.
pub fn default_lambda_grid() -> Vec<f64> {
    (0..=10).map(|j| j as f64 / 10.0).collect()
}

/// Draws `(A, b, x_true)` for one trial; `b = A x_true + e` with Gaussian `e`.
pub fn generate_case(spec: &CaseSpec, trial: usize) -> Result<(DenseMatrix, Vec<f64>, Vec<f64>)> {
    spec.validate()?;
    let mut rng = RngStream::derive(spec.seed_base, &[spec.case_id as u64, trial as u64]);
    let x_true: Vec<f64> = (0..spec.d).map(|_| rng.standard_normal()).collect();
    let mut data = Vec::with_capacity(spec.n * spec.d);
    for j in 0..spec.n {
        let sd = spec.row_sd(j);
        data.extend((0..spec.d).map(|_| sd * rng.standard_normal()));
    }
    let a = DenseMatrix::new(spec.n, spec.d, data)?;
    let mut b = a.matvec(&x_true)?;
    let sd = spec.noise_sd();
    for v in &mut b {
        *v += sd * rng.standard_normal();
    }
    Ok((a, b, x_true))
}

/// Aggregates of one case over its λ grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub case_id: u8,
    pub lambdas: Vec<f64>,
    pub checkpoints: Vec<usize>,
    /// `mean_error_sq[λ][checkpoint]`.
    pub mean_error_sq: Vec<Vec<f64>>,
    /// Censored trials count as the cutoff.
    pub mean_iters_to_eps: Vec<f64>,
    /// Some trial never reached ε.
    pub censored: Vec<bool>,
}

impl SweepResult {
    /// Index of the smallest mean iteration count (first on ties).
    pub fn argmin_lambda(&self) -> Option<usize> {
        (0..self.lambdas.len()).min_by(|&i, &j| self.mean_iters_to_eps[i].total_cmp(&self.mean_iters_to_eps[j]))
    }
}

struct TrialOutcome {
    errors: Vec<Vec<f64>>,
    hits: Vec<Option<usize>>,
}

fn run_trial(spec: &CaseSpec, trial: usize, checkpoints: &[usize]) -> Result<TrialOutcome> {
    let (a, b, _) = generate_case(spec, trial)?;
    let prob = Problem::from_least_squares(&a, &b)?;
    let stats = prob.stats()?;
    let eps = spec.eps_target;
    let mut errors = Vec::with_capacity(spec.lambda_grid.len());
    let mut hits = Vec::with_capacity(spec.lambda_grid.len());
    for (li, &lambda) in spec.lambda_grid.iter().enumerate() {
        let scheme = WeightScheme::PartiallyBiasedL(lambda);
        let table = WeightTable::build(scheme, &stats.lipschitz, prob.source_probs(), None)?;
        let gamma = match spec.step_rule {
            StepRule::PartialBiasBound => step_size_partial_bias(
                stats.mu,
                eps,
                lambda,
                stats.l_bar,
                stats.sup_l,
                stats.inf_l,
                stats.sigma_sq,
            )?,
            StepRule::ExactWeighted => {
                let ec = effective_constants(&table, &stats.lipschitz, &stats.grad_norms_sq, prob.source_probs())?;
                step_size_sup_l(stats.mu, eps, ec.sup_l_w, ec.sigma_sq_w)?
            }
        };
        let sampler = AliasTable::build(table.sampling_probs())?;
        let mut rng = RngStream::derive(
            spec.seed_base,
            &[spec.case_id as u64, trial as u64, li as u64],
        );
        let mut x = vec![0.0; spec.d];
        let mut curve = Vec::with_capacity(checkpoints.len());
        curve.push(dist_sq(&x, &stats.x_star));
        let mut hit = (curve[0] <= eps).then_some(0);
        let mut next = 1;
        drive(&prob, &table, gamma, &sampler, &mut rng, &mut x, spec.max_iters, |k, x| {
            let e = dist_sq(x, &stats.x_star);
            if hit.is_none() && e <= eps {
                hit = Some(k);
            }
            if next < checkpoints.len() && checkpoints[next] == k {
                curve.push(e);
                next += 1;
            }
            true
        });
        errors.push(curve);
        hits.push(hit);
    }
    Ok(TrialOutcome { errors, hits })
}

/// Runs every trial for every λ up to `max_iters`, recording the first
/// iteration with `‖x_k − x⋆‖² ≤ ε`. Deterministic given the spec.
pub fn run_sweep(spec: &CaseSpec) -> Result<SweepResult> {
    spec.validate()?;
    let ticks: Vec<usize> = if spec.curve_every > 0 {
        (1..=spec.max_iters / spec.curve_every).map(|j| j * spec.curve_every).collect()
    } else {
        Vec::new()
    };
    let checkpoints = checkpoint_schedule(spec.max_iters, &ticks);
    let outcomes: Vec<TrialOutcome> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            run_trial(spec, t, &checkpoints).map_err(|e| match e {
                Error::Degenerate(m) => Error::Degenerate(format!("case {} trial {t}: {m}", spec.case_id)),
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    let nl = spec.lambda_grid.len();
    let trials = spec.trials as f64;
    let mut mean_error_sq = vec![vec![0.0; checkpoints.len()]; nl];
    let mut mean_iters = vec![0.0; nl];
    let mut censored = vec![false; nl];
    for out in &outcomes {
        for li in 0..nl {
            for (acc, e) in mean_error_sq[li].iter_mut().zip(&out.errors[li]) {
                *acc += e / trials;
            }
            match out.hits[li] {
                Some(k) => mean_iters[li] += k as f64 / trials,
                None => {
                    mean_iters[li] += spec.max_iters as f64 / trials;
                    censored[li] = true;
                }
            }
        }
    }
    Ok(SweepResult {
        case_id: spec.case_id,
        lambdas: spec.lambda_grid.clone(),
        checkpoints,
        mean_error_sq,
        mean_iters_to_eps: mean_iters,
        censored,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TightnessReport {
    pub n_big: usize,
    pub trials: usize,
    /// Mean number of draws until the stiff component is first sampled.
    pub uniform_mean: f64,
    pub biased_mean: f64,
    /// Probability of the stiff component under fully biased sampling.
    pub biased_prob: f64,
}

/// On the `N+1`-component tightness instance, counts draws until the stiff
/// component (index 0, `L = N`) first appears, under uniform and fully biased
/// sampling.
pub fn tightness_demo(n_big: usize, trials: usize, seed: u64) -> Result<TightnessReport> {
    let prob = Problem::tightness_instance(n_big, 1.0)?;
    let l = prob.lipschitz();
    let p = prob.source_probs();
    let first_hit = |table: &WeightTable, tag: u64| -> Result<f64> {
        let sampler = AliasTable::build(table.sampling_probs())?;
        let mut rng = RngStream::derive(seed, &[tag]);
        let mut total = 0u64;
        for _ in 0..trials {
            let mut k = 1u64;
            while sampler.draw(&mut rng) != 0 {
                k += 1;
            }
            total += k;
        }
        Ok(total as f64 / trials.max(1) as f64)
    };
    let uniform = WeightTable::build(WeightScheme::Uniform, &l, p, None)?;
    let biased = WeightTable::build(WeightScheme::FullyBiasedL, &l, p, None)?;
    Ok(TightnessReport {
        n_big,
        trials,
        uniform_mean: first_hit(&uniform, 0)?,
        biased_mean: first_hit(&biased, 1)?,
        biased_prob: biased.sampling_probs()[0],
    })
}

pub const CURVES_HEADER: [&str; 4] = ["case", "lambda", "iteration", "mean_error_sq"];
pub const ITERS_HEADER: [&str; 4] = ["case", "lambda", "mean_iters_to_eps", "censored"];

/// Paths written by [`emit_results`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmittedFiles {
    pub curves: PathBuf,
    pub iters: PathBuf,
    pub plot: Option<PathBuf>,
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other:?}", path.display())),
    }
}

pub fn write_curves<W: Write>(results: &[SweepResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CURVES_HEADER)?;
    for r in results {
        for (li, lambda) in r.lambdas.iter().enumerate() {
            for (ci, k) in r.checkpoints.iter().enumerate() {
                w.write_record([
                    r.case_id.to_string(),
                    lambda.to_string(),
                    k.to_string(),
                    fmt_real(r.mean_error_sq[li][ci]),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_iters<W: Write>(results: &[SweepResult], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ITERS_HEADER)?;
    for r in results {
        for (li, lambda) in r.lambdas.iter().enumerate() {
            w.write_record([
                r.case_id.to_string(),
                lambda.to_string(),
                fmt_real(r.mean_iters_to_eps[li]),
                u8::from(r.censored[li]).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Gnuplot script drawing every curve against a logarithmic error axis.
pub fn plot_script(results: &[SweepResult]) -> String {
    let mut s = String::from(
        "set datafile separator ','\nset logscale y\nset xlabel 'iteration'\nset ylabel 'mean squared error'\nset key outside\n",
    );
    let mut series = Vec::new();
    for r in results {
        for lambda in &r.lambdas {
            series.push(format!(
                "'curves.csv' using (($1=={} && abs($2-{lambda})<1e-12) ? $3 : 1/0):4 with lines title 'case {} lambda {lambda}'",
                r.case_id, r.case_id
            ));
        }
    }
    if !series.is_empty() {
        s.push_str("plot ");
        s.push_str(&series.join(", \\\n     "));
        s.push('\n');
    }
    s
}

/// Writes `curves.csv`, `iters.csv` and optionally `plot.gp` into `dir`.
pub fn emit_results(results: &[SweepResult], dir: &Path, with_plot: bool) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let curves = dir.join("curves.csv");
    let iters = dir.join("iters.csv");
    let open = |p: &Path| fs::File::create(p).map_err(|e| Error::io(p, e));
    write_curves(results, open(&curves)?).map_err(|e| csv_err(&curves, e))?;
    write_iters(results, open(&iters)?).map_err(|e| csv_err(&iters, e))?;
    let plot = if with_plot {
        let p = dir.join("plot.gp");
        fs::write(&p, plot_script(results)).map_err(|e| Error::io(&p, e))?;
        Some(p)
    } else {
        None
    };
    Ok(EmittedFiles { curves, iters, plot })
}

fn parse<T: std::str::FromStr>(field: &str, what: &str) -> Result<T> {
    field
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad {what}: {field:?}")))
}

fn read_rows<R: Read>(input: R, header: [&str; 4]) -> Result<Vec<csv::StringRecord>> {
    let mut r = csv::Reader::from_reader(input);
    let got = r.headers().map_err(|e| Error::Format(e.to_string()))?.clone();
    if got.iter().ne(header.iter().copied()) {
        return Err(Error::Format(format!("unexpected header {got:?}")));
    }
    r.records()
        .map(|rec| rec.map_err(|e| Error::Format(e.to_string())))
        .collect()
}

fn slot<'a>(out: &'a mut Vec<SweepResult>, case_id: u8) -> &'a mut SweepResult {
    if out.last().map(|r| r.case_id) != Some(case_id) {
        out.push(SweepResult {
            case_id,
            lambdas: Vec::new(),
            checkpoints: Vec::new(),
            mean_error_sq: Vec::new(),
            mean_iters_to_eps: Vec::new(),
            censored: Vec::new(),
        });
    }
    out.last_mut().expect("just pushed")
}

/// Rebuilds the sweep results from the two CSVs written by [`emit_results`].
pub fn read_results<R1: Read, R2: Read>(curves: R1, iters: R2) -> Result<Vec<SweepResult>> {
    let mut out: Vec<SweepResult> = Vec::new();
    for rec in read_rows(iters, ITERS_HEADER)? {
        let case_id: u8 = parse(&rec[0], "case")?;
        let r = slot(&mut out, case_id);
        r.lambdas.push(parse(&rec[1], "lambda")?);
        r.mean_iters_to_eps.push(parse(&rec[2], "mean iterations")?);
        r.censored.push(match rec[3].trim() {
            "0" => false,
            "1" => true,
            other => return Err(Error::Format(format!("bad censored flag {other:?}"))),
        });
    }
    let mut cursor = 0usize;
    let mut current: Option<(u8, u64)> = None;
    for rec in read_rows(curves, CURVES_HEADER)? {
        let case_id: u8 = parse(&rec[0], "case")?;
        let lambda: f64 = parse(&rec[1], "lambda")?;
        let k: usize = parse(&rec[2], "iteration")?;
        let e: f64 = parse(&rec[3], "error")?;
        while out.get(cursor).is_some_and(|r| r.case_id != case_id) {
            cursor += 1;
        }
        let r = out
            .get_mut(cursor)
            .ok_or_else(|| Error::Format(format!("curve rows for unknown case {case_id}")))?;
        let li = r
            .lambdas
            .iter()
            .position(|&l| l.to_bits() == lambda.to_bits())
            .ok_or_else(|| Error::Format(format!("curve rows for unknown lambda {lambda}")))?;
        if current != Some((case_id, lambda.to_bits())) {
            current = Some((case_id, lambda.to_bits()));
            if r.mean_error_sq.len() != li {
                return Err(Error::Format("curve rows out of order".into()));
            }
            r.mean_error_sq.push(Vec::new());
        }
        if li == 0 {
            r.checkpoints.push(k);
        } else if r.checkpoints.get(r.mean_error_sq[li].len()) != Some(&k) {
            return Err(Error::Format(format!("lambda {lambda} has mismatched checkpoints")));
        }
        r.mean_error_sq[li].push(e);
    }
    for r in &mut out {
        // Cases with no logged curves still carry an empty row per λ.
        r.mean_error_sq.resize(r.lambdas.len(), Vec::new());
    }
    Ok(out)
}
