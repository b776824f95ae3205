//! Weighted SGD with fixed step size, its step-size rules, iteration counts
//! and the expected-error envelope.
//!
//! The update is `x ← x − (γ / w(i)) ∇f_i(x)` with `i` drawn from the
//! reweighted distribution `p^(w)`. For the bound `E‖x_k − x⋆‖² ≤ ρ^k ε₀ + h`
//! to apply, `γ < 1 / sup_i L_i/w(i)`; the contraction factor is
//! `ρ = 1 − 2γμ(1 − γ sup L_(w))` and the horizon is `h = γσ²_(w) / (μ(1 − γ sup L_(w)))`.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::numerics::{axpy, norm_sq, RngStream};
use crate::problem::{error_sq, Problem};
use crate::sampling::{AliasTable, IndexSampler, RejectionSampler};
use crate::weighting::{effective_constants, EffectiveConstants, WeightScheme, WeightTable};

/// How the step size is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    Fixed(f64),
    /// Derive `γ` from a target accuracy `ε` using the scheme's step-size rule.
    Target(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SamplerKind {
    #[default]
    Alias,
    /// Rejection sampling from the source distribution with cap `max w(i)`.
    Rejection,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SgdConfig {
    pub scheme: WeightScheme,
    pub step: StepSize,
    pub max_iters: usize,
    /// Stop once `‖∇G(x)‖₂ ≤ grad_tol`; zero disables the check.
    pub grad_tol: f64,
    /// Iterations between full-gradient checks; `None` means once per `n` steps.
    pub grad_check_interval: Option<usize>,
    pub seed: u64,
    pub x0: Option<Vec<f64>>,
    /// `G_i` values for the G-based schemes.
    pub g_values: Option<Vec<f64>>,
    /// Extra logged iterations besides powers of two.
    pub extra_ticks: Vec<usize>,
    pub sampler: SamplerKind,
}

impl SgdConfig {
    pub fn new(scheme: WeightScheme, step: StepSize, max_iters: usize, seed: u64) -> Self {
        SgdConfig {
            scheme,
            step,
            max_iters,
            grad_tol: 0.0,
            grad_check_interval: None,
            seed,
            x0: None,
            g_values: None,
            extra_ticks: Vec::new(),
            sampler: SamplerKind::Alias,
        }
    }
}

/// Error trace of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// `(iteration, ‖x_k − x_ref‖²)`, iterations strictly increasing.
    pub errors_sq: Vec<(usize, f64)>,
    pub iterations_run: usize,
    pub hit_tolerance_at: Option<usize>,
    pub gamma: f64,
    pub final_x: Vec<f64>,
    pub warnings: Vec<String>,
    pub config: RunConfig,
}

/// What produced a [`RunRecord`], enough to replay it.
#[derive(Debug, Clone, PartialEq)]
pub enum RunConfig {
    Sgd(SgdConfig),
    Kaczmarz(crate::kaczmarz::KaczmarzConfig),
}

impl RunRecord {
    pub fn final_error_sq(&self) -> f64 {
        self.errors_sq.last().map_or(f64::NAN, |e| e.1)
    }

    /// Writes `iteration,error_sq` CSV with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,error_sq")?;
        for (k, e) in &self.errors_sq {
            writeln!(out, "{k},{}", fmt_real(*e))?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Vec<(usize, f64)>> {
        let mut rows = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line.map_err(|e| Error::Format(e.to_string()))?;
            if lineno == 0 {
                if line.trim() != "iteration,error_sq" {
                    return Err(Error::Format(format!("unexpected header {line:?}")));
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let (k, e) = line
                .split_once(',')
                .ok_or_else(|| Error::Format(format!("line {}: missing comma", lineno + 1)))?;
            let k = k.trim().parse().map_err(|_| Error::Format(format!("bad iteration {k:?}")))?;
            let e = e.trim().parse().map_err(|_| Error::Format(format!("bad error {e:?}")))?;
            rows.push((k, e));
        }
        Ok(rows)
    }
}

/// Scientific notation with 17 significant digits (round-trips every `f64`).
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x − γ · inv_w · ∇f_i(x)`.
pub fn sgd_step(x: &[f64], i: usize, inv_w: f64, gamma: f64, prob: &Problem) -> Result<Vec<f64>> {
    let g = prob.gradient(i, x)?;
    let mut out = x.to_vec();
    axpy(-gamma * inv_w, &g, &mut out);
    Ok(out)
}

/// Runs weighted SGD steps in place, calling `observe(k, x_k)` after step `k`
/// (1-based). Stops early when `observe` returns `false`; returns the number of
/// steps taken.
pub fn drive<S, F>(
    prob: &Problem,
    table: &WeightTable,
    gamma: f64,
    sampler: &S,
    rng: &mut RngStream,
    x: &mut [f64],
    iters: usize,
    mut observe: F,
) -> usize
where
    S: IndexSampler + ?Sized,
    F: FnMut(usize, &[f64]) -> bool,
{
    let comps = prob.components();
    let step: Vec<f64> = comps
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = table.weight(i);
            if w > 0.0 {
                gamma * c.scale / w
            } else {
                0.0
            }
        })
        .collect();
    for k in 1..=iters {
        let i = sampler.sample(rng);
        let c = &comps[i];
        let r = c.residual(x);
        axpy(-step[i] * r, &c.z, x);
        if !observe(k, x) {
            return k;
        }
    }
    iters
}

/// Problem constants plus the weighted constants for one scheme.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub stats: crate::problem::ProblemStats,
    pub table: WeightTable,
    pub effective: EffectiveConstants,
}

impl Prepared {
    pub fn new(prob: &Problem, scheme: WeightScheme, g: Option<&[f64]>) -> Result<Self> {
        let stats = prob.stats()?;
        let table = WeightTable::build(scheme, &stats.lipschitz, prob.source_probs(), g)?;
        let effective =
            effective_constants(&table, &stats.lipschitz, &stats.grad_norms_sq, prob.source_probs())?;
        Ok(Prepared {
            stats,
            table,
            effective,
        })
    }

    /// Step size for target accuracy `eps`: the partially biased rule for
    /// `w = λ + (1 − λ)L_i/L̄`, otherwise the basic rule evaluated with the
    /// scheme's effective constants.
    pub fn step_for_target(&self, eps: f64) -> Result<f64> {
        let s = &self.stats;
        match self.table.scheme() {
            WeightScheme::PartiallyBiasedL(lambda) => {
                step_size_partial_bias(s.mu, eps, lambda, s.l_bar, s.sup_l, s.inf_l, s.sigma_sq)
            }
            _ => step_size_sup_l(s.mu, eps, self.effective.sup_l_w, self.effective.sigma_sq_w),
        }
    }
}

/// Runs weighted SGD on `prob`, logging `‖x_k − x⋆‖²` at powers of two, the
/// configured extra ticks, iteration 0 and the final iterate.
pub fn run(prob: &Problem, cfg: &SgdConfig) -> Result<RunRecord> {
    let prep = Prepared::new(prob, cfg.scheme, cfg.g_values.as_deref())?;
    let gamma = match cfg.step {
        StepSize::Fixed(g) => {
            if !(g > 0.0) || !g.is_finite() {
                return Err(Error::Parameter(format!("step size must be positive, got {g}")));
            }
            g
        }
        StepSize::Target(eps) => prep.step_for_target(eps)?,
    };
    let mut warnings = Vec::new();
    if gamma * prep.effective.sup_l_w >= 1.0 {
        warnings.push(format!(
            "step size {gamma} violates gamma < 1/sup L_(w) = {}; the convergence bound does not apply",
            1.0 / prep.effective.sup_l_w
        ));
    }

    let dim = prob.dim();
    let mut x = match &cfg.x0 {
        Some(x0) if x0.len() != dim => {
            return Err(Error::Dimension(format!(
                "initial point has length {}, expected {dim}",
                x0.len()
            )))
        }
        Some(x0) => x0.clone(),
        None => vec![0.0; dim],
    };
    let x_star = prep.stats.x_star.clone();
    let mut ticks = cfg.extra_ticks.clone();
    ticks.sort_unstable();
    let interval = cfg.grad_check_interval.unwrap_or(prob.len()).max(1);
    let mut errors_sq = vec![(0, error_sq(&x, &x_star))];
    let mut hit = None;
    let mut rng = RngStream::new(cfg.seed);

    let observe = |k: usize, x: &[f64]| -> bool {
        if k.is_power_of_two() || ticks.binary_search(&k).is_ok() {
            errors_sq.push((k, error_sq(x, &x_star)));
        }
        if cfg.grad_tol > 0.0 && k % interval == 0 {
            let g = prob.full_gradient(x);
            if norm_sq(&g).sqrt() <= cfg.grad_tol {
                hit = Some(k);
                return false;
            }
        }
        true
    };
    let iterations_run = match cfg.sampler {
        SamplerKind::Alias => {
            let sampler = AliasTable::build(prep.table.sampling_probs())?;
            drive(prob, &prep.table, gamma, &sampler, &mut rng, &mut x, cfg.max_iters, observe)
        }
        SamplerKind::Rejection => {
            let sampler = RejectionSampler::new(
                prob.source_probs(),
                prep.table.weights(),
                prep.table.max_weight(),
            )?;
            drive(prob, &prep.table, gamma, &sampler, &mut rng, &mut x, cfg.max_iters, observe)
        }
    };
    if errors_sq.last().map(|e| e.0) != Some(iterations_run) {
        errors_sq.push((iterations_run, error_sq(&x, &x_star)));
    }
    Ok(RunRecord {
        errors_sq,
        iterations_run,
        hit_tolerance_at: hit,
        gamma,
        final_x: x,
        warnings,
        config: RunConfig::Sgd(cfg.clone()),
    })
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn check_nonnegative(name: &str, v: f64) -> Result<()> {
    if !(v >= 0.0) || !v.is_finite() {
        return Err(Error::Parameter(format!("{name} must be nonnegative, got {v}")));
    }
    Ok(())
}

/// `γ = με / (2εμ sup L + 2σ²)`.
pub fn step_size_sup_l(mu: f64, eps: f64, sup_l: f64, sigma_sq: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    check_positive("epsilon", eps)?;
    check_positive("sup L", sup_l)?;
    check_nonnegative("sigma^2", sigma_sq)?;
    Ok(mu * eps / (2.0 * eps * mu * sup_l + 2.0 * sigma_sq))
}

/// `γ = με / (4(εμL̄ + σ²))`, for the half-biased weights.
pub fn step_size_mean_l(mu: f64, eps: f64, l_bar: f64, sigma_sq: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    check_positive("epsilon", eps)?;
    check_positive("L bar", l_bar)?;
    check_nonnegative("sigma^2", sigma_sq)?;
    Ok(mu * eps / (4.0 * (eps * mu * l_bar + sigma_sq)))
}

/// Bounds on `sup L_(w)` and `σ²_(w)/σ²` for `w(i) = λ + (1 − λ)L_i/L̄`:
/// `min(L̄/(1−λ), sup L/λ)` and `max(1/λ, L̄/((1−λ) inf L))`.
///
/// At `λ ∈ {0, 1}` the branch whose denominator vanishes is dropped. The
/// residual factor is infinite when `inf L = 0` and `λ < 1`.
pub fn partial_bias_factors(lambda: f64, l_bar: f64, sup_l: f64, inf_l: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::Parameter(format!("lambda must lie in [0, 1], got {lambda}")));
    }
    check_positive("L bar", l_bar)?;
    check_positive("sup L", sup_l)?;
    check_nonnegative("inf L", inf_l)?;
    let residual_l = |lam: f64| {
        if inf_l > 0.0 {
            l_bar / ((1.0 - lam) * inf_l)
        } else {
            f64::INFINITY
        }
    };
    Ok(if lambda == 0.0 {
        (l_bar, residual_l(0.0))
    } else if lambda == 1.0 {
        (sup_l, 1.0)
    } else {
        (
            (l_bar / (1.0 - lambda)).min(sup_l / lambda),
            (1.0 / lambda).max(residual_l(lambda)),
        )
    })
}

/// Partially biased step size:
/// `γ = με / (2εμ·min(L̄/(1−λ), sup L/λ) + 2·max(1/λ, L̄/((1−λ) inf L))·σ²)`.
pub fn step_size_partial_bias(
    mu: f64,
    eps: f64,
    lambda: f64,
    l_bar: f64,
    sup_l: f64,
    inf_l: f64,
    sigma_sq: f64,
) -> Result<f64> {
    check_positive("mu", mu)?;
    check_positive("epsilon", eps)?;
    check_nonnegative("sigma^2", sigma_sq)?;
    let (l_factor, s_factor) = partial_bias_factors(lambda, l_bar, sup_l, inf_l)?;
    let residual = if sigma_sq == 0.0 {
        0.0
    } else if s_factor.is_finite() {
        2.0 * s_factor * sigma_sq
    } else {
        return Err(Error::BoundUndefined(format!(
            "lambda = {lambda} with inf L = 0 and sigma^2 > 0"
        )));
    };
    Ok(mu * eps / (2.0 * eps * mu * l_factor + residual))
}

/// Which displayed iteration count to evaluate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IterBound {
    /// `2 log(2ε₀/ε)(sup L/μ + σ²/(μ²ε))`.
    SupL { sup_l: f64, sigma_sq: f64 },
    /// `4 log(2ε₀/ε)(L̄/μ + σ²/(μ²ε))`.
    MeanL { l_bar: f64, sigma_sq: f64 },
    /// Partially biased count, with the factors of [`partial_bias_factors`].
    PartialBias {
        lambda: f64,
        l_bar: f64,
        sup_l: f64,
        inf_l: f64,
        sigma_sq: f64,
    },
    /// `2 log(2ε₀/ε)(E L²/μ² + σ²/(μ²ε))`.
    BachMoulines { l_sq_bar: f64, sigma_sq: f64 },
}

/// Unrounded iteration count; `0` when `ε ≥ 2ε₀`, `∞` when the bound is undefined.
pub fn iter_bound_value(which: IterBound, mu: f64, eps: f64, eps0: f64) -> Result<f64> {
    check_positive("mu", mu)?;
    check_positive("epsilon", eps)?;
    check_nonnegative("eps0", eps0)?;
    if eps >= 2.0 * eps0 {
        return Ok(0.0);
    }
    let log = (2.0 * eps0 / eps).ln();
    let noise = |s: f64| s / (mu * mu * eps);
    Ok(match which {
        IterBound::SupL { sup_l, sigma_sq } => 2.0 * log * (sup_l / mu + noise(sigma_sq)),
        IterBound::MeanL { l_bar, sigma_sq } => 4.0 * log * (l_bar / mu + noise(sigma_sq)),
        IterBound::PartialBias {
            lambda,
            l_bar,
            sup_l,
            inf_l,
            sigma_sq,
        } => {
            let (lf, sf) = partial_bias_factors(lambda, l_bar, sup_l, inf_l)?;
            let residual = if sigma_sq == 0.0 { 0.0 } else { sf * noise(sigma_sq) };
            2.0 * log * (lf / mu + residual)
        }
        IterBound::BachMoulines { l_sq_bar, sigma_sq } => {
            2.0 * log * (l_sq_bar / (mu * mu) + noise(sigma_sq))
        }
    })
}

/// Ceiling of [`iter_bound_value`]; saturates at `u64::MAX` for infinite bounds.
pub fn iter_bound(which: IterBound, mu: f64, eps: f64, eps0: f64) -> Result<u64> {
    let v = iter_bound_value(which, mu, eps, eps0)?;
    Ok(if v.is_finite() { v.ceil() as u64 } else { u64::MAX })
}

/// Expected-error envelope `ρ^k ε₀ + h`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCurve {
    pub gamma: f64,
    pub mu: f64,
    pub sup_l_w: f64,
    pub sigma_sq_w: f64,
    pub eps0: f64,
}

impl BoundCurve {
    pub fn new(gamma: f64, mu: f64, sup_l_w: f64, sigma_sq_w: f64, eps0: f64) -> Result<Self> {
        check_positive("gamma", gamma)?;
        check_positive("mu", mu)?;
        check_positive("sup L_(w)", sup_l_w)?;
        check_nonnegative("sigma^2_(w)", sigma_sq_w)?;
        check_nonnegative("eps0", eps0)?;
        if gamma * sup_l_w >= 1.0 {
            return Err(Error::Parameter(format!(
                "gamma = {gamma} must satisfy gamma < 1/sup L_(w) = {}",
                1.0 / sup_l_w
            )));
        }
        Ok(BoundCurve {
            gamma,
            mu,
            sup_l_w,
            sigma_sq_w,
            eps0,
        })
    }

    /// `1 − 2γμ(1 − γ sup L_(w))`.
    pub fn rate(&self) -> f64 {
        1.0 - 2.0 * self.gamma * self.mu * (1.0 - self.gamma * self.sup_l_w)
    }

    /// `γσ²_(w) / (μ(1 − γ sup L_(w)))`.
    pub fn horizon(&self) -> f64 {
        self.gamma * self.sigma_sq_w / (self.mu * (1.0 - self.gamma * self.sup_l_w))
    }

    pub fn eval(&self, k: usize) -> f64 {
        self.rate().max(0.0).powf(k as f64) * self.eps0 + self.horizon()
    }
}

/// Logged iterations used by [`run`]: `0`, powers of two, `ticks`, and `last`.
pub fn checkpoint_schedule(last: usize, ticks: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = std::iter::once(0)
        .chain((0..usize::BITS).map(|s| 1usize << s).take_while(|&k| k <= last))
        .chain(ticks.iter().copied().filter(|&k| k <= last))
        .chain(std::iter::once(last))
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}
