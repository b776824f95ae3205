//! Randomized Kaczmarz: weighted-row, uniform-row and the half-biased hybrid,
//! with their expected-error bounds.
//!
//! With `f_i = (n/2)(⟨a_i, x⟩ − b_i)²` the weighted-row update with relaxation
//! `c` is exactly fully biased SGD with `γ = c/‖A‖²_F`, and the hybrid update is
//! λ = ½ SGD with the same `γ`. Uniform-row Kaczmarz is fully biased SGD on the
//! row-normalized system `D⁻¹A x = D⁻¹b`, and so converges to the weighted
//! least-squares solution.

use crate::error::{Error, Result};
use crate::numerics::{axpy, dot_unchecked, norm_sq, DenseMatrix, RngStream};
use crate::problem::{error_sq, row_normalized, weighted_solution, Problem};
use crate::sampling::AliasTable;
use crate::sgd::{RunConfig, RunRecord};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KaczmarzVariant {
    /// Rows drawn with probability `‖a_i‖²/‖A‖²_F`.
    Weighted(f64),
    /// Rows drawn uniformly.
    Uniform(f64),
    /// Rows drawn with probability `½‖a_i‖²/‖A‖²_F + 1/(2n)`.
    Hybrid(f64),
}

impl KaczmarzVariant {
    pub fn c(&self) -> f64 {
        match *self {
            KaczmarzVariant::Weighted(c) | KaczmarzVariant::Uniform(c) | KaczmarzVariant::Hybrid(c) => c,
        }
    }

    /// Exclusive upper end of the relaxation range where the bound holds.
    pub fn c_limit(&self) -> f64 {
        match self {
            KaczmarzVariant::Hybrid(_) => 0.5,
            _ => 1.0,
        }
    }

    pub fn bound_applies(&self) -> bool {
        let c = self.c();
        c > 0.0 && c < self.c_limit()
    }

    pub fn default_reference(&self) -> Reference {
        match self {
            KaczmarzVariant::Uniform(_) => Reference::WeightedLeastSquares,
            _ => Reference::LeastSquares,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            KaczmarzVariant::Weighted(_) => "weighted",
            KaczmarzVariant::Uniform(_) => "uniform",
            KaczmarzVariant::Hybrid(_) => "hybrid",
        }
    }
}

/// Solution the error is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reference {
    /// `argmin ‖Ax − b‖`.
    LeastSquares,
    /// `argmin ‖D⁻¹(Ax − b)‖` with `D = diag(‖a_i‖)`.
    WeightedLeastSquares,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KaczmarzConfig {
    pub variant: KaczmarzVariant,
    pub max_iters: usize,
    pub seed: u64,
    /// `None` picks the variant's natural limit.
    pub reference: Option<Reference>,
    pub x0: Option<Vec<f64>>,
    pub extra_ticks: Vec<usize>,
}

impl KaczmarzConfig {
    pub fn new(variant: KaczmarzVariant, max_iters: usize, seed: u64) -> Self {
        KaczmarzConfig {
            variant,
            max_iters,
            seed,
            reference: None,
            x0: None,
            extra_ticks: Vec::new(),
        }
    }
}

/// `x + c(b_i − ⟨a, x⟩)/‖a‖² · a`.
pub fn kaczmarz_step(x: &[f64], a: &[f64], b_i: f64, c: f64) -> Result<Vec<f64>> {
    if a.len() != x.len() {
        return Err(Error::Dimension(format!("row has {} entries, iterate has {}", a.len(), x.len())));
    }
    let nrm = norm_sq(a);
    if nrm == 0.0 {
        return Err(Error::ZeroRow(None));
    }
    let mut out = x.to_vec();
    axpy(c * (b_i - dot_unchecked(a, x)) / nrm, a, &mut out);
    Ok(out)
}

/// `x + 2c(b_i − ⟨a, x⟩)/(‖A‖²_F/n + ‖a‖²) · a`. `frob_sq` must be positive.
pub fn hybrid_step(x: &[f64], a: &[f64], b_i: f64, c: f64, frob_sq: f64, n: usize) -> Vec<f64> {
    let denom = frob_sq / n as f64 + norm_sq(a);
    let mut out = x.to_vec();
    axpy(2.0 * c * (b_i - dot_unchecked(a, x)) / denom, a, &mut out);
    out
}

/// SGD step size reproducing the weighted-row and hybrid updates: `c/‖A‖²_F`.
pub fn equivalence_gamma(c: f64, frob_sq: f64) -> f64 {
    c / frob_sq
}

/// SGD step size reproducing uniform-row Kaczmarz on the row-normalized
/// problem (whose Frobenius norm is `n`): `c/n`.
pub fn uniform_equivalence_gamma(c: f64, n: usize) -> f64 {
    c / n as f64
}

/// Row-selection distribution of a variant.
pub fn selection_probs(variant: KaczmarzVariant, a: &DenseMatrix) -> Result<Vec<f64>> {
    let norms = a.row_norms_sq();
    let n = norms.len() as f64;
    let frob: f64 = norms.iter().sum();
    if !(frob > 0.0) {
        return Err(Error::Degenerate("matrix is identically zero".into()));
    }
    if !matches!(variant, KaczmarzVariant::Hybrid(_)) {
        if let Some(i) = norms.iter().position(|&v| v == 0.0) {
            return Err(Error::ZeroRow(Some(i)));
        }
    }
    Ok(match variant {
        KaczmarzVariant::Weighted(_) => norms.iter().map(|v| v / frob).collect(),
        KaczmarzVariant::Uniform(_) => vec![1.0 / n; norms.len()],
        KaczmarzVariant::Hybrid(_) => norms.iter().map(|v| 0.5 * v / frob + 0.5 / n).collect(),
    })
}

/// System constants entering the bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct KaczmarzStats {
    pub n: usize,
    pub frob_sq: f64,
    /// `min_i ‖a_i‖²`.
    pub min_row_norm_sq: f64,
    /// `λ_min(AᵀA)` over the nonzero spectrum.
    pub mu: f64,
    /// `‖A‖²_F ‖(AᵀA)⁻¹‖`.
    pub cond_k: f64,
    /// `n Σ ‖a_i‖² e_i²` with `e = Ax⋆ − b`.
    pub sigma_sq: f64,
    pub x_lsq: Vec<f64>,
    /// `K(D⁻¹A)`; absent when some row is zero.
    pub cond_k_normalized: Option<f64>,
    pub x_weighted: Option<Vec<f64>>,
    /// `‖D⁻¹(Ax⋆_w − b)‖²`.
    pub e_w_sq: Option<f64>,
}

impl KaczmarzStats {
    pub fn compute(a: &DenseMatrix, b: &[f64]) -> Result<Self> {
        let stats = Problem::from_least_squares(a, b)?.stats()?;
        let norms = a.row_norms_sq();
        let normalized = match row_normalized(a, b) {
            Ok((na, nb)) => {
                let ns = Problem::from_least_squares(&na, &nb)?.stats()?;
                let r = na.matvec(&ns.x_star)?;
                let e_w: f64 = r.iter().zip(&nb).map(|(u, v)| (u - v) * (u - v)).sum();
                Some((ns.cond_k, ns.x_star, e_w))
            }
            Err(Error::ZeroRow(_)) => None,
            Err(e) => return Err(e),
        };
        let (cond_k_normalized, x_weighted, e_w_sq) = match normalized {
            Some((k, x, e)) => (Some(k), Some(x), Some(e)),
            None => (None, None, None),
        };
        Ok(KaczmarzStats {
            n: a.rows(),
            frob_sq: a.frobenius_sq(),
            min_row_norm_sq: norms.iter().copied().fold(f64::INFINITY, f64::min),
            mu: stats.mu,
            cond_k: stats.cond_k,
            sigma_sq: stats.sigma_sq,
            x_lsq: stats.x_star,
            cond_k_normalized,
            x_weighted,
            e_w_sq,
        })
    }

    pub fn reference(&self, which: Reference) -> Result<&[f64]> {
        match which {
            Reference::LeastSquares => Ok(&self.x_lsq),
            Reference::WeightedLeastSquares => self
                .x_weighted
                .as_deref()
                .ok_or_else(|| Error::ZeroRow(None)),
        }
    }
}

/// `E‖x_k − x_ref‖² ≤ rate^k ε₀ + horizon`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KaczmarzBound {
    pub variant: KaczmarzVariant,
    pub rate: f64,
    pub horizon: f64,
}

impl KaczmarzBound {
    pub fn eval(&self, k: usize, eps0: f64) -> f64 {
        self.rate.max(0.0).powf(k as f64) * eps0 + self.horizon
    }
}

/// Bound for the variant:
///
/// * weighted: `1 − 2c(1−c)/K(A)` and `c/(1−c) · K(A) · σ²/(n‖A‖²_F a²_min)`;
/// * uniform: the same with `K(D⁻¹A)` and `‖e_w‖²/n`;
/// * hybrid: `1 − 2c(1−2c)/K(A)` and `2cK(A)σ²/((1−2c)‖A‖⁴_F)`.
pub fn kaczmarz_bound(variant: KaczmarzVariant, stats: &KaczmarzStats) -> Result<KaczmarzBound> {
    let c = variant.c();
    if !variant.bound_applies() {
        return Err(Error::BoundUndefined(format!(
            "{} Kaczmarz needs 0 < c < {}, got {c}",
            variant.name(),
            variant.c_limit()
        )));
    }
    let (rate, horizon) = match variant {
        KaczmarzVariant::Weighted(_) => {
            let k = stats.cond_k;
            let horizon = if stats.sigma_sq == 0.0 {
                0.0
            } else if stats.min_row_norm_sq > 0.0 {
                c / (1.0 - c) * k * stats.sigma_sq
                    / (stats.n as f64 * stats.frob_sq * stats.min_row_norm_sq)
            } else {
                f64::INFINITY
            };
            (1.0 - 2.0 * c * (1.0 - c) / k, horizon)
        }
        KaczmarzVariant::Uniform(_) => {
            let (k, e_w) = match (stats.cond_k_normalized, stats.e_w_sq) {
                (Some(k), Some(e)) => (k, e),
                _ => return Err(Error::ZeroRow(None)),
            };
            (
                1.0 - 2.0 * c * (1.0 - c) / k,
                c / (1.0 - c) * k * e_w / stats.n as f64,
            )
        }
        KaczmarzVariant::Hybrid(_) => {
            let k = stats.cond_k;
            (
                1.0 - 2.0 * c * (1.0 - 2.0 * c) / k,
                2.0 * c * k * stats.sigma_sq / ((1.0 - 2.0 * c) * stats.frob_sq * stats.frob_sq),
            )
        }
    };
    Ok(KaczmarzBound {
        variant,
        rate,
        horizon,
    })
}

/// Runs the variant, logging `‖x_k − x_ref‖²` at iteration 0, powers of two,
/// the extra ticks and the final iterate.
pub fn run_kaczmarz(a: &DenseMatrix, b: &[f64], cfg: &KaczmarzConfig) -> Result<RunRecord> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows but rhs has {} entries",
            a.rows(),
            b.len()
        )));
    }
    let variant = cfg.variant;
    let c = variant.c();
    if !c.is_finite() {
        return Err(Error::Parameter(format!("relaxation must be finite, got {c}")));
    }
    let probs = selection_probs(variant, a)?;
    let sampler = AliasTable::build(&probs)?;
    let reference = cfg.reference.unwrap_or(variant.default_reference());
    let x_ref = match reference {
        Reference::LeastSquares => Problem::from_least_squares(a, b)?.stats()?.x_star,
        Reference::WeightedLeastSquares => weighted_solution(a, b)?,
    };
    let mut warnings = Vec::new();
    if !variant.bound_applies() {
        warnings.push(format!(
            "c = {c} is outside (0, {}); the {} Kaczmarz bound does not apply",
            variant.c_limit(),
            variant.name()
        ));
    }
    let n = a.rows();
    let frob = a.frobenius_sq();
    // Per-row multiplier of the residual.
    let coef: Vec<f64> = a
        .row_norms_sq()
        .iter()
        .map(|&r| match variant {
            KaczmarzVariant::Hybrid(_) => 2.0 * c / (frob / n as f64 + r),
            _ => c / r,
        })
        .collect();
    let dim = a.cols();
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
    let mut ticks = cfg.extra_ticks.clone();
    ticks.sort_unstable();
    let mut rng = RngStream::new(cfg.seed);
    let mut errors_sq = vec![(0, error_sq(&x, &x_ref))];
    for k in 1..=cfg.max_iters {
        let i = sampler.draw(&mut rng);
        let row = a.row(i);
        let r = b[i] - dot_unchecked(row, &x);
        axpy(coef[i] * r, row, &mut x);
        if k.is_power_of_two() || ticks.binary_search(&k).is_ok() {
            errors_sq.push((k, error_sq(&x, &x_ref)));
        }
    }
    if errors_sq.last().map(|e| e.0) != Some(cfg.max_iters) {
        errors_sq.push((cfg.max_iters, error_sq(&x, &x_ref)));
    }
    let gamma = match variant {
        KaczmarzVariant::Uniform(_) => uniform_equivalence_gamma(c, n),
        _ => equivalence_gamma(c, frob),
    };
    Ok(RunRecord {
        errors_sq,
        iterations_run: cfg.max_iters,
        hit_tolerance_at: None,
        gamma,
        final_x: x,
        warnings,
        config: RunConfig::Kaczmarz(cfg.clone()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::dot;

    fn gaussian_matrix(rng: &mut RngStream, n: usize, d: usize) -> DenseMatrix {
        DenseMatrix::new(n, d, (0..n * d).map(|_| rng.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn unit_relaxation_projects() {
        let mut rng = RngStream::new(1);
        for _ in 0..50 {
            let a: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
            let x: Vec<f64> = (0..6).map(|_| rng.standard_normal()).collect();
            let bi = rng.standard_normal();
            let y = kaczmarz_step(&x, &a, bi, 1.0).unwrap();
            assert!((dot(&a, &y).unwrap() - bi).abs() < 1e-12 * (1.0 + bi.abs()));
        }
    }

    #[test]
    fn trivial_steps() {
        let x = [1.0, -2.0, 0.5];
        let a = [0.3, 1.0, 2.0];
        assert_eq!(kaczmarz_step(&x, &a, 4.0, 0.0).unwrap(), x.to_vec());
        let on_plane = dot(&a, &x).unwrap();
        assert_eq!(kaczmarz_step(&x, &a, on_plane, 0.7).unwrap(), x.to_vec());
        assert_eq!(hybrid_step(&x, &a, on_plane, 0.3, 10.0, 5), x.to_vec());
        assert!(matches!(kaczmarz_step(&x, &[0.0; 3], 1.0, 1.0), Err(Error::ZeroRow(None))));
        // The hybrid denominator stays positive on a zero row.
        assert_eq!(hybrid_step(&x, &[0.0; 3], 1.0, 0.3, 10.0, 5), x.to_vec());
    }

    #[test]
    fn hybrid_matches_weighted_on_equal_norms() {
        // All rows of squared norm ρ²: ‖A‖²_F/n = ρ², so 2c/(2ρ²) = c/ρ².
        let rho_sq = 2.0;
        let a = [1.0, 1.0];
        let x = [0.4, -1.3];
        let c = 0.3;
        let h = hybrid_step(&x, &a, 0.9, c, 4.0 * rho_sq, 4);
        let k = kaczmarz_step(&x, &a, 0.9, c).unwrap();
        for (u, v) in h.iter().zip(&k) {
            assert!((u - v).abs() < 1e-15);
        }
    }

    #[test]
    fn equivalence_gamma_example() {
        assert_eq!(equivalence_gamma(1.0, 10.0), 0.1);
    }

    #[test]
    fn selection_probabilities() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        assert_eq!(selection_probs(KaczmarzVariant::Weighted(1.0), &a).unwrap(), vec![0.1, 0.9]);
        assert_eq!(selection_probs(KaczmarzVariant::Uniform(1.0), &a).unwrap(), vec![0.5, 0.5]);
        let h = selection_probs(KaczmarzVariant::Hybrid(0.2), &a).unwrap();
        assert!((h[0] - 0.3).abs() < 1e-15 && (h[1] - 0.7).abs() < 1e-15);
        let z = DenseMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(matches!(
            selection_probs(KaczmarzVariant::Weighted(1.0), &z),
            Err(Error::ZeroRow(Some(1)))
        ));
        assert!(selection_probs(KaczmarzVariant::Hybrid(0.2), &z).is_ok());
    }

    #[test]
    fn bound_rates_and_tradeoff() {
        let mut rng = RngStream::new(3);
        let a = gaussian_matrix(&mut rng, 40, 4);
        let b: Vec<f64> = (0..40).map(|_| rng.standard_normal()).collect();
        let s = KaczmarzStats::compute(&a, &b).unwrap();
        let half = kaczmarz_bound(KaczmarzVariant::Weighted(0.5), &s).unwrap();
        assert!((half.rate - (1.0 - 1.0 / (2.0 * s.cond_k))).abs() < 1e-15);
        let grid: Vec<f64> = (1..50).map(|j| j as f64 / 100.0).collect();
        let bounds: Vec<KaczmarzBound> = grid
            .iter()
            .map(|&c| kaczmarz_bound(KaczmarzVariant::Weighted(c), &s).unwrap())
            .collect();
        for w in bounds.windows(2) {
            assert!(w[1].rate < w[0].rate && w[1].horizon > w[0].horizon);
        }
        assert!(kaczmarz_bound(KaczmarzVariant::Hybrid(0.5), &s).is_err());
        assert!(kaczmarz_bound(KaczmarzVariant::Uniform(1.0), &s).is_err());
        assert!(kaczmarz_bound(KaczmarzVariant::Weighted(0.0), &s).is_err());
    }

    #[test]
    fn consistent_system_has_zero_horizon() {
        let mut rng = RngStream::new(4);
        let a = gaussian_matrix(&mut rng, 30, 3);
        let b = a.matvec(&[1.0, 2.0, 3.0]).unwrap();
        let s = KaczmarzStats::compute(&a, &b).unwrap();
        for v in [
            KaczmarzVariant::Weighted(0.5),
            KaczmarzVariant::Uniform(0.5),
            KaczmarzVariant::Hybrid(0.25),
        ] {
            let h = kaczmarz_bound(v, &s).unwrap().horizon;
            assert!(h.abs() < 1e-20, "{v:?}: {h}");
        }
    }

    #[test]
    fn consistent_weighted_run_converges() {
        let mut rng = RngStream::new(5);
        let a = gaussian_matrix(&mut rng, 100, 5);
        let x_true: Vec<f64> = (0..5).map(|_| rng.standard_normal()).collect();
        let b = a.matvec(&x_true).unwrap();
        let s = KaczmarzStats::compute(&a, &b).unwrap();
        let eps0 = norm_sq(&s.x_lsq);
        let iters = (4.0 * s.cond_k * (eps0 / 1e-20).ln()).ceil() as usize;
        let rec = run_kaczmarz(&a, &b, &KaczmarzConfig::new(KaczmarzVariant::Weighted(1.0), iters, 9)).unwrap();
        assert!(rec.final_error_sq() < 1e-20, "{}", rec.final_error_sq());
        // c = 1 lies outside the bound's range.
        assert_eq!(rec.warnings.len(), 1);
    }

    #[test]
    fn run_is_reproducible_and_warns_out_of_range() {
        let mut rng = RngStream::new(6);
        let a = gaussian_matrix(&mut rng, 20, 3);
        let b: Vec<f64> = (0..20).map(|_| rng.standard_normal()).collect();
        let cfg = KaczmarzConfig::new(KaczmarzVariant::Hybrid(0.7), 500, 1);
        let r1 = run_kaczmarz(&a, &b, &cfg).unwrap();
        let r2 = run_kaczmarz(&a, &b, &cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.warnings.len(), 1);
    }

    #[test]
    fn consistent_fixed_point_solves_system() {
        let mut rng = RngStream::new(7);
        let a = gaussian_matrix(&mut rng, 12, 3);
        let x = vec![0.5, -1.0, 2.0];
        let b = a.matvec(&x).unwrap();
        for i in 0..12 {
            assert_eq!(kaczmarz_step(&x, a.row(i), b[i], 0.8).unwrap(), x);
        }
    }
}
