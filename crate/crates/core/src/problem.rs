//! Finite-sum objectives `G(x) = Σ p_i f_i(x)` over quadratic components.

use crate::error::{Error, Result};
use crate::numerics::{
    axpy, dist_sq, dot, dot_unchecked, extremal_eigs, norm_sq, solve_least_squares, DenseMatrix,
};

/// `f(x) = (α/2)(⟨z, x⟩ − b)²`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticComponent {
    pub z: Vec<f64>,
    pub offset: f64,
    pub scale: f64,
}

impl QuadraticComponent {
    pub fn new(z: Vec<f64>, offset: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::Parameter(format!(
                "component scale must be positive and finite, got {scale}"
            )));
        }
        if z.is_empty() {
            return Err(Error::Dimension("component direction is empty".into()));
        }
        if !offset.is_finite() || z.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("component has non-finite data".into()));
        }
        Ok(QuadraticComponent { z, offset, scale })
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    /// Lipschitz constant of the gradient, `α‖z‖²`.
    pub fn lipschitz(&self) -> f64 {
        self.scale * norm_sq(&self.z)
    }

    /// `⟨z, x⟩ − b`.
    #[inline]
    pub fn residual(&self, x: &[f64]) -> f64 {
        dot_unchecked(&self.z, x) - self.offset
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        0.5 * self.scale * r * r
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let c = self.scale * self.residual(x);
        self.z.iter().map(|zi| c * zi).collect()
    }

    /// `‖∇f(x)‖² = α²r²‖z‖²`.
    pub fn gradient_norm_sq(&self, x: &[f64]) -> f64 {
        let r = self.residual(x);
        self.scale * self.scale * r * r * norm_sq(&self.z)
    }
}

/// Finite sum of quadratic components under a source distribution.
#[derive(Debug, Clone)]
pub struct Problem {
    components: Vec<QuadraticComponent>,
    source_probs: Vec<f64>,
    dim: usize,
}

impl Problem {
    /// Problem with a uniform source distribution.
    pub fn uniform(components: Vec<QuadraticComponent>) -> Result<Self> {
        let n = components.len();
        Problem::new(components, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn new(components: Vec<QuadraticComponent>, source_probs: Vec<f64>) -> Result<Self> {
        let n = components.len();
        if n == 0 {
            return Err(Error::Dimension("problem has no components".into()));
        }
        if source_probs.len() != n {
            return Err(Error::Dimension(format!(
                "{n} components but {} source probabilities",
                source_probs.len()
            )));
        }
        let dim = components[0].dim();
        if let Some(i) = components.iter().position(|c| c.dim() != dim) {
            return Err(Error::Dimension(format!(
                "component {i} has dimension {}, expected {dim}",
                components[i].dim()
            )));
        }
        check_probability_vector(&source_probs, 1e-12)?;
        Ok(Problem {
            components,
            source_probs,
            dim,
        })
    }

    /// `f_i = (n/2)(⟨a_i, x⟩ − b_i)²` with uniform source, so `G(x) = ½‖Ax − b‖²`.
    pub fn from_least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Self> {
        if b.len() != a.rows() {
            return Err(Error::Dimension(format!(
                "matrix has {} rows but rhs has {} entries",
                a.rows(),
                b.len()
            )));
        }
        let n = a.rows() as f64;
        let components = a
            .row_iter()
            .zip(b)
            .map(|(row, &bi)| QuadraticComponent::new(row.to_vec(), bi, n))
            .collect::<Result<Vec<_>>>()?;
        Problem::uniform(components)
    }

    /// `N+1` quadratics in two dimensions: `(N/2)(x[0] − sign)²` followed by
    /// `N` copies of `½x[1]²`, uniform source.
    pub fn tightness_instance(big_n: usize, sign: f64) -> Result<Self> {
        if big_n == 0 {
            return Err(Error::Parameter("tightness instance needs N >= 1".into()));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::Parameter(format!("sign must be ±1, got {sign}")));
        }
        let mut components = Vec::with_capacity(big_n + 1);
        components.push(QuadraticComponent::new(vec![1.0, 0.0], sign, big_n as f64)?);
        for _ in 0..big_n {
            components.push(QuadraticComponent::new(vec![0.0, 1.0], 0.0, 1.0)?);
        }
        Problem::uniform(components)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[QuadraticComponent] {
        &self.components
    }

    pub fn component(&self, i: usize) -> Result<&QuadraticComponent> {
        self.components.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.len(),
        })
    }

    pub fn source_probs(&self) -> &[f64] {
        &self.source_probs
    }

    pub fn lipschitz(&self) -> Vec<f64> {
        self.components.iter().map(QuadraticComponent::lipschitz).collect()
    }

    /// `‖z_i‖`, a natural choice of the `G_i` values for generalized linear components.
    pub fn direction_norms(&self) -> Vec<f64> {
        self.components.iter().map(|c| norm_sq(&c.z).sqrt()).collect()
    }

    pub fn gradient(&self, i: usize, x: &[f64]) -> Result<Vec<f64>> {
        let c = self.component(i)?;
        if x.len() != self.dim {
            return Err(Error::Dimension(format!(
                "point has length {}, expected {}",
                x.len(),
                self.dim
            )));
        }
        Ok(c.gradient(x))
    }

    /// `∇G(x) = Σ p_i ∇f_i(x)`.
    pub fn full_gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim];
        for (c, &p) in self.components.iter().zip(&self.source_probs) {
            if p == 0.0 {
                continue;
            }
            axpy(p * c.scale * c.residual(x), &c.z, &mut g);
        }
        g
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.components
            .iter()
            .zip(&self.source_probs)
            .map(|(c, p)| p * c.value(x))
            .sum()
    }

    /// Hessian of `G`, `Σ p_i α_i z_i z_iᵀ`.
    pub fn hessian(&self) -> DenseMatrix {
        self.least_squares_form().0.gram()
    }

    /// Rows `√(p_i α_i)·z_i` and targets `√(p_i α_i)·b_i`: minimizing
    /// `½‖Mx − t‖²` is equivalent to minimizing `G`.
    fn least_squares_form(&self) -> (DenseMatrix, Vec<f64>) {
        let mut data = Vec::with_capacity(self.len() * self.dim);
        let mut targets = Vec::with_capacity(self.len());
        for (c, &p) in self.components.iter().zip(&self.source_probs) {
            let s = (p * c.scale).sqrt();
            data.extend(c.z.iter().map(|v| s * v));
            targets.push(s * c.offset);
        }
        let m = DenseMatrix::new(self.len(), self.dim, data).expect("validated components");
        (m, targets)
    }

    pub fn stats(&self) -> Result<ProblemStats> {
        let lipschitz = self.lipschitz();
        if lipschitz.iter().all(|&l| l == 0.0) {
            return Err(Error::Degenerate("every component is identically zero".into()));
        }
        let probs = &self.source_probs;
        let l_bar: f64 = lipschitz.iter().zip(probs).map(|(l, p)| l * p).sum();
        let l_sq_bar: f64 = lipschitz.iter().zip(probs).map(|(l, p)| l * l * p).sum();
        let support = || lipschitz.iter().zip(probs).filter(|(_, &p)| p > 0.0).map(|(l, _)| *l);
        let sup_l = support().fold(0.0_f64, f64::max);
        let inf_l = support().fold(f64::INFINITY, f64::min);

        let (m, t) = self.least_squares_form();
        let x_star = solve_least_squares(&m, &t)?;
        let (_, mu) = extremal_eigs(&m.gram())?;
        let grad_norms_sq: Vec<f64> = self
            .components
            .iter()
            .map(|c| c.gradient_norm_sq(&x_star))
            .collect();
        let sigma_sq = grad_norms_sq.iter().zip(probs).map(|(g, p)| g * p).sum();

        Ok(ProblemStats {
            lipschitz,
            l_bar,
            l_sq_bar,
            sup_l,
            inf_l,
            mu,
            sigma_sq,
            cond_k: l_bar / mu,
            grad_norms_sq,
            x_star,
        })
    }
}

/// Smoothness, convexity and residual constants of a [`Problem`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemStats {
    pub lipschitz: Vec<f64>,
    pub l_bar: f64,
    /// `E L_i²`.
    pub l_sq_bar: f64,
    pub sup_l: f64,
    pub inf_l: f64,
    pub mu: f64,
    /// `E‖∇f_i(x⋆)‖²`.
    pub sigma_sq: f64,
    /// `L̄/μ`.
    pub cond_k: f64,
    /// `‖∇f_i(x⋆)‖²` per component.
    pub grad_norms_sq: Vec<f64>,
    pub x_star: Vec<f64>,
}

/// Minimizer of `½‖D⁻¹(Ax − b)‖²` with `D = diag(‖a_i‖)`.
pub fn weighted_solution(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (pa, pb) = row_normalized(a, b)?;
    solve_least_squares(&pa, &pb)
}

/// `(D⁻¹A, D⁻¹b)`; fails on zero rows.
pub fn row_normalized(a: &DenseMatrix, b: &[f64]) -> Result<(DenseMatrix, Vec<f64>)> {
    if b.len() != a.rows() {
        return Err(Error::Dimension(format!(
            "matrix has {} rows but rhs has {} entries",
            a.rows(),
            b.len()
        )));
    }
    let norms = a.row_norms_sq();
    if let Some(i) = norms.iter().position(|&v| v == 0.0) {
        return Err(Error::ZeroRow(Some(i)));
    }
    let inv: Vec<f64> = norms.iter().map(|v| 1.0 / v.sqrt()).collect();
    let pb = b.iter().zip(&inv).map(|(bi, s)| bi * s).collect();
    Ok((a.scale_rows(&inv)?, pb))
}

/// `L⟨x − y, ∇f(x) − ∇f(y)⟩ − ‖∇f(x) − ∇f(y)‖²`, nonnegative for L-smooth convex `f`.
pub fn cocoercivity_gap(c: &QuadraticComponent, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != c.dim() || y.len() != c.dim() {
        return Err(Error::Dimension("points must match component dimension".into()));
    }
    let gx = c.gradient(x);
    let gy = c.gradient(y);
    let dg: Vec<f64> = gx.iter().zip(&gy).map(|(a, b)| a - b).collect();
    let dx: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(c.lipschitz() * dot(&dx, &dg)? - norm_sq(&dg))
}

pub(crate) fn check_probability_vector(p: &[f64], tol: f64) -> Result<()> {
    if let Some(i) = p.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(Error::Distribution(format!(
            "entry {i} is negative or not finite: {}",
            p[i]
        )));
    }
    let total: f64 = p.iter().sum();
    if (total - 1.0).abs() > tol {
        return Err(Error::Distribution(format!("probabilities sum to {total}")));
    }
    Ok(())
}

/// `‖x − x⋆‖²` convenience used by runners.
#[inline]
pub(crate) fn error_sq(x: &[f64], x_star: &[f64]) -> f64 {
    dist_sq(x, x_star)
}
