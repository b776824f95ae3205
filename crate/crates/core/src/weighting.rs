//! Normalized importance weights and the constants they induce.
//!
//! A weight function `w` with `Σ p_i w(i) = 1` defines the reweighted
//! distribution `p^(w)_i = w(i) p_i`. Sampling from `p^(w)` and scaling the
//! component gradient by `1/w(i)` leaves the expected gradient unchanged, but
//! changes the smoothness and residual constants that govern convergence.

use crate::error::{Error, Result};
use crate::problem::check_probability_vector;

/// Tagged choice of weight function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeightScheme {
    /// `w ≡ 1`.
    Uniform,
    /// `w(i) = L_i / L̄`.
    FullyBiasedL,
    /// `w(i) = λ + (1 − λ) L_i / L̄`, `λ ∈ [0, 1]`.
    PartiallyBiasedL(f64),
    /// `w(i) = G_i / Ḡ` for caller-supplied `G_i`.
    BiasedG,
    /// `w(i) = ½ G_i / Ḡ + ½ L_i / L̄`.
    MixedGL,
}

impl WeightScheme {
    pub fn needs_g(&self) -> bool {
        matches!(self, WeightScheme::BiasedG | WeightScheme::MixedGL)
    }

    /// Bias parameter of the λ-family, when the scheme belongs to it.
    pub fn lambda(&self) -> Option<f64> {
        match *self {
            WeightScheme::Uniform => Some(1.0),
            WeightScheme::FullyBiasedL => Some(0.0),
            WeightScheme::PartiallyBiasedL(l) => Some(l),
            _ => None,
        }
    }
}

impl std::fmt::Display for WeightScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            WeightScheme::Uniform => write!(f, "uniform"),
            WeightScheme::FullyBiasedL => write!(f, "fully-biased-L"),
            WeightScheme::PartiallyBiasedL(l) => write!(f, "partially-biased-L({l})"),
            WeightScheme::BiasedG => write!(f, "biased-G"),
            WeightScheme::MixedGL => write!(f, "mixed-GL"),
        }
    }
}

/// Weights `w(i)` together with the reweighted sampling distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    weights: Vec<f64>,
    sampling_probs: Vec<f64>,
    scheme: WeightScheme,
}

impl WeightTable {
    /// Builds the table for `scheme` from Lipschitz constants `l`, source
    /// probabilities `p` and, for the G-schemes, per-component `g` values.
    pub fn build(scheme: WeightScheme, l: &[f64], p: &[f64], g: Option<&[f64]>) -> Result<Self> {
        let n = p.len();
        if l.len() != n {
            return Err(Error::Dimension(format!(
                "{} Lipschitz constants for {n} probabilities",
                l.len()
            )));
        }
        check_probability_vector(p, 1e-9)?;
        if l.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Parameter("Lipschitz constants must be finite and >= 0".into()));
        }
        let l_bar: f64 = mean(l, p);
        if !(l_bar > 0.0) {
            return Err(Error::Degenerate("all Lipschitz constants are zero".into()));
        }
        let g_ratio = || -> Result<Vec<f64>> {
            let g = g.ok_or_else(|| {
                Error::Parameter(format!("scheme {scheme} needs G values"))
            })?;
            if g.len() != n {
                return Err(Error::Dimension(format!("{} G values for {n} components", g.len())));
            }
            if g.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::Parameter("G values must be finite and >= 0".into()));
            }
            let g_bar = mean(g, p);
            if !(g_bar > 0.0) {
                return Err(Error::Degenerate("all G values are zero".into()));
            }
            Ok(g.iter().map(|v| v / g_bar).collect())
        };

        let mut weights: Vec<f64> = match scheme {
            WeightScheme::Uniform => vec![1.0; n],
            WeightScheme::FullyBiasedL => l.iter().map(|v| v / l_bar).collect(),
            WeightScheme::PartiallyBiasedL(lambda) => {
                if !(0.0..=1.0).contains(&lambda) {
                    return Err(Error::Parameter(format!("lambda must lie in [0, 1], got {lambda}")));
                }
                l.iter().map(|v| lambda + (1.0 - lambda) * v / l_bar).collect()
            }
            WeightScheme::BiasedG => g_ratio()?,
            WeightScheme::MixedGL => g_ratio()?
                .iter()
                .zip(l)
                .map(|(gr, v)| 0.5 * gr + 0.5 * v / l_bar)
                .collect(),
        };
        let total = mean(&weights, p);
        weights.iter_mut().for_each(|w| *w /= total);
        let mut sampling_probs: Vec<f64> = weights.iter().zip(p).map(|(w, pi)| w * pi).collect();
        let mass: f64 = sampling_probs.iter().sum();
        sampling_probs.iter_mut().for_each(|q| *q /= mass);
        Ok(WeightTable {
            weights,
            sampling_probs,
            scheme,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// `1/w(i)`; infinite for zero-weight (never sampled) components.
    #[inline]
    pub fn inv_weight(&self, i: usize) -> f64 {
        1.0 / self.weights[i]
    }

    pub fn sampling_probs(&self) -> &[f64] {
        &self.sampling_probs
    }

    pub fn scheme(&self) -> WeightScheme {
        self.scheme
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn max_weight(&self) -> f64 {
        self.weights.iter().copied().fold(0.0, f64::max)
    }
}

/// Constants of the reweighted representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveConstants {
    /// `sup_i L_i / w(i)`.
    pub sup_l_w: f64,
    /// `Σ p_i ‖∇f_i(x⋆)‖² / w(i)`.
    pub sigma_sq_w: f64,
    /// `Σ p_i L_i² / w(i)`.
    pub l_sq_bar_w: f64,
}

pub fn effective_constants(
    table: &WeightTable,
    l: &[f64],
    grad_norms_sq_at_xstar: &[f64],
    p: &[f64],
) -> Result<EffectiveConstants> {
    let n = table.len();
    if l.len() != n || grad_norms_sq_at_xstar.len() != n || p.len() != n {
        return Err(Error::Dimension(format!(
            "effective constants: weight table has {n} entries, got {}, {}, {}",
            l.len(),
            grad_norms_sq_at_xstar.len(),
            p.len()
        )));
    }
    let mut out = EffectiveConstants {
        sup_l_w: 0.0,
        sigma_sq_w: 0.0,
        l_sq_bar_w: 0.0,
    };
    for i in 0..n {
        let w = table.weights[i];
        if w == 0.0 {
            if l[i] > 0.0 || grad_norms_sq_at_xstar[i] > 0.0 {
                return Err(Error::UnreachableComponent(i));
            }
            continue;
        }
        out.sup_l_w = out.sup_l_w.max(l[i] / w);
        out.sigma_sq_w += p[i] * grad_norms_sq_at_xstar[i] / w;
        out.l_sq_bar_w += p[i] * l[i] * l[i] / w;
    }
    Ok(out)
}

fn mean(v: &[f64], p: &[f64]) -> f64 {
    v.iter().zip(p).map(|(a, b)| a * b).sum()
}
