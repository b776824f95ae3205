//! Discrete index samplers: Vose alias tables and rejection sampling from a
//! source distribution.

use crate::error::{Error, Result};
use crate::numerics::RngStream;

/// Anything that can produce component indices from a random stream.
pub trait IndexSampler {
    fn sample(&self, rng: &mut RngStream) -> usize;
}

/// O(1) sampler for a fixed discrete distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct AliasTable {
    prob: Vec<f64>,
    alias: Vec<usize>,
}

impl AliasTable {
    /// Vose's construction. `p` must be nonnegative and sum to 1 within 1e-9.
    pub fn build(p: &[f64]) -> Result<Self> {
        let n = p.len();
        if n == 0 {
            return Err(Error::Distribution("empty distribution".into()));
        }
        if let Some(i) = p.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Distribution(format!("entry {i} is invalid: {}", p[i])));
        }
        let total: f64 = p.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Distribution(format!("probabilities sum to {total}")));
        }

        let nf = n as f64;
        let mut scaled: Vec<f64> = p.iter().map(|v| v / total * nf).collect();
        let mut prob = vec![0.0; n];
        let mut alias: Vec<usize> = (0..n).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).rev().partition(|&i| scaled[i] < 1.0);
        while let (Some(&s), Some(&l)) = (small.last(), large.last()) {
            small.pop();
            large.pop();
            prob[s] = scaled[s];
            alias[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if scaled[l] < 1.0 {
                small.push(l);
            } else {
                large.push(l);
            }
        }
        // Leftovers carry mass 1 up to rounding.
        for i in large.into_iter().chain(small) {
            prob[i] = 1.0;
        }
        Ok(AliasTable { prob, alias })
    }

    pub fn len(&self) -> usize {
        self.prob.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prob.is_empty()
    }

    /// Cell acceptance thresholds.
    pub fn cell_probs(&self) -> &[f64] {
        &self.prob
    }

    pub fn aliases(&self) -> &[usize] {
        &self.alias
    }

    /// One uniform picks the cell (integer part) and the coin (fractional part).
    #[inline]
    pub fn draw(&self, rng: &mut RngStream) -> usize {
        let n = self.prob.len();
        let u = rng.uniform() * n as f64;
        let cell = (u as usize).min(n - 1);
        if u - (cell as f64) < self.prob[cell] {
            cell
        } else {
            self.alias[cell]
        }
    }

    /// Distribution induced by the table, reconstructed from the cells.
    pub fn induced_probs(&self) -> Vec<f64> {
        let n = self.prob.len();
        let mut mass = vec![0.0; n];
        for i in 0..n {
            mass[i] += self.prob[i] / n as f64;
            mass[self.alias[i]] += (1.0 - self.prob[i]) / n as f64;
        }
        mass
    }
}

impl IndexSampler for AliasTable {
    fn sample(&self, rng: &mut RngStream) -> usize {
        self.draw(rng)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Acceptance {
    /// Accept proposal `i` with probability `w(i)/W`.
    Plain { weights: Vec<f64>, cap: f64 },
    /// Accept the first proposal outright with probability `λ`; otherwise run
    /// `L_i / sup L` rejection, reusing the first proposal.
    TwoStage { lambda: f64, l_ratio: Vec<f64> },
}

/// Simulates the reweighted distribution using only draws from the source.
#[derive(Debug, Clone, PartialEq)]
pub struct RejectionSampler {
    source: AliasTable,
    acceptance: Acceptance,
}

impl RejectionSampler {
    pub fn new(source_probs: &[f64], weights: &[f64], cap: f64) -> Result<Self> {
        if weights.len() != source_probs.len() {
            return Err(Error::Dimension(format!(
                "{} weights for {} source probabilities",
                weights.len(),
                source_probs.len()
            )));
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Parameter("weights must be finite and >= 0".into()));
        }
        let max_w = weights.iter().copied().fold(0.0, f64::max);
        if !(max_w > 0.0) {
            return Err(Error::Parameter("all weights are zero".into()));
        }
        if !(cap >= max_w) || !cap.is_finite() {
            return Err(Error::Parameter(format!(
                "rejection cap {cap} is below the largest weight {max_w}"
            )));
        }
        Ok(RejectionSampler {
            source: AliasTable::build(source_probs)?,
            acceptance: Acceptance::Plain {
                weights: weights.to_vec(),
                cap,
            },
        })
    }

    /// Two-stage sampler for `w(i) = λ + (1 − λ) L_i/L̄`.
    pub fn two_stage(source_probs: &[f64], lipschitz: &[f64], lambda: f64) -> Result<Self> {
        if lipschitz.len() != source_probs.len() {
            return Err(Error::Dimension("Lipschitz constants and probabilities differ in length".into()));
        }
        if !(0.0..=1.0).contains(&lambda) {
            return Err(Error::Parameter(format!("lambda must lie in [0, 1], got {lambda}")));
        }
        let sup = lipschitz.iter().copied().fold(0.0, f64::max);
        if !(sup > 0.0) {
            return Err(Error::Degenerate("all Lipschitz constants are zero".into()));
        }
        Ok(RejectionSampler {
            source: AliasTable::build(source_probs)?,
            acceptance: Acceptance::TwoStage {
                lambda,
                l_ratio: lipschitz.iter().map(|l| l / sup).collect(),
            },
        })
    }

    /// Returns the accepted index and the number of source proposals consumed.
    pub fn draw(&self, rng: &mut RngStream) -> (usize, usize) {
        match &self.acceptance {
            Acceptance::Plain { weights, cap } => {
                let mut proposals = 0;
                loop {
                    proposals += 1;
                    let i = self.source.draw(rng);
                    if rng.uniform() * cap < weights[i] {
                        return (i, proposals);
                    }
                }
            }
            Acceptance::TwoStage { lambda, l_ratio } => {
                let mut i = self.source.draw(rng);
                let mut proposals = 1;
                if rng.uniform() < *lambda {
                    return (i, proposals);
                }
                loop {
                    if rng.uniform() < l_ratio[i] {
                        return (i, proposals);
                    }
                    i = self.source.draw(rng);
                    proposals += 1;
                }
            }
        }
    }
}

impl IndexSampler for RejectionSampler {
    fn sample(&self, rng: &mut RngStream) -> usize {
        self.draw(rng).0
    }
}
