//! Small dense linear algebra and seeded random streams.
//!
//! Everything here is sized for the tall-and-thin systems used throughout the
//! crate (`d` up to a few dozen columns), so the routines favour stability and
//! determinism over blocking or cache tricks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Relative threshold below which an eigenvalue of a PSD matrix is treated as zero.
pub const EIG_ZERO_THRESHOLD: f64 = 1e-12;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::Dimension(format!(
                "matrix must be nonempty, got {rows}x{cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite entry at ({}, {})",
                pos / cols,
                pos % cols
            )));
        }
        Ok(DenseMatrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::Dimension(format!(
                "row {i} has {} entries, expected {cols}",
                rows[i].len()
            )));
        }
        let data = rows.iter().flatten().copied().collect();
        DenseMatrix::new(rows.len(), cols, data)
    }

    pub fn identity(d: usize) -> Result<Self> {
        let mut data = vec![0.0; d * d];
        for i in 0..d {
            data[i * d + i] = 1.0;
        }
        DenseMatrix::new(d, d, data)
    }

    pub fn diagonal(diag: &[f64]) -> Result<Self> {
        let d = diag.len();
        let mut data = vec![0.0; d * d];
        for (i, v) in diag.iter().enumerate() {
            data[i * d + i] = *v;
        }
        DenseMatrix::new(d, d, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols)
    }

    pub fn row_norms_sq(&self) -> Vec<f64> {
        self.row_iter().map(norm_sq).collect()
    }

    pub fn frobenius_sq(&self) -> f64 {
        norm_sq(&self.data)
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(x.len(), self.cols, "matvec")?;
        Ok(self.row_iter().map(|r| dot_unchecked(r, x)).collect())
    }

    pub fn transpose_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(y.len(), self.rows, "transpose_matvec")?;
        let mut out = vec![0.0; self.cols];
        for (r, &yi) in self.row_iter().zip(y) {
            axpy(yi, r, &mut out);
        }
        Ok(out)
    }

    /// `AᵀA`, symmetric `cols × cols`.
    pub fn gram(&self) -> DenseMatrix {
        let d = self.cols;
        let mut g = vec![0.0; d * d];
        for r in self.row_iter() {
            for j in 0..d {
                let rj = r[j];
                if rj == 0.0 {
                    continue;
                }
                for k in j..d {
                    g[j * d + k] += rj * r[k];
                }
            }
        }
        for j in 0..d {
            for k in 0..j {
                g[j * d + k] = g[k * d + j];
            }
        }
        DenseMatrix {
            rows: d,
            cols: d,
            data: g,
        }
    }

    /// Returns `diag(s) · A`.
    pub fn scale_rows(&self, s: &[f64]) -> Result<DenseMatrix> {
        check_len(s.len(), self.rows, "scale_rows")?;
        let mut data = self.data.clone();
        for (chunk, &si) in data.chunks_exact_mut(self.cols).zip(s) {
            chunk.iter_mut().for_each(|v| *v *= si);
        }
        DenseMatrix::new(self.rows, self.cols, data)
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        if self.rows != self.cols {
            return false;
        }
        let scale = self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        let n = self.rows;
        (0..n).all(|i| (0..i).all(|j| (self.get(i, j) - self.get(j, i)).abs() <= rel_tol * scale))
    }
}

fn check_len(got: usize, want: usize, what: &str) -> Result<()> {
    if got != want {
        return Err(Error::Dimension(format!(
            "{what}: expected length {want}, got {got}"
        )));
    }
    Ok(())
}

/// Euclidean inner product.
pub fn dot(u: &[f64], v: &[f64]) -> Result<f64> {
    check_len(v.len(), u.len(), "dot")?;
    Ok(dot_unchecked(u, v))
}

#[inline]
pub(crate) fn dot_unchecked(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

#[inline]
pub fn norm_sq(u: &[f64]) -> f64 {
    u.iter().map(|v| v * v).sum()
}

/// `‖u − v‖²`; slices must have equal length.
#[inline]
pub fn dist_sq(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// `y ← y + alpha·x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Householder QR of an `m × n` column-major matrix, in place.
///
/// On return the upper triangle holds `R` and the strict lower part holds the
/// reflector tails (unit leading entry implied). `perm[j]` is the original
/// column placed at position `j`.
struct Householder {
    m: usize,
    n: usize,
    a: Vec<f64>,
    tau: Vec<f64>,
    perm: Vec<usize>,
}

impl Householder {
    fn factor(m: usize, n: usize, mut a: Vec<f64>, pivot: bool) -> Self {
        let steps = m.min(n);
        let mut tau = vec![0.0; steps];
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..steps {
            if pivot {
                let col_norm = |a: &[f64], j: usize| norm_sq(&a[j * m + k..(j + 1) * m]);
                let mut best = k;
                let mut best_norm = col_norm(&a, k);
                for j in k + 1..n {
                    let v = col_norm(&a, j);
                    if v > best_norm {
                        best = j;
                        best_norm = v;
                    }
                }
                if best != k {
                    for i in 0..m {
                        a.swap(k * m + i, best * m + i);
                    }
                    perm.swap(k, best);
                }
            }
            let col = &mut a[k * m + k..(k + 1) * m];
            let x0 = col[0];
            let tail_sq = norm_sq(&col[1..]);
            if tail_sq == 0.0 {
                tau[k] = 0.0;
                continue;
            }
            let norm = (x0 * x0 + tail_sq).sqrt();
            let beta = if x0 >= 0.0 { -norm } else { norm };
            tau[k] = (beta - x0) / beta;
            let scale = 1.0 / (x0 - beta);
            col[1..].iter_mut().for_each(|v| *v *= scale);
            col[0] = beta;
            for j in k + 1..n {
                let (left, right) = a.split_at_mut(j * m);
                let v = &left[k * m + k + 1..(k + 1) * m];
                let target = &mut right[k..m];
                let s = tau[k] * (target[0] + dot_unchecked(v, &target[1..]));
                target[0] -= s;
                axpy(-s, v, &mut target[1..]);
            }
        }
        Householder {
            m,
            n,
            a,
            tau,
            perm,
        }
    }

    #[inline]
    fn r(&self, i: usize, j: usize) -> f64 {
        self.a[j * self.m + i]
    }

    /// Applies reflector `k` to `b` (reflectors are symmetric).
    fn reflect(&self, k: usize, b: &mut [f64]) {
        if self.tau[k] == 0.0 {
            return;
        }
        let v = &self.a[k * self.m + k + 1..(k + 1) * self.m];
        let s = self.tau[k] * (b[k] + dot_unchecked(v, &b[k + 1..]));
        b[k] -= s;
        axpy(-s, v, &mut b[k + 1..]);
    }

    fn apply_qt(&self, b: &mut [f64]) {
        for k in 0..self.tau.len() {
            self.reflect(k, b);
        }
    }

    fn apply_q(&self, b: &mut [f64]) {
        for k in (0..self.tau.len()).rev() {
            self.reflect(k, b);
        }
    }

    fn rank(&self) -> usize {
        let steps = self.m.min(self.n);
        if steps == 0 {
            return 0;
        }
        let lead = self.r(0, 0).abs();
        if lead == 0.0 {
            return 0;
        }
        let tol = lead * (self.m.max(self.n) as f64) * f64::EPSILON * 10.0;
        (0..steps).take_while(|&k| self.r(k, k).abs() > tol).count()
    }
}

/// Minimizer of `½‖Ax − b‖²`, via column-pivoted Householder QR.
///
/// For rank-deficient `A` the minimum-norm minimizer is returned, obtained
/// from a second QR of the leading `R` rows (complete orthogonal decomposition).
pub fn solve_least_squares(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    check_len(b.len(), m, "solve_least_squares rhs")?;
    let mut colmajor = vec![0.0; m * n];
    for i in 0..m {
        for j in 0..n {
            colmajor[j * m + i] = a.get(i, j);
        }
    }
    let qr = Householder::factor(m, n, colmajor, true);
    let mut c = b.to_vec();
    qr.apply_qt(&mut c);
    let rank = qr.rank();
    let mut x = vec![0.0; n];
    if rank == 0 {
        return Ok(x);
    }

    let y = if rank == n {
        let mut y = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| qr.r(i, j) * y[j]).sum();
            y[i] = (c[i] - s) / qr.r(i, i);
        }
        y
    } else {
        // T = R[0..rank, 0..n] has full row rank; factor Tᵀ = Q₂S.
        let mut tt = vec![0.0; n * rank];
        for i in 0..rank {
            for j in i..n {
                tt[i * n + j] = qr.r(i, j);
            }
        }
        let second = Householder::factor(n, rank, tt, false);
        let mut z = vec![0.0; n];
        for i in 0..rank {
            let s: f64 = (0..i).map(|j| second.r(j, i) * z[j]).sum();
            z[i] = (c[i] - s) / second.r(i, i);
        }
        second.apply_q(&mut z);
        z
    };
    for (j, &p) in qr.perm.iter().enumerate() {
        x[p] = y[j];
    }
    Ok(x)
}

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi rotations.
pub fn symmetric_eigenvalues(m: &DenseMatrix) -> Result<Vec<f64>> {
    if m.rows() != m.cols() {
        return Err(Error::Dimension(format!(
            "eigenvalues need a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    if !m.is_symmetric(1e-10) {
        return Err(Error::Parameter("matrix is not symmetric".into()));
    }
    let d = m.rows();
    let mut a = m.as_slice().to_vec();
    let total = norm_sq(&a);
    for _sweep in 0..100 {
        let off: f64 = (0..d)
            .flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[i * d + j] * a[i * d + j])
            .sum();
        if off <= total * 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[p * d + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * d + q] - a[p * d + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..d).map(|i| a[i * d + i]).collect();
    eig.sort_by(f64::total_cmp);
    Ok(eig)
}

/// Largest eigenvalue and smallest eigenvalue above `EIG_ZERO_THRESHOLD·λ_max`.
pub fn extremal_eigs(m: &DenseMatrix) -> Result<(f64, f64)> {
    let eig = symmetric_eigenvalues(m)?;
    let max = *eig.last().expect("nonempty matrix");
    if max <= 0.0 {
        return Err(Error::Degenerate(
            "matrix has no positive eigenvalue".into(),
        ));
    }
    let min_nonzero = eig
        .iter()
        .copied()
        .find(|&v| v > EIG_ZERO_THRESHOLD * max)
        .unwrap_or(max);
    Ok((max, min_nonzero))
}

/// Deterministic random stream (ChaCha8, seeded through `seed_from_u64`).
///
/// Normal variates come from `rand_distr`'s ziggurat sampler, uniform
/// variates from the generator's 53-bit `f64` conversion. Both are
/// platform-independent, so a seed pins the exact sequence.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Stream for a sub-task, keyed by `base` and a list of tags (trial, grid index, ...).
    pub fn derive(base: u64, tags: &[u64]) -> Self {
        RngStream::new(derive_seed(base, tags))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform draw in `[0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn gaussian(&mut self, mean: f64, variance: f64) -> Result<f64> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Parameter(format!(
                "variance must be finite and nonnegative, got {variance}"
            )));
        }
        if variance == 0.0 {
            return Ok(mean);
        }
        Ok(mean + variance.sqrt() * self.standard_normal())
    }
}

/// SplitMix64 finalizer chained over the tags.
pub fn derive_seed(base: u64, tags: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    tags.iter().fold(mix(base), |acc, &t| mix(acc ^ mix(t)))
}
