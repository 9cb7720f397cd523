//! Dense linear algebra: weighted normal equations, leverage scores (exact and
//! sketched) and the projection-derived matrices Σ, P⁽²⁾, Λ and Λ̄.
//!
//! Matrices are `m × n` with `m ≥ n`; a row scaling `d` acts as `D = diag(d)`
//! so the normal matrix is `AᵀDA` and leverage scores are those of `D^{1/2}A`.

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub type DenseMatrix = DMatrix<f64>;

/// Relative pivot tolerance of the normal-equation factorization.
pub const PIVOT_TOL: f64 = 1e-12;

/// Default constant in the sketch size `k = ceil(C_jl log m / eps²)`.
pub const DEFAULT_C_JL: f64 = 24.0;

/// Backend for repeated solves against `AᵀDA`.
pub trait NormalSolver {
    fn dim(&self) -> usize;
    fn solve(&self, rhs: &[f64]) -> Vec<f64>;
}

/// Cholesky factor `L Lᵀ = AᵀDA`.
#[derive(Debug, Clone)]
pub struct NormalFactor {
    l: DMatrix<f64>,
    cond_estimate: f64,
}

impl NormalFactor {
    /// Factor a symmetric positive definite matrix directly.
    pub fn from_gram(mut g: DMatrix<f64>) -> Result<Self> {
        let n = g.nrows();
        let max_diag = (0..n).map(|i| g[(i, i)].abs()).fold(0.0, f64::max);
        let tol = PIVOT_TOL * max_diag.max(f64::MIN_POSITIVE);
        let mut max_piv: f64 = 0.0;
        let mut min_piv = f64::INFINITY;
        for k in 0..n {
            let mut piv = g[(k, k)];
            for j in 0..k {
                piv -= g[(k, j)] * g[(k, j)];
            }
            if !(piv > tol) {
                return Err(Error::RankDeficient { pivot: piv, tol });
            }
            max_piv = max_piv.max(piv);
            min_piv = min_piv.min(piv);
            let lkk = piv.sqrt();
            g[(k, k)] = lkk;
            for i in (k + 1)..n {
                let mut s = g[(i, k)];
                for j in 0..k {
                    s -= g[(i, j)] * g[(k, j)];
                }
                g[(i, k)] = s / lkk;
            }
        }
        for i in 0..n {
            for j in (i + 1)..n {
                g[(i, j)] = 0.0;
            }
        }
        Ok(NormalFactor { l: g, cond_estimate: max_piv / min_piv })
    }

    /// Ratio of extreme pivots, a cheap lower bound on the condition number.
    pub fn condition_estimate(&self) -> f64 {
        self.cond_estimate
    }

    pub fn lower(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// Solves `L z = rhs` in place.
    pub fn forward(&self, z: &mut [f64]) {
        let n = self.l.nrows();
        for i in 0..n {
            let mut s = z[i];
            for j in 0..i {
                s -= self.l[(i, j)] * z[j];
            }
            z[i] = s / self.l[(i, i)];
        }
    }

    /// Solves `Lᵀ z = rhs` in place.
    pub fn backward(&self, z: &mut [f64]) {
        let n = self.l.nrows();
        for i in (0..n).rev() {
            let mut s = z[i];
            for j in (i + 1)..n {
                s -= self.l[(j, i)] * z[j];
            }
            z[i] = s / self.l[(i, i)];
        }
    }

    /// Log-determinant of the factored matrix.
    pub fn logdet(&self) -> f64 {
        (0..self.l.nrows()).map(|i| 2.0 * self.l[(i, i)].ln()).sum()
    }
}

impl NormalSolver for NormalFactor {
    fn dim(&self) -> usize {
        self.l.nrows()
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut z = rhs.to_vec();
        self.forward(&mut z);
        self.backward(&mut z);
        z
    }
}

/// `AᵀDA` as a dense symmetric matrix.
pub fn gram(a: &DenseMatrix, d: &[f64]) -> DMatrix<f64> {
    let (m, n) = a.shape();
    let mut g = DMatrix::zeros(n, n);
    for i in 0..m {
        let di = d[i];
        if di == 0.0 {
            continue;
        }
        for j in 0..n {
            let aij = di * a[(i, j)];
            if aij == 0.0 {
                continue;
            }
            for k in 0..=j {
                g[(j, k)] += aij * a[(i, k)];
            }
        }
    }
    for j in 0..n {
        for k in (j + 1)..n {
            g[(j, k)] = g[(k, j)];
        }
    }
    g
}

fn check_scale(a: &DenseMatrix, d: &[f64]) -> Result<()> {
    if d.len() != a.nrows() {
        return Err(Error::Validation(format!(
            "scale length {} does not match {} rows",
            d.len(),
            a.nrows()
        )));
    }
    if d.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
        return Err(Error::Validation("row scale must be nonnegative and finite".into()));
    }
    Ok(())
}

pub fn factor_normal_equations(a: &DenseMatrix, d: &[f64]) -> Result<NormalFactor> {
    check_scale(a, d)?;
    NormalFactor::from_gram(gram(a, d))
}

pub fn solve_normal(f: &NormalFactor, rhs: &[f64]) -> Vec<f64> {
    f.solve(rhs)
}

/// `σ(D^{1/2}A)`, computed as `d_i ‖L⁻¹a_i‖²`.
pub fn leverage_scores(a: &DenseMatrix, d: &[f64]) -> Result<Vec<f64>> {
    let f = factor_normal_equations(a, d)?;
    Ok(leverage_with_factor(a, d, &f))
}

pub fn leverage_with_factor(a: &DenseMatrix, d: &[f64], f: &NormalFactor) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut out = vec![0.0; m];
    let mut z = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            z[j] = a[(i, j)];
        }
        f.forward(&mut z);
        out[i] = d[i] * z.iter().map(|v| v * v).sum::<f64>();
    }
    out
}

/// `σ(D^{1/2}A)` as `‖R⁻ᵀb_i‖²` from a Householder QR of the
/// column-equilibrated `B = D^{1/2}A`.
///
/// Accuracy degrades with `cond(R)` instead of `cond(R)²`, which matters for
/// rows many orders of magnitude smaller than the rest.
pub fn leverage_scores_qr(a: &DenseMatrix, d: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    let mut b = a.clone();
    for i in 0..m {
        let s = d[i].sqrt();
        let mut row = b.row_mut(i);
        row *= s;
    }
    for mut col in b.column_iter_mut() {
        let nrm = col.norm();
        if !(nrm > 0.0) {
            return Err(Error::RankDeficient { pivot: 0.0, tol: PIVOT_TOL });
        }
        col /= nrm;
    }
    let bt = b.transpose();
    let r = b.qr().r();
    // the factorized matrix is B itself, so the test is on |R_kk|
    let max_piv = (0..n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let tol = PIVOT_TOL * max_piv;
    for k in 0..n {
        let piv = r[(k, k)].abs();
        if !(piv > tol) {
            return Err(Error::RankDeficient { pivot: piv, tol });
        }
    }
    let z = r.tr_solve_upper_triangular(&bt).ok_or(Error::RankDeficient { pivot: 0.0, tol })?;
    Ok(z.column_iter().map(|c| c.norm_squared()).collect())
}

const SKETCH_BLOCK: usize = 256;

/// Number of sketch vectors used for tolerance `eps`.
pub fn sketch_size(m: usize, eps: f64, c_jl: f64) -> usize {
    let k = (c_jl * (m as f64).ln() / (eps * eps)).ceil();
    (k as usize).max(1)
}

/// JL estimate of `σ(D^{1/2}A)` from `k` random sign vectors.
///
/// Vector `j` takes `⌈m/64⌉` words from a ChaCha stream keyed by `seed`,
/// one sign per bit.
pub fn sketched_leverage_scores(
    a: &DenseMatrix,
    d: &[f64],
    eps: f64,
    seed: u64,
    c_jl: f64,
) -> Result<Vec<f64>> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidTolerance(eps));
    }
    let f = factor_normal_equations(a, d)?;
    let (m, n) = a.shape();
    let k = sketch_size(m, eps, c_jl);
    let scale = 1.0 / (k as f64).sqrt();
    // whitened rows: P = CᵀC with column i of C equal to L⁻¹ d_i^{1/2} a_i
    let mut c = DMatrix::zeros(n, m);
    let mut z = vec![0.0; n];
    for i in 0..m {
        let s = d[i].sqrt();
        for j in 0..n {
            z[j] = s * a[(i, j)];
        }
        f.forward(&mut z);
        c.column_mut(i).copy_from_slice(&z);
    }
    // ‖S P e_i‖² = c_iᵀ (YᵀY) c_i with Y = S Cᵀ
    let mut yty = DMatrix::<f64>::zeros(n, n);
    let block = SKETCH_BLOCK.min(k);
    // column r holds the signs of one sketch vector
    let mut signs = DMatrix::<f64>::zeros(m, block);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut j0 = 0;
    while j0 < k {
        let cols = block.min(k - j0);
        if cols < block {
            signs = DMatrix::zeros(m, cols);
        }
        for mut col in signs.column_iter_mut() {
            let mut bits = 0u64;
            for (i, v) in col.iter_mut().enumerate() {
                if i % 64 == 0 {
                    bits = rng.next_u64();
                }
                *v = if bits & 1 == 1 { 1.0 } else { -1.0 };
                bits >>= 1;
            }
        }
        let yt = &c * &signs;
        yty += &yt * yt.transpose();
        j0 += cols;
    }
    let yty = yty * (scale * scale);
    let est = (0..m)
        .map(|i| {
            let ci = c.column(i);
            (ci.transpose() * &yty * ci)[(0, 0)]
        })
        .collect();
    Ok(est)
}

/// Projection-derived matrices of `B = D^{1/2}A`.
#[derive(Debug, Clone)]
pub struct ProjectionBundle {
    pub sigma: Vec<f64>,
    pub proj: DMatrix<f64>,
    pub proj_squared: DMatrix<f64>,
    pub lap: DMatrix<f64>,
    pub norm_lap: DMatrix<f64>,
}

pub fn projection_bundle(a: &DenseMatrix, d: &[f64]) -> Result<ProjectionBundle> {
    let f = factor_normal_equations(a, d)?;
    let (m, n) = a.shape();
    // rows of Z = L⁻¹ (D^{1/2}A)ᵀ, so P = ZᵀZ
    let mut z = DMatrix::zeros(n, m);
    let mut col = vec![0.0; n];
    for i in 0..m {
        let s = d[i].sqrt();
        for j in 0..n {
            col[j] = s * a[(i, j)];
        }
        f.forward(&mut col);
        for j in 0..n {
            z[(j, i)] = col[j];
        }
    }
    let proj = z.transpose() * &z;
    let proj_squared = proj.component_mul(&proj);
    let sigma: Vec<f64> = (0..m).map(|i| proj[(i, i)]).collect();
    let mut lap = -proj_squared.clone();
    for i in 0..m {
        lap[(i, i)] += sigma[i];
    }
    let mut norm_lap = lap.clone();
    for i in 0..m {
        for j in 0..m {
            let s = (sigma[i] * sigma[j]).sqrt();
            norm_lap[(i, j)] = if s > 0.0 { lap[(i, j)] / s } else { 0.0 };
        }
    }
    Ok(ProjectionBundle { sigma, proj, proj_squared, lap, norm_lap })
}

/// Parses the text matrix format: a header `m n` followed by `m` rows.
pub fn parse_matrix(text: &str) -> Result<DenseMatrix> {
    let mut tokens = text.split_whitespace();
    let mut next = |what: &str| -> Result<&str> {
        tokens.next().ok_or_else(|| Error::Parse(format!("missing {what}")))
    };
    let m: usize = next("row count")?
        .parse()
        .map_err(|e| Error::Parse(format!("row count: {e}")))?;
    let n: usize = next("column count")?
        .parse()
        .map_err(|e| Error::Parse(format!("column count: {e}")))?;
    let mut data = Vec::with_capacity(m * n);
    for k in 0..m * n {
        let tok = next("matrix entry")?;
        let v: f64 = tok.parse().map_err(|e| {
            Error::Parse(format!("entry ({}, {}) {tok:?}: {e}", k / n + 1, k % n + 1))
        })?;
        if !v.is_finite() {
            return Err(Error::Validation(format!("non-finite entry at row {}", k / n + 1)));
        }
        data.push(v);
    }
    if tokens.next().is_some() {
        return Err(Error::Parse("trailing tokens after matrix".into()));
    }
    let a = DMatrix::from_row_slice(m, n, &data);
    validate_shape(&a)?;
    Ok(a)
}

/// Checks `m ≥ n ≥ 1` and the absence of zero rows.
pub fn validate_shape(a: &DenseMatrix) -> Result<()> {
    let (m, n) = a.shape();
    if n == 0 || m < n {
        return Err(Error::Validation(format!("need m >= n >= 1, got {m} x {n}")));
    }
    for i in 0..m {
        if (0..n).all(|j| a[(i, j)] == 0.0) {
            return Err(Error::Validation(format!("row {} is zero", i + 1)));
        }
    }
    Ok(())
}

pub fn to_dvector(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
