//! Lewis weight barrier `ψ` for the polytope `{x : Ax > b}`.
//!
//! With slacks `s = Ax − b` and `A_x = S⁻¹A`, the barrier is evaluated
//! through the converged weights `σ_x = w_q(A_x)`:
//!
//! `ψ(x) = ½[logdet(A_xᵀW^{1−2/q}A_x) − (1−2/q)n]`,
//! `∇ψ = −A_xᵀσ_x`,
//! `∇²ψ = A_xᵀΣ^{1/2}(I + N)Σ^{1/2}A_x` with `N = 2Λ̄(I − (1−2/q)Λ̄)⁻¹`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::lewis::lewis_weights;
use crate::linalg::{leverage_scores_qr, projection_bundle, DenseMatrix};

/// Weight tolerance used for barrier evaluations.
pub const BARRIER_WEIGHT_TOL: f64 = 1e-8;

/// Slack allowed on the sandwich and force-bound checks, relative.
const CHECK_TOL: f64 = 1e-6;

/// `max(ln m, 4)`.
pub fn default_q(m: usize) -> f64 {
    (m as f64).ln().max(4.0)
}

/// `v_q = (q+2)^{3/2} m^{1/(q+2)} + 4 max(q, 2)^{5/2}`.
pub fn self_concordance_constant(q: f64, m: usize) -> f64 {
    (q + 2.0).powf(1.5) * (m as f64).powf(1.0 / (q + 2.0)) + 4.0 * q.max(2.0).powf(2.5)
}

fn check_q(q: f64) -> Result<()> {
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidP(q));
    }
    Ok(())
}

/// `Ax − b`, all strictly positive.
pub fn slacks(a: &DenseMatrix, b: &[f64], x: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = a.shape();
    if b.len() != m || x.len() != n {
        return Err(Error::Validation(format!(
            "dimension mismatch: A is {m}x{n}, b {}, x {}",
            b.len(),
            x.len()
        )));
    }
    let mut s = vec![0.0; m];
    for i in 0..m {
        let v: f64 = (0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() - b[i];
        if !(v > 0.0) {
            return Err(Error::OutOfDomain { index: i, value: v });
        }
        s[i] = v;
    }
    Ok(s)
}

fn scaled_rows(a: &DenseMatrix, s: &[f64]) -> DenseMatrix {
    let mut ax = a.clone();
    for (i, mut row) in ax.row_iter_mut().enumerate() {
        row /= s[i];
    }
    ax
}

fn unit_columns(a: &DenseMatrix) -> DenseMatrix {
    let mut out = a.clone();
    for mut col in out.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    out
}

/// `A_x` and `σ_x = w_q(A_x)`.
fn barrier_state(a: &DenseMatrix, b: &[f64], x: &[f64], q: f64, eps: f64) -> Result<(DenseMatrix, Vec<f64>)> {
    check_q(q)?;
    let s = slacks(a, b, x)?;
    let ax = scaled_rows(a, &s);
    // weights are invariant under column scaling, which tames slacks near a facet
    let unit = unit_columns(&ax);
    let sigma = if q == 2.0 {
        leverage_scores_qr(&unit, &vec![1.0; ax.nrows()])?
    } else {
        lewis_weights(&unit, q, eps)?
    };
    Ok((ax, sigma))
}

/// `½ logdet(BᵀB)` from the R factor of `B`.
fn half_logdet_gram(b: DenseMatrix) -> Result<f64> {
    let n = b.ncols();
    let r = b.qr().r();
    let mut out = 0.0;
    for k in 0..n {
        let d = r[(k, k)].abs();
        if !(d > 0.0) {
            return Err(Error::RankDeficient { pivot: d, tol: 0.0 });
        }
        out += d.ln();
    }
    Ok(out)
}

fn value_from(ax: &DenseMatrix, sigma: &[f64], q: f64) -> Result<f64> {
    let n = ax.ncols() as f64;
    let e = 1.0 - 2.0 / q;
    let mut b = ax.clone();
    for (i, mut row) in b.row_iter_mut().enumerate() {
        row *= sigma[i].powf(0.5 * e);
    }
    Ok(half_logdet_gram(b)? - 0.5 * e * n)
}

fn gradient_from(ax: &DenseMatrix, sigma: &[f64]) -> Vec<f64> {
    let (m, n) = ax.shape();
    let mut g = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            g[j] -= ax[(i, j)] * sigma[i];
        }
    }
    g
}

pub fn psi_value(a: &DenseMatrix, b: &[f64], x: &[f64], q: f64, eps: f64) -> Result<f64> {
    let (ax, sigma) = barrier_state(a, b, x, q, eps)?;
    value_from(&ax, &sigma, q)
}

pub fn psi_gradient(a: &DenseMatrix, b: &[f64], x: &[f64], q: f64, eps: f64) -> Result<Vec<f64>> {
    let (ax, sigma) = barrier_state(a, b, x, q, eps)?;
    Ok(gradient_from(&ax, &sigma))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSummary {
    pub min: f64,
    pub max: f64,
}

/// Everything computed at one point.
#[derive(Debug, Clone)]
pub struct BarrierEval {
    pub psi: f64,
    pub grad: Vec<f64>,
    pub hess: DMatrix<f64>,
    pub sigma: Vec<f64>,
    /// Eigenvalue range of `N_x`.
    pub n_spectrum: SpectrumSummary,
    pub q: f64,
    /// `∇ψᵀ(∇²ψ)⁻¹∇ψ`.
    pub force: f64,
    /// Eigenvalue range of `∇²ψ` relative to `A_xᵀΣA_x`.
    pub sandwich: SpectrumSummary,
}

fn spectrum(mat: DMatrix<f64>) -> SpectrumSummary {
    let eig = SymmetricEigen::new(mat).eigenvalues;
    SpectrumSummary {
        min: eig.iter().cloned().fold(f64::INFINITY, f64::min),
        max: eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Value, gradient and Hessian, with the sandwich
/// `A_xᵀΣA_x ⪯ ∇²ψ ⪯ (1+q)A_xᵀΣA_x`, the spectrum of `N_x` and the force
/// bound `∇ψᵀ(∇²ψ)⁻¹∇ψ ≤ n` checked on every call.
pub fn psi_hessian(a: &DenseMatrix, b: &[f64], x: &[f64], q: f64, eps: f64) -> Result<BarrierEval> {
    let (ax, sigma) = barrier_state(a, b, x, q, eps)?;
    let (m, n) = ax.shape();
    let e = 1.0 - 2.0 / q;
    // row scale W^{1−2/q}, normalized in the log domain
    let logs: Vec<f64> = sigma.iter().map(|w| e * w.ln()).collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let d: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let bundle = projection_bundle(&unit_columns(&ax), &d)?;
    let lbar = &bundle.norm_lap;
    let mut shifted = DMatrix::<f64>::identity(m, m) - lbar * e;
    symmetrize(&mut shifted);
    let inv_lbar = shifted
        .clone()
        .lu()
        .solve(lbar)
        .ok_or(Error::RankDeficient { pivot: 0.0, tol: 0.0 })?;
    let mut nmat = inv_lbar * 2.0;
    symmetrize(&mut nmat);
    let n_spectrum = spectrum(nmat.clone());
    if n_spectrum.min < -1e-8 || n_spectrum.max > q + 1e-8 {
        return Err(Error::InvariantViolated(format!(
            "N_x spectrum [{:e}, {:e}] outside [0, {q}]",
            n_spectrum.min, n_spectrum.max
        )));
    }
    // C = Σ^{1/2}A_x, H = Cᵀ(I + N)C, G = CᵀC
    let mut c = ax.clone();
    for (i, mut row) in c.row_iter_mut().enumerate() {
        row *= sigma[i].sqrt();
    }
    let core = DMatrix::<f64>::identity(m, m) + &nmat;
    let mut hess = c.transpose() * &core * &c;
    symmetrize(&mut hess);
    let mut base = c.transpose() * &c;
    symmetrize(&mut base);
    let chol = base
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient { pivot: 0.0, tol: 0.0 })?;
    let l = chol.l();
    let linv = l
        .clone()
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or(Error::RankDeficient { pivot: 0.0, tol: 0.0 })?;
    let mut rel = &linv * &hess * linv.transpose();
    symmetrize(&mut rel);
    let sandwich = spectrum(rel);
    if sandwich.min < 1.0 - CHECK_TOL || sandwich.max > (1.0 + q) * (1.0 + CHECK_TOL) {
        return Err(Error::InvariantViolated(format!(
            "Hessian sandwich [{:e}, {:e}] outside [1, {}]",
            sandwich.min,
            sandwich.max,
            1.0 + q
        )));
    }
    let grad = gradient_from(&ax, &sigma);
    let hchol = hess
        .clone()
        .cholesky()
        .ok_or(Error::RankDeficient { pivot: 0.0, tol: 0.0 })?;
    let gv = DVector::from_column_slice(&grad);
    let force = gv.dot(&hchol.solve(&gv));
    if force > n as f64 + CHECK_TOL {
        return Err(Error::InvariantViolated(format!("force {force} exceeds {n}")));
    }
    let psi = value_from(&ax, &sigma, q)?;
    Ok(BarrierEval { psi, grad, hess, sigma, n_spectrum, q, force, sandwich })
}

/// Result of a third-derivative probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeReport {
    /// `|D³ψ[h,h,h]| / ‖h‖³_H`.
    pub ratio: f64,
    /// `2v_q`.
    pub bound: f64,
    pub within: bool,
}

/// Finite-difference step, in units of the `H`-norm.
pub const PROBE_STEP: f64 = 1e-4;
/// Relative slack on the probe bound for finite-difference error.
pub const PROBE_TOL: f64 = 0.05;

/// Estimates `|D³ψ(x)[h,h,h]|` by central differences of `hᵀ∇²ψ(x+τh)h`
/// after normalizing `h` to unit `∇²ψ(x)`-norm.
pub fn self_concordance_probe(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    h: &[f64],
    q: f64,
    eps: f64,
) -> Result<ProbeReport> {
    let at = psi_hessian(a, b, x, q, eps)?;
    let hv = DVector::from_column_slice(h);
    let hn = hv.dot(&(&at.hess * &hv)).sqrt();
    if !(hn > 0.0) {
        return Err(Error::Validation("probe direction has zero length".into()));
    }
    let u = hv / hn;
    let quad = |tau: f64| -> Result<f64> {
        let xt: Vec<f64> = x.iter().zip(u.iter()).map(|(x, u)| x + tau * u).collect();
        let ev = psi_hessian(a, b, &xt, q, eps)?;
        Ok(u.dot(&(&ev.hess * &u)))
    };
    let d3 = (quad(PROBE_STEP)? - quad(-PROBE_STEP)?) / (2.0 * PROBE_STEP);
    let ratio = d3.abs();
    let bound = 2.0 * self_concordance_constant(q, a.nrows());
    Ok(ProbeReport { ratio, bound, within: ratio <= bound * (1.0 + PROBE_TOL) })
}

/// Fraction of `x ± v` with `vᵀ∇²ψ(x)v = radius²` that stay interior, over
/// `trials` random directions.
pub fn dikin_interior_rate(
    a: &DenseMatrix,
    b: &[f64],
    x: &[f64],
    hess: &DMatrix<f64>,
    radius: f64,
    trials: usize,
    seed: u64,
) -> f64 {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n = x.len();
    let mut inside = 0usize;
    for _ in 0..trials {
        let dir = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let len = dir.dot(&(hess * &dir)).sqrt();
        if !(len > 0.0) {
            continue;
        }
        let v = dir * (radius / len);
        let ok = [1.0, -1.0].iter().all(|sgn| {
            let xt: Vec<f64> = x.iter().zip(v.iter()).map(|(x, v)| x + sgn * v).collect();
            slacks(a, b, &xt).is_ok()
        });
        if ok {
            inside += 1;
        }
    }
    inside as f64 / trials.max(1) as f64
}
