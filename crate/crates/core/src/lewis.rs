//! ℓp Lewis weights: the positive `w` with `w = σ(W^{1/2−1/p}A)`.
//!
//! Row scalings `w^{1−2/p}` are formed in the log domain and normalized by
//! their maximum, which leaves every leverage score unchanged and keeps small
//! `p` (exponents near `−2/p`) inside floating-point range.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{
    factor_normal_equations, leverage_scores, leverage_scores_qr, projection_bundle,
    sketched_leverage_scores, DenseMatrix, NormalFactor, DEFAULT_C_JL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightMode {
    #[default]
    Exact,
    Approximate,
}

/// Settings of the sketched (approximate) weight iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApxOptions {
    /// Clamp radius around the warm start; `None` uses `p²(4−p)/2²⁰`.
    pub clamp: Option<f64>,
    /// Upper limit on sketch vectors per leverage estimate.
    pub max_sketch: usize,
    pub c_jl: f64,
    /// Use exact leverage scores in place of the sketch (noise-free backend).
    pub exact_scores: bool,
}

impl Default for ApxOptions {
    fn default() -> Self {
        ApxOptions { clamp: None, max_sketch: 4096, c_jl: DEFAULT_C_JL, exact_scores: false }
    }
}

impl ApxOptions {
    /// Relaxed basin used when approximate weights drive a homotopy or solve.
    pub fn practical() -> Self {
        ApxOptions { clamp: Some(0.05), ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LewisParams {
    pub p: f64,
    pub eps: f64,
    pub seed: u64,
    pub mode: WeightMode,
    pub apx: ApxOptions,
}

impl LewisParams {
    pub fn exact(p: f64, eps: f64) -> Self {
        LewisParams { p, eps, seed: 0, mode: WeightMode::Exact, apx: ApxOptions::practical() }
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 0.0) || !p.is_finite() {
        return Err(Error::InvalidP(p));
    }
    Ok(())
}

fn check_weights(a: &DenseMatrix, w: &[f64]) -> Result<()> {
    if w.len() != a.nrows() {
        return Err(Error::Validation(format!(
            "weight length {} does not match {} rows",
            w.len(),
            a.nrows()
        )));
    }
    if w.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::Validation("weights must be positive and finite".into()));
    }
    Ok(())
}

/// Normalized row scale `w^{1−2/p}` and the log of the factor removed.
fn lewis_scale(w: &[f64], p: f64) -> (Vec<f64>, f64) {
    let e = 1.0 - 2.0 / p;
    let logs: Vec<f64> = w.iter().map(|v| e * v.ln()).collect();
    let shift = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (logs.iter().map(|l| (l - shift).exp()).collect(), shift)
}

fn lewis_factor(a: &DenseMatrix, w: &[f64], p: f64) -> Result<(Vec<f64>, NormalFactor, f64)> {
    let (d, shift) = lewis_scale(w, p);
    let f = factor_normal_equations(a, &d)?;
    Ok((d, f, shift))
}

/// `σ(W^{1/2−1/p}A)`.
pub fn lewis_sigma(a: &DenseMatrix, w: &[f64], p: f64) -> Result<Vec<f64>> {
    let (d, _) = lewis_scale(w, p);
    leverage_scores_qr(a, &d)
}

/// `−(1−2/p)⁻¹ logdet(AᵀW^{1−2/p}A)`.
pub fn volumetric_potential(a: &DenseMatrix, w: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if p == 2.0 {
        return Err(Error::InvalidP(p));
    }
    check_weights(a, w)?;
    let (_, f, shift) = lewis_factor(a, w, p)?;
    let logdet = f.logdet() + shift * a.ncols() as f64;
    Ok(-logdet / (1.0 - 2.0 / p))
}

/// `−w⁻¹σ(W^{1/2−1/p}A)`.
pub fn volumetric_gradient(a: &DenseMatrix, w: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    if p == 2.0 {
        return Err(Error::InvalidP(p));
    }
    check_weights(a, w)?;
    let s = lewis_sigma(a, w, p)?;
    Ok(s.iter().zip(w).map(|(s, w)| -s / w).collect())
}

fn residual_of(sigma: &[f64], w: &[f64]) -> f64 {
    sigma.iter().zip(w).map(|(s, w)| ((s - w) / w).abs()).fold(0.0, f64::max)
}

/// `‖w⁻¹(σ(W^{1/2−1/p}A) − w)‖∞`.
pub fn lewis_residual(a: &DenseMatrix, w: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    check_weights(a, w)?;
    let s = lewis_sigma(a, w, p)?;
    Ok(residual_of(&s, w))
}

/// Fixed-point rounding `ŵ_i = (a_iᵀ(AᵀW^{1−2/p}A)⁻¹a_i)^{p/2} = σ_i^{p/2} w_i^{1−p/2}`.
fn round_weights(sigma: &[f64], w: &[f64], p: f64) -> Vec<f64> {
    sigma
        .iter()
        .zip(w)
        .map(|(s, w)| (0.5 * p * s.ln() + (1.0 - 0.5 * p) * w.ln()).exp())
        .collect()
}

fn median3(lo: f64, v: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

/// Iteration budget of the exact weight solver.
pub fn exact_iteration_count(p: f64, n: usize, eps: f64) -> usize {
    let t = 32.0 * (p / 2.0 + 2.0 / p) * (8.0 * n as f64 * (1.0 + 2.0 / p) / eps).ln();
    (t.ceil() as usize).max(1)
}

/// Basin radius of the exact weight solver.
pub fn exact_radius(p: f64) -> f64 {
    p / (20.0 * (p + 2.0))
}

pub fn apx_radius(p: f64) -> f64 {
    p * p * (4.0 - p) / 1048576.0
}

fn step_size(p: f64) -> f64 {
    1.0 / f64::max(4.0, 8.0 / p)
}

/// Clamped gradient iteration around `w0` followed by fixed-point rounding.
///
/// The loop stops early once the residual of the current iterate is a
/// quarter of `eps` (scaled for `p > 2`); the σ needed for that check is the
/// one the update consumes anyway.
pub fn compute_exact_weight(a: &DenseMatrix, p: f64, w0: &[f64], eps: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    check_weights(a, w0)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidTolerance(eps));
    }
    if p == 2.0 {
        return leverage_scores(a, &vec![1.0; a.nrows()]);
    }
    let (sigma, w) = exact_iterate(a, p, w0, eps)?;
    finish(a, p, &sigma, &w, eps)
}

/// Clamped fixed-point iteration around `w0`; returns the final `(σ, w)`.
fn exact_iterate(a: &DenseMatrix, p: f64, w0: &[f64], eps: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let r = exact_radius(p);
    let step = step_size(p);
    let t_max = exact_iteration_count(p, a.ncols(), eps);
    let stop = eps / (4.0 * f64::max(1.0, p / 2.0));
    let mut w = w0.to_vec();
    let mut sigma = lewis_sigma(a, &w, p)?;
    for _ in 0..t_max {
        if residual_of(&sigma, &w) <= stop {
            break;
        }
        for i in 0..w.len() {
            let g = w0[i] - w0[i] / w[i] * sigma[i];
            w[i] = median3((1.0 - r) * w0[i], w[i] - step * g, (1.0 + r) * w0[i]);
        }
        sigma = lewis_sigma(a, &w, p)?;
    }
    Ok((sigma, w))
}

/// [`compute_exact_weight`] re-centred on its own output up to `restarts`
/// times, for warm starts that lie outside the clamp radius.
pub fn compute_exact_weight_restarted(
    a: &DenseMatrix,
    p: f64,
    w0: &[f64],
    eps: f64,
    restarts: usize,
) -> Result<Vec<f64>> {
    let mut start = w0.to_vec();
    for k in 0..=restarts {
        match compute_exact_weight(a, p, &start, eps) {
            Err(Error::NotConverged { .. }) if k < restarts => {
                let (sigma, w) = exact_iterate(a, p, &start, eps)?;
                start = round_weights(&sigma, &w, p);
            }
            other => return other,
        }
    }
    unreachable!()
}

fn finish(a: &DenseMatrix, p: f64, sigma: &[f64], w: &[f64], eps: f64) -> Result<Vec<f64>> {
    let out = round_weights(sigma, w, p);
    let res = lewis_residual(a, &out, p)?;
    if res > 3.0 * eps || !res.is_finite() {
        return Err(Error::NotConverged { residual: res, limit: 3.0 * eps });
    }
    Ok(out)
}

/// Sketched variant: σ is estimated by JL projections at tolerance
/// `(4−p)eps/256`, capped at `opts.max_sketch` vectors.
pub fn compute_apx_weight(
    a: &DenseMatrix,
    p: f64,
    w0: &[f64],
    eps: f64,
    seed: u64,
    opts: &ApxOptions,
) -> Result<Vec<f64>> {
    check_p(p)?;
    if p >= 4.0 {
        return Err(Error::InvalidP(p));
    }
    check_weights(a, w0)?;
    let cap = 2.0 / p - (1.0 - 2.0 / p).abs();
    if !(eps > 0.0 && eps < 1.0 && eps < cap) {
        return Err(Error::InvalidTolerance(eps));
    }
    let m = a.nrows();
    let n = a.ncols();
    let r = opts.clamp.unwrap_or_else(|| apx_radius(p));
    let delta = (4.0 - p) * eps / 256.0;
    let t = 80.0 * (p / 2.0 + 2.0 / p) * (p * n as f64 / (32.0 * eps)).ln();
    let t_max = (t.ceil().max(1.0)) as usize;
    let step = step_size(p);
    // sketch tolerance giving at most max_sketch vectors
    let floor = (opts.c_jl * (m as f64).ln().max(1e-12) / opts.max_sketch as f64).sqrt();
    let sketch_eps = delta.max(floor).min(0.5);
    let mut w = w0.to_vec();
    let iters = t_max.saturating_sub(1);
    // sketch noise is averaged out over the second half of the iterates
    let burn = iters / 2;
    let mut avg = vec![0.0; m];
    for j in 0..iters {
        let (d, _) = lewis_scale(&w, p);
        let s = if opts.exact_scores {
            leverage_scores_qr(a, &d)?
        } else {
            sketched_leverage_scores(a, &d, sketch_eps, mix_seed(seed, j as u64), opts.c_jl)?
        };
        for i in 0..m {
            let g = w0[i] - w0[i] / w[i] * s[i];
            w[i] = median3((1.0 - r) * w0[i], w[i] - step * g, (1.0 + r) * w0[i]);
        }
        if j >= burn {
            for (s, v) in avg.iter_mut().zip(&w) {
                *s += v;
            }
        }
    }
    if iters > burn && !opts.exact_scores {
        let cnt = (iters - burn) as f64;
        w = avg.iter().map(|s| s / cnt).collect();
    }
    let sigma = lewis_sigma(a, &w, p)?;
    finish(a, p, &sigma, &w, eps)
}

fn mix_seed(seed: u64, j: u64) -> u64 {
    let mut z = seed ^ j.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Homotopy in `p` from the leverage scores at `p = 2` to `p_target`.
pub fn compute_initial_weight(
    a: &DenseMatrix,
    p_target: f64,
    eps: f64,
    mode: WeightMode,
    seed: u64,
) -> Result<Vec<f64>> {
    let params = LewisParams { p: p_target, eps, seed, mode, apx: ApxOptions::practical() };
    compute_initial_weight_with(a, &params)
}

pub fn compute_initial_weight_with(a: &DenseMatrix, params: &LewisParams) -> Result<Vec<f64>> {
    let p_target = params.p;
    check_p(p_target)?;
    if params.mode == WeightMode::Approximate && p_target >= 4.0 {
        return Err(Error::InvalidP(p_target));
    }
    let (m, n) = a.shape();
    let mut w = leverage_scores(a, &vec![1.0; m])?;
    if p_target == 2.0 {
        return Ok(w);
    }
    let log_term = (m as f64 * std::f64::consts::E.powi(2) / n as f64).ln();
    let mut p = 2.0;
    let mut k = 0u64;
    while p != p_target {
        let r = match params.mode {
            WeightMode::Exact => exact_radius(p),
            WeightMode::Approximate => params.apx.clamp.unwrap_or_else(|| apx_radius(p)),
        };
        let h = f64::min(2.0, p) / ((n as f64).sqrt() * log_term) * r;
        let next = median3(p - h, p_target, p + h);
        let warm: Vec<f64> = w.iter().map(|v| v.powf(next / p)).collect();
        w = solve_at(a, next, &warm, r / 4.0, params, mix_seed(params.seed, k))?;
        p = next;
        k += 1;
    }
    solve_at(a, p_target, &w, params.eps, params, mix_seed(params.seed, k))
}

fn solve_at(
    a: &DenseMatrix,
    p: f64,
    w0: &[f64],
    eps: f64,
    params: &LewisParams,
    seed: u64,
) -> Result<Vec<f64>> {
    match params.mode {
        WeightMode::Exact => compute_exact_weight(a, p, w0, eps),
        WeightMode::Approximate => compute_apx_weight(a, p, w0, eps, seed, &params.apx),
    }
}

/// Lewis weights from scratch in exact mode.
pub fn lewis_weights(a: &DenseMatrix, p: f64, eps: f64) -> Result<Vec<f64>> {
    compute_initial_weight(a, p, eps, WeightMode::Exact, 0)
}

/// `J_w(v)h = 2W(W − (1−2/p)Λ)⁻¹ΛV⁻¹h` for `w = w_p(VA)`.
pub fn lewis_jacobian_apply(a: &DenseMatrix, v: &[f64], h: &[f64], p: f64) -> Result<Vec<f64>> {
    check_p(p)?;
    if p == 2.0 {
        return Err(Error::InvalidP(p));
    }
    check_weights(a, v)?;
    let m = a.nrows();
    let va = scale_rows(a, v);
    let w = lewis_weights(&va, p, 1e-12)?;
    let (d, _) = lewis_scale(&w, p);
    let bundle = projection_bundle(&va, &d)?;
    let c = 1.0 - 2.0 / p;
    let mut sys = -c * &bundle.lap;
    for i in 0..m {
        sys[(i, i)] += w[i];
    }
    let hv: Vec<f64> = h.iter().zip(v).map(|(h, v)| h / v).collect();
    let rhs = &bundle.lap * nalgebra::DVector::from_column_slice(&hv);
    let y = sys
        .lu()
        .solve(&rhs)
        .ok_or(Error::RankDeficient { pivot: 0.0, tol: 0.0 })?;
    Ok((0..m).map(|i| 2.0 * w[i] * y[i]).collect())
}

/// `diag(v)·A`.
pub fn scale_rows(a: &DenseMatrix, v: &[f64]) -> DenseMatrix {
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row *= v[i];
    }
    out
}

/// Dense `m × m` Jacobian, used by diagnostics.
pub fn lewis_jacobian(a: &DenseMatrix, v: &[f64], p: f64) -> Result<DMatrix<f64>> {
    let m = a.nrows();
    let mut j = DMatrix::zeros(m, m);
    for k in 0..m {
        let mut e = vec![0.0; m];
        e[k] = 1.0;
        let col = lewis_jacobian_apply(a, v, &e, p)?;
        for i in 0..m {
            j[(i, k)] = col[i];
        }
    }
    Ok(j)
}
