use crate::error::{Error, Result};
use crate::lewis::{
    compute_apx_weight, compute_exact_weight_restarted, compute_initial_weight_with, LewisParams,
};

/// Re-centred exact solves tried before falling back to the homotopy.
const WARM_RESTARTS: usize = 8;
use nalgebra::DVector;

use crate::linalg::{DenseMatrix, PIVOT_TOL};

use super::config::PathConfig;
use super::problem::{BarrierVectors, LpProblem};

/// `‖v‖∞ + C_norm·‖v‖_w`.
pub fn mixed_norm(v: &[f64], w: &[f64], cnorm: f64) -> f64 {
    let inf = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let wn: f64 = v.iter().zip(w).map(|(x, w)| w * x * x).sum();
    inf + cnorm * wn.sqrt()
}

/// `w`-weighted Euclidean norm.
pub fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    /// `‖√φ″·h_t‖_{w+∞}`.
    pub delta_hat: f64,
    pub eta: Vec<f64>,
    pub step_inf_norm: f64,
    pub weight_move_norm: f64,
    pub phi_potential: f64,
    /// deltaHat attainable at double precision given the slacks at `x`.
    pub noise_floor: f64,
}

/// Newton direction and the scaled projected gradient `P_{x,w}y`.
#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub report: StepReport,
    pub h: Vec<f64>,
    /// `√φ″·(−h)`, the projected scaled gradient.
    pub projected: Vec<f64>,
    pub barrier: BarrierVectors,
}

/// `A_x = Φ″(x)^{−1/2}A` with unit-norm columns.
///
/// Lewis weights are invariant under `A ↦ AS` for invertible `S`; the column
/// scaling keeps the rank test meaningful when slacks differ by many orders
/// of magnitude.
pub fn rescaled_matrix(a: &DenseMatrix, d2: &[f64]) -> DenseMatrix {
    let mut out = a.clone();
    for (i, mut row) in out.row_iter_mut().enumerate() {
        row /= d2[i].sqrt();
    }
    for mut col in out.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= nrm;
        }
    }
    out
}

/// `g(x) = w_p(A_x) + c0`, returning the Lewis part as well.
///
/// A warm start is tried first; if it lies outside the basin the homotopy
/// from `p = 2` is used instead.
pub fn weight_function_warm(
    problem: &LpProblem,
    x: &[f64],
    cfg: &PathConfig,
    warm: Option<&[f64]>,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let bv = problem.barrier_vectors(x)?;
    let ax = rescaled_matrix(&problem.a, &bv.d2);
    let tol = cfg.weight_tol.min(0.25);
    let params = LewisParams { p: cfg.p, eps: tol, seed, mode: cfg.weight_mode, apx: cfg.apx };
    let lewis = match warm {
        Some(w0) => {
            let attempt = match cfg.weight_mode {
                crate::lewis::WeightMode::Exact => {
                    compute_exact_weight_restarted(&ax, cfg.p, w0, tol, WARM_RESTARTS)
                }
                crate::lewis::WeightMode::Approximate => {
                    compute_apx_weight(&ax, cfg.p, w0, tol, seed, &cfg.apx)
                }
            };
            match attempt {
                Ok(w) => w,
                Err(Error::NotConverged { .. }) => compute_initial_weight_with(&ax, &params)?,
                Err(e) => return Err(e),
            }
        }
        None => compute_initial_weight_with(&ax, &params)?,
    };
    let g = lewis.iter().map(|v| v + cfg.c0).collect();
    Ok((g, lewis))
}

pub fn weight_function(problem: &LpProblem, x: &[f64], cfg: &PathConfig, seed: u64) -> Result<Vec<f64>> {
    Ok(weight_function_warm(problem, x, cfg, None, seed)?.0)
}

/// Projected Newton step `h_t` and its centrality surrogate at `(x, w, t)`.
pub fn newton_step_and_centrality(
    problem: &LpProblem,
    x: &[f64],
    w: &[f64],
    t: f64,
    cnorm: f64,
) -> Result<NewtonStep> {
    let (m, n) = problem.a.shape();
    let bv = problem.barrier_vectors(x)?;
    let a = &problem.a;
    // η = argmin ‖√w·y − Bη‖₂ with B = (wφ″)^{−1/2}A; the residual is √w
    // times the projected gradient. Householder QR keeps the residual accurate
    // even when the normal matrix is badly conditioned near a degenerate vertex.
    let mut y = vec![0.0; m];
    let mut yw = DVector::zeros(m);
    let mut b = a.clone();
    for i in 0..m {
        let sq = bv.d2[i].sqrt();
        y[i] = (t * problem.c[i] + w[i] * bv.d1[i]) / (w[i] * sq);
        let sw = w[i].sqrt();
        yw[i] = sw * y[i];
        let mut row = b.row_mut(i);
        row /= sw * sq;
    }
    let mut col_scale = vec![1.0; n];
    for (j, mut col) in b.column_iter_mut().enumerate() {
        let nrm = col.norm();
        if !(nrm > 0.0) {
            return Err(Error::RankDeficient { pivot: 0.0, tol: PIVOT_TOL });
        }
        col /= nrm;
        col_scale[j] = 1.0 / nrm;
    }
    let qr = b.qr();
    let r = qr.r();
    // the factorized matrix is B itself, so the test is on |R_kk|
    let max_piv = (0..n).map(|k| r[(k, k)].abs()).fold(0.0, f64::max);
    let tol = PIVOT_TOL * max_piv;
    for k in 0..n {
        let piv = r[(k, k)].abs();
        if !(piv > tol) {
            return Err(Error::RankDeficient { pivot: piv, tol });
        }
    }
    let q = qr.q();
    let qty = q.tr_mul(&yw);
    let fitted = &q * &qty;
    let coef = r.solve_upper_triangular(&qty).ok_or(Error::RankDeficient { pivot: 0.0, tol })?;
    let eta: Vec<f64> = (0..n).map(|j| coef[j] * col_scale[j]).collect();
    let mut projected = vec![0.0; m];
    let mut h = vec![0.0; m];
    for i in 0..m {
        let sq = bv.d2[i].sqrt();
        projected[i] = (yw[i] - fitted[i]) / w[i].sqrt();
        h[i] = -projected[i] / sq;
    }
    let delta_hat = mixed_norm(&projected, w, cnorm);
    // the projection itself loses about m·ε·‖√w·y‖₂ to cancellation
    let proj_err = 8.0 * m as f64 * f64::EPSILON * yw.norm();
    let noise: Vec<f64> =
        (0..m).map(|i| slack_resolution(problem, x, i) + proj_err / w[i].sqrt()).collect();
    let noise_floor = mixed_norm(&noise, w, cnorm);
    let step_inf_norm = projected.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(NewtonStep {
        report: StepReport {
            delta_hat,
            eta,
            step_inf_norm,
            weight_move_norm: 0.0,
            phi_potential: 0.0,
            noise_floor,
        },
        h,
        projected,
        barrier: bv,
    })
}

/// Relative rounding error of the slack of coordinate `i`, scaled up by a
/// safety factor.
fn slack_resolution(problem: &LpProblem, x: &[f64], i: usize) -> f64 {
    let (l, u, v) = (problem.lower[i], problem.upper[i], x[i]);
    let mut r: f64 = 0.0;
    if l.is_finite() {
        r = r.max((v.abs() + l.abs()) / (v - l));
    }
    if u.is_finite() {
        r = r.max((v.abs() + u.abs()) / (u - v));
    }
    64.0 * f64::EPSILON * r
}
