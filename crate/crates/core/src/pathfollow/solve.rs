use std::time::Instant;

use crate::error::{Error, Result};
use crate::lewis::compute_initial_weight_with;
use crate::lewis::LewisParams;

use super::chasing::{chasing_step, log_potential};
use super::config::{PathConfig, Profile};
use super::newton::{
    mixed_norm, newton_step_and_centrality, rescaled_matrix, weight_function_warm, NewtonStep,
    StepReport,
};
use super::problem::LpProblem;

/// Iterate of the path-following method.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState {
    pub x: Vec<f64>,
    pub w: Vec<f64>,
    pub t: f64,
    /// Lewis part of the last weight-function evaluation, used as warm start.
    pub lewis: Vec<f64>,
    pub last_report: Option<StepReport>,
}

/// Counters and diagnostics collected over a solve.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Centering steps taken.
    pub iterations: usize,
    pub t_steps: usize,
    pub phase1_iterations: usize,
    pub phase2_iterations: usize,
    /// Weight-function evaluations.
    pub weight_solves: usize,
    /// Normal-equation factorizations.
    pub linear_solves: usize,
    /// deltaHat before each centering step.
    pub delta_history: Vec<f64>,
    /// Largest `‖log d_{k+1} − log d_k‖∞` for `d = (wφ″)⁻¹`.
    pub max_drift: f64,
    /// Largest `‖log g(x) − log w‖∞` seen after a weight update.
    pub max_weight_gap: f64,
    pub final_delta_hat: f64,
    pub final_t: f64,
    /// `‖w‖₁ / t` at exit.
    pub gap_bound: f64,
    pub u_stat: f64,
}

/// What one centering step did, beyond the new state.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteringInfo {
    pub weight_move: f64,
    pub drift: f64,
    pub weight_gap: f64,
    pub newton_scale: f64,
    /// `‖log g(x_new) − log w_new‖∞ ≤ K`.
    pub within_bound: bool,
}

/// One Newton step in `x` and one chase step in `log w`.
pub fn centering_inexact(
    problem: &LpProblem,
    state: &PathState,
    k_bound: f64,
    cfg: &PathConfig,
    seed: u64,
) -> Result<PathState> {
    let step = newton_step_and_centrality(problem, &state.x, &state.w, state.t, cfg.cnorm)?;
    let (next, _) = centering_step(problem, state, &step, k_bound, cfg, seed)?;
    Ok(next)
}

pub fn centering_step(
    problem: &LpProblem,
    state: &PathState,
    step: &NewtonStep,
    k_bound: f64,
    cfg: &PathConfig,
    seed: u64,
) -> Result<(PathState, CenteringInfo)> {
    let m = problem.m();
    let delta = step.report.delta_hat;
    let mut theta = if step.report.step_inf_norm > cfg.newton_cap {
        cfg.newton_cap / step.report.step_inf_norm
    } else {
        1.0
    };
    let mut x_new: Vec<f64>;
    loop {
        x_new = state.x.iter().zip(&step.h).map(|(x, h)| x + theta * h).collect();
        if problem.in_domain(&x_new) {
            break;
        }
        theta *= 0.5;
        if theta < 1e-12 {
            return Err(Error::OutOfDomain { index: 0, value: f64::NAN });
        }
    }
    let warm = if state.lewis.len() == m { Some(state.lewis.as_slice()) } else { None };
    let (g_new, lewis_new) = weight_function_warm(problem, &x_new, cfg, warm, seed)?;
    let z: Vec<f64> = g_new.iter().map(|v| v.ln()).collect();
    let xlog: Vec<f64> = state.w.iter().map(|v| v.ln()).collect();
    let chase = cfg.chasing();
    let delta_log: Vec<f64> = match cfg.profile {
        Profile::Strict => {
            let radius = (1.0 - 6.0 / (7.0 * cfg.ck)) * delta;
            chasing_step(&xlog, &z, radius, &state.w, &chase, cfg.cnorm)
        }
        Profile::Practical => {
            let gap: Vec<f64> = z.iter().zip(&xlog).map(|(z, x)| z - x).collect();
            let inf = gap.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
            if inf <= cfg.lazy_gap {
                vec![0.0; m]
            } else {
                let s = if inf > cfg.weight_cap { cfg.weight_cap / inf } else { 1.0 };
                gap.iter().map(|v| s * v).collect()
            }
        }
    };
    let w_new: Vec<f64> = state.w.iter().zip(&delta_log).map(|(w, d)| w * d.exp()).collect();
    let weight_move = mixed_norm(&delta_log, &state.w, cfg.cnorm);
    let after: Vec<f64> = z.iter().zip(&w_new).map(|(z, w)| z - w.ln()).collect();
    let weight_gap = after.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let bv_new = problem.barrier_vectors(&x_new)?;
    let mut drift: f64 = 0.0;
    for i in 0..m {
        let old = -(state.w[i].ln() + step.barrier.d2[i].ln());
        let new = -(w_new[i].ln() + bv_new.d2[i].ln());
        drift = drift.max((new - old).abs());
    }
    let mut report = step.report.clone();
    report.weight_move_norm = weight_move;
    report.phi_potential = log_potential(&after, chase.mu).exp();
    Ok((
        PathState { x: x_new, w: w_new, t: state.t, lewis: lewis_new, last_report: Some(report) },
        CenteringInfo {
            weight_move,
            drift,
            weight_gap,
            newton_scale: theta,
            within_bound: weight_gap <= k_bound,
        },
    ))
}

fn median3(lo: f64, v: f64, hi: f64) -> f64 {
    v.max(lo).min(hi)
}

fn next_t(t: f64, t_end: f64, alpha: f64) -> f64 {
    median3((1.0 - alpha) * t, t_end, (1.0 + alpha) * t)
}

/// Follows the weighted path from `t_start` to `t_end` and polishes until
/// deltaHat ≤ eps.
#[allow(clippy::too_many_arguments)]
pub fn path_following(
    problem: &LpProblem,
    state: &PathState,
    t_start: f64,
    t_end: f64,
    eps: f64,
    cfg: &PathConfig,
    seed: u64,
    stats: &mut SolveStats,
) -> Result<PathState> {
    let started = Instant::now();
    let mut st = state.clone();
    st.t = t_start;
    let target = eps.max(cfg.min_centrality);
    let polish_budget = (4.0 * cfg.ck * (1.0 / target).ln()).ceil().max(1.0) as usize;
    let mut polish_used = 0usize;
    let mut bound: Option<(f64, f64)> = None;
    let cg2 = cfg.c_gamma() * cfg.c_gamma();
    let mut k = 0u64;
    loop {
        if stats.iterations >= cfg.max_iterations {
            return Err(Error::IterationCap(cfg.max_iterations));
        }
        if let Some(limit) = cfg.time_budget_secs {
            if started.elapsed().as_secs_f64() > limit {
                return Err(Error::TimeBudget(limit));
            }
        }
        let step = newton_step_and_centrality(problem, &st.x, &st.w, st.t, cfg.cnorm)?;
        stats.linear_solves += 1;
        let delta = step.report.delta_hat;
        let floor = step.report.noise_floor;
        if let Some((before, limit)) = bound {
            if delta > limit + floor {
                return Err(Error::CenteringDiverged { before, after: delta });
            }
        }
        stats.final_delta_hat = delta;
        if st.t == t_end {
            if delta <= target.max(floor) {
                st.last_report = Some(step.report);
                break;
            }
            if polish_used >= polish_budget {
                return Err(Error::NotConverged { residual: delta, limit: target });
            }
            polish_used += 1;
        } else if cfg.profile == Profile::Practical && delta <= cfg.threshold.max(floor) {
            let t_new = next_t(st.t, t_end, cfg.alpha);
            let a = (t_new / st.t - 1.0).abs();
            let wsum: f64 = st.w.iter().sum();
            bound = Some((delta, (1.0 + a) * delta + a * (1.0 + cfg.cnorm * wsum.sqrt()) + 1e-9));
            st.t = t_new;
            stats.t_steps += 1;
            continue;
        }
        stats.delta_history.push(delta);
        let (next, info) = centering_step(problem, &st, &step, cfg.k_bound, cfg, seed ^ k)?;
        k += 1;
        stats.iterations += 1;
        stats.weight_solves += 1;
        stats.max_drift = stats.max_drift.max(info.drift);
        stats.max_weight_gap = stats.max_weight_gap.max(info.weight_gap);
        st = next;
        let e = info.weight_move;
        let mut limit = cg2 * (1.0 + 4.0 * e) * (delta + e) + 1e-9;
        if cfg.profile == Profile::Strict && st.t != t_end {
            let t_new = next_t(st.t, t_end, cfg.alpha);
            let a = (t_new / st.t - 1.0).abs();
            let wsum: f64 = st.w.iter().sum();
            limit = (1.0 + a) * limit + a * (1.0 + cfg.cnorm * wsum.sqrt());
            st.t = t_new;
            stats.t_steps += 1;
        }
        bound = Some((delta, limit));
    }
    stats.final_t = st.t;
    stats.gap_bound = st.w.iter().sum::<f64>() / st.t;
    Ok(st)
}

/// Result of [`lp_solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub state: PathState,
    pub stats: SolveStats,
}

/// Phase constants `(t1, t2, eps1, eps2)`.
pub fn phase_constants(m: usize, u: f64, eps: f64) -> (f64, f64, f64, f64) {
    let mf = m as f64;
    let lnm = mf.ln().max(1.0);
    let t1 = 1.0 / (2f64.powi(27) * mf.powf(1.5) * u * u * lnm.powi(4));
    let t2 = 2.0 * mf / eps;
    let eps1 = 1.0 / (2f64.powi(18) * lnm.powi(3));
    let eps2 = eps / (8.0 * u * u);
    (t1, t2, eps1, eps2)
}

/// Initial weights `g(x0)` and the centered starting state for cost `−wφ′(x0)`.
pub fn initial_state(
    problem: &LpProblem,
    x0: &[f64],
    cfg: &PathConfig,
    seed: u64,
) -> Result<(PathState, Vec<f64>)> {
    let bv = problem.barrier_vectors(x0)?;
    let ax = rescaled_matrix(&problem.a, &bv.d2);
    let params = LewisParams {
        p: cfg.p,
        eps: cfg.weight_tol.min(0.25),
        seed,
        mode: cfg.weight_mode,
        apx: cfg.apx,
    };
    let lewis = compute_initial_weight_with(&ax, &params)?;
    let w: Vec<f64> = lewis.iter().map(|v| v + cfg.c0).collect();
    let d: Vec<f64> = w.iter().zip(&bv.d1).map(|(w, d1)| -w * d1).collect();
    Ok((PathState { x: x0.to_vec(), w, t: 1.0, lewis, last_report: None }, d))
}

/// Two-phase solve ending at path parameter `t_final` with centrality `eps_final`.
pub fn solve_to(
    problem: &LpProblem,
    x0: &[f64],
    t_final: f64,
    eps_final: f64,
    t1: f64,
    eps1: f64,
    cfg: &PathConfig,
    seed: u64,
) -> Result<(PathState, SolveStats)> {
    problem.check_start(x0)?;
    let mut stats = SolveStats { u_stat: problem.u_stat(x0), ..Default::default() };
    let (st0, d) = initial_state(problem, x0, cfg, seed)?;
    stats.weight_solves += 1;
    let aux = problem.with_cost(d);
    let st1 = path_following(&aux, &st0, 1.0, t1, eps1, cfg, seed, &mut stats)?;
    stats.phase1_iterations = stats.iterations;
    let st2 = path_following(problem, &st1, t1, t_final, eps_final, cfg, seed.wrapping_add(1), &mut stats)?;
    stats.phase2_iterations = stats.iterations - stats.phase1_iterations;
    Ok((st2, stats))
}

/// Minimizes `cᵀx` over `{Aᵀx = b, l ≤ x ≤ u}` from a strictly feasible `x0`.
pub fn lp_solve(
    problem: &LpProblem,
    x0: &[f64],
    eps: f64,
    cfg: &PathConfig,
    seed: u64,
) -> Result<LpSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidTolerance(eps));
    }
    let u = problem.u_stat(x0);
    let (t1, t2, eps1, eps2) = phase_constants(problem.m(), u, eps);
    let (state, stats) = solve_to(problem, x0, t2, eps2, t1, eps1, cfg, seed)?;
    Ok(LpSolution { objective: problem.objective(&state.x), x: state.x.clone(), state, stats })
}

/// Dual point of a standard-form problem.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub y: Vec<f64>,
    /// `bᵀy`.
    pub bound: f64,
    pub primal: LpSolution,
}

/// For `lower = 0`, `upper = +∞`: returns `y` with `Ay ≤ c` and
/// `bᵀy ≥ max_{Ay ≤ c} bᵀy − eps`, read off as `η/t` at `t = 3n/eps`.
pub fn dual_solve(
    problem: &LpProblem,
    x0: &[f64],
    eps: f64,
    cfg: &PathConfig,
    seed: u64,
) -> Result<DualSolution> {
    if problem.lower.iter().any(|&l| l != 0.0) || problem.upper.iter().any(|u| u.is_finite()) {
        return Err(Error::Validation("dual extraction needs lower = 0 and upper = +inf".into()));
    }
    if !(eps > 0.0) {
        return Err(Error::InvalidTolerance(eps));
    }
    let u = problem.u_stat(x0);
    let (t1, _, eps1, _) = phase_constants(problem.m(), u, eps);
    let t_final = 3.0 * problem.n() as f64 / eps;
    let (state, stats) = solve_to(problem, x0, t_final, 0.5f64.min(cfg.threshold), t1, eps1, cfg, seed)?;
    let step = newton_step_and_centrality(problem, &state.x, &state.w, state.t, cfg.cnorm)?;
    let y: Vec<f64> = step.report.eta.iter().map(|e| e / state.t).collect();
    let bound = super::problem::compensated_dot(&problem.b, &y);
    let primal = LpSolution { objective: problem.objective(&state.x), x: state.x.clone(), state, stats };
    Ok(DualSolution { y, bound, primal })
}
