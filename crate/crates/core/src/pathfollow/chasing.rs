//! ℓ∞ chasing game with the soft-max potential `Φ_μ(v) = Σ(e^{μv_i} + e^{−μv_i})`.

use super::config::ChasingConfig;
use super::projection::project_mixed_ball;

/// `Φ_μ(v)`; may overflow to `+∞` for large `μ‖v‖∞`.
pub fn potential(v: &[f64], mu: f64) -> f64 {
    v.iter().map(|x| (mu * x).exp() + (-mu * x).exp()).sum()
}

/// `log Φ_μ(v)`, stable for any magnitude.
pub fn log_potential(v: &[f64], mu: f64) -> f64 {
    let top = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    let s: f64 = v
        .iter()
        .map(|x| (mu * (x - top)).exp() + (-mu * (x + top)).exp())
        .sum();
    mu * top + s.ln()
}

/// `∇Φ_μ(v)` divided by the positive factor `μe^{μ‖v‖∞}`.
pub fn scaled_gradient(v: &[f64], mu: f64) -> Vec<f64> {
    let top = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    v.iter()
        .map(|x| (mu * (x - top)).exp() - (-mu * (x + top)).exp())
        .collect()
}

/// Player move `Δ = −(1+ε)·argmax_{‖Δ‖_{w+∞} ≤ ρ} ⟨∇Φ_μ(x − z), Δ⟩`.
///
/// With `Δ = (ρ/C_norm)·W^{−1/2}y` the ball becomes
/// `‖y‖₂ + ‖l⁻¹y‖∞ ≤ 1` for `l = C_norm·√w` and the objective becomes
/// `⟨W^{−1/2}∇Φ, y⟩` up to a positive factor.
pub fn chasing_step(
    x_log: &[f64],
    z_obs: &[f64],
    ball_radius: f64,
    w: &[f64],
    cfg: &ChasingConfig,
    cnorm: f64,
) -> Vec<f64> {
    let m = x_log.len();
    if ball_radius <= 0.0 {
        return vec![0.0; m];
    }
    let gap: Vec<f64> = x_log.iter().zip(z_obs).map(|(x, z)| x - z).collect();
    let grad = scaled_gradient(&gap, cfg.mu);
    if grad.iter().all(|&g| g == 0.0) {
        return vec![0.0; m];
    }
    let a: Vec<f64> = grad.iter().zip(w).map(|(g, w)| g / w.sqrt()).collect();
    let l: Vec<f64> = w.iter().map(|w| cnorm * w.sqrt()).collect();
    let y = project_mixed_ball(&a, &l);
    let scale = -(1.0 + cfg.eps) * ball_radius / cnorm;
    y.iter().zip(w).map(|(y, w)| scale * y / w.sqrt()).collect()
}
