//! Weighted path following for `min cᵀx` s.t. `Aᵀx = b`, `l ≤ x ≤ u`.
//!
//! The iterate is `(x, w, t)`: `x` is pushed toward the minimizer of
//! `t·cᵀx + Σ w_i φ_i(x_i)` by projected Newton steps, while `w` tracks the
//! regularized Lewis weights `g(x) = w_p(Φ″(x)^{−1/2}A) + c0`.

pub mod chasing;
pub mod config;
pub mod newton;
pub mod problem;
pub mod projection;
pub mod solve;

pub use chasing::{chasing_step, log_potential, potential, scaled_gradient};
pub use config::{ChasingConfig, PathConfig, Profile};
pub use newton::{
    mixed_norm, newton_step_and_centrality, rescaled_matrix, weight_function,
    weight_function_warm, weighted_norm, NewtonStep, StepReport,
};
pub use problem::{compensated_dot, BarrierVectors, LpProblem};
pub use projection::{mixed_ball_gauge, project_mixed_ball};
pub use solve::{
    centering_inexact, centering_step, dual_solve, initial_state, lp_solve, path_following,
    phase_constants, solve_to, CenteringInfo, DualSolution, LpSolution, PathState, SolveStats,
};
