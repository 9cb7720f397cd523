use crate::lewis::{ApxOptions, WeightMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Profile {
    /// Constants exactly as derived; only practical for single steps.
    Strict,
    #[default]
    Practical,
}

impl std::str::FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "strict" => Ok(Profile::Strict),
            "practical" => Ok(Profile::Practical),
            other => Err(format!("unknown profile {other:?}")),
        }
    }
}

/// Constant ledger of the path-following method.
#[derive(Debug, Clone, PartialEq)]
pub struct PathConfig {
    pub profile: Profile,
    /// Lewis exponent.
    pub p: f64,
    /// Additive regularizer of the weight function.
    pub c0: f64,
    pub c1: f64,
    pub cs: f64,
    pub ck: f64,
    pub cnorm: f64,
    /// Weight gap tolerated by centering.
    pub k_bound: f64,
    /// Centering radius, also the observation noise of the weight chase.
    pub r_cent: f64,
    /// Relative change of `t` per step.
    pub alpha: f64,
    pub eps_chase: f64,
    /// Practical: `t` only moves once deltaHat is at most this.
    pub threshold: f64,
    pub weight_mode: WeightMode,
    /// Multiplicative accuracy of weight-function evaluations.
    pub weight_tol: f64,
    pub apx: ApxOptions,
    /// Practical: cap on `‖√φ″h‖∞` per Newton step.
    pub newton_cap: f64,
    /// Practical: cap on `‖Δ log w‖∞` per weight update.
    pub weight_cap: f64,
    /// Practical: weights move only once `‖log g − log w‖∞` exceeds this.
    pub lazy_gap: f64,
    /// Floor on the final centrality target (floating-point resolution).
    pub min_centrality: f64,
    pub max_iterations: usize,
    pub time_budget_secs: Option<f64>,
}

impl PathConfig {
    pub fn new(m: usize, n: usize, profile: Profile) -> Self {
        let mf = m as f64;
        let nf = n as f64;
        let p = 1.0 - 1.0 / (4.0 * mf).ln();
        let c0 = nf / (2.0 * mf);
        let c1 = 1.5 * nf;
        let cs: f64 = 4.0;
        let ck = 2.0 * (4.0 * mf).ln();
        let cnorm = 24.0 * cs.sqrt() * ck;
        let k_bound = 1.0 / (16.0 * ck);
        let r_strict = k_bound / (48.0 * ck * (36.0 * c1 * cs * ck * mf).ln());
        let lnm = mf.ln().max(1.0);
        let alpha_strict = r_strict / (1600.0 * nf.sqrt() * lnm * lnm);
        let eps_chase = 1.0 / (2.0 * ck);
        let mut cfg = PathConfig {
            profile,
            p,
            c0,
            c1,
            cs,
            ck,
            cnorm,
            k_bound,
            r_cent: r_strict,
            alpha: alpha_strict,
            eps_chase,
            threshold: r_strict,
            weight_mode: WeightMode::Exact,
            weight_tol: r_strict,
            apx: ApxOptions::default(),
            newton_cap: f64::INFINITY,
            weight_cap: f64::INFINITY,
            lazy_gap: 0.0,
            min_centrality: 1e-9,
            max_iterations: 1_000_000,
            time_budget_secs: None,
        };
        if profile == Profile::Practical {
            cfg.r_cent = 0.05;
            cfg.alpha = 1.0 / (20.0 * c1.sqrt());
            cfg.threshold = 0.05;
            cfg.weight_tol = 1e-5;
            cfg.apx = ApxOptions::practical();
            cfg.newton_cap = 0.035;
            cfg.weight_cap = 0.025;
            cfg.lazy_gap = 0.5 * k_bound;
        }
        cfg
    }

    /// `c_γ = 1 + √(2c_s)/C_norm`.
    pub fn c_gamma(&self) -> f64 {
        1.0 + (2.0 * self.cs).sqrt() / self.cnorm
    }

    pub fn chasing(&self) -> ChasingConfig {
        ChasingConfig::new(self.eps_chase, self.r_cent, 1.0 + self.cnorm * self.c1.sqrt())
    }
}

/// Parameters of the ℓ∞ chasing game.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChasingConfig {
    pub mu: f64,
    pub r_noise: f64,
    pub eps: f64,
    pub tau: f64,
}

impl ChasingConfig {
    pub fn new(eps: f64, r_noise: f64, tau: f64) -> Self {
        ChasingConfig { mu: eps / (12.0 * r_noise), r_noise, eps, tau }
    }
}
