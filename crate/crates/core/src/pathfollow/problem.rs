use crate::barrier1d::{barrier_eval, IntervalBarrier};
use crate::error::{Error, Result};
use crate::linalg::{validate_shape, DenseMatrix};

/// `min cᵀx` subject to `Aᵀx = b`, `l ≤ x ≤ u`, with `A` of size `m × n`.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub a: DenseMatrix,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub barriers: Vec<IntervalBarrier>,
}

/// Barrier data per coordinate at a point.
#[derive(Debug, Clone)]
pub struct BarrierVectors {
    pub phi: Vec<f64>,
    pub d1: Vec<f64>,
    pub d2: Vec<f64>,
    pub d3: Vec<f64>,
}

impl LpProblem {
    pub fn new(
        a: DenseMatrix,
        b: Vec<f64>,
        c: Vec<f64>,
        lower: Vec<f64>,
        upper: Vec<f64>,
    ) -> Result<Self> {
        let (m, n) = a.shape();
        if b.len() != n || c.len() != m || lower.len() != m || upper.len() != m {
            return Err(Error::Validation(format!(
                "dimension mismatch: A is {m}x{n}, b {}, c {}, lower {}, upper {}",
                b.len(),
                c.len(),
                lower.len(),
                upper.len()
            )));
        }
        validate_shape(&a)?;
        if a.iter().chain(&b).chain(&c).any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite problem data".into()));
        }
        let mut barriers = Vec::with_capacity(m);
        for i in 0..m {
            barriers.push(IntervalBarrier::for_bounds(lower[i], upper[i]).map_err(|e| {
                Error::Validation(format!("coordinate {}: {e}", i + 1))
            })?);
        }
        Ok(LpProblem { a, b, c, lower, upper, barriers })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// Same constraints with another cost vector.
    pub fn with_cost(&self, c: Vec<f64>) -> Self {
        LpProblem { c, ..self.clone() }
    }

    pub fn in_domain(&self, x: &[f64]) -> bool {
        self.barriers.iter().zip(x).all(|(b, &v)| b.contains(v))
    }

    pub fn barrier_vectors(&self, x: &[f64]) -> Result<BarrierVectors> {
        let m = self.m();
        let mut out = BarrierVectors {
            phi: vec![0.0; m],
            d1: vec![0.0; m],
            d2: vec![0.0; m],
            d3: vec![0.0; m],
        };
        for i in 0..m {
            let v = barrier_eval(&self.barriers[i], x[i])
                .map_err(|_| Error::OutOfDomain { index: i, value: x[i] })?;
            out.phi[i] = v.phi;
            out.d1[i] = v.d1;
            out.d2[i] = v.d2;
            out.d3[i] = v.d3;
        }
        Ok(out)
    }

    /// `Aᵀx`.
    pub fn constraint_value(&self, x: &[f64]) -> Vec<f64> {
        let (m, n) = self.a.shape();
        let mut out = vec![0.0; n];
        for i in 0..m {
            for j in 0..n {
                out[j] += self.a[(i, j)] * x[i];
            }
        }
        out
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        compensated_dot(&self.c, x)
    }

    /// Checks `x0` is strictly interior and satisfies the equality constraints.
    pub fn check_start(&self, x0: &[f64]) -> Result<()> {
        if x0.len() != self.m() {
            return Err(Error::Infeasible(format!("x0 has length {}, expected {}", x0.len(), self.m())));
        }
        for (i, (b, &v)) in self.barriers.iter().zip(x0).enumerate() {
            if !b.contains(v) {
                return Err(Error::Infeasible(format!(
                    "x0[{}] = {v} not strictly inside ({}, {})",
                    i + 1,
                    b.lower(),
                    b.upper()
                )));
            }
        }
        let r = self.constraint_value(x0);
        let scale = 1.0 + self.b.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let err = r.iter().zip(&self.b).fold(0.0f64, |acc, (r, b)| acc.max((r - b).abs()));
        if err > 1e-8 * scale {
            return Err(Error::Infeasible(format!("equality residual {err:e} at x0")));
        }
        Ok(())
    }

    /// Data magnitude `U` from the bounds, the start point and the cost.
    pub fn u_stat(&self, x0: &[f64]) -> f64 {
        let mut u: f64 = 0.0;
        let mut any = false;
        for i in 0..self.m() {
            let (l, h) = (self.lower[i], self.upper[i]);
            if h.is_finite() {
                u = u.max(1.0 / (h - x0[i]));
                any = true;
            }
            if l.is_finite() {
                u = u.max(1.0 / (x0[i] - l));
                any = true;
            }
            if l.is_finite() && h.is_finite() {
                u = u.max(h - l);
            }
        }
        let cmax = self.c.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        if !any || !u.is_finite() {
            return cmax + 1.0;
        }
        u.max(cmax)
    }
}

/// Kahan–Babuška summation of `Σ a_i b_i`.
pub fn compensated_dot(a: &[f64], b: &[f64]) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        let v = x * y;
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}
