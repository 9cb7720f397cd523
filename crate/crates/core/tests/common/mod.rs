#![allow(dead_code)]
//! Shared generators and independent oracles for the integration tests.

use lewis_ipm::linalg::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut ChaCha8Rng, m: usize, n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal))
}

pub fn gaussian_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `diag(A (AᵀDA)⁻¹ Aᵀ) · d` through an explicit inverse.
pub fn leverage_oracle(a: &DenseMatrix, d: &[f64]) -> Vec<f64> {
    let (m, n) = a.shape();
    let mut g = nalgebra::DMatrix::zeros(n, n);
    for i in 0..m {
        let r = a.row(i).transpose();
        g += d[i] * &r * r.transpose();
    }
    let inv = g.try_inverse().expect("invertible");
    (0..m)
        .map(|i| {
            let r = a.row(i).transpose();
            d[i] * (r.transpose() * &inv * &r)[(0, 0)]
        })
        .collect()
}

/// Random bounded LP with a strictly interior start point.
pub struct RandomLp {
    pub problem: lewis_ipm::pathfollow::LpProblem,
    pub x0: Vec<f64>,
}

pub fn random_box_lp(rng: &mut ChaCha8Rng, m: usize, n: usize) -> RandomLp {
    let a = gaussian(rng, m, n);
    let lower: Vec<f64> = (0..m).map(|_| rng.gen_range(-2.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.5..3.0)).collect();
    let x0: Vec<f64> = lower
        .iter()
        .zip(&upper)
        .map(|(l, u)| l + (u - l) * rng.gen_range(0.2..0.8))
        .collect();
    let mut b = vec![0.0; n];
    for i in 0..m {
        for j in 0..n {
            b[j] += a[(i, j)] * x0[i];
        }
    }
    let c = gaussian_vec(rng, m);
    let problem = lewis_ipm::pathfollow::LpProblem::new(a, b, c, lower, upper).unwrap();
    RandomLp { problem, x0 }
}

/// Minimum of `cᵀx` over all basic feasible solutions of a box-bounded LP.
pub fn vertex_enumeration_opt(p: &lewis_ipm::pathfollow::LpProblem) -> f64 {
    let (m, n) = p.a.shape();
    let mut best = f64::INFINITY;
    let mut basis: Vec<usize> = (0..n).collect();
    loop {
        let mut ab = nalgebra::DMatrix::zeros(n, n);
        for (k, &i) in basis.iter().enumerate() {
            for j in 0..n {
                ab[(j, k)] = p.a[(i, j)];
            }
        }
        let lu = ab.clone().lu();
        if ab.determinant().abs() > 1e-10 {
            let nonbasic: Vec<usize> = (0..m).filter(|i| !basis.contains(i)).collect();
            for mask in 0u64..(1u64 << nonbasic.len()) {
                let mut x = vec![0.0; m];
                let mut rhs = nalgebra::DVector::from_column_slice(&p.b);
                for (k, &i) in nonbasic.iter().enumerate() {
                    x[i] = if mask >> k & 1 == 1 { p.upper[i] } else { p.lower[i] };
                    for j in 0..n {
                        rhs[j] -= p.a[(i, j)] * x[i];
                    }
                }
                let xb = lu.solve(&rhs).unwrap();
                let ok = basis.iter().enumerate().all(|(k, &i)| {
                    xb[k] >= p.lower[i] - 1e-9 && xb[k] <= p.upper[i] + 1e-9
                });
                if ok {
                    for (k, &i) in basis.iter().enumerate() {
                        x[i] = xb[k];
                    }
                    let v: f64 = x.iter().zip(&p.c).map(|(x, c)| x * c).sum();
                    best = best.min(v);
                }
            }
        }
        // next combination
        let mut k = n;
        loop {
            if k == 0 {
                return best;
            }
            k -= 1;
            if basis[k] < m - n + k {
                break;
            }
            if k == 0 {
                return best;
            }
        }
        basis[k] += 1;
        for j in k + 1..n {
            basis[j] = basis[j - 1] + 1;
        }
    }
}

/// Successive shortest paths with Bellman-Ford; costs must admit no negative
/// cycle at zero flow. Returns `(value, cost)`.
pub fn ssp_oracle(inst: &lewis_ipm::flow::FlowInstance) -> (i64, i64) {
    let nv = inst.n_vertices;
    let mut flow = vec![0i64; inst.edges.len()];
    loop {
        // arcs: (from, to, cost, edge, forward)
        let mut arcs = Vec::new();
        for (k, e) in inst.edges.iter().enumerate() {
            if flow[k] < e.cap {
                arcs.push((e.from, e.to, e.cost, k, true));
            }
            if flow[k] > 0 {
                arcs.push((e.to, e.from, -e.cost, k, false));
            }
        }
        let mut dist = vec![i64::MAX; nv];
        let mut pred: Vec<Option<usize>> = vec![None; nv];
        dist[inst.source] = 0;
        for _ in 0..nv {
            let mut changed = false;
            for (idx, &(u, v, c, _, _)) in arcs.iter().enumerate() {
                if dist[u] != i64::MAX && dist[u] + c < dist[v] {
                    dist[v] = dist[u] + c;
                    pred[v] = Some(idx);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[inst.sink] == i64::MAX {
            break;
        }
        let mut path = Vec::new();
        let mut v = inst.sink;
        while v != inst.source {
            let idx = pred[v].unwrap();
            path.push(idx);
            v = arcs[idx].0;
        }
        let push = path
            .iter()
            .map(|&idx| {
                let (_, _, _, k, fwd) = arcs[idx];
                if fwd { inst.edges[k].cap - flow[k] } else { flow[k] }
            })
            .min()
            .unwrap();
        for &idx in &path {
            let (_, _, _, k, fwd) = arcs[idx];
            if fwd {
                flow[k] += push;
            } else {
                flow[k] -= push;
            }
        }
    }
    (inst.value_of(&flow), inst.cost_of(&flow))
}

/// Random connected simple digraph with caps and costs in `0..=max`.
pub fn random_flow_instance(rng: &mut ChaCha8Rng, nv: usize, max: i64) -> lewis_ipm::flow::FlowInstance {
    use lewis_ipm::flow::{FlowEdge, FlowInstance};
    loop {
        let mut edges = Vec::new();
        // random spanning path keeps the graph connected
        let mut perm: Vec<usize> = (0..nv).collect();
        for i in (1..nv).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let mut used = std::collections::HashSet::new();
        for w in perm.windows(2) {
            let (a, b) = if rng.gen_bool(0.5) { (w[0], w[1]) } else { (w[1], w[0]) };
            used.insert((a, b));
        }
        for u in 0..nv {
            for v in 0..nv {
                if u != v && !used.contains(&(u, v)) && !used.contains(&(v, u)) && rng.gen_bool(0.3) {
                    used.insert((u, v));
                }
            }
        }
        let mut list: Vec<_> = used.into_iter().collect();
        list.sort();
        for (u, v) in list {
            let cap = if rng.gen_bool(0.1) { 0 } else { rng.gen_range(1..=max) };
            edges.push(FlowEdge { from: u, to: v, cap, cost: rng.gen_range(0..=max) });
        }
        if let Ok(inst) = FlowInstance::new(nv, edges, 0, nv - 1) {
            return inst;
        }
    }
}

/// Problem with cost shifted so that `(x0, g(x0))` sits at a chosen
/// centrality at `t = 1`; deltaHat is linear in the shift.
pub fn state_at_centrality(
    lp: &RandomLp,
    cfg: &lewis_ipm::pathfollow::PathConfig,
    target: f64,
    seed: u64,
) -> (lewis_ipm::pathfollow::LpProblem, lewis_ipm::pathfollow::PathState) {
    use lewis_ipm::pathfollow::{newton_step_and_centrality, weight_function, PathState};
    let mut r = rng(seed ^ 0x5eed);
    let p = &lp.problem;
    let x0 = lp.x0.clone();
    let w = weight_function(p, &x0, cfg, seed).unwrap();
    let bv = p.barrier_vectors(&x0).unwrap();
    let v = gaussian_vec(&mut r, p.m());
    let base: Vec<f64> = w.iter().zip(&bv.d1).map(|(w, d)| -w * d).collect();
    let cost = |s: f64| -> Vec<f64> { base.iter().zip(&v).map(|(b, v)| b + s * v).collect() };
    let unit = newton_step_and_centrality(&p.with_cost(cost(1.0)), &x0, &w, 1.0, cfg.cnorm)
        .unwrap()
        .report
        .delta_hat;
    let prob = p.with_cost(cost(target / unit));
    let lewis = w.iter().map(|v| v - cfg.c0).collect();
    (prob, PathState { x: x0, w, t: 1.0, lewis, last_report: None })
}

/// `max ⟨a, x⟩` over `‖x‖₂ ≤ rho`, `|x_i| ≤ cap_i` by repeated capping.
pub fn capped_ball_value(a: &[f64], cap: &[f64], rho: f64) -> f64 {
    let m = a.len();
    let mut capped = vec![false; m];
    loop {
        let used: f64 = (0..m).filter(|&i| capped[i]).map(|i| cap[i] * cap[i]).sum();
        let free: f64 = (0..m).filter(|&i| !capped[i]).map(|i| a[i] * a[i]).sum();
        let left = (rho * rho - used).max(0.0);
        let lam = if free > 0.0 { left.sqrt() / free.sqrt() } else { 0.0 };
        let mut changed = false;
        for i in 0..m {
            if !capped[i] && lam * a[i].abs() > cap[i] {
                capped[i] = true;
                changed = true;
            }
        }
        if !changed {
            return (0..m)
                .map(|i| if capped[i] { a[i].abs() * cap[i] } else { lam * a[i] * a[i] })
                .sum();
        }
    }
}

/// Value of `max ⟨a, x⟩` over `‖x‖₂ + ‖l⁻¹x‖∞ ≤ 1`: grid over
/// `t = ‖l⁻¹x‖∞`, then golden-section refinement (the value is concave in t).
pub fn mixed_ball_oracle(a: &[f64], l: &[f64], grid: usize) -> f64 {
    let value = |t: f64| {
        let cap: Vec<f64> = l.iter().map(|l| t * l).collect();
        capped_ball_value(a, &cap, 1.0 - t)
    };
    let mut best = (f64::NEG_INFINITY, 0usize);
    for k in 0..=grid {
        let v = value(k as f64 / grid as f64);
        if v > best.0 {
            best = (v, k);
        }
    }
    let h = 1.0 / grid as f64;
    let (mut lo, mut hi) = (((best.1 as f64) - 1.0) * h, ((best.1 as f64) + 1.0) * h);
    lo = lo.max(0.0);
    hi = hi.min(1.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..80 {
        let c = hi - g * (hi - lo);
        let d = lo + g * (hi - lo);
        if value(c) >= value(d) {
            hi = d;
        } else {
            lo = c;
        }
    }
    best.0.max(value(0.5 * (lo + hi)))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()))
}
