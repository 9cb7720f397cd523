//! Min-cost max-flow through the path-following LP solver.
//!
//! Costs are randomly perturbed so the optimum is unique, the flow problem
//! is relaxed with excess variables so an explicit interior point exists,
//! and the approximate LP solution is rounded back to an integral flow whose
//! optimality is then certified exactly on the residual graph.

use std::collections::VecDeque;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::pathfollow::{lp_solve, LpProblem, PathConfig, Profile, SolveStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlowEdge {
    pub from: usize,
    pub to: usize,
    pub cap: i64,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlowInstance {
    pub n_vertices: usize,
    pub edges: Vec<FlowEdge>,
    pub source: usize,
    pub sink: usize,
}

impl FlowInstance {
    pub fn new(n_vertices: usize, edges: Vec<FlowEdge>, source: usize, sink: usize) -> Result<Self> {
        if n_vertices < 2 {
            return Err(Error::Validation("a flow instance needs at least two vertices".into()));
        }
        if source >= n_vertices || sink >= n_vertices {
            return Err(Error::Validation("source or sink out of range".into()));
        }
        if source == sink {
            return Err(Error::Validation("source and sink coincide".into()));
        }
        for (k, e) in edges.iter().enumerate() {
            if e.from >= n_vertices || e.to >= n_vertices {
                return Err(Error::Validation(format!("edge {}: endpoint out of range", k + 1)));
            }
            if e.cap < 0 {
                return Err(Error::Validation(format!("edge {}: negative capacity", k + 1)));
            }
        }
        let inst = FlowInstance { n_vertices, edges, source, sink };
        if !inst.is_connected() {
            return Err(Error::DisconnectedGraph);
        }
        Ok(inst)
    }

    /// `max(‖q‖∞, ‖c‖∞)`, at least 1.
    pub fn magnitude(&self) -> i64 {
        self.edges.iter().map(|e| e.cap.max(e.cost.abs())).max().unwrap_or(0).max(1)
    }

    /// Weak connectivity over all edges.
    pub fn is_connected(&self) -> bool {
        let adj = self.undirected_adjacency(false);
        let mut seen = vec![false; self.n_vertices];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        while let Some(v) = queue.pop_front() {
            for &(u, _) in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    queue.push_back(u);
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    fn undirected_adjacency(&self, positive_only: bool) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for (k, e) in self.edges.iter().enumerate() {
            if positive_only && e.cap == 0 {
                continue;
            }
            adj[e.from].push((e.to, k));
            adj[e.to].push((e.from, k));
        }
        adj
    }

    pub fn cost_of(&self, flow: &[i64]) -> i64 {
        self.edges.iter().zip(flow).map(|(e, f)| e.cost * f).sum()
    }

    /// Net flow into the sink.
    pub fn value_of(&self, flow: &[i64]) -> i64 {
        net_inflow(self, flow, self.sink)
    }
}

fn net_inflow(inst: &FlowInstance, flow: &[i64], v: usize) -> i64 {
    let mut s = 0;
    for (e, &f) in inst.edges.iter().zip(flow) {
        if e.to == v {
            s += f;
        }
        if e.from == v {
            s -= f;
        }
    }
    s
}

/// Randomly perturbed integral costs `4|E|²M²q + k` with `k ∈ {1, …, 2|E|M}`.
pub fn perturb_costs(inst: &FlowInstance, seed: u64) -> Vec<i64> {
    let e = inst.edges.len() as i64;
    let m = inst.magnitude();
    let scale = 4 * e * e * m * m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inst.edges.iter().map(|edge| scale * edge.cost + rng.gen_range(1..=2 * e * m)).collect()
}

/// Excess penalty of the relaxed program.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Penalty {
    /// `440|E|⁴M̃²M³`; swamps the edge costs in double precision.
    Theoretical,
    /// `4|V|M̃`, which exceeds every optimal vertex potential.
    #[default]
    Dual,
}

/// Relaxed LP together with the bookkeeping needed to read a flow back.
#[derive(Debug, Clone)]
pub struct FlowLp {
    pub problem: LpProblem,
    pub x0: Vec<f64>,
    pub perturbed: Vec<i64>,
    /// Bound on the perturbed costs, `8|E|²M³`.
    pub cost_bound: f64,
    pub lambda: f64,
    /// Input edge index of each flow variable; zero-capacity edges are left out.
    pub edge_vars: Vec<usize>,
}

impl FlowLp {
    pub fn n_edge_vars(&self) -> usize {
        self.edge_vars.len()
    }
}

fn vertex_column(v: usize, source: usize) -> usize {
    if v < source {
        v
    } else {
        v - 1
    }
}

/// Variables are ordered `[x (edges) | y | z | F]`; constraints are the
/// vertices other than the source.
pub fn build_flow_lp(inst: &FlowInstance, seed: u64, penalty: Penalty) -> Result<FlowLp> {
    if !inst.is_connected() {
        return Err(Error::DisconnectedGraph);
    }
    let nv = inst.n_vertices;
    let ne = inst.edges.len() as f64;
    let mm = inst.magnitude() as f64;
    let vf = nv as f64;
    let cost_bound = 8.0 * ne * ne * mm.powi(3);
    let lambda = match penalty {
        Penalty::Theoretical => 440.0 * ne.powi(4) * cost_bound * cost_bound * mm.powi(3),
        Penalty::Dual => 4.0 * vf * cost_bound,
    };
    let perturbed = perturb_costs(inst, seed);
    let edge_vars: Vec<usize> = (0..inst.edges.len()).filter(|&k| inst.edges[k].cap > 0).collect();
    let nx = edge_vars.len();
    let ncons = nv - 1;
    let nvars = nx + 2 * ncons + 1;
    let s = inst.source;
    let mut a = DenseMatrix::zeros(nvars, ncons);
    let mut c = vec![0.0; nvars];
    let lower = vec![0.0; nvars];
    let mut upper = vec![0.0; nvars];
    for (row, &k) in edge_vars.iter().enumerate() {
        let e = inst.edges[k];
        if e.to != s {
            a[(row, vertex_column(e.to, s))] += 1.0;
        }
        if e.from != s {
            a[(row, vertex_column(e.from, s))] -= 1.0;
        }
        c[row] = perturbed[k] as f64;
        upper[row] = e.cap as f64;
    }
    let excess_cap = 4.0 * vf * mm;
    for j in 0..ncons {
        a[(nx + j, j)] = 1.0;
        a[(nx + ncons + j, j)] = -1.0;
        c[nx + j] = lambda;
        c[nx + ncons + j] = lambda;
        upper[nx + j] = excess_cap;
        upper[nx + ncons + j] = excess_cap;
    }
    let f_row = nvars - 1;
    a[(f_row, vertex_column(inst.sink, s))] = -1.0;
    c[f_row] = -2.0 * vf * cost_bound;
    upper[f_row] = 2.0 * vf * mm;

    // interior point: half capacities, F = |V|M, excess split evenly
    let mut x0 = vec![0.0; nvars];
    let mut r = vec![0.0; ncons];
    for (row, &k) in edge_vars.iter().enumerate() {
        x0[row] = inst.edges[k].cap as f64 / 2.0;
        for j in 0..ncons {
            r[j] -= a[(row, j)] * x0[row];
        }
    }
    let f0 = vf * mm;
    x0[f_row] = f0;
    r[vertex_column(inst.sink, s)] += f0;
    for j in 0..ncons {
        x0[nx + j] = 2.0 * vf * mm + r[j] / 2.0;
        x0[nx + ncons + j] = 2.0 * vf * mm - r[j] / 2.0;
    }
    let problem = LpProblem::new(a, vec![0.0; ncons], c, lower, upper)?;
    if !problem.in_domain(&x0) {
        return Err(Error::Validation(
            "explicit start is not interior (vertex degree too high for the excess bounds)".into(),
        ));
    }
    problem.check_start(&x0)?;
    Ok(FlowLp { problem, x0, perturbed, cost_bound, lambda, edge_vars })
}

#[derive(Debug, Clone, Default)]
pub struct FlowOptions {
    pub profile: Profile,
    pub penalty: Penalty,
    /// Extra attempts with fresh perturbations after the first.
    pub max_retries: usize,
    pub time_budget_secs: Option<f64>,
}

impl FlowOptions {
    pub fn new() -> Self {
        FlowOptions { max_retries: 5, ..Default::default() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub flow: Vec<i64>,
    pub value: i64,
    pub cost: i64,
    /// Attempts beyond the first that were needed.
    pub retries: usize,
    pub iterations: usize,
    /// Why each rejected attempt failed.
    pub rejected: Vec<String>,
}

/// Additive LP tolerance `1/(12M)`.
pub fn flow_lp_tolerance(inst: &FlowInstance, _lp: &FlowLp) -> f64 {
    1.0 / (12.0 * inst.magnitude() as f64)
}

pub fn solve_min_cost_flow(inst: &FlowInstance, seed: u64, opts: &FlowOptions) -> Result<FlowSolution> {
    let mut rejected = Vec::new();
    let mut iterations = 0;
    for attempt in 0..=opts.max_retries {
        let attempt_seed = seed.wrapping_add(attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let lp = build_flow_lp(inst, attempt_seed, opts.penalty)?;
        let mut cfg = PathConfig::new(lp.problem.m(), lp.problem.n(), opts.profile);
        cfg.time_budget_secs = opts.time_budget_secs;
        let eps = flow_lp_tolerance(inst, &lp);
        let sol = match lp_solve(&lp.problem, &lp.x0, eps, &cfg, attempt_seed) {
            Ok(s) => s,
            Err(e @ (Error::IterationCap(_) | Error::TimeBudget(_) | Error::Validation(_))) => {
                return Err(e)
            }
            Err(e) => {
                rejected.push(format!("attempt {}: {e}", attempt + 1));
                continue;
            }
        };
        iterations += sol.stats.iterations;
        let flow = match round_and_repair(&sol.x, inst, &lp) {
            Ok(f) => f,
            Err(e) => {
                rejected.push(format!("attempt {}: {e}", attempt + 1));
                continue;
            }
        };
        match certify_optimal(&flow, inst) {
            Ok(()) => {
                return Ok(FlowSolution {
                    value: inst.value_of(&flow),
                    cost: inst.cost_of(&flow),
                    flow,
                    retries: attempt,
                    iterations,
                    rejected,
                })
            }
            Err(why) => rejected.push(format!("attempt {}: {why}", attempt + 1)),
        }
    }
    Err(Error::NotConverged { residual: rejected.len() as f64, limit: opts.max_retries as f64 })
}

/// Solver statistics of a single relaxed solve, for diagnostics.
pub fn solve_flow_lp(inst: &FlowInstance, lp: &FlowLp, profile: Profile, seed: u64) -> Result<(Vec<f64>, SolveStats)> {
    let cfg = PathConfig::new(lp.problem.m(), lp.problem.n(), profile);
    let sol = lp_solve(&lp.problem, &lp.x0, flow_lp_tolerance(inst, lp), &cfg, seed)?;
    Ok((sol.x, sol.stats))
}

/// Scales the LP flow by `1 − ε`, routes the excess at every vertex other
/// than the source and sink back to the source along a BFS tree, and rounds.
pub fn round_and_repair(lp_x: &[f64], inst: &FlowInstance, lp: &FlowLp) -> Result<Vec<i64>> {
    let ne = inst.edges.len();
    let ne_f = ne as f64;
    let mm = inst.magnitude() as f64;
    let shrink = 1.0 - 1.0 / (40.0 * ne_f * ne_f * lp.cost_bound * mm * mm);
    let mut x = vec![0.0; ne];
    for (row, &k) in lp.edge_vars.iter().enumerate() {
        x[k] = shrink * lp_x[row];
    }
    let (parent, order) = bfs_tree(inst);
    let mut excess = vec![0.0; inst.n_vertices];
    for (k, e) in inst.edges.iter().enumerate() {
        excess[e.to] += x[k];
        excess[e.from] -= x[k];
    }
    // leaves first; each vertex hands its excess to its parent
    for &v in order.iter().rev() {
        if v == inst.source || v == inst.sink {
            continue;
        }
        let Some((p, k)) = parent[v] else {
            if excess[v].abs() > 0.25 {
                return Err(Error::RepairFailed(format!("vertex {v} has excess but no tree path")));
            }
            continue;
        };
        let ex = excess[v];
        if inst.edges[k].from == p {
            x[k] -= ex;
        } else {
            x[k] += ex;
        }
        excess[v] = 0.0;
        excess[p] += ex;
    }
    let flow: Vec<i64> = x.iter().map(|v| v.round() as i64).collect();
    let report = validate_flow(&flow, inst);
    if !report.ok() {
        return Err(Error::RepairFailed(report.summary()));
    }
    Ok(flow)
}

/// BFS tree from the source over positive-capacity edges, ties broken by
/// edge index. Returns `(parent, visit order)`.
fn bfs_tree(inst: &FlowInstance) -> (Vec<Option<(usize, usize)>>, Vec<usize>) {
    let mut adj = inst.undirected_adjacency(true);
    for list in &mut adj {
        list.sort_by_key(|&(_, k)| k);
    }
    let mut parent = vec![None; inst.n_vertices];
    let mut seen = vec![false; inst.n_vertices];
    let mut order = Vec::with_capacity(inst.n_vertices);
    let mut queue = VecDeque::from([inst.source]);
    seen[inst.source] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        for &(u, k) in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = Some((v, k));
                queue.push_back(u);
            }
        }
    }
    for v in 0..inst.n_vertices {
        if !seen[v] {
            order.push(v);
        }
    }
    (parent, order)
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct FlowReport {
    /// Edges with `x_e < 0` or `x_e > c_e`.
    pub capacity_violations: Vec<usize>,
    /// Vertices other than source and sink with nonzero net flow.
    pub conservation_violations: Vec<usize>,
    pub value: i64,
    pub cost: i64,
}

impl FlowReport {
    pub fn ok(&self) -> bool {
        self.capacity_violations.is_empty() && self.conservation_violations.is_empty()
    }

    pub fn summary(&self) -> String {
        format!(
            "capacity violations at edges {:?}, conservation violations at vertices {:?}",
            self.capacity_violations, self.conservation_violations
        )
    }
}

pub fn validate_flow(flow: &[i64], inst: &FlowInstance) -> FlowReport {
    let mut report = FlowReport::default();
    if flow.len() != inst.edges.len() {
        report.capacity_violations = (0..inst.edges.len()).collect();
        return report;
    }
    for (k, (e, &f)) in inst.edges.iter().zip(flow).enumerate() {
        if f < 0 || f > e.cap {
            report.capacity_violations.push(k);
        }
    }
    for v in 0..inst.n_vertices {
        if v != inst.source && v != inst.sink && net_inflow(inst, flow, v) != 0 {
            report.conservation_violations.push(v);
        }
    }
    report.value = inst.value_of(flow);
    report.cost = inst.cost_of(flow);
    report
}

/// Exact certificate that a feasible flow is a min-cost max flow: the
/// residual graph has no source-sink path and no negative-cost cycle.
pub fn certify_optimal(flow: &[i64], inst: &FlowInstance) -> std::result::Result<(), String> {
    let report = validate_flow(flow, inst);
    if !report.ok() {
        return Err(report.summary());
    }
    let residual = residual_arcs(flow, inst);
    let mut seen = vec![false; inst.n_vertices];
    let mut queue = VecDeque::from([inst.source]);
    seen[inst.source] = true;
    while let Some(v) = queue.pop_front() {
        for &(u, w, _) in &residual {
            if u == v && !seen[w] {
                seen[w] = true;
                queue.push_back(w);
            }
        }
    }
    if seen[inst.sink] {
        return Err("residual graph has an augmenting path".into());
    }
    // Bellman-Ford from a virtual root at distance 0 to everything
    let mut dist = vec![0i64; inst.n_vertices];
    for round in 0..=inst.n_vertices {
        let mut changed = false;
        for &(u, w, c) in &residual {
            if dist[u] + c < dist[w] {
                dist[w] = dist[u] + c;
                changed = true;
            }
        }
        if !changed {
            return Ok(());
        }
        if round == inst.n_vertices {
            break;
        }
    }
    Err("residual graph has a negative-cost cycle".into())
}

fn residual_arcs(flow: &[i64], inst: &FlowInstance) -> Vec<(usize, usize, i64)> {
    let mut arcs = Vec::new();
    for (e, &f) in inst.edges.iter().zip(flow) {
        if f < e.cap {
            arcs.push((e.from, e.to, e.cost));
        }
        if f > 0 {
            arcs.push((e.to, e.from, -e.cost));
        }
    }
    arcs
}
