//! File formats and command implementations behind the `lwipm` binary.
//!
//! Every command returns a JSON value; floats are written with 17
//! significant digits so identical runs give byte-identical output.

use std::path::Path;
use std::str::FromStr;

use serde::Deserialize;
use serde_json::{json, Map, Number, Value};

use crate::error::{Error, Result};
use crate::flow::{
    certify_optimal, solve_min_cost_flow, validate_flow, FlowEdge, FlowInstance, FlowOptions,
    FlowSolution,
};
use crate::lewis::{
    compute_initial_weight, lewis_residual, lewis_weights, WeightMode,
};
use crate::lewisbarrier::{
    default_q, dikin_interior_rate, psi_hessian, self_concordance_probe, BARRIER_WEIGHT_TOL,
};
use crate::linalg::{leverage_scores, parse_matrix, projection_bundle, DenseMatrix};
use crate::pathfollow::{lp_solve, LpProblem, LpSolution, PathConfig, Profile};

pub const SCHEMA_VERSION: u64 = 1;

/// JSON number with 17 significant digits; non-finite values become null.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    Number::from_str(&format!("{:.16e}", x)).map(Value::Number).unwrap_or(Value::Null)
}

pub fn num_array(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| num(x)).collect())
}

/// `x` printed with 17 significant digits.
pub fn fmt17(x: f64) -> String {
    format!("{:.16e}", x)
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFile {
    m: usize,
    n: usize,
    #[serde(rename = "A")]
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
    x0: Vec<f64>,
}

/// Parses the LP JSON format; `null` bounds are infinite.
pub fn parse_lp_json_str(text: &str) -> Result<(LpProblem, Vec<f64>)> {
    let file: LpFile = serde_json::from_str(text).map_err(|e| {
        Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column()))
    })?;
    if file.a.len() != file.m {
        return Err(Error::Validation(format!("A has {} rows, m = {}", file.a.len(), file.m)));
    }
    for (i, row) in file.a.iter().enumerate() {
        if row.len() != file.n {
            return Err(Error::Validation(format!(
                "A row {} has {} entries, n = {}",
                i + 1,
                row.len(),
                file.n
            )));
        }
    }
    for (name, len, want) in [
        ("b", file.b.len(), file.n),
        ("c", file.c.len(), file.m),
        ("lower", file.lower.len(), file.m),
        ("upper", file.upper.len(), file.m),
        ("x0", file.x0.len(), file.m),
    ] {
        if len != want {
            return Err(Error::Validation(format!("{name} has length {len}, expected {want}")));
        }
    }
    let a = DenseMatrix::from_fn(file.m, file.n, |i, j| file.a[i][j]);
    let lower = file.lower.iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect();
    let upper = file.upper.iter().map(|v| v.unwrap_or(f64::INFINITY)).collect();
    let problem = LpProblem::new(a, file.b, file.c, lower, upper)?;
    problem.check_start(&file.x0).map_err(|e| match e {
        Error::Infeasible(msg) => Error::Validation(msg),
        other => other,
    })?;
    Ok((problem, file.x0))
}

pub fn parse_lp_json(path: &Path) -> Result<(LpProblem, Vec<f64>)> {
    parse_lp_json_str(&read_file(path)?)
}

/// Serializes a problem and start point in the LP JSON format.
pub fn lp_to_json(problem: &LpProblem, x0: &[f64]) -> Value {
    let bound = |v: f64| if v.is_finite() { num(v) } else { Value::Null };
    json!({
        "m": problem.m(),
        "n": problem.n(),
        "A": (0..problem.m())
            .map(|i| num_array(&(0..problem.n()).map(|j| problem.a[(i, j)]).collect::<Vec<_>>()))
            .collect::<Vec<_>>(),
        "b": num_array(&problem.b),
        "c": num_array(&problem.c),
        "lower": problem.lower.iter().map(|&v| bound(v)).collect::<Vec<_>>(),
        "upper": problem.upper.iter().map(|&v| bound(v)).collect::<Vec<_>>(),
        "x0": num_array(x0),
    })
}

/// DIMACS min-cost flow: `p min N M`, two `n v b` lines, `a u v low cap cost`.
///
/// With `maxflow`, `p max` headers, `n v s` / `n v t` node lines and
/// `a u v cap` arcs are accepted as well, and all costs are zero.
pub fn parse_dimacs_str(text: &str, maxflow: bool) -> Result<FlowInstance> {
    let mut header: Option<(usize, usize)> = None;
    let mut nodes: Vec<(usize, f64, usize)> = Vec::new();
    let mut edges = Vec::new();
    for (ln, raw) in text.lines().enumerate() {
        let line_no = ln + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('c') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = |what: &str| Error::Parse(format!("line {line_no}: {what}"));
        match fields[0] {
            "p" => {
                if header.is_some() {
                    return Err(bad("duplicate problem line"));
                }
                if fields.len() != 4 {
                    return Err(bad("problem line needs 'p <kind> <nodes> <arcs>'"));
                }
                match (fields[1], maxflow) {
                    ("min", _) | ("max", true) => {}
                    (kind, _) => return Err(bad(&format!("unsupported problem kind {kind:?}"))),
                }
                let nv = fields[2].parse().map_err(|_| bad("bad node count"))?;
                let na = fields[3].parse().map_err(|_| bad("bad arc count"))?;
                header = Some((nv, na));
            }
            "n" => {
                if header.is_none() {
                    return Err(bad("node line before problem line"));
                }
                if fields.len() != 3 {
                    return Err(bad("node line needs 'n <id> <supply>'"));
                }
                let v: usize = fields[1].parse().map_err(|_| bad("bad node id"))?;
                let supply = match fields[2] {
                    "s" if maxflow => 1.0,
                    "t" if maxflow => -1.0,
                    s => s.parse::<f64>().map_err(|_| bad("bad supply"))?,
                };
                nodes.push((v, supply, line_no));
            }
            "a" => {
                if header.is_none() {
                    return Err(bad("arc line before problem line"));
                }
                let nums: Vec<i64> = fields[1..]
                    .iter()
                    .map(|f| f.parse::<i64>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|_| bad("arc fields must be integers"))?;
                let (u, v, low, cap, cost) = match (nums.len(), maxflow) {
                    (5, _) => (nums[0], nums[1], nums[2], nums[3], nums[4]),
                    (3, true) => (nums[0], nums[1], 0, nums[2], 0),
                    _ => return Err(bad("arc line needs 'a <u> <v> <low> <cap> <cost>'")),
                };
                if low != 0 {
                    return Err(Error::Validation(format!("line {line_no}: lower bound {low} != 0")));
                }
                if u < 1 || v < 1 {
                    return Err(bad("node ids start at 1"));
                }
                let cost = if maxflow { 0 } else { cost };
                edges.push(FlowEdge { from: u as usize - 1, to: v as usize - 1, cap, cost });
            }
            other => return Err(bad(&format!("unknown line type {other:?}"))),
        }
    }
    let (nv, na) = header.ok_or_else(|| Error::Parse("missing problem line".into()))?;
    if edges.len() != na {
        return Err(Error::Validation(format!("header announces {na} arcs, found {}", edges.len())));
    }
    if nodes.len() != 2 {
        return Err(Error::Validation(format!("expected 2 node lines, found {}", nodes.len())));
    }
    let source = nodes.iter().find(|n| n.1 > 0.0);
    let sink = nodes.iter().find(|n| n.1 < 0.0);
    let (Some(s), Some(t)) = (source, sink) else {
        return Err(Error::Validation("node lines must name one source and one sink".into()));
    };
    for &(v, _, line_no) in &nodes {
        if v < 1 || v > nv {
            return Err(Error::Validation(format!("line {line_no}: node {v} out of range")));
        }
    }
    for e in &edges {
        if e.from >= nv || e.to >= nv {
            return Err(Error::Validation("arc endpoint out of range".into()));
        }
    }
    FlowInstance::new(nv, edges, s.0 - 1, t.0 - 1)
}

pub fn parse_dimacs(path: &Path, maxflow: bool) -> Result<FlowInstance> {
    parse_dimacs_str(&read_file(path)?, maxflow)
}

/// Writes an instance in DIMACS min-cost format.
pub fn dimacs_string(inst: &FlowInstance) -> String {
    let mut out = format!("p min {} {}\n", inst.n_vertices, inst.edges.len());
    out += &format!("n {} 1\n", inst.source + 1);
    out += &format!("n {} -1\n", inst.sink + 1);
    for e in &inst.edges {
        out += &format!("a {} {} 0 {} {}\n", e.from + 1, e.to + 1, e.cap, e.cost);
    }
    out
}

fn envelope(command: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    m
}

/// Error report written in place of a result.
pub fn error_json(command: &str, err: &Error) -> Value {
    let mut m = envelope(command);
    m.insert("status".into(), json!("error"));
    m.insert("error".into(), json!(err.to_string()));
    m.insert("exit_code".into(), json!(err.exit_code()));
    Value::Object(m)
}

pub fn lp_solution_json(sol: &LpSolution, eps: f64, profile: Profile, seed: u64) -> Value {
    let s = &sol.stats;
    let mut m = envelope("lp-solve");
    m.insert("status".into(), json!("ok"));
    m.insert("eps".into(), num(eps));
    m.insert("profile".into(), json!(profile_name(profile)));
    m.insert("seed".into(), json!(seed));
    m.insert("objective".into(), num(sol.objective));
    m.insert("x".into(), num_array(&sol.x));
    m.insert(
        "counts".into(),
        json!({
            "iterations": s.iterations,
            "t_steps": s.t_steps,
            "phase1_iterations": s.phase1_iterations,
            "phase2_iterations": s.phase2_iterations,
            "weight_solves": s.weight_solves,
            "linear_solves": s.linear_solves,
        }),
    );
    m.insert(
        "diagnostics".into(),
        json!({
            "final_delta_hat": num(s.final_delta_hat),
            "final_t": num(s.final_t),
            "gap_bound": num(s.gap_bound),
            "max_drift": num(s.max_drift),
            "max_weight_gap": num(s.max_weight_gap),
            "u_stat": num(s.u_stat),
        }),
    );
    m.insert("delta_hat_history".into(), num_array(&s.delta_history));
    Value::Object(m)
}

pub fn profile_name(p: Profile) -> &'static str {
    match p {
        Profile::Strict => "strict",
        Profile::Practical => "practical",
    }
}

pub fn run_lp_solve(path: &Path, eps: f64, profile: Profile, seed: u64) -> Result<Value> {
    let (problem, x0) = parse_lp_json(path)?;
    let cfg = PathConfig::new(problem.m(), problem.n(), profile);
    let sol = lp_solve(&problem, &x0, eps, &cfg, seed)?;
    Ok(lp_solution_json(&sol, eps, profile, seed))
}

pub fn flow_solution_json(inst: &FlowInstance, sol: &FlowSolution, seed: u64) -> Value {
    let mut m = envelope("flow-solve");
    m.insert("status".into(), json!("ok"));
    m.insert("seed".into(), json!(seed));
    m.insert("vertices".into(), json!(inst.n_vertices));
    m.insert("edges".into(), json!(inst.edges.len()));
    m.insert("value".into(), json!(sol.value));
    m.insert("cost".into(), json!(sol.cost));
    m.insert("flow".into(), json!(sol.flow));
    m.insert("retries".into(), json!(sol.retries));
    m.insert("iterations".into(), json!(sol.iterations));
    m.insert("rejected".into(), json!(sol.rejected));
    Value::Object(m)
}

pub fn run_flow_solve(path: &Path, maxflow: bool, profile: Profile, seed: u64) -> Result<Value> {
    let inst = parse_dimacs(path, maxflow)?;
    let opts = FlowOptions { profile, ..FlowOptions::new() };
    let sol = solve_min_cost_flow(&inst, seed, &opts)?;
    Ok(flow_solution_json(&inst, &sol, seed))
}

/// Weights, one per line, followed by a residual line.
pub fn run_lewis_weights(path: &Path, p: f64, eps: f64, mode: WeightMode, seed: u64) -> Result<String> {
    let a = parse_matrix(&read_file(path)?)?;
    let w = compute_initial_weight(&a, p, eps, mode, seed)?;
    let res = lewis_residual(&a, &w, p)?;
    let mut out = String::new();
    for v in &w {
        out += &fmt17(*v);
        out.push('\n');
    }
    out += &format!("# residual {} mass {}\n", fmt17(res), fmt17(w.iter().sum()));
    Ok(out)
}

/// Probe report at `x` (default the origin) with `b` (default `Ax − 1`).
pub fn run_barrier_probe(
    path: &Path,
    q: Option<f64>,
    x: Option<Vec<f64>>,
    b: Option<Vec<f64>>,
    probes: usize,
    seed: u64,
) -> Result<Value> {
    use rand::{Rng, SeedableRng};
    let a = parse_matrix(&read_file(path)?)?;
    let (m, n) = a.shape();
    let q = q.unwrap_or_else(|| default_q(m));
    let x = x.unwrap_or_else(|| vec![0.0; n]);
    if x.len() != n {
        return Err(Error::Validation(format!("point has length {}, expected {n}", x.len())));
    }
    let b = match b {
        Some(b) => b,
        None => (0..m).map(|i| (0..n).map(|j| a[(i, j)] * x[j]).sum::<f64>() - 1.0).collect(),
    };
    let ev = psi_hessian(&a, &b, &x, q, BARRIER_WEIGHT_TOL)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    let mut all_within = true;
    for _ in 0..probes {
        let h: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = self_concordance_probe(&a, &b, &x, &h, q, BARRIER_WEIGHT_TOL)?;
        all_within &= r.within;
        reports.push(json!({"ratio": num(r.ratio), "bound": num(r.bound), "within": r.within}));
    }
    let dikin = dikin_interior_rate(&a, &b, &x, &ev.hess, 0.9f64.sqrt(), 100, seed);
    let mut out = envelope("barrier-probe");
    out.insert("status".into(), json!("ok"));
    out.insert("q".into(), num(q));
    out.insert("psi".into(), num(ev.psi));
    out.insert("grad".into(), num_array(&ev.grad));
    out.insert("force".into(), num(ev.force));
    out.insert("force_bound".into(), json!(n));
    out.insert("sandwich".into(), json!({"min": num(ev.sandwich.min), "max": num(ev.sandwich.max), "upper": num(1.0 + q)}));
    out.insert("n_spectrum".into(), json!({"min": num(ev.n_spectrum.min), "max": num(ev.n_spectrum.max)}));
    out.insert("probes".into(), Value::Array(reports));
    out.insert("all_probes_within".into(), json!(all_within));
    out.insert("dikin_interior_rate".into(), num(dikin));
    Ok(Value::Object(out))
}

/// Instance kind for `diagnose`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagnoseKind {
    Matrix,
    Lp,
    Flow,
}

impl FromStr for DiagnoseKind {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "matrix" => Ok(DiagnoseKind::Matrix),
            "lp" => Ok(DiagnoseKind::Lp),
            "flow" => Ok(DiagnoseKind::Flow),
            other => Err(format!("unknown instance kind {other:?}")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DiagnoseOptions {
    pub eps: f64,
    pub seed: u64,
    pub profile: Profile,
    /// Multiplies every other weight by 1.5 before the fixed-point check.
    pub corrupt_weights: bool,
}

impl Default for DiagnoseOptions {
    fn default() -> Self {
        DiagnoseOptions { eps: 1e-5, seed: 0, profile: Profile::Practical, corrupt_weights: false }
    }
}

struct Checks(Vec<Value>);

impl Checks {
    fn push(&mut self, name: &str, value: f64, limit: f64, pass: bool) {
        self.0.push(json!({"name": name, "pass": pass, "value": num(value), "limit": num(limit)}));
    }

    fn at_most(&mut self, name: &str, value: f64, limit: f64) {
        self.push(name, value, limit, value.is_finite() && value <= limit);
    }

    fn failed(&mut self, name: &str, err: &Error) {
        self.0.push(json!({"name": name, "pass": false, "value": Value::Null, "limit": Value::Null, "error": err.to_string()}));
    }

    fn all_pass(&self) -> bool {
        self.0.iter().all(|c| c["pass"] == json!(true))
    }
}

fn max_abs(m: &nalgebra::DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

fn matrix_checks(a: &DenseMatrix, opts: &DiagnoseOptions, checks: &mut Checks) {
    let (m, n) = a.shape();
    let p = 1.0 - 1.0 / (4.0 * m as f64).ln();
    match lewis_weights(a, p, 1e-8) {
        Ok(mut w) => {
            if opts.corrupt_weights {
                w.iter_mut().step_by(2).for_each(|v| *v *= 1.5);
            }
            match lewis_residual(a, &w, p) {
                Ok(r) => checks.at_most("lewis_fixed_point_residual", r, 1e-7),
                Err(e) => checks.failed("lewis_fixed_point_residual", &e),
            }
            checks.at_most("lewis_mass_error", (w.iter().sum::<f64>() - n as f64).abs(), 1e-6);
        }
        Err(e) => checks.failed("lewis_fixed_point_residual", &e),
    }
    match (lewis_weights(a, 2.0, 1e-10), leverage_scores(a, &vec![1.0; m])) {
        (Ok(w), Ok(s)) => {
            let d = w.iter().zip(&s).fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
            checks.at_most("p2_equals_leverage", d, 1e-10);
        }
        (Err(e), _) | (_, Err(e)) => checks.failed("p2_equals_leverage", &e),
    }
    match projection_bundle(a, &vec![1.0; m]) {
        Ok(pb) => {
            let pp = &pb.proj * &pb.proj - &pb.proj;
            checks.at_most("projection_idempotent", max_abs(&pp), 1e-8);
            checks.at_most("projection_symmetric", max_abs(&(&pb.proj - pb.proj.transpose())), 1e-8);
            let trace: f64 = pb.sigma.iter().sum();
            checks.at_most("leverage_mass_error", (trace - n as f64).abs(), 1e-8);
            let row_sum = (0..m)
                .map(|i| pb.lap.row(i).sum().abs())
                .fold(0.0f64, f64::max);
            checks.at_most("laplacian_row_sums", row_sum, 1e-8);
            let eig = nalgebra::SymmetricEigen::new(pb.norm_lap.clone()).eigenvalues;
            let lo = eig.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = eig.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            checks.at_most("normalized_laplacian_psd", -lo, 1e-8);
            checks.at_most("normalized_laplacian_below_identity", hi - 1.0, 1e-8);
        }
        Err(e) => checks.failed("projection_bundle", &e),
    }
    let b: Vec<f64> = vec![-1.0; m];
    let x = vec![0.0; n];
    match psi_hessian(a, &b, &x, default_q(m), BARRIER_WEIGHT_TOL) {
        Ok(ev) => {
            checks.at_most("barrier_force_bound", ev.force, n as f64 + 1e-6);
            checks.push(
                "barrier_hessian_sandwich",
                ev.sandwich.max,
                1.0 + ev.q,
                ev.sandwich.min >= 1.0 - 1e-6 && ev.sandwich.max <= (1.0 + ev.q) * (1.0 + 1e-6),
            );
        }
        Err(e) => checks.failed("barrier_hessian", &e),
    }
}

fn lp_checks(problem: &LpProblem, x0: &[f64], opts: &DiagnoseOptions, checks: &mut Checks) {
    let cfg = PathConfig::new(problem.m(), problem.n(), opts.profile);
    match lp_solve(problem, x0, opts.eps, &cfg, opts.seed) {
        Ok(sol) => {
            let r = problem.constraint_value(&sol.x);
            let scale = problem.b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
            let res = r.iter().zip(&problem.b).map(|(r, b)| (r - b) * (r - b)).sum::<f64>().sqrt();
            checks.at_most("equality_residual", res, 1e-8 * scale);
            let interior = problem.in_domain(&sol.x);
            checks.push("strictly_interior", if interior { 1.0 } else { 0.0 }, 1.0, interior);
            checks.at_most("system_drift", sol.stats.max_drift, 0.1);
            checks.at_most("weight_gap", sol.stats.max_weight_gap, 0.5);
            checks.at_most("duality_gap_bound", sol.stats.gap_bound, opts.eps);
        }
        Err(e) => checks.failed("lp_solve", &e),
    }
}

fn flow_checks(inst: &FlowInstance, opts: &DiagnoseOptions, checks: &mut Checks) {
    let fopts = FlowOptions { profile: opts.profile, ..FlowOptions::new() };
    match solve_min_cost_flow(inst, opts.seed, &fopts) {
        Ok(sol) => {
            let rep = validate_flow(&sol.flow, inst);
            checks.at_most("capacity_violations", rep.capacity_violations.len() as f64, 0.0);
            checks.at_most("conservation_violations", rep.conservation_violations.len() as f64, 0.0);
            let cert = certify_optimal(&sol.flow, inst).is_ok();
            checks.push("optimality_certificate", if cert { 1.0 } else { 0.0 }, 1.0, cert);
            checks.at_most("perturbation_retries", sol.retries as f64, 5.0);
        }
        Err(e) => checks.failed("flow_solve", &e),
    }
}

/// Runs the invariant suite for an instance; exit code 0 iff all pass.
pub fn run_diagnose(path: &Path, kind: DiagnoseKind, opts: &DiagnoseOptions) -> Result<(Value, i32)> {
    let mut checks = Checks(Vec::new());
    let kind_name = match kind {
        DiagnoseKind::Matrix => {
            let a = parse_matrix(&read_file(path)?)?;
            matrix_checks(&a, opts, &mut checks);
            "matrix"
        }
        DiagnoseKind::Lp => {
            let (problem, x0) = parse_lp_json(path)?;
            matrix_checks(&problem.a, opts, &mut checks);
            lp_checks(&problem, &x0, opts, &mut checks);
            "lp"
        }
        DiagnoseKind::Flow => {
            let inst = parse_dimacs(path, false)?;
            flow_checks(&inst, opts, &mut checks);
            "flow"
        }
    };
    let all = checks.all_pass();
    let mut out = envelope("diagnose");
    out.insert("kind".into(), json!(kind_name));
    out.insert("seed".into(), json!(opts.seed));
    out.insert("checks".into(), Value::Array(checks.0));
    out.insert("all_pass".into(), json!(all));
    Ok((Value::Object(out), if all { 0 } else { 3 }))
}

/// Pretty JSON with a trailing newline.
pub fn to_pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
