mod common;

use lewis_ipm::flow::*;
use lewis_ipm::Error;
use rand::Rng;

use common::rng;

fn edge(from: usize, to: usize, cap: i64, cost: i64) -> FlowEdge {
    FlowEdge { from, to, cap, cost }
}

/// s=0 → {1, 2} → t=3, with a cross edge 1 → 2.
fn diamond() -> FlowInstance {
    FlowInstance::new(
        4,
        vec![edge(0, 1, 3, 1), edge(0, 2, 2, 4), edge(1, 2, 2, 1), edge(1, 3, 2, 5), edge(2, 3, 3, 1)],
        0,
        3,
    )
    .unwrap()
}

fn lp_point(flow: &[i64], lp: &FlowLp) -> Vec<f64> {
    let mut x = vec![0.0; lp.problem.m()];
    for (row, &k) in lp.edge_vars.iter().enumerate() {
        x[row] = flow[k] as f64;
    }
    x
}

#[test]
fn perturbed_costs_stay_bounded() {
    let inst = FlowInstance::new(3, vec![edge(0, 1, 1, 1), edge(1, 2, 1, 0), edge(0, 2, 1, 1)], 0, 2).unwrap();
    assert_eq!(inst.magnitude(), 1);
    for seed in 0..50 {
        let q = perturb_costs(&inst, seed);
        assert!(q.iter().all(|v| v.abs() <= 72));
        for (qe, e) in q.iter().zip(&inst.edges) {
            let k = qe - 36 * e.cost;
            assert!((1..=6).contains(&k));
        }
    }
}

#[test]
fn perturbation_is_seeded() {
    let inst = diamond();
    assert_eq!(perturb_costs(&inst, 7), perturb_costs(&inst, 7));
    assert!((0..10).any(|s| perturb_costs(&inst, s) != perturb_costs(&inst, 7)));
}

#[test]
fn single_edge_perturbation() {
    let inst = FlowInstance::new(2, vec![edge(0, 1, 5, 3)], 0, 1).unwrap();
    let q = perturb_costs(&inst, 1)[0];
    // 4|E|²M²·q plus one increment from {1, …, 2|E|M}
    assert!((100 * 3 + 1..=100 * 3 + 10).contains(&q));
}

#[test]
fn two_vertex_lp_dimensions() {
    let inst = FlowInstance::new(2, vec![edge(0, 1, 5, 0)], 0, 1).unwrap();
    let lp = build_flow_lp(&inst, 0, Penalty::Dual).unwrap();
    assert_eq!((lp.problem.n(), lp.problem.m()), (1, 4));
    assert_eq!(lp.n_edge_vars(), 1);
}

#[test]
fn zero_capacity_edges_are_dropped() {
    let inst = FlowInstance::new(3, vec![edge(0, 1, 2, 1), edge(1, 2, 0, 1), edge(0, 2, 1, 1)], 0, 2).unwrap();
    let lp = build_flow_lp(&inst, 0, Penalty::Dual).unwrap();
    assert_eq!(lp.edge_vars, vec![0, 2]);
}

#[test]
fn explicit_start_is_interior() {
    let mut r = rng(300);
    for k in 0..100 {
        let nv = r.gen_range(2..=8);
        let inst = common::random_flow_instance(&mut r, nv, 10);
        let lp = build_flow_lp(&inst, k, Penalty::Dual).unwrap();
        let p = &lp.problem;
        assert!(p.check_start(&lp.x0).is_ok());
        let margin_floor = lp
            .edge_vars
            .iter()
            .map(|&e| inst.edges[e].cap as f64 / 2.0)
            .fold(nv as f64 * inst.magnitude() as f64, f64::min);
        for i in 0..p.m() {
            let margin = (lp.x0[i] - p.lower[i]).min(p.upper[i] - lp.x0[i]);
            assert!(margin >= margin_floor && margin > 0.0, "instance {k}, variable {i}");
        }
    }
}

#[test]
fn start_objective_is_reproduced() {
    let inst = diamond();
    for penalty in [Penalty::Dual, Penalty::Theoretical] {
        let lp = build_flow_lp(&inst, 3, penalty).unwrap();
        let direct: f64 = lp.x0.iter().zip(&lp.problem.c).map(|(x, c)| x * c).sum();
        let obj = lp.problem.objective(&lp.x0);
        assert!(obj.is_finite());
        assert!((obj - direct).abs() <= 1e-12 * direct.abs().max(1.0));
    }
}

#[test]
fn penalty_constants() {
    let inst = diamond();
    let (e, m, v) = (5.0f64, 5.0f64, 4.0f64);
    let bound = 8.0 * e * e * m.powi(3);
    let theory = build_flow_lp(&inst, 0, Penalty::Theoretical).unwrap();
    assert_eq!(theory.cost_bound, bound);
    assert_eq!(theory.lambda, 440.0 * e.powi(4) * bound * bound * m.powi(3));
    let dual = build_flow_lp(&inst, 0, Penalty::Dual).unwrap();
    assert_eq!(dual.lambda, 4.0 * v * bound);
    assert!(theory.perturbed.iter().all(|q| (*q as f64).abs() <= bound));
}

#[test]
fn hand_instances() {
    let cases = [
        (FlowInstance::new(2, vec![edge(0, 1, 5, 0)], 0, 1).unwrap(), (5, 0)),
        (FlowInstance::new(2, vec![edge(0, 1, 1, 1), edge(0, 1, 1, 2)], 0, 1).unwrap(), (2, 3)),
        // both cuts around s and t have capacity 5, which forces the flow
        (diamond(), (5, 25)),
    ];
    for (k, (inst, want)) in cases.iter().enumerate() {
        let sol = solve_min_cost_flow(inst, k as u64, &FlowOptions::new()).unwrap();
        assert_eq!((sol.value, sol.cost), *want, "case {k}");
        assert!(validate_flow(&sol.flow, inst).ok());
        assert_eq!(common::ssp_oracle(inst), *want);
    }
}

#[test]
fn six_vertex_graphs_match_ssp() {
    let mut r = rng(301);
    for k in 0..25 {
        let inst = common::random_flow_instance(&mut r, 6, 5);
        let sol = solve_min_cost_flow(&inst, k, &FlowOptions::new()).unwrap();
        assert_eq!((sol.value, sol.cost), common::ssp_oracle(&inst), "instance {k}");
    }
}

#[test]
fn rounding_without_excess_is_identity() {
    let inst = diamond();
    let lp = build_flow_lp(&inst, 0, Penalty::Dual).unwrap();
    let flow = vec![3, 0, 1, 2, 1];
    assert!(validate_flow(&flow, &inst).ok());
    assert_eq!(round_and_repair(&lp_point(&flow, &lp), &inst, &lp).unwrap(), flow);
}

#[test]
fn injected_excess_is_repaired() {
    let inst = diamond();
    let lp = build_flow_lp(&inst, 0, Penalty::Dual).unwrap();
    let flow = vec![3, 0, 1, 2, 1];
    for (row, delta) in [(2, 1e-6), (3, -1e-6), (1, 0.3), (4, -0.3)] {
        let mut x = lp_point(&flow, &lp);
        x[row] += delta;
        let out = round_and_repair(&x, &inst, &lp).unwrap();
        assert!(validate_flow(&out, &inst).ok(), "row {row}");
        if delta.abs() < 1e-3 {
            assert_eq!(out, flow);
        }
    }
}

#[test]
fn validator_reports_violations() {
    let inst = diamond();
    let good = validate_flow(&[3, 0, 1, 2, 1], &inst);
    assert!(good.ok());
    // inflow at t: 2 + 1; cost 3 + 1 + 10 + 1
    assert_eq!((good.value, good.cost), (3, 15));
    let over = validate_flow(&[4, 0, 2, 2, 2], &inst);
    assert_eq!(over.capacity_violations, vec![0]);
    let neg = validate_flow(&[-1, 1, 0, 0, 0], &inst);
    assert_eq!(neg.capacity_violations, vec![0]);
    assert_eq!(neg.conservation_violations, vec![1, 2]);
    let leak = validate_flow(&[1, 0, 0, 0, 0], &inst);
    assert!(leak.capacity_violations.is_empty());
    assert_eq!(leak.conservation_violations, vec![1]);
    assert!(!validate_flow(&[1, 2], &inst).ok());
}

#[test]
fn certificate_separates_optimal_flows() {
    let inst = diamond();
    assert!(certify_optimal(&[3, 2, 1, 2, 3], &inst).is_ok());
    assert!(certify_optimal(&[3, 0, 1, 2, 1], &inst).unwrap_err().contains("augmenting"));
    // parallel edges of cost 5 and 1: using the dear one leaves a negative cycle
    let pair = FlowInstance::new(3, vec![edge(0, 1, 1, 5), edge(0, 1, 1, 1), edge(1, 2, 1, 0)], 0, 2).unwrap();
    assert!(certify_optimal(&[1, 0, 1], &pair).unwrap_err().contains("negative"));
    assert!(certify_optimal(&[0, 1, 1], &pair).is_ok());
    assert!(certify_optimal(&[1, 1, 1], &pair).is_err());
}

#[test]
fn invalid_instances_are_rejected() {
    assert!(matches!(FlowInstance::new(3, vec![edge(0, 1, 1, 0)], 0, 1), Err(Error::DisconnectedGraph)));
    assert!(matches!(FlowInstance::new(2, vec![edge(0, 1, 1, 0)], 0, 0), Err(Error::Validation(_))));
    assert!(matches!(FlowInstance::new(2, vec![edge(0, 1, -1, 0)], 0, 1), Err(Error::Validation(_))));
    assert!(matches!(FlowInstance::new(2, vec![edge(0, 2, 1, 0)], 0, 1), Err(Error::Validation(_))));
    assert_eq!(Error::DisconnectedGraph.exit_code(), 2);
}

#[test]
fn retries_are_rare() {
    let mut r = rng(302);
    let (mut runs, mut many) = (0, 0);
    while runs < 200 {
        let nv = r.gen_range(2..=4);
        let inst = common::random_flow_instance(&mut r, nv, 3);
        let sol = solve_min_cost_flow(&inst, runs, &FlowOptions::new()).unwrap();
        if sol.retries > 2 {
            many += 1;
        }
        runs += 1;
    }
    assert!(many as f64 <= 0.05 * runs as f64, "{many} of {runs}");
}
