mod common;

use lewis_ipm::barrier1d::{barrier_eval, IntervalBarrier};
use lewis_ipm::cli::{dimacs_string, parse_dimacs_str};
use lewis_ipm::flow::validate_flow;
use lewis_ipm::lewis::lewis_weights;
use lewis_ipm::linalg::leverage_scores;
use lewis_ipm::pathfollow::{log_potential, mixed_ball_gauge, mixed_norm, project_mixed_ball};
use proptest::prelude::*;
use rand::Rng;

use common::{dot, gaussian, inf_norm, mixed_ball_oracle, random_flow_instance, rng};

fn vec_in(len: std::ops::Range<usize>, lo: f64, hi: f64) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(lo..hi, len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn interval_barriers_are_self_concordant(l in -10.0f64..10.0, width in 1e-3f64..1e3, s in 0.001f64..0.999) {
        let x = l + width * s;
        for bar in [
            IntervalBarrier::LowerLog { l },
            IntervalBarrier::UpperLog { u: l + width },
            IntervalBarrier::Trig { l, u: l + width },
        ] {
            let v = barrier_eval(&bar, x).unwrap();
            prop_assert!(v.d2 > 0.0);
            prop_assert!(v.d3.abs() <= 2.0 * v.d2.powf(1.5) * (1.0 + 1e-9));
        }
    }

    #[test]
    fn mixed_norm_triangle(pair in (1usize..12).prop_flat_map(|m| (vec_in(m..m + 1, -5.0, 5.0), vec_in(m..m + 1, -5.0, 5.0), vec_in(m..m + 1, 0.01, 3.0))), c in 0.1f64..10.0) {
        let (u, v, w) = pair;
        let sum: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + b).collect();
        let lhs = mixed_norm(&sum, &w, c);
        prop_assert!(lhs <= (mixed_norm(&u, &w, c) + mixed_norm(&v, &w, c)) * (1.0 + 1e-12) + 1e-12);
        let scaled: Vec<f64> = u.iter().map(|x| -2.5 * x).collect();
        prop_assert!((mixed_norm(&scaled, &w, c) - 2.5 * mixed_norm(&u, &w, c)).abs() <= 1e-12 * (1.0 + lhs));
    }

    #[test]
    fn potential_sandwich(v in vec_in(1..30, -50.0, 50.0), mu in 0.01f64..20.0) {
        let lp = log_potential(&v, mu);
        let top = mu * inf_norm(&v);
        prop_assert!(lp >= top - 1e-9);
        prop_assert!(lp <= top + (2.0 * v.len() as f64).ln() + 1e-9);
    }

    #[test]
    fn leverage_scores_sum_to_rank(seed in any::<u64>(), m in 3usize..25, n in 1usize..4) {
        prop_assume!(m >= n);
        let mut r = rng(seed);
        let a = gaussian(&mut r, m, n);
        let d: Vec<f64> = (0..m).map(|_| r.gen_range(0.1..10.0)).collect();
        let s = leverage_scores(&a, &d).unwrap();
        prop_assert!(s.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        prop_assert!((s.iter().sum::<f64>() - n as f64).abs() < 1e-9);
    }

    #[test]
    fn flow_validator_agrees_with_direct_check(seed in any::<u64>(), nv in 2usize..7) {
        let mut r = rng(seed);
        let inst = random_flow_instance(&mut r, nv, 4);
        let flow: Vec<i64> = inst.edges.iter().map(|e| r.gen_range(-1..=e.cap + 1)).collect();
        let rep = validate_flow(&flow, &inst);
        let mut net = vec![0i64; nv];
        for (f, e) in flow.iter().zip(&inst.edges) {
            net[e.from] -= f;
            net[e.to] += f;
        }
        let caps_ok = flow.iter().zip(&inst.edges).all(|(f, e)| (0..=e.cap).contains(f));
        let cons_ok = (0..nv).filter(|&v| v != inst.source && v != inst.sink).all(|v| net[v] == 0);
        prop_assert_eq!(rep.ok(), caps_ok && cons_ok);
        prop_assert_eq!(rep.capacity_violations.is_empty(), caps_ok);
        prop_assert_eq!(rep.value, net[inst.sink]);
        prop_assert_eq!(validate_flow(&vec![0; flow.len()], &inst).ok(), true);
    }

    #[test]
    fn dimacs_round_trip(seed in any::<u64>(), nv in 2usize..8, max in 1i64..100) {
        let inst = random_flow_instance(&mut rng(seed), nv, max);
        let back = parse_dimacs_str(&dimacs_string(&inst), false).unwrap();
        prop_assert_eq!(back.edges, inst.edges);
        prop_assert_eq!((back.n_vertices, back.source, back.sink), (inst.n_vertices, inst.source, inst.sink));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn mixed_ball_projection_is_feasible_and_optimal(pair in (1usize..8).prop_flat_map(|m| (vec_in(m..m + 1, -3.0, 3.0), vec_in(m..m + 1, 0.05, 2.0)))) {
        let (a, l) = pair;
        let x = project_mixed_ball(&a, &l);
        prop_assert!(mixed_ball_gauge(&x, &l) <= 1.0 + 1e-12);
        let best = mixed_ball_oracle(&a, &l, 400);
        let got = dot(&a, &x);
        prop_assert!(got >= best - 1e-9 * (1.0 + best.abs()), "{} < {}", got, best);
        prop_assert!(got <= best + 1e-6 * (1.0 + best.abs()));
    }

    #[test]
    fn lewis_weights_have_mass_n(seed in any::<u64>(), m in 6usize..20, n in 1usize..4, p in prop::sample::select(vec![0.5, 1.0, 1.5, 3.0])) {
        let a = gaussian(&mut rng(seed), m, n);
        let w = lewis_weights(&a, p, 1e-8).unwrap();
        prop_assert!(w.iter().all(|&v| v > 0.0 && v <= 1.0 + 1e-9));
        prop_assert!((w.iter().sum::<f64>() - n as f64).abs() < 1e-6);
    }
}
