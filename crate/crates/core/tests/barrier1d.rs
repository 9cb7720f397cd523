use std::f64::consts::PI;

use lewis_ipm::barrier1d::{barrier_eval, BarrierValue, IntervalBarrier};
use lewis_ipm::Error;

fn approx(v: BarrierValue, want: (f64, f64, f64, f64), tol: f64) {
    let got = [v.phi, v.d1, v.d2, v.d3];
    let want = [want.0, want.1, want.2, want.3];
    for (g, w) in got.iter().zip(&want) {
        assert!((g - w).abs() <= tol, "{got:?} vs {want:?}");
    }
}

fn samples() -> Vec<IntervalBarrier> {
    vec![
        IntervalBarrier::LowerLog { l: -1.5 },
        IntervalBarrier::UpperLog { u: 2.0 },
        IntervalBarrier::Trig { l: -1.0, u: 3.0 },
        IntervalBarrier::Trig { l: 0.0, u: 1e-3 },
    ]
}

/// 200 interior points, denser towards the finite ends.
fn grid(bar: &IntervalBarrier) -> Vec<f64> {
    let (l, u) = (bar.lower(), bar.upper());
    (1..=200)
        .map(|k| {
            let s = k as f64 / 201.0;
            match (l.is_finite(), u.is_finite()) {
                (true, true) => l + (u - l) * s,
                (true, false) => l + 10f64.powf(-6.0 + 9.0 * s),
                _ => u - 10f64.powf(-6.0 + 9.0 * s),
            }
        })
        .collect()
}

#[test]
fn lower_log_at_one() {
    approx(barrier_eval(&IntervalBarrier::LowerLog { l: 0.0 }, 1.0).unwrap(), (0.0, -1.0, 1.0, -2.0), 1e-15);
}

#[test]
fn trig_at_midpoint() {
    let v = barrier_eval(&IntervalBarrier::Trig { l: -1.0, u: 1.0 }, 0.0).unwrap();
    approx(v, (0.0, 0.0, (PI / 2.0).powi(2), 0.0), 1e-14);
}

#[test]
fn upper_log_at_unit_slack() {
    // −log(u − x): φ′ = 1/s, φ″ = 1/s², φ‴ = 2/s³
    approx(barrier_eval(&IntervalBarrier::UpperLog { u: 3.0 }, 2.0).unwrap(), (0.0, 1.0, 1.0, 2.0), 1e-15);
}

#[test]
fn out_of_domain_is_an_error() {
    for (bar, x) in [
        (IntervalBarrier::LowerLog { l: 0.0 }, 0.0),
        (IntervalBarrier::UpperLog { u: 1.0 }, 1.5),
        (IntervalBarrier::Trig { l: 0.0, u: 1.0 }, 1.0),
    ] {
        assert!(matches!(barrier_eval(&bar, x), Err(Error::OutOfDomain { .. })));
    }
}

#[test]
fn bound_patterns_select_barriers() {
    assert!(matches!(IntervalBarrier::for_bounds(0.0, f64::INFINITY), Ok(IntervalBarrier::LowerLog { .. })));
    assert!(matches!(IntervalBarrier::for_bounds(f64::NEG_INFINITY, 0.0), Ok(IntervalBarrier::UpperLog { .. })));
    assert!(matches!(IntervalBarrier::for_bounds(0.0, 1.0), Ok(IntervalBarrier::Trig { .. })));
    assert!(IntervalBarrier::for_bounds(f64::NEG_INFINITY, f64::INFINITY).is_err());
    assert!(IntervalBarrier::for_bounds(1.0, 1.0).is_err());
}

#[test]
fn self_concordance_on_grid() {
    for bar in samples() {
        for x in grid(&bar) {
            let v = barrier_eval(&bar, x).unwrap();
            assert!(v.d2 > 0.0);
            assert!(v.d3.abs() <= 2.0 * v.d2.powf(1.5) * (1.0 + 1e-9), "{bar:?} at {x}: {v:?}");
            if !matches!(bar, IntervalBarrier::Trig { .. }) {
                assert!(v.d1.abs() <= v.d2.sqrt() * (1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    for bar in samples() {
        let (l, u) = (bar.lower(), bar.upper());
        let width = if l.is_finite() && u.is_finite() { u - l } else { 1.0 };
        for x in grid(&bar) {
            let slack = (x - l).min(u - x);
            if slack < 0.05 * width {
                continue;
            }
            let h = 1e-5 * slack;
            let p = barrier_eval(&bar, x + h).unwrap();
            let m = barrier_eval(&bar, x - h).unwrap();
            let v = barrier_eval(&bar, x).unwrap();
            let rel = |fd: f64, exact: f64, scale: f64| (fd - exact).abs() / scale.max(1e-300);
            assert!(rel((p.phi - m.phi) / (2.0 * h), v.d1, v.d1.abs().max(v.d2.sqrt())) < 1e-6);
            assert!(rel((p.d1 - m.d1) / (2.0 * h), v.d2, v.d2) < 1e-6);
            assert!(rel((p.d2 - m.d2) / (2.0 * h), v.d3, v.d3.abs().max(v.d2.powf(1.5))) < 1e-6);
        }
    }
}

#[test]
fn blows_up_towards_each_finite_end() {
    for bar in samples() {
        let (l, u) = (bar.lower(), bar.upper());
        let mid = if l.is_finite() && u.is_finite() { 0.5 * (l + u) } else if l.is_finite() { l + 1.0 } else { u - 1.0 };
        for end in [l, u].into_iter().filter(|e| e.is_finite()) {
            let mut last = f64::NEG_INFINITY;
            for k in 1..40 {
                let x = end + (mid - end) * 0.5f64.powi(k);
                let phi = barrier_eval(&bar, x).unwrap().phi;
                assert!(phi > last);
                last = phi;
            }
        }
    }
}

#[test]
fn hessian_at_least_inverse_width() {
    let bar = IntervalBarrier::Trig { l: -2.0, u: 5.0 };
    for x in grid(&bar) {
        assert!(barrier_eval(&bar, x).unwrap().d2.sqrt() >= 1.0 / 7.0);
    }
}
