//! Linear maximization over the mixed ball `‖x‖₂ + ‖l⁻¹x‖∞ ≤ 1`.
//!
//! Writing `t = ‖l⁻¹x‖∞`, the inner problem caps `|x_i| ≤ t·l_i` and spends
//! the rest of the budget `1 − t` on an ℓ₂ ball. The capped coordinates are a
//! prefix of the order by `|a_i|/l_i`, so `t ∈ [0, 1]` splits into intervals
//! on which the value is
//!
//! `g_k(t) = t·S_k + √((1−t)² − t²L_k)·√R_k`
//!
//! with `S_k = Σ_{j≤k}|a_j|l_j`, `L_k = Σ_{j≤k}l_j²`, `R_k = Σ_{j>k}a_j²`.
//! Each `g_k` is concave, so its maximum on an interval is an endpoint or the
//! root of `g_k′`.

/// Maximizer of `⟨a, x⟩` subject to `‖x‖₂ + ‖l⁻¹x‖∞ ≤ 1`.
pub fn project_mixed_ball(a: &[f64], l: &[f64]) -> Vec<f64> {
    let n = a.len();
    assert_eq!(n, l.len(), "a and l must have equal length");
    assert!(l.iter().all(|&v| v > 0.0), "caps must be positive");
    if a.iter().all(|&v| v == 0.0) {
        return vec![0.0; n];
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        let ri = a[i].abs() / l[i];
        let rj = a[j].abs() / l[j];
        rj.partial_cmp(&ri).unwrap_or(std::cmp::Ordering::Equal).then(i.cmp(&j))
    });
    // prefix sums over the sorted order; index k means "first k capped"
    let mut s_pre = vec![0.0; n + 1];
    let mut l_pre = vec![0.0; n + 1];
    for k in 0..n {
        let i = order[k];
        s_pre[k + 1] = s_pre[k] + a[i].abs() * l[i];
        l_pre[k + 1] = l_pre[k] + l[i] * l[i];
    }
    let mut r_suf = vec![0.0; n + 1];
    for k in (0..n).rev() {
        let i = order[k];
        r_suf[k] = r_suf[k + 1] + a[i] * a[i];
    }
    // breakpoints in s = t/(1−t): coordinate k (1-based) leaves the cap at s_k
    let mut s_break = vec![0.0; n + 2];
    s_break[0] = f64::INFINITY;
    for k in 1..=n {
        let i = order[k - 1];
        let den = (l[i] * l[i] * r_suf[k] + a[i] * a[i] * l_pre[k]).sqrt();
        s_break[k] = if den > 0.0 { a[i].abs() / den } else { 0.0 };
    }
    s_break[n + 1] = 0.0;
    let to_t = |s: f64| if s.is_infinite() { 1.0 } else { s / (1.0 + s) };

    let mut best = (f64::NEG_INFINITY, 0usize, 0.0f64);
    for k in 0..=n {
        let mut t_lo = to_t(s_break[k + 1]);
        let mut t_hi = to_t(s_break[k]);
        // the ℓ₂ budget must stay nonnegative: (1−t)² ≥ t²L_k
        let t_feas = 1.0 / (1.0 + l_pre[k].sqrt());
        t_hi = t_hi.min(t_feas);
        if t_lo > t_hi {
            // empty interval after clipping; still allow its left end when degenerate
            if t_lo - t_hi > 1e-15 {
                continue;
            }
            t_lo = t_hi;
        }
        let sk = s_pre[k];
        let lk = l_pre[k];
        let rk = r_suf[k].max(0.0);
        let value = |t: f64| {
            let q = ((1.0 - t) * (1.0 - t) - t * t * lk).max(0.0);
            t * sk + q.sqrt() * rk.sqrt()
        };
        let mut cands = vec![t_lo, t_hi];
        for r in critical_points(sk, lk, rk) {
            if r > t_lo && r < t_hi {
                cands.push(r);
            }
        }
        for t in cands {
            let v = value(t);
            if v > best.0 {
                best = (v, k, t);
            }
        }
    }
    let (_, k, t) = best;
    let mut x = vec![0.0; n];
    for &i in &order[..k] {
        x[i] = if a[i] == 0.0 { 0.0 } else { a[i].signum() * t * l[i] };
    }
    let rk = r_suf[k].max(0.0);
    if rk > 0.0 {
        let q = ((1.0 - t) * (1.0 - t) - t * t * l_pre[k]).max(0.0);
        let lam = q.sqrt() / rk.sqrt();
        for &i in &order[k..] {
            x[i] = lam * a[i];
        }
    }
    let size = mixed_ball_gauge(&x, l);
    if size > 1.0 {
        x.iter_mut().for_each(|v| *v /= size);
    }
    x
}

/// `‖x‖₂ + ‖l⁻¹x‖∞`.
pub fn mixed_ball_gauge(x: &[f64], l: &[f64]) -> f64 {
    let two = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let inf = x.iter().zip(l).fold(0.0f64, |acc, (v, l)| acc.max(v.abs() / l));
    two + inf
}

/// Roots of `g_k′(t) = 0`: `S√q = √R(1 − (1−L)t)` squared out.
fn critical_points(s: f64, l: f64, r: f64) -> Vec<f64> {
    let c = 1.0 - l;
    let s2 = s * s;
    let qa = s2 * c - r * c * c;
    let qb = -2.0 * s2 + 2.0 * r * c;
    let qc = s2 - r;
    let mut roots = Vec::new();
    let scale = qa.abs().max(qb.abs()).max(qc.abs());
    if scale == 0.0 {
        return roots;
    }
    if qa.abs() <= 1e-14 * scale {
        if qb != 0.0 {
            roots.push(-qc / qb);
        }
    } else {
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            // numerically stable pair
            let q = -0.5 * (qb + qb.signum() * sq);
            if q != 0.0 {
                roots.push(q / qa);
                roots.push(qc / q);
            } else {
                roots.push(-qb / (2.0 * qa));
            }
        }
    }
    // squaring adds spurious roots where 1 − (1−L)t < 0
    roots.retain(|&t| t.is_finite() && 1.0 - c * t >= 0.0);
    roots
}
