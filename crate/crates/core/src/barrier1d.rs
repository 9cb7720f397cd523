//! Interval barriers with their first three derivatives.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum IntervalBarrier {
    /// `−log(x − l)` on `(l, ∞)`.
    LowerLog { l: f64 },
    /// `−log(u − x)` on `(−∞, u)`.
    UpperLog { u: f64 },
    /// `−log cos(a x + b)` on `(l, u)`.
    Trig { l: f64, u: f64 },
}

/// Value and derivatives `(φ, φ′, φ″, φ‴)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierValue {
    pub phi: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

const COS_FLOOR: f64 = 1e-300;

impl IntervalBarrier {
    /// Picks the barrier matching the bound pattern; infinite bounds are
    /// passed as `±∞`.
    pub fn for_bounds(l: f64, u: f64) -> Result<Self> {
        if l.is_nan() || u.is_nan() || !(l < u) {
            return Err(Error::Validation(format!("empty interval ({l}, {u})")));
        }
        match (l.is_finite(), u.is_finite()) {
            (true, true) => Ok(IntervalBarrier::Trig { l, u }),
            (true, false) => Ok(IntervalBarrier::LowerLog { l }),
            (false, true) => Ok(IntervalBarrier::UpperLog { u }),
            (false, false) => Err(Error::Validation("free variable has no barrier".into())),
        }
    }

    pub fn lower(&self) -> f64 {
        match *self {
            IntervalBarrier::LowerLog { l } | IntervalBarrier::Trig { l, .. } => l,
            IntervalBarrier::UpperLog { .. } => f64::NEG_INFINITY,
        }
    }

    pub fn upper(&self) -> f64 {
        match *self {
            IntervalBarrier::UpperLog { u } | IntervalBarrier::Trig { u, .. } => u,
            IntervalBarrier::LowerLog { .. } => f64::INFINITY,
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        x > self.lower() && x < self.upper()
    }

    /// Trig coefficients `(a, b)`.
    pub fn trig_coefficients(l: f64, u: f64) -> (f64, f64) {
        let a = PI / (u - l);
        let b = -0.5 * PI * (u + l) / (u - l);
        (a, b)
    }

    pub fn eval(&self, x: f64) -> Result<BarrierValue> {
        barrier_eval(self, x)
    }
}

pub fn barrier_eval(bar: &IntervalBarrier, x: f64) -> Result<BarrierValue> {
    if !bar.contains(x) {
        return Err(Error::OutOfDomain { index: 0, value: x });
    }
    Ok(match *bar {
        IntervalBarrier::LowerLog { l } => {
            let s = x - l;
            BarrierValue { phi: -s.ln(), d1: -1.0 / s, d2: 1.0 / (s * s), d3: -2.0 / (s * s * s) }
        }
        IntervalBarrier::UpperLog { u } => {
            let s = u - x;
            BarrierValue { phi: -s.ln(), d1: 1.0 / s, d2: 1.0 / (s * s), d3: 2.0 / (s * s * s) }
        }
        IntervalBarrier::Trig { l, u } => {
            // a·x + b = a(x − l) − π/2 = π/2 − a(u − x); going through the
            // nearer slack avoids cancelling against π/2
            let (a, _) = IntervalBarrier::trig_coefficients(l, u);
            let (lo, hi) = (x - l, u - x);
            let (c, s) = if lo <= hi {
                ((a * lo).sin(), -(a * lo).cos())
            } else {
                ((a * hi).sin(), (a * hi).cos())
            };
            let c = c.max(COS_FLOOR);
            BarrierValue {
                phi: -c.ln(),
                d1: a * s / c,
                d2: a * a / (c * c),
                d3: 2.0 * a * a * a * s / (c * c * c),
            }
        }
    })
}
