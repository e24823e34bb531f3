//! Monotone piecewise-linear time changes.
//!
//! A [`TimeMap`] stores matched knot vectors (t_i, s_i) of a strictly
//! increasing map together with the exponent alpha that produced it
//! (s' = |u'|^alpha; alpha = 1 recovers arc length). The totals on each
//! side may exceed the grid: they carry tail extrapolations and can be
//! flagged unbounded.

use crate::error::{Error, Result};
use crate::extended::Extended;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeMap {
    knots_t: Vec<f64>,
    knots_s: Vec<f64>,
    alpha: f64,
    /// Total length of the source side (sup of t), possibly beyond the grid.
    total_t: Extended,
    /// Total length of the image side (sup of s), possibly beyond the grid.
    total_s: Extended,
}

impl TimeMap {
    pub fn new(
        knots_t: Vec<f64>,
        knots_s: Vec<f64>,
        alpha: f64,
        total_t: Extended,
        total_s: Extended,
    ) -> Result<TimeMap> {
        if knots_t.len() != knots_s.len() || knots_t.is_empty() {
            return Err(Error::InvalidCurve("time map needs matched nonempty knots".into()));
        }
        for knots in [&knots_t, &knots_s] {
            if knots[0] != 0.0 {
                return Err(Error::InvalidCurve("time map knots must start at 0".into()));
            }
            if knots.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidCurve("time map knots must be strictly increasing".into()));
            }
        }
        for (label, total, knots) in [("t", total_t, &knots_t), ("s", total_s, &knots_s)] {
            if let Extended::Finite(v) = total {
                if v + 1e-9 < *knots.last().unwrap() {
                    return Err(Error::InvalidCurve(format!(
                        "total_{label} {v} below the last knot"
                    )));
                }
            }
        }
        Ok(TimeMap { knots_t, knots_s, alpha, total_t, total_s })
    }

    /// Integrates speeds^alpha over the grid by the trapezoid rule.
    /// alpha = 0 returns the identity map exactly. Speeds must be strictly
    /// positive inside the grid when alpha < 0; a zero first or last value
    /// is the caller's responsibility to repair beforehand.
    pub fn from_speeds(times: &[f64], speeds: &[f64], alpha: f64) -> Result<TimeMap> {
        if times.len() != speeds.len() || times.len() < 2 {
            return Err(Error::InvalidCurve("need at least two knots with speeds".into()));
        }
        if alpha == 0.0 {
            let end = Extended::Finite(*times.last().unwrap());
            return TimeMap::new(times.to_vec(), times.to_vec(), 0.0, end, end);
        }
        if alpha < 0.0 {
            if let Some(i) = speeds.iter().position(|&v| v == 0.0) {
                return Err(Error::ZeroSpeed { index: i, alpha });
            }
        }
        let g: Vec<f64> = speeds.iter().map(|v| v.powf(alpha)).collect();
        let mut s = Vec::with_capacity(times.len());
        s.push(0.0);
        let mut acc = 0.0;
        for i in 1..times.len() {
            acc += 0.5 * (g[i - 1] + g[i]) * (times[i] - times[i - 1]);
            s.push(acc);
        }
        TimeMap::new(
            times.to_vec(),
            s,
            alpha,
            Extended::Finite(*times.last().unwrap()),
            Extended::Finite(acc),
        )
    }

    pub fn knots_t(&self) -> &[f64] {
        &self.knots_t
    }

    pub fn knots_s(&self) -> &[f64] {
        &self.knots_s
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn total_t(&self) -> Extended {
        self.total_t
    }

    pub fn total_s(&self) -> Extended {
        self.total_s
    }

    pub fn with_totals(mut self, total_t: Extended, total_s: Extended) -> TimeMap {
        self.total_t = total_t;
        self.total_s = total_s;
        self
    }

    /// s(t), clamped to the knot range.
    pub fn eval(&self, t: f64) -> f64 {
        interpolate(&self.knots_t, &self.knots_s, t)
    }

    /// t(s), clamped to the knot range; exact inverse of `eval` since the
    /// interpolant is piecewise linear and strictly increasing.
    pub fn eval_inverse(&self, s: f64) -> f64 {
        interpolate(&self.knots_s, &self.knots_t, s)
    }

    /// Swaps the two sides. The inverse of an exponent-alpha map is the
    /// exponent-beta map of the transformed curve with
    /// beta = -alpha / (1 - alpha).
    pub fn invert(&self) -> TimeMap {
        TimeMap {
            knots_t: self.knots_s.clone(),
            knots_s: self.knots_t.clone(),
            alpha: -self.alpha / (1.0 - self.alpha),
            total_t: self.total_s,
            total_s: self.total_t,
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    if x <= xs[0] {
        return ys[0];
    }
    if x >= *xs.last().unwrap() {
        return *ys.last().unwrap();
    }
    let j = xs.partition_point(|&v| v <= x);
    let th = (x - xs[j - 1]) / (xs[j] - xs[j - 1]);
    ys[j - 1] + th * (ys[j] - ys[j - 1])
}
