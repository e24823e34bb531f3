//! Diagnostics along sampled curves.
//!
//! Everything here consumes a [`SampledCurve`] and produces residual
//! reports: speed (metric derivative) estimates, stationarity detection,
//! arc-length reparametrization, and the four identity checkers (energy
//! identity, convexity along the curve, slope monotonicity, and the
//! a-priori regularizing bounds).
//!
//! Discretization conventions. Speeds use central difference quotients of
//! distances at interior nodes and second-order one-sided estimates at the
//! two ends; first-order one-sided estimates would already eat the error
//! budget of downstream checks (for e^t on a 10^3-node grid the first-order
//! endpoint error is e*h/2 ~ 1.4e-3). The energy-identity chain residual
//! uses the same central quotient for (f o u)'.

use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::functional::Functional;
use crate::map::TimeMap;
use crate::space::distance_unchecked;
use serde::{Deserialize, Serialize};
use std::borrow::Cow;

/// Slopes at or below this threshold count as critical (stationary).
pub const CRITICAL_SLOPE: f64 = 1e-8;

/// Maximal movement tolerated inside a stationary tail.
pub const STATIONARY_TOL: f64 = 1e-10;

/// Residual summary of one check over a curve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub name: String,
    pub tolerance: f64,
    pub max_residual: f64,
    pub mean_residual: f64,
    pub passed: bool,
    pub violated_indices: Vec<usize>,
}

impl DiagnosticsReport {
    pub fn from_residuals(name: &str, tolerance: f64, residuals: &[f64]) -> DiagnosticsReport {
        let max = residuals.iter().copied().fold(0.0f64, f64::max);
        let mean = if residuals.is_empty() {
            0.0
        } else {
            residuals.iter().sum::<f64>() / residuals.len() as f64
        };
        let violated: Vec<usize> = residuals
            .iter()
            .enumerate()
            .filter(|(_, r)| **r > tolerance)
            .map(|(i, _)| i)
            .collect();
        DiagnosticsReport {
            name: name.into(),
            tolerance,
            max_residual: max,
            mean_residual: mean,
            passed: violated.is_empty(),
            violated_indices: violated,
        }
    }
}

/// Discrete speed |u'| at every grid node.
///
/// Interior nodes use d(u_{i-1}, u_{i+1}) / (t_{i+1} - t_{i-1}); the ends
/// use the two-distance second-order estimate obtained by eliminating the
/// quadratic term from d(u_0, u_1) and d(u_0, u_2) (and mirrored at the
/// right end). With two knots both nodes carry the single quotient.
pub fn metric_derivative(curve: &SampledCurve) -> Result<Vec<f64>> {
    let t = curve.times();
    let pts = curve.points();
    let n = t.len();
    if n < 2 {
        return Err(Error::InvalidCurve("need at least two knots for a speed estimate".into()));
    }
    let mut out = vec![0.0; n];
    if n == 2 {
        let q = distance_unchecked(&pts[0], &pts[1]) / (t[1] - t[0]);
        out[0] = q;
        out[1] = q;
        return Ok(out);
    }
    for i in 1..n - 1 {
        out[i] = distance_unchecked(&pts[i - 1], &pts[i + 1]) / (t[i + 1] - t[i - 1]);
    }
    out[0] = one_sided_speed(
        distance_unchecked(&pts[0], &pts[1]),
        distance_unchecked(&pts[0], &pts[2]),
        t[1] - t[0],
        t[2] - t[0],
    );
    out[n - 1] = one_sided_speed(
        distance_unchecked(&pts[n - 1], &pts[n - 2]),
        distance_unchecked(&pts[n - 1], &pts[n - 3]),
        t[n - 1] - t[n - 2],
        t[n - 1] - t[n - 3],
    );
    Ok(out)
}

/// Second-order speed from two distances D(h1), D(h2) away from a node,
/// assuming D(h) = a h + b h^2 + O(h^3).
pub(crate) fn one_sided_speed(d1: f64, d2: f64, h1: f64, h2: f64) -> f64 {
    ((d1 * h2 * h2 - d2 * h1 * h1) / (h1 * h2 * (h2 - h1))).max(0.0)
}

/// Onset of stationarity read from cached slopes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositivityHorizon {
    /// Last grid time with slope above the threshold; unbounded when the
    /// slope is still positive at the final node.
    pub t_star: Extended,
    /// Grid index of `t_star` when finite.
    pub index: Option<usize>,
    /// Whether everything after `t_star` stays within [`STATIONARY_TOL`]
    /// of the first tail point.
    pub stationary_tail: bool,
}

/// Scans cached slopes for the last time the curve still descends.
/// A curve that is critical from the start reports t_star = 0.
pub fn detect_positivity_horizon(curve: &SampledCurve, epsilon: f64) -> Result<PositivityHorizon> {
    let slopes = curve
        .slopes()
        .ok_or_else(|| Error::InvalidCurve("slopes not cached; analyze the curve first".into()))?;
    let n = slopes.len();
    let (idx, tail_from) = match slopes.iter().rposition(|s| *s > epsilon) {
        Some(i) if i == n - 1 => {
            return Ok(PositivityHorizon {
                t_star: Extended::Infinite,
                index: None,
                stationary_tail: false,
            })
        }
        Some(i) => (i, i + 1),
        None => (0, 0),
    };
    let anchor = &curve.points()[tail_from];
    let tail_ok = curve.points()[tail_from..]
        .iter()
        .all(|p| distance_unchecked(p, anchor) <= STATIONARY_TOL);
    Ok(PositivityHorizon {
        t_star: Extended::Finite(curve.times()[idx]),
        index: Some(idx),
        stationary_tail: tail_ok,
    })
}

/// Index of the last knot of the moving window: one past the last
/// positive-slope node, so the cell carrying the final stretch of motion
/// is kept. Returns 0 for a curve that is stationary from the start.
pub(crate) fn moving_window_end(curve: &SampledCurve, epsilon: f64) -> Result<usize> {
    let slopes = curve
        .slopes()
        .ok_or_else(|| Error::InvalidCurve("slopes not cached; analyze the curve first".into()))?;
    Ok(match slopes.iter().rposition(|s| *s > epsilon) {
        Some(i) => (i + 1).min(slopes.len() - 1),
        None => 0,
    })
}

/// A curve rewritten over its arc length, with the map that produced it.
#[derive(Debug, Clone)]
pub struct Reparametrized {
    pub map: TimeMap,
    pub curve: SampledCurve,
}

/// Rewrites the moving part of the curve over arc length on a uniform
/// grid of `samples` nodes. The result travels at unit speed, so its
/// energy decays at the rate of the slope itself. Returns `None` for a
/// curve with no moving part.
pub fn arc_length_reparametrize(
    curve: &SampledCurve,
    f: &Functional,
    samples: usize,
) -> Result<Option<Reparametrized>> {
    let work = ensure_analyzed(curve, f)?;
    let end = moving_window_end(&work, CRITICAL_SLOPE)?;
    if end == 0 {
        return Ok(None);
    }
    let restricted = work.truncated(end)?.analyzed(f)?;
    let map = TimeMap::from_speeds(
        restricted.times(),
        restricted.metric_derivatives().unwrap(),
        1.0,
    )?;
    let total = map.total_s().value().unwrap();
    let m = samples.max(2);
    let mut s_grid = Vec::with_capacity(m);
    let mut points = Vec::with_capacity(m);
    for j in 0..m {
        let s = if j == m - 1 { total } else { total * j as f64 / (m - 1) as f64 };
        s_grid.push(s);
        points.push(restricted.eval(map.eval_inverse(s)));
    }
    let reparam = SampledCurve::new(curve.space(), s_grid, points, curve.p())?.analyzed(f)?;
    Ok(Some(Reparametrized { map, curve: reparam }))
}

/// Largest violation of 1-Lipschitz continuity over all knot pairs:
/// max(0, d(u_i, u_j) - |s_i - s_j|). Meant for reparametrized curves.
pub fn lipschitz_defect(curve: &SampledCurve) -> f64 {
    let t = curve.times();
    let pts = curve.points();
    let mut worst: f64 = 0.0;
    for i in 0..t.len() {
        for j in i + 1..t.len() {
            worst = worst.max(distance_unchecked(&pts[i], &pts[j]) - (t[j] - t[i]));
        }
    }
    worst.max(0.0)
}

/// Checks the energy dissipation identity along the curve:
/// the chain residual |(f o u)' + (1/p)|u'|^p + (1/q)|slope|^q| at interior
/// nodes, and the pointwise residual ||u'|^p - |slope|^q| everywhere.
pub fn check_energy_identity(
    curve: &SampledCurve,
    f: &Functional,
    p: f64,
    tolerance: f64,
) -> Result<DiagnosticsReport> {
    let residuals = energy_residuals(curve, f, p, false)?;
    Ok(DiagnosticsReport::from_residuals("energy_identity", tolerance, &residuals))
}

/// Same residuals as [`check_energy_identity`], divided node by node by
/// 1 + |u'|^p + |slope|^q. On curves whose values grow without bound the
/// absolute residual scales with the cubed value and says nothing about
/// discretization quality; the scaled version stays O(h^2) throughout.
pub fn check_energy_identity_scaled(
    curve: &SampledCurve,
    f: &Functional,
    p: f64,
    tolerance: f64,
) -> Result<DiagnosticsReport> {
    let residuals = energy_residuals(curve, f, p, true)?;
    Ok(DiagnosticsReport::from_residuals("energy_identity_scaled", tolerance, &residuals))
}

fn energy_residuals(curve: &SampledCurve, f: &Functional, p: f64, scaled: bool) -> Result<Vec<f64>> {
    let work = ensure_analyzed(curve, f)?;
    let q = p / (p - 1.0);
    let t = work.times();
    let fv = work.f_values().unwrap();
    let sl = work.slopes().unwrap();
    let sp = work.metric_derivatives().unwrap();
    let n = t.len();
    let mut residuals = vec![0.0; n];
    for i in 0..n {
        residuals[i] = (sp[i].powf(p) - sl[i].powf(q)).abs();
    }
    for i in 1..n - 1 {
        let df = (fv[i + 1] - fv[i - 1]) / (t[i + 1] - t[i - 1]);
        let chain = (df + sp[i].powf(p) / p + sl[i].powf(q) / q).abs();
        residuals[i] = residuals[i].max(chain);
    }
    if scaled {
        for i in 0..n {
            residuals[i] /= 1.0 + sp[i].powf(p) + sl[i].powf(q);
        }
    }
    Ok(residuals)
}

/// Checks (2, -lambda_minus)-convexity of f along a reparametrized curve:
/// for every knot triple s_i < s_k < s_j with s_j - s_i <= 1,
/// f(u(s_k)) <= (1-th) f(u(s_i)) + th f(u(s_j)) + lambda_minus th (1-th) (s_j - s_i)^2.
/// The grid must be uniform. Residuals are indexed by the middle knot.
pub fn check_convexity_along_curve(
    reparam: &SampledCurve,
    f: &Functional,
    tolerance: f64,
) -> Result<DiagnosticsReport> {
    let work = ensure_analyzed(reparam, f)?;
    let s = work.times();
    let n = s.len();
    if n < 3 {
        return Ok(DiagnosticsReport::from_residuals("convexity_along_curve", tolerance, &[]));
    }
    let h = s[1] - s[0];
    let uniform = s.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * (1.0 + h));
    if !uniform {
        return Err(Error::InvalidCurve("convexity check needs a uniform grid".into()));
    }
    let lm = f.profile().lambda_minus();
    let fv = work.f_values().unwrap();
    let window = ((1.0 / h).floor() as usize).clamp(2, n - 1);
    let mut residuals = vec![0.0; n];
    for i in 0..n - 2 {
        let j_max = (i + window).min(n - 1);
        for j in i + 2..=j_max {
            let span = s[j] - s[i];
            if span > 1.0 + 1e-12 {
                break;
            }
            for k in i + 1..j {
                let th = (s[k] - s[i]) / span;
                let bound = (1.0 - th) * fv[i] + th * fv[j] + lm * th * (1.0 - th) * span * span;
                let defect = fv[k] - bound;
                if defect > residuals[k] {
                    residuals[k] = defect;
                }
            }
        }
    }
    Ok(DiagnosticsReport::from_residuals("convexity_along_curve", tolerance, &residuals))
}

/// Checks that slopes never jump upward along the curve. Only meaningful
/// for functionals with lambda >= 0, and refused otherwise.
pub fn check_slope_monotone(
    curve: &SampledCurve,
    f: &Functional,
    tolerance: f64,
) -> Result<DiagnosticsReport> {
    if f.profile().lambda < 0.0 {
        return Err(Error::HypothesisViolation(
            "slope monotonicity along the flow requires lambda >= 0".into(),
        ));
    }
    let work = ensure_analyzed(curve, f)?;
    let sl = work.slopes().unwrap();
    let mut residuals = vec![0.0; sl.len()];
    for i in 1..sl.len() {
        residuals[i] = (sl[i] - sl[i - 1]).max(0.0);
    }
    Ok(DiagnosticsReport::from_residuals("slope_monotone", tolerance, &residuals))
}

#[derive(Debug, Clone)]
pub struct RegularizingOptions {
    /// Violation tolerance for the four inequalities.
    pub tolerance: f64,
    /// Pair budget for the two-time checks; time origins are strided once
    /// the full pair count exceeds it.
    pub max_pairs: usize,
}

impl Default for RegularizingOptions {
    fn default() -> Self {
        RegularizingOptions { tolerance: 1e-8, max_pairs: 4_000_000 }
    }
}

/// Outcome of the a-priori bound checks; items that do not apply to the
/// functional are listed in `skipped` rather than silently dropped.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RegularizingOutcome {
    pub reports: Vec<DiagnosticsReport>,
    pub skipped: Vec<String>,
    /// Smallest margin (bound - value) seen across the two-time checks.
    pub min_margin: Option<f64>,
    /// Largest gap |lambda d^p0 - (f - inf f)| of the coercivity lower
    /// bound, which is an equality for the quadratic profile.
    pub max_equality_gap: Option<f64>,
}

impl RegularizingOutcome {
    pub fn passed(&self) -> bool {
        self.reports.iter().all(|r| r.passed)
    }
}

/// Checks the a-priori bounds along a flow of a functional with
/// lambda >= 0:
///
/// * slope^q(u(t)) <= (f(u(t0)) - inf f) / (t - t0) for every grid pair,
/// * (1/q) slope^q(u(t)) <= (f(u(t0)) - envelope_{t-t0}(u(t0))) / (t - t0),
/// * for lambda > 0 with a known minimizer m:
///   lambda d^p0(u(t), m) <= f(u(t)) - f(m) <= slope^q0(u(t)) / (q0 lambda^(q0/p0)).
pub fn check_regularizing_bounds(
    curve: &SampledCurve,
    f: &Functional,
    p: f64,
    opts: &RegularizingOptions,
) -> Result<RegularizingOutcome> {
    let profile = f.profile();
    if profile.lambda < 0.0 {
        return Err(Error::HypothesisViolation(
            "regularizing bounds require lambda >= 0".into(),
        ));
    }
    let work = ensure_analyzed(curve, f)?;
    let t = work.times();
    let fv = work.f_values().unwrap();
    let sl = work.slopes().unwrap();
    let n = t.len();
    let q = p / (p - 1.0);

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    let mut min_margin = f64::INFINITY;

    let total_pairs = n * (n - 1) / 2;
    let stride = (total_pairs / opts.max_pairs.max(1)).max(1);

    let inf = f.inf_value();
    if inf.is_none() {
        skipped.push("sup_bound: inf f unknown for this functional".into());
    }
    let mut res_sup = vec![0.0f64; n];
    let mut res_env = vec![0.0f64; n];
    for i0 in (0..n - 1).step_by(stride) {
        for i in i0 + 1..n {
            let dt = t[i] - t[i0];
            let lhs = sl[i].powf(q);
            if let Some(inf) = inf {
                let rhs = (fv[i0] - inf) / dt;
                res_sup[i] = res_sup[i].max(lhs - rhs);
                min_margin = min_margin.min(rhs - lhs);
            }
            let env = f.moreau_envelope(p, dt, &work.points()[i0])?;
            let rhs = (fv[i0] - env) / dt;
            res_env[i] = res_env[i].max(lhs / q - rhs);
            min_margin = min_margin.min(rhs - lhs / q);
        }
    }
    if inf.is_some() {
        reports.push(DiagnosticsReport::from_residuals("regularizing_sup_bound", opts.tolerance, &res_sup));
    }
    reports.push(DiagnosticsReport::from_residuals("regularizing_envelope_bound", opts.tolerance, &res_env));

    let mut max_equality_gap = None;
    match (profile.lambda > 0.0, f.minimizer()) {
        (true, Some(m)) => {
            let fm = f.evaluate(&m)?;
            let q0 = profile.p0 / (profile.p0 - 1.0);
            let mut res_lower = vec![0.0; n];
            let mut res_upper = vec![0.0; n];
            let mut gap: f64 = 0.0;
            for i in 0..n {
                let d = distance_unchecked(&work.points()[i], &m);
                let excess = fv[i] - fm;
                let lower = profile.lambda * d.powf(profile.p0);
                res_lower[i] = (lower - excess).max(0.0);
                gap = gap.max((lower - excess).abs());
                let upper = sl[i].powf(q0) / (q0 * profile.lambda.powf(q0 / profile.p0));
                res_upper[i] = (excess - upper).max(0.0);
            }
            reports.push(DiagnosticsReport::from_residuals("regularizing_coercivity_lower", opts.tolerance, &res_lower));
            reports.push(DiagnosticsReport::from_residuals("regularizing_coercivity_upper", opts.tolerance, &res_upper));
            max_equality_gap = Some(gap);
        }
        (false, _) => skipped.push("coercivity: needs lambda > 0".into()),
        (true, None) => skipped.push("coercivity: minimizer unknown".into()),
    }

    Ok(RegularizingOutcome {
        reports,
        skipped,
        min_margin: if min_margin.is_finite() { Some(min_margin) } else { None },
        max_equality_gap,
    })
}

/// Borrows the curve if its caches are filled, otherwise analyzes a clone.
pub(crate) fn ensure_analyzed<'a>(curve: &'a SampledCurve, f: &Functional) -> Result<Cow<'a, SampledCurve>> {
    if curve.f_values().is_some() && curve.slopes().is_some() && curve.metric_derivatives().is_some() {
        Ok(Cow::Borrowed(curve))
    } else {
        Ok(Cow::Owned(curve.clone().analyzed(f)?))
    }
}
