//! Exponent transformations between flows of different steepness.
//!
//! A p-flow u with positive slope on [0, t*) becomes a p'-flow through the
//! time change s(t) = integral of |u'|^alpha with alpha = 1 - (p/q)(q'/p').
//! The transformed flow may live on a shorter or longer time axis; whether
//! it can be extended past its natural domain depends on which of the
//! totals S* = s(t*) and t* are finite:
//!
//! * A: both infinite, nothing to extend;
//! * B: S* infinite, t* finite, the critical point is pushed to infinity;
//! * C: both finite, extend by the constant value at t*;
//! * D: S* finite, t* infinite, extend by the limit point when one exists,
//!   otherwise the transform is blocked at S* (finite-time blow-up).
//!
//! Finiteness of S* is decided numerically: with the grid ending while the
//! slope is still positive, the integrand's last decade is fitted against
//! exponential and power decay and the integrable tail is added to the
//! quadrature; with a detected stationary time and alpha < 0, the integrand
//! is fitted against a power of (t* - t) to recognize non-integrable
//! in-grid singularities.

use crate::analysis::{
    check_energy_identity_scaled, ensure_analyzed, metric_derivative, moving_window_end,
    DiagnosticsReport,
};
use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::extended::Extended;
use crate::functional::Functional;
use crate::map::TimeMap;
use crate::space::{distance_unchecked, Point};
use serde::{Deserialize, Serialize};

/// alpha = 1 - (p/q)(q'/p') where q, q' are the conjugate exponents.
/// Always < 1; zero exactly when p' = p; negative when p' < p.
pub fn transform_exponent(p: f64, p_prime: f64) -> Result<f64> {
    for e in [p, p_prime] {
        if !(e > 1.0) || !e.is_finite() {
            return Err(Error::InvalidExponent(e));
        }
    }
    let q = p / (p - 1.0);
    let q_prime = p_prime / (p_prime - 1.0);
    let alpha = 1.0 - (p / q) * (q_prime / p_prime);
    // p' = p must give exactly zero; the division chain leaves ulp dust
    Ok(if alpha.abs() < 1e-14 { 0.0 } else { alpha })
}

#[derive(Debug, Clone)]
pub struct TransformOptions {
    /// Positivity threshold for slopes.
    pub epsilon: f64,
    /// Cauchy tolerance for limit detection in case D.
    pub cauchy_tol: f64,
    /// Classification margin for the decay and singularity fits.
    pub decay_margin: f64,
    /// Extension length as a fraction of S*.
    pub extension_fraction: f64,
    /// Lower bound on the extension length.
    pub extension_min: f64,
    /// Number of knots carrying the constant extension.
    pub extension_knots: usize,
    /// Tolerance of the attached scaled energy-identity diagnostic.
    pub energy_tolerance: f64,
}

impl Default for TransformOptions {
    fn default() -> Self {
        TransformOptions {
            epsilon: crate::analysis::CRITICAL_SLOPE,
            cauchy_tol: 1e-6,
            decay_margin: 0.1,
            extension_fraction: 0.25,
            extension_min: 1.0,
            extension_knots: 17,
            energy_tolerance: 1e-2,
        }
    }
}

/// Finiteness pattern of (S*, t*).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExtensionCase {
    A,
    B,
    C,
    D,
}

/// Which clause justified the extension. The lettered tags are only
/// meaningful for functionals with lambda < 0; nonnegative lambda needs no
/// clause and reports `not_required` unless the limit detection failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransformCondition {
    #[serde(rename = "not_required")]
    NotRequired,
    #[serde(rename = "a")]
    SUnbounded,
    #[serde(rename = "b")]
    BothFinite,
    #[serde(rename = "c")]
    LimitExists,
    #[serde(rename = "blocked")]
    Blocked,
}

#[derive(Debug, Clone)]
pub struct TransformResult {
    /// The p'-flow, including the constant extension for cases C and D.
    pub transformed: SampledCurve,
    /// Forward map t -> s over the moving window.
    pub time_map: TimeMap,
    pub case: ExtensionCase,
    pub condition: TransformCondition,
    pub alpha: f64,
    /// Estimated total transformed time S*.
    pub s_star: Extended,
    /// Positivity horizon of the source flow.
    pub t_star: Extended,
    /// Index of the first extension knot in `transformed`, if any.
    pub extension_start: Option<usize>,
    pub diagnostics: Vec<DiagnosticsReport>,
}

impl TransformResult {
    /// The transformed flow without the constant extension, with caches.
    pub fn core_curve(&self) -> Result<SampledCurve> {
        let core = match self.extension_start {
            None => return Ok(self.transformed.clone()),
            Some(i) => self.transformed.truncated(i - 1)?,
        };
        if core.len() < 2 {
            return Ok(core);
        }
        let speeds = metric_derivative(&core)?;
        let f_values = core.f_values().map(|v| v.to_vec());
        let slopes = core.slopes().map(|v| v.to_vec());
        core.with_caches(f_values, slopes, Some(speeds))
    }

    pub fn passed(&self) -> bool {
        self.diagnostics.iter().all(|d| d.passed)
    }

    pub fn blocked(&self) -> bool {
        self.condition == TransformCondition::Blocked
    }
}

/// Quadrature of |u'|^alpha over an analyzed curve already restricted to
/// its moving window (trailing knots at the critical point are tolerated
/// and handled).
///
/// The returned map carries the estimated totals: `total_t` is the
/// positivity horizon visible on the grid, `total_s` the tail-extrapolated
/// transformed total. Knots stop where the transformed time stops
/// resolving in floating point.
pub fn forward_time_map(
    curve: &SampledCurve,
    p: f64,
    p_prime: f64,
    opts: &TransformOptions,
) -> Result<TimeMap> {
    let alpha = transform_exponent(p, p_prime)?;
    let times = curve.times();
    let slopes = curve
        .slopes()
        .ok_or_else(|| Error::InvalidCurve("slopes not cached; analyze the curve first".into()))?;
    let speeds = curve.metric_derivatives().ok_or_else(|| {
        Error::InvalidCurve("speeds not cached; analyze the curve first".into())
    })?;
    let n = times.len();
    if n < 2 {
        let zero = Extended::Finite(0.0);
        return TimeMap::new(vec![0.0], vec![0.0], alpha, zero, zero);
    }

    // the map lives on [0, t*]; one trailing knot at the critical point is
    // kept so the final cell of motion still counts, anything past it is
    // the extension's business
    let last_positive = slopes.iter().rposition(|s| *s > opts.epsilon);
    let cap = match last_positive {
        Some(i) => (i + 1).min(n - 1),
        None => 0,
    };
    let t_star = match last_positive {
        Some(i) if i == n - 1 => Extended::Infinite,
        _ => Extended::Finite(times[cap]),
    };
    if cap == 0 {
        let zero = Extended::Finite(0.0);
        return TimeMap::new(vec![0.0], vec![0.0], alpha, zero, zero);
    }

    if alpha == 0.0 {
        let knots = times[..=cap].to_vec();
        return TimeMap::new(knots.clone(), knots, 0.0, t_star, t_star);
    }

    let mut g: Vec<f64> = speeds[..=cap].iter().map(|v| v.powf(alpha)).collect();
    let mut end = cap;
    if alpha < 0.0 && !g[end].is_finite() && slopes[end] <= opts.epsilon {
        end -= 1;
        g.truncate(end + 1);
    }
    if let Some(i) = g.iter().position(|v| !v.is_finite()) {
        return Err(Error::ZeroSpeed { index: i, alpha });
    }

    let mut knots_s = Vec::with_capacity(end + 1);
    knots_s.push(0.0);
    for i in 1..=end {
        let next = knots_s[i - 1] + 0.5 * (g[i - 1] + g[i]) * (times[i] - times[i - 1]);
        if !(next > knots_s[i - 1]) {
            // transformed time no longer resolves; the remaining knots
            // carry a negligible share of S*
            end = i - 1;
            break;
        }
        knots_s.push(next);
    }
    let knots_t = times[..=end].to_vec();
    g.truncate(end + 1);

    let total_s = match t_star {
        Extended::Finite(tv) => {
            if alpha < 0.0 && singular_at(&knots_t, &g, tv, opts) {
                Extended::Infinite
            } else {
                Extended::Finite(knots_s[end])
            }
        }
        Extended::Infinite => match decaying_tail(&knots_t, &g, opts) {
            Some(tail) => Extended::Finite(knots_s[end] + tail),
            None => Extended::Infinite,
        },
    };
    TimeMap::new(knots_t, knots_s, alpha, t_star, total_s)
}

/// Least-squares line through (xs, ys): (intercept, slope, residual sum).
fn line_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64, f64)> {
    let n = xs.len() as f64;
    if xs.len() < 4 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx <= 1e-300 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    Some((intercept, slope, ssr))
}

/// Tail integral of |u'|^alpha past the grid end, when the last decade of
/// the integrand fits either exponential decay (rate above the margin) or
/// an integrable power (exponent below -1 - margin). `None` flags a
/// divergent total.
fn decaying_tail(times: &[f64], g: &[f64], opts: &TransformOptions) -> Option<f64> {
    let t_end = *times.last().unwrap();
    let span = t_end - times[0];
    let from = t_end - span / 10.0;
    let idx: Vec<usize> = (0..times.len())
        .filter(|&i| times[i] >= from && g[i] > 0.0)
        .collect();
    if idx.len() < 4 {
        return None;
    }
    let ts: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let lg: Vec<f64> = idx.iter().map(|&i| g[i].ln()).collect();

    let exp_fit = line_fit(&ts, &lg).and_then(|(a, slope, ssr)| {
        let rate = -slope;
        if rate > opts.decay_margin {
            Some(((a + slope * t_end).exp() / rate, ssr))
        } else {
            None
        }
    });
    let pow_fit = if ts[0] > 0.0 {
        let lt: Vec<f64> = ts.iter().map(|t| t.ln()).collect();
        line_fit(&lt, &lg).and_then(|(a, e, ssr)| {
            if e < -1.0 - opts.decay_margin {
                Some(((a + e * t_end.ln()).exp() * t_end / (-1.0 - e), ssr))
            } else {
                None
            }
        })
    } else {
        None
    };
    match (exp_fit, pow_fit) {
        (Some((tail_e, ssr_e)), Some((tail_p, ssr_p))) => {
            Some(if ssr_e <= ssr_p { tail_e } else { tail_p })
        }
        (Some((tail, _)), None) | (None, Some((tail, _))) => Some(tail),
        (None, None) => None,
    }
}

/// Whether the integrand grows non-integrably toward the finite horizon
/// t*: fit g against (t* - t)^m over the approach and call the
/// singularity divergent unless m is safely above -1.
fn singular_at(times: &[f64], g: &[f64], t_star: f64, opts: &TransformOptions) -> bool {
    let span = t_star - times[0];
    if span <= 0.0 {
        return false;
    }
    let from = t_star - span / 10.0;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(g)
        .filter(|(t, gv)| **t >= from && t_star - **t > 0.0 && **gv > 0.0)
        .map(|(t, gv)| ((t_star - *t).ln(), gv.ln()))
        .collect();
    if pts.len() < 6 {
        return false;
    }
    let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
    match line_fit(&xs, &ys) {
        Some((_, m, _)) => m <= -1.0 + opts.decay_margin,
        None => false,
    }
}

/// Aitken-accelerated limit of the tail of a converging flow; falls back
/// to the last point when the acceleration is undefined or lands far away.
fn tail_limit(curve: &SampledCurve, opts: &TransformOptions) -> Point {
    let times = curve.times();
    let pts = curve.points();
    let n = times.len();
    let last = pts[n - 1].clone();
    let t_end = times[n - 1];
    let span = t_end - times[0];
    let delta = span / 10.0;
    let pick = |t: f64| -> usize { times.partition_point(|&tk| tk < t).min(n - 1) };
    let (i0, i1, i2) = (pick(t_end - 2.0 * delta), pick(t_end - delta), n - 1);
    if i0 >= i1 || i1 >= i2 {
        return last;
    }
    let accel = aitken_point(&pts[i0], &pts[i1], &pts[i2]);
    match accel {
        Some(limit) if distance_unchecked(&limit, &last) <= 10.0 * opts.cauchy_tol => limit,
        _ => last,
    }
}

fn aitken_scalar(x0: f64, x1: f64, x2: f64) -> f64 {
    let den = x0 - 2.0 * x1 + x2;
    let num = x2 - x1;
    if den.abs() <= 1e-14 * (x0.abs() + 2.0 * x1.abs() + x2.abs()) + 1e-300 {
        x2
    } else {
        x2 - num * num / den
    }
}

fn aitken_point(p0: &Point, p1: &Point, p2: &Point) -> Option<Point> {
    match (p0, p1, p2) {
        (Point::Euclidean { coords: a }, Point::Euclidean { coords: b }, Point::Euclidean { coords: c }) => {
            let coords: Vec<f64> = a
                .iter()
                .zip(b)
                .zip(c)
                .map(|((x0, x1), x2)| aitken_scalar(*x0, *x1, *x2))
                .collect();
            if coords.iter().all(|x| x.is_finite()) {
                Some(Point::euclidean(coords))
            } else {
                None
            }
        }
        (Point::Tripod { .. }, Point::Tripod { .. }, Point::Tripod { .. }) => {
            let branch_of = |p: &Point| match p {
                Point::Tripod { branch, radius } => (*branch, *radius),
                _ => unreachable!(),
            };
            let (b0, r0) = branch_of(p0);
            let (b1, r1) = branch_of(p1);
            let (b2, r2) = branch_of(p2);
            // accelerate only when the tail sits on a single branch
            let same = |ba: u8, ra: f64| ra == 0.0 || ba == b2;
            if !(same(b0, r0) && same(b1, r1)) {
                return None;
            }
            let r = aitken_scalar(r0, r1, r2).max(0.0);
            if r.is_finite() {
                Some(Point::tripod(b2, r).canonicalize())
            } else {
                None
            }
        }
        _ => None,
    }
}

/// Builds the p'-flow u_{p'} = u after the inverse time change, classifies
/// its extension case, extends it where the theory allows, and attaches a
/// scaled energy-identity diagnostic at exponent p'.
///
/// For functionals with lambda < 0 the construction is only available for
/// p0 >= 2 and p, p' in (1, p0]; anything else is refused.
pub fn transform_curve(
    original: &SampledCurve,
    f: &Functional,
    p: f64,
    p_prime: f64,
    opts: &TransformOptions,
) -> Result<TransformResult> {
    let alpha = transform_exponent(p, p_prime)?;
    let profile = f.profile();
    if profile.lambda < 0.0 {
        if profile.p0 < 2.0 {
            return Err(Error::HypothesisViolation(format!(
                "negative lambda requires p0 >= 2, got p0 = {}",
                profile.p0
            )));
        }
        for e in [p, p_prime] {
            if e > profile.p0 {
                return Err(Error::HypothesisViolation(format!(
                    "exponent {e} exceeds p0 = {} for a functional with negative lambda",
                    profile.p0
                )));
            }
        }
    }

    let work = ensure_analyzed(original, f)?;
    let window_end = moving_window_end(&work, opts.epsilon)?;
    let restricted = if window_end == 0 {
        work.truncated(0)?.analyzed(f)?
    } else {
        work.truncated(window_end)?.analyzed(f)?
    };

    let time_map = forward_time_map(&restricted, p, p_prime, opts)?;
    let t_star = time_map.total_t();
    let s_star = time_map.total_s();
    let case = match (s_star.is_finite(), t_star.is_finite()) {
        (false, false) => ExtensionCase::A,
        (false, true) => ExtensionCase::B,
        (true, true) => ExtensionCase::C,
        (true, false) => ExtensionCase::D,
    };

    let core_len = time_map.knots_s().len();
    let mut times_out: Vec<f64> = time_map.knots_s().to_vec();
    let mut points_out: Vec<Point> = restricted.points()[..core_len].to_vec();

    let mut blocked = false;
    let mut extension_start = None;
    let extension_value = match case {
        ExtensionCase::A | ExtensionCase::B => None,
        ExtensionCase::C => Some(points_out.last().unwrap().clone()),
        ExtensionCase::D => {
            let times = work.times();
            let span = times[times.len() - 1] - times[0];
            let from = times[times.len() - 1] - span / 10.0;
            let anchor = work.points().last().unwrap();
            let cauchy = work
                .times()
                .iter()
                .zip(work.points())
                .filter(|(t, _)| **t >= from)
                .map(|(_, pt)| distance_unchecked(pt, anchor))
                .fold(0.0f64, f64::max);
            if cauchy <= opts.cauchy_tol {
                Some(tail_limit(&work, opts))
            } else {
                blocked = true;
                None
            }
        }
    };

    if let Some(value) = extension_value {
        let s_end = *times_out.last().unwrap();
        let base = s_star.value().unwrap_or(s_end).max(s_end);
        let span = (opts.extension_fraction * base).max(opts.extension_min);
        let k = opts.extension_knots.max(1);
        extension_start = Some(times_out.len());
        for j in 1..=k {
            times_out.push(s_end + span * j as f64 / k as f64);
            points_out.push(value.clone());
        }
    }

    let transformed = if times_out.len() == 1 {
        // keep a two-knot constant stub so the curve stays analyzable
        times_out.push(opts.extension_min.max(1e-6));
        points_out.push(points_out[0].clone());
        extension_start = Some(1);
        SampledCurve::new(original.space(), times_out, points_out, p_prime)?.analyzed(f)?
    } else {
        SampledCurve::new(original.space(), times_out, points_out, p_prime)?.analyzed(f)?
    };

    let condition = if blocked {
        TransformCondition::Blocked
    } else if profile.lambda >= 0.0 {
        TransformCondition::NotRequired
    } else {
        match case {
            ExtensionCase::A | ExtensionCase::B => TransformCondition::SUnbounded,
            ExtensionCase::C => TransformCondition::BothFinite,
            ExtensionCase::D => TransformCondition::LimitExists,
        }
    };

    let mut result = TransformResult {
        transformed,
        time_map,
        case,
        condition,
        alpha,
        s_star,
        t_star,
        extension_start,
        diagnostics: Vec::new(),
    };
    let core = result.core_curve()?;
    if core.len() >= 2 {
        result
            .diagnostics
            .push(check_energy_identity_scaled(&core, f, p_prime, opts.energy_tolerance)?);
    }
    Ok(result)
}

/// Measures both halves of the dual relation on a finished transform:
/// the composition residuals d(u(t), u_{p'}(s(t))) at the source knots,
/// and the gap between the reverse total S*_{p'->p} and the source
/// horizon t*. The gap is appended as the last residual; mismatched
/// finiteness shows up as an infinite residual.
pub fn verify_duality(
    original: &SampledCurve,
    result: &TransformResult,
    p: f64,
    p_prime: f64,
    opts: &TransformOptions,
    tolerance: f64,
) -> Result<DiagnosticsReport> {
    let core = result.core_curve()?;
    let mut residuals = Vec::with_capacity(original.len() + 1);
    for (t, pt) in original.times().iter().zip(original.points()) {
        let s = result.time_map.eval(*t);
        residuals.push(distance_unchecked(pt, &core.eval(s)));
    }
    let reverse = forward_time_map(&core, p_prime, p, opts)?;
    let gap = match (reverse.total_s(), result.t_star) {
        (Extended::Finite(a), Extended::Finite(b)) => (a - b).abs(),
        // agreeing on unboundedness is as good as a zero gap; disagreeing
        // on it is an unconditional failure
        (Extended::Infinite, Extended::Infinite) => 0.0,
        _ => f64::INFINITY,
    };
    residuals.push(gap);
    Ok(DiagnosticsReport::from_residuals("duality", tolerance, &residuals))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::{oracle_flow, uniform_grid};
    use crate::space::MetricSpace;

    fn opts() -> TransformOptions {
        TransformOptions::default()
    }

    #[test]
    fn exponent_values() {
        assert_eq!(transform_exponent(2.0, 2.0).unwrap(), 0.0);
        assert!((transform_exponent(2.0, 4.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        assert!((transform_exponent(2.0, 1.5).unwrap() + 1.0).abs() < 1e-15);
        assert!(transform_exponent(1.0, 2.0).is_err());
        assert!(transform_exponent(2.0, f64::NAN).is_err());
        // always below 1
        for p in [1.1, 2.0, 5.0, 40.0] {
            for pp in [1.01, 1.5, 3.0, 80.0] {
                assert!(transform_exponent(p, pp).unwrap() < 1.0);
            }
        }
    }

    #[test]
    fn blow_up_transform_matches_closed_form_and_is_blocked() {
        let f = Functional::negative_quadratic(1);
        let grid = uniform_grid(10.0, 10_000).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 2.0, 1.5, &opts()).unwrap();
        assert_eq!(r.case, ExtensionCase::D);
        assert_eq!(r.condition, TransformCondition::Blocked);
        assert!(r.extension_start.is_none());
        let s_star = r.s_star.value().unwrap();
        assert!((s_star - 1.0).abs() < 1e-3, "S* = {s_star}");
        let mut worst: f64 = 0.0;
        for k in 0..=900 {
            let s = 0.001 * k as f64;
            let got = r.transformed.eval(s).as_scalar();
            worst = worst.max((got - 1.0 / (1.0 - s)).abs());
        }
        assert!(worst <= 1e-3, "sup error {worst}");
    }

    #[test]
    fn identity_transform_is_exact_on_knots() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let grid = uniform_grid(3.0, 500).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 2.0, 2.0, &opts()).unwrap();
        assert_eq!(r.alpha, 0.0);
        assert_eq!(r.case, ExtensionCase::A);
        assert_eq!(r.condition, TransformCondition::NotRequired);
        for (i, t) in u.times().iter().enumerate() {
            assert_eq!(r.time_map.eval(*t), *t);
            assert_eq!(
                distance_unchecked(&r.transformed.points()[i], &u.points()[i]),
                0.0
            );
        }
    }

    #[test]
    fn quadratic_to_four_is_case_d_with_limit_zero() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let grid = uniform_grid(16.0, 10_000).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 2.0, 4.0, &opts()).unwrap();
        assert_eq!(r.case, ExtensionCase::D);
        assert_eq!(r.condition, TransformCondition::NotRequired);
        let s_star = r.s_star.value().unwrap();
        assert!((s_star - 1.5).abs() < 1e-4, "S* = {s_star}");
        // extension carries the accelerated limit, essentially zero
        let ext = r.extension_start.unwrap();
        let tail_value = r.transformed.points()[ext].as_scalar().abs();
        assert!(tail_value < 1e-9, "limit estimate {tail_value}");
        // transformed values match (1 - 2s/3)^(3/2)
        let mut worst: f64 = 0.0;
        for k in 0..=1400 {
            let s = 0.001 * k as f64;
            let got = r.transformed.eval(s).as_scalar();
            let want = (1.0 - 2.0 * s / 3.0).max(0.0).powf(1.5);
            worst = worst.max((got - want).abs());
        }
        assert!(worst < 1e-4, "sup error {worst}");
        assert!(r.passed(), "{:?}", r.diagnostics);
    }

    #[test]
    fn duality_gap_is_small_in_both_directions() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let grid = uniform_grid(16.0, 10_000).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 2.0, 4.0, &opts()).unwrap();
        // forward S* finite; reverse total must blow back up to t* = inf
        let rep = verify_duality(&u, &r, 2.0, 4.0, &opts(), 1e-3).unwrap();
        assert!(rep.passed, "max residual {}", rep.max_residual);
    }

    #[test]
    fn norm_like_transform_is_case_c() {
        let f = Functional::norm_like();
        let grid = uniform_grid(2.0, 2000).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 2.0, 3.0, &opts()).unwrap();
        assert_eq!(r.case, ExtensionCase::C);
        assert_eq!(r.condition, TransformCondition::NotRequired);
        let s_star = r.s_star.value().unwrap();
        // unit speed: s(t) = t, S* = t* = 1
        assert!((s_star - 1.0).abs() < 3e-3, "S* = {s_star}");
        // extension is the resting point 0
        let ext = r.extension_start.unwrap();
        assert_eq!(r.transformed.points()[ext].as_scalar(), 0.0);
    }

    #[test]
    fn four_to_two_sees_the_in_grid_singularity() {
        // p = 4 flow of x^2/2 reaches 0 at t = 3/2 with speed ~ (3/2 - t)^(1/2);
        // alpha(4, 2) = -2 makes the transform integrand ~ (3/2 - t)^(-1),
        // which diverges: case B
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let grid = uniform_grid(2.0, 4000).unwrap();
        let u = oracle_flow(&f, 4.0, &Point::scalar(1.0), &grid).unwrap();
        let r = transform_curve(&u, &f, 4.0, 2.0, &opts()).unwrap();
        assert_eq!(r.case, ExtensionCase::B);
        assert!(!r.s_star.is_finite());
        assert!(r.t_star.is_finite());
        assert!(r.extension_start.is_none());
    }

    #[test]
    fn hypothesis_guard_refuses_large_exponents_for_negative_lambda() {
        let f = Functional::negative_quadratic(1);
        let grid = uniform_grid(1.0, 100).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        assert!(matches!(
            transform_curve(&u, &f, 2.0, 4.0, &opts()),
            Err(Error::HypothesisViolation(_))
        ));
        // within (1, p0] the same functional transforms fine
        assert!(transform_curve(&u, &f, 2.0, 1.5, &opts()).is_ok());
    }

    #[test]
    fn stationary_curve_transforms_to_a_constant() {
        let f = Functional::norm_like();
        let times = vec![0.0, 0.5, 1.0];
        let points = vec![Point::scalar(0.0); 3];
        let u = SampledCurve::new(MetricSpace::euclidean(1), times, points, 2.0).unwrap();
        let r = transform_curve(&u, &f, 2.0, 3.0, &opts()).unwrap();
        assert_eq!(r.case, ExtensionCase::C);
        assert_eq!(r.s_star.value().unwrap(), 0.0);
        assert!(r.transformed.points().iter().all(|pt| pt.as_scalar() == 0.0));
    }

    #[test]
    fn map_of_two_grids_of_the_same_flow_agrees() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let coarse = uniform_grid(4.0, 900).unwrap();
        let fine = uniform_grid(4.0, 2001).unwrap();
        let ua = oracle_flow(&f, 2.0, &Point::scalar(1.0), &coarse).unwrap();
        let ub = oracle_flow(&f, 2.0, &Point::scalar(1.0), &fine).unwrap();
        let ra = transform_curve(&ua, &f, 2.0, 4.0, &opts()).unwrap();
        let rb = transform_curve(&ub, &f, 2.0, 4.0, &opts()).unwrap();
        for k in 0..=40 {
            let t = 4.0 * k as f64 / 40.0;
            let (sa, sb) = (ra.time_map.eval(t), rb.time_map.eval(t));
            assert!((sa - sb).abs() < 1e-4, "t={t}: {sa} vs {sb}");
        }
    }

    #[test]
    fn zero_speed_inside_the_window_is_refused_for_negative_alpha() {
        let f = Functional::norm_like();
        // a curve that pauses in the middle while the slope stays 1
        let times = vec![0.0, 0.1, 0.2, 0.3, 0.4];
        let points = [1.0, 0.9, 0.9, 0.9, 0.8].iter().map(|x| Point::scalar(*x)).collect();
        let u = SampledCurve::new(MetricSpace::euclidean(1), times, points, 2.0)
            .unwrap()
            .analyzed(&f)
            .unwrap();
        assert!(matches!(
            forward_time_map(&u, 2.0, 1.5, &opts()),
            Err(Error::ZeroSpeed { .. })
        ));
    }
}
