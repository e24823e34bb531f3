//! Minimizing movements and closed-form reference flows.
//!
//! The solver produces piecewise-geodesic approximations by iterating the
//! proximal map on a fixed step; the oracle registry produces the exact
//! flows the built-in functionals admit, for use as ground truth in tests
//! and verification runs.

use crate::analysis::CRITICAL_SLOPE;
use crate::curve::SampledCurve;
use crate::error::{Error, Result};
use crate::functional::{Functional, FunctionalKind};
use crate::space::{distance_unchecked, MetricSpace, Point};

/// Uniform grid of `nodes` knots on [0, horizon].
pub fn uniform_grid(horizon: f64, nodes: usize) -> Result<Vec<f64>> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidConfig(format!("horizon must be positive, got {horizon}")));
    }
    if nodes < 2 {
        return Err(Error::InvalidConfig(format!("need at least two nodes, got {nodes}")));
    }
    Ok((0..nodes)
        .map(|k| {
            if k == nodes - 1 {
                horizon
            } else {
                horizon * k as f64 / (nodes - 1) as f64
            }
        })
        .collect())
}

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Proximal step.
    pub tau: f64,
    /// Target end time; the scheme may halt earlier on blow-up or
    /// stationarity.
    pub horizon: f64,
    /// Hard cap on the number of proximal steps.
    pub max_steps: usize,
    /// Halt once the slope at the iterate falls to the critical threshold.
    pub stop_on_critical: bool,
    /// Halt once the iterate has moved this far from the start.
    pub blow_up_radius: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tau: 1e-3,
            horizon: 1.0,
            max_steps: 2_000_000,
            stop_on_critical: false,
            blow_up_radius: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    /// Analyzed piecewise-geodesic iterate curve.
    pub curve: SampledCurve,
    /// True when the run halted at the escape radius.
    pub blew_up: bool,
    /// True when the run halted at a critical point.
    pub stopped_critical: bool,
    /// Step actually used.
    pub tau: f64,
}

/// Runs the minimizing movement scheme u_{k+1} = prox(u_k) on the grid
/// t_k = k tau until the horizon, the escape radius, or (optionally) a
/// critical point. The step must sit inside the well-posedness window of
/// the functional.
pub fn solve_minimizing_movements(
    f: &Functional,
    p: f64,
    u0: Point,
    config: &SolverConfig,
) -> Result<SolveOutcome> {
    f.check_step(p, config.tau)?;
    f.space().validate_point(&u0)?;
    if !(config.horizon > 0.0) || !config.horizon.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "horizon must be positive, got {}",
            config.horizon
        )));
    }
    let steps = (config.horizon / config.tau).ceil() as usize;
    if steps > config.max_steps {
        return Err(Error::InvalidConfig(format!(
            "{steps} steps exceed the cap of {}; raise tau or max_steps",
            config.max_steps
        )));
    }

    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    times.push(0.0);
    points.push(u0.clone());
    let mut current = u0.clone();
    let mut f_current = f.evaluate(&current)?;
    let mut blew_up = false;
    let mut stopped_critical = false;

    if config.stop_on_critical && f.slope(&current)? <= CRITICAL_SLOPE {
        stopped_critical = true;
    } else {
        for k in 1..=steps {
            let next = f.proximal(p, config.tau, &current)?;
            let f_next = f.evaluate(&next)?;
            if f_next > f_current + 1e-7 * (1.0 + f_current.abs()) {
                return Err(Error::MinimizerDiverged(format!(
                    "energy rose from {f_current} to {f_next} in one proximal step"
                )));
            }
            times.push(k as f64 * config.tau);
            points.push(next.clone());
            current = next;
            f_current = f_next;
            if distance_unchecked(&current, &u0) > config.blow_up_radius {
                blew_up = true;
                break;
            }
            if config.stop_on_critical && f.slope(&current)? <= CRITICAL_SLOPE {
                stopped_critical = true;
                break;
            }
        }
    }

    let curve = SampledCurve::new(f.space(), times, points, p)?.analyzed(f)?;
    Ok(SolveOutcome { curve, blew_up, stopped_critical, tau: config.tau })
}

/// Exact flow of a built-in functional from `u0` sampled on `grid`.
///
/// Supported combinations:
/// * quadratic, any space, any p: radial contraction toward the center
///   (exponential for p = 2, finite extinction for p > 2, power decay for
///   p < 2);
/// * concave quadratic, any dimension, any p, away from the origin
///   (exponential growth for p = 2, blow-up in finite time for p < 2,
///   power growth for p > 2); from the origin only p <= 2, where resting
///   is the unique flow;
/// * |x| and the tripod distance, any p: unit speed toward the minimum,
///   then rest.
///
/// The concave quadratic from the origin with p > 2 has many flows; this
/// returns an error pointing at [`theta_flow`].
pub fn oracle_flow(f: &Functional, p: f64, u0: &Point, grid: &[f64]) -> Result<SampledCurve> {
    f.space().validate_point(u0)?;
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidConfig("oracle grid needs at least two nodes".into()));
    }
    let points: Vec<Point> = match f.kind() {
        FunctionalKind::Quadratic { scale, center } => {
            let r0 = distance_unchecked(u0, center);
            let a = 1.0 / (p - 1.0);
            grid.iter()
                .map(|t| {
                    let r = if r0 == 0.0 {
                        0.0
                    } else if p == 2.0 {
                        r0 * (-scale * t).exp()
                    } else {
                        let base = r0.powf(1.0 - a) - (1.0 - a) * scale.powf(a) * t;
                        if base <= 0.0 {
                            0.0
                        } else {
                            base.powf(1.0 / (1.0 - a))
                        }
                    };
                    if r == 0.0 {
                        center.clone().canonicalize()
                    } else {
                        f.space().geodesic_point(center, u0, r / r0).unwrap()
                    }
                })
                .collect()
        }
        FunctionalKind::NegativeQuadratic => {
            let coords = u0.coords().unwrap();
            let r0 = coords.iter().map(|x| x * x).sum::<f64>().sqrt();
            let a = 1.0 / (p - 1.0);
            if r0 == 0.0 {
                if a >= 1.0 {
                    vec![u0.clone(); grid.len()]
                } else {
                    return Err(Error::UnknownOracle(
                        "flows from the origin are not unique for p > 2; use theta_flow".into(),
                    ));
                }
            } else {
                if p < 2.0 {
                    let t_blow = r0.powf(1.0 - a) / (a - 1.0);
                    if grid.iter().any(|t| *t >= t_blow) {
                        return Err(Error::InvalidConfig(format!(
                            "grid reaches the blow-up time {t_blow}"
                        )));
                    }
                }
                grid.iter()
                    .map(|t| {
                        let r = if p == 2.0 {
                            r0 * t.exp()
                        } else {
                            (r0.powf(1.0 - a) + (1.0 - a) * t).powf(1.0 / (1.0 - a))
                        };
                        Point::euclidean(coords.iter().map(|x| x * r / r0).collect())
                    })
                    .collect()
            }
        }
        FunctionalKind::NormLike => {
            let x0 = u0.as_scalar();
            grid.iter()
                .map(|t| Point::scalar(x0.signum() * (x0.abs() - t).max(0.0)))
                .collect()
        }
        FunctionalKind::DistanceToPoint { anchor } => {
            let d0 = distance_unchecked(u0, anchor);
            grid.iter()
                .map(|t| {
                    let r = (d0 - t).max(0.0);
                    if r == 0.0 {
                        anchor.clone().canonicalize()
                    } else {
                        f.space().geodesic_point(anchor, u0, r / d0).unwrap()
                    }
                })
                .collect()
        }
    };
    SampledCurve::new(f.space(), grid.to_vec(), points, p)?.analyzed(f)
}

/// One member of the fan of flows of the planar concave quadratic leaving
/// the origin with exponent p > 2: r(t) = ((1-a) t)^(1/(1-a)) with
/// a = 1/(p-1), along the ray at angle `theta`. Every value of theta gives
/// a distinct flow with the same start.
pub fn theta_flow(p: f64, theta: f64, grid: &[f64]) -> Result<SampledCurve> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    if grid.len() < 2 {
        return Err(Error::InvalidConfig("oracle grid needs at least two nodes".into()));
    }
    let a = 1.0 / (p - 1.0);
    let f = Functional::negative_quadratic(2);
    let points: Vec<Point> = grid
        .iter()
        .map(|t| {
            let r = ((1.0 - a) * t).powf(1.0 / (1.0 - a));
            Point::euclidean(vec![r * theta.cos(), r * theta.sin()])
        })
        .collect();
    SampledCurve::new(MetricSpace::euclidean(2), grid.to_vec(), points, p)?.analyzed(&f)
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub outcome: SolveOutcome,
    /// Energy-identity residual of the final run.
    pub residual: f64,
    /// False when the step floor was hit before reaching the target.
    pub converged: bool,
}

/// Halves the step until the energy-identity residual of the minimizing
/// movement curve drops below `target`, or the step reaches 1e-7.
pub fn refine_until(
    f: &Functional,
    p: f64,
    u0: &Point,
    config: &SolverConfig,
    target: f64,
) -> Result<RefineOutcome> {
    let mut cfg = config.clone();
    loop {
        let outcome = solve_minimizing_movements(f, p, u0.clone(), &cfg)?;
        let residual =
            crate::analysis::check_energy_identity(&outcome.curve, f, p, target)?.max_residual;
        if residual < target {
            return Ok(RefineOutcome { outcome, residual, converged: true });
        }
        if cfg.tau / 2.0 < 1e-7 {
            return Ok(RefineOutcome { outcome, residual, converged: false });
        }
        cfg.tau /= 2.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::check_energy_identity;

    #[test]
    fn uniform_grid_ends_exactly_at_horizon() {
        let g = uniform_grid(0.3, 7).unwrap();
        assert_eq!(g.len(), 7);
        assert_eq!(g[0], 0.0);
        assert_eq!(*g.last().unwrap(), 0.3);
        assert!(uniform_grid(0.0, 7).is_err());
        assert!(uniform_grid(1.0, 1).is_err());
    }

    #[test]
    fn quadratic_iterates_follow_the_resolvent_power() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let cfg = SolverConfig { tau: 0.01, horizon: 0.5, ..Default::default() };
        let out = solve_minimizing_movements(&f, 2.0, Point::scalar(1.0), &cfg).unwrap();
        assert!(!out.blew_up && !out.stopped_critical);
        for (k, pt) in out.curve.points().iter().enumerate() {
            let expected = 1.0 / 1.01f64.powi(k as i32);
            assert!((pt.as_scalar() - expected).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn concave_quadratic_iterates_grow_and_blow_up_guard_fires() {
        let f = Functional::negative_quadratic(1);
        let cfg = SolverConfig {
            tau: 0.1,
            horizon: 40.0,
            blow_up_radius: 100.0,
            ..Default::default()
        };
        let out = solve_minimizing_movements(&f, 2.0, Point::scalar(1.0), &cfg).unwrap();
        assert!(out.blew_up);
        // iterates are (1 - tau)^{-k}; halt on the first beyond the radius
        let last = out.curve.points().last().unwrap().as_scalar();
        assert!(last > 101.0 && last < 101.0 / 0.9);
        assert!(out.curve.horizon() < 40.0);
    }

    #[test]
    fn norm_like_run_stops_at_the_minimum_when_asked() {
        let f = Functional::norm_like();
        let cfg = SolverConfig {
            tau: 0.01,
            horizon: 3.0,
            stop_on_critical: true,
            ..Default::default()
        };
        let out = solve_minimizing_movements(&f, 2.0, Point::scalar(1.0), &cfg).unwrap();
        assert!(out.stopped_critical);
        assert_eq!(out.curve.points().last().unwrap().as_scalar(), 0.0);
        assert!((out.curve.horizon() - 1.0).abs() < 0.02);
    }

    #[test]
    fn step_outside_the_window_is_refused() {
        let f = Functional::negative_quadratic(1);
        let cfg = SolverConfig { tau: 0.5, horizon: 1.0, ..Default::default() };
        assert!(matches!(
            solve_minimizing_movements(&f, 2.0, Point::scalar(1.0), &cfg),
            Err(Error::StepOutsideWindow { .. })
        ));
    }

    #[test]
    fn quadratic_oracle_matches_exponential_decay() {
        let f = Functional::quadratic(MetricSpace::euclidean(2), 2.0, Point::euclidean(vec![1.0, 0.0]))
            .unwrap();
        let grid = uniform_grid(1.0, 11).unwrap();
        let c = oracle_flow(&f, 2.0, &Point::euclidean(vec![1.0, 3.0]), &grid).unwrap();
        for (t, pt) in grid.iter().zip(c.points()) {
            let co = pt.coords().unwrap();
            assert!((co[0] - 1.0).abs() < 1e-12);
            assert!((co[1] - 3.0 * (-2.0 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn quadratic_oracle_with_large_exponent_reaches_the_center() {
        // p = 4: a = 1/3, extinction at r0^(2/3) / (2/3)
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let grid = uniform_grid(3.0, 3001).unwrap();
        let c = oracle_flow(&f, 4.0, &Point::scalar(1.0), &grid).unwrap();
        let extinction = 1.5;
        for (t, pt) in grid.iter().zip(c.points()) {
            let expect = if *t >= extinction {
                0.0
            } else {
                (1.0 - 2.0 * t / 3.0).powf(1.5)
            };
            assert!((pt.as_scalar() - expect).abs() < 1e-12, "t={t}");
        }
        let rep = check_energy_identity(&c, &f, 4.0, 5e-3).unwrap();
        assert!(rep.passed, "max residual {}", rep.max_residual);
    }

    #[test]
    fn concave_oracle_blows_up_in_finite_time_for_small_exponent() {
        // p = 3/2: a = 2, u(t) = 1 / (1 - t)
        let f = Functional::negative_quadratic(1);
        let grid = uniform_grid(0.9, 901).unwrap();
        let c = oracle_flow(&f, 1.5, &Point::scalar(1.0), &grid).unwrap();
        for (t, pt) in grid.iter().zip(c.points()) {
            assert!((pt.as_scalar() - 1.0 / (1.0 - t)).abs() < 1e-10, "t={t}");
        }
        let too_far = uniform_grid(1.0, 11).unwrap();
        assert!(oracle_flow(&f, 1.5, &Point::scalar(1.0), &too_far).is_err());
    }

    #[test]
    fn concave_oracle_from_origin_rests_or_refuses() {
        let f = Functional::negative_quadratic(2);
        let grid = uniform_grid(1.0, 5).unwrap();
        let origin = Point::euclidean(vec![0.0, 0.0]);
        let resting = oracle_flow(&f, 2.0, &origin, &grid).unwrap();
        assert!(resting.points().iter().all(|p| p.coords().unwrap() == [0.0, 0.0]));
        assert!(matches!(
            oracle_flow(&f, 4.0, &origin, &grid),
            Err(Error::UnknownOracle(_))
        ));
    }

    #[test]
    fn theta_flow_satisfies_the_energy_identity_from_rest() {
        let grid = uniform_grid(2.0, 2001).unwrap();
        let c = theta_flow(4.0, 1.1, &grid).unwrap();
        let f = Functional::negative_quadratic(2);
        let rep = check_energy_identity(&c, &f, 4.0, 5e-3).unwrap();
        assert!(rep.passed, "max residual {}", rep.max_residual);
        // r(t) = (2t/3)^(3/2)
        let last = c.points().last().unwrap().coords().unwrap().to_vec();
        let r = (last[0] * last[0] + last[1] * last[1]).sqrt();
        assert!((r - (4.0f64 / 3.0).powf(1.5)).abs() < 1e-10);
    }

    #[test]
    fn tripod_oracle_walks_through_the_origin() {
        let f = Functional::distance_to_point(Point::tripod(1, 1.0)).unwrap();
        let grid = uniform_grid(4.0, 401).unwrap();
        let c = oracle_flow(&f, 2.0, &Point::tripod(0, 2.0), &grid).unwrap();
        // starts 3 away; the origin is passed at t = 2, the anchor reached at t = 3
        assert_eq!(c.eval(0.0), Point::tripod(0, 2.0));
        assert!(distance_unchecked(&c.eval(2.5), &Point::tripod(1, 0.5)) < 1e-12);
        assert_eq!(c.eval(3.5), Point::tripod(1, 1.0));

        // before extinction the identity is exact: unit speed, unit slope
        let moving = uniform_grid(2.9, 291).unwrap();
        let c2 = oracle_flow(&f, 2.0, &Point::tripod(0, 2.0), &moving).unwrap();
        let rep = check_energy_identity(&c2, &f, 2.0, 1e-10).unwrap();
        assert!(rep.passed, "max residual {}", rep.max_residual);
    }

    #[test]
    fn refinement_tightens_the_energy_residual() {
        let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
        let cfg = SolverConfig { tau: 0.05, horizon: 1.0, ..Default::default() };
        let out = refine_until(&f, 2.0, &Point::scalar(1.0), &cfg, 1e-3).unwrap();
        assert!(out.converged);
        assert!(out.residual < 1e-3);
        assert!(out.outcome.tau < 0.05);
    }
}
