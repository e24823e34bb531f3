//! Randomized invariants. Each block pins one structural guarantee the
//! rest of the crate leans on; tolerances are either exact-arithmetic
//! claims (1e-12 and below) or discretization orders checked on refined
//! grids.

use maxslope::{
    check_energy_identity, detect_positivity_horizon, oracle_flow, solve_minimizing_movements,
    transform_exponent, uniform_grid, Extended, Functional, MetricSpace, Point, SolverConfig,
    TimeMap,
};
use proptest::prelude::*;

fn tripod_point() -> impl Strategy<Value = Point> {
    (0u8..3, 0.0f64..3.0).prop_map(|(b, r)| Point::tripod(b, r))
}

fn plane_point() -> impl Strategy<Value = Point> {
    (-5.0f64..5.0, -5.0f64..5.0).prop_map(|(x, y)| Point::euclidean(vec![x, y]))
}

fn line_point() -> impl Strategy<Value = Point> {
    (-4.0f64..4.0).prop_map(Point::scalar)
}

/// One of the built-in functionals paired with a point of its space.
fn functional_and_point() -> impl Strategy<Value = (Functional, Point)> {
    prop_oneof![
        line_point().prop_map(|v| {
            let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0))
                .unwrap();
            (f, v)
        }),
        line_point().prop_map(|v| (Functional::negative_quadratic(1), v)),
        line_point().prop_map(|v| (Functional::norm_like(), v)),
        tripod_point().prop_map(|v| {
            let f = Functional::distance_to_point(Point::tripod(0, 1.0)).unwrap();
            (f, v)
        }),
    ]
}

/// Like `functional_and_point` but with two points, for geodesic checks.
fn functional_and_pair() -> impl Strategy<Value = (Functional, Point, Point)> {
    prop_oneof![
        (line_point(), line_point()).prop_map(|(a, b)| {
            let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0))
                .unwrap();
            (f, a, b)
        }),
        (line_point(), line_point()).prop_map(|(a, b)| (Functional::negative_quadratic(1), a, b)),
        (line_point(), line_point()).prop_map(|(a, b)| (Functional::norm_like(), a, b)),
        (tripod_point(), tripod_point()).prop_map(|(a, b)| {
            let f = Functional::distance_to_point(Point::tripod(0, 1.0)).unwrap();
            (f, a, b)
        }),
    ]
}

/// Two points drawn from the same space, for metric checks.
fn matched_pair() -> impl Strategy<Value = (Point, Point)> {
    prop_oneof![(tripod_point(), tripod_point()), (plane_point(), plane_point())]
}

proptest! {
    #[test]
    fn tripod_triangle_inequality(a in tripod_point(), b in tripod_point(), c in tripod_point()) {
        let s = MetricSpace::Tripod;
        let ab = s.distance(&a, &b).unwrap();
        let bc = s.distance(&b, &c).unwrap();
        let ac = s.distance(&a, &c).unwrap();
        prop_assert!(ac <= ab + bc + 1e-12);
    }

    #[test]
    fn geodesics_are_metrically_affine(
        (a, b) in matched_pair(),
        theta in 0.0f64..1.0,
    ) {
        let s = MetricSpace::of_point(&a);
        let d = s.distance(&a, &b).unwrap();
        let g = s.geodesic_point(&a, &b, theta).unwrap();
        let from_a = s.distance(&a, &g).unwrap();
        let from_b = s.distance(&g, &b).unwrap();
        prop_assert!((from_a - theta * d).abs() <= 1e-12 * (1.0 + d));
        prop_assert!((from_a + from_b - d).abs() <= 1e-12 * (1.0 + d));
    }

    #[test]
    fn declared_convexity_profiles_hold_along_geodesics(
        (f, v0, v1) in functional_and_pair(),
        theta in 0.0f64..1.0,
    ) {
        prop_assert!(f.convexity_defect(&v0, &v1, theta).unwrap() <= 1e-9);
    }

    #[test]
    fn proximal_point_never_raises_the_objective(
        (f, v) in functional_and_point(),
        p in 1.2f64..4.0,
        frac in 0.05f64..0.95,
    ) {
        prop_assume!(f.profile().lambda >= 0.0 || p >= f.profile().p0);
        let tau = match f.profile().step_limit(p) {
            Some(limit) => frac * limit,
            None => frac,
        };
        let w = f.proximal(p, tau, &v).unwrap();
        let lhs = f.evaluate(&w).unwrap() + f.movement_cost(p, tau, &w, &v).unwrap();
        let fv = f.evaluate(&v).unwrap();
        prop_assert!(lhs <= fv + 1e-7 * (1.0 + fv.abs()), "{lhs} vs {fv}");
    }

    #[test]
    fn moreau_envelope_stays_below_the_functional(
        (f, v) in functional_and_point(),
        p in 1.2f64..4.0,
        frac in 0.05f64..0.95,
    ) {
        prop_assume!(f.profile().lambda >= 0.0 || p >= f.profile().p0);
        let t = match f.profile().step_limit(p) {
            Some(limit) => frac * limit,
            None => frac,
        };
        let env = f.moreau_envelope(p, t, &v).unwrap();
        let fv = f.evaluate(&v).unwrap();
        prop_assert!(env <= fv + 1e-7 * (1.0 + fv.abs()));
    }

    #[test]
    fn minimizing_movements_descend_step_by_step(
        (f, v) in functional_and_point(),
        p in 1.5f64..3.0,
        frac in 0.1f64..0.5,
    ) {
        prop_assume!(f.profile().lambda >= 0.0 || p >= f.profile().p0);
        let tau = match f.profile().step_limit(p) {
            Some(limit) => frac * limit,
            None => 0.1 * frac,
        };
        let config = SolverConfig { tau, horizon: 5.0 * tau, ..SolverConfig::default() };
        let out = solve_minimizing_movements(&f, p, v, &config).unwrap();
        let fv = out.curve.f_values().unwrap();
        for w in fv.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-7 * (1.0 + w[0].abs()));
        }
    }

    #[test]
    fn transform_exponent_invariants(p in 1.01f64..50.0, p_prime in 1.01f64..50.0) {
        let alpha = transform_exponent(p, p_prime).unwrap();
        prop_assert!(alpha < 1.0);
        prop_assert_eq!(transform_exponent(p, p).unwrap(), 0.0);
        // shrinking the target exponent always lowers alpha
        if p_prime < p {
            prop_assert!(alpha < 0.0 || (p - p_prime).abs() < 1e-12);
        }
        if p_prime > p {
            prop_assert!(alpha > 0.0);
        }
    }

    #[test]
    fn time_map_inverts_its_own_evaluation(
        speeds in prop::collection::vec(0.1f64..10.0, 2..40),
        alpha in -2.0f64..0.99,
        sample in 0.0f64..1.0,
    ) {
        let times: Vec<f64> = (0..speeds.len()).map(|i| i as f64 * 0.05).collect();
        let map = TimeMap::from_speeds(&times, &speeds, alpha).unwrap();
        let t = sample * times.last().unwrap();
        let s = map.eval(t);
        let back = map.eval_inverse(s);
        prop_assert!((back - t).abs() <= 1e-10 * (1.0 + t.abs()), "{t} -> {s} -> {back}");
        // the inverse map is the same object with the axes swapped
        let inv = map.invert();
        prop_assert!((inv.eval(s) - t).abs() <= 1e-10 * (1.0 + t.abs()));
        let twice = inv.invert();
        prop_assert_eq!(twice.knots_t(), map.knots_t());
        prop_assert!((twice.alpha() - map.alpha()).abs() <= 1e-15);
    }

    #[test]
    fn horizon_detection_is_monotone_in_the_threshold(
        u0 in 0.2f64..3.0,
        eps_lo in 1e-10f64..1e-6,
        ratio in 2.0f64..1e3,
    ) {
        let f = Functional::norm_like();
        let grid = uniform_grid(2.0, 400).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(u0), &grid).unwrap();
        let eps_hi = eps_lo * ratio;
        let lo = detect_positivity_horizon(&u, eps_lo).unwrap().t_star;
        let hi = detect_positivity_horizon(&u, eps_hi).unwrap().t_star;
        let as_f = |e: Extended| e.value().unwrap_or(f64::INFINITY);
        prop_assert!(as_f(hi) <= as_f(lo));
    }
}

#[test]
fn energy_residual_decays_with_the_grid() {
    let f = Functional::quadratic(MetricSpace::euclidean(1), 1.0, Point::scalar(0.0)).unwrap();
    let mut last = f64::INFINITY;
    for nodes in [201usize, 401, 801] {
        let grid = uniform_grid(2.0, nodes).unwrap();
        let u = oracle_flow(&f, 2.0, &Point::scalar(1.0), &grid).unwrap();
        let report = check_energy_identity(&u, &f, 2.0, 1e30).unwrap();
        assert!(
            report.max_residual <= 0.6 * last,
            "residual {} did not shrink from {last} at {nodes} nodes",
            report.max_residual
        );
        last = report.max_residual;
    }
}
