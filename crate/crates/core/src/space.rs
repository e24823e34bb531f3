//! Ambient spaces and points.
//!
//! Two concrete geodesic spaces are supported: Euclidean space of any
//! dimension, and the tripod (three half-lines glued at a common origin).
//! The tripod is the smallest example that is a geodesic space but not a
//! Riemannian manifold, which is what the rest of the crate is built to
//! exercise: every operation downstream of this module goes through
//! [`MetricSpace::distance`] and [`MetricSpace::geodesic_point`] only.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A point of one of the supported spaces.
///
/// Tripod points with radius 0 denote the origin regardless of their
/// branch tag; all operations treat them as the same point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum Point {
    Euclidean { coords: Vec<f64> },
    Tripod { branch: u8, radius: f64 },
}

impl Point {
    pub fn euclidean(coords: Vec<f64>) -> Point {
        Point::Euclidean { coords }
    }

    /// 1-dimensional Euclidean point.
    pub fn scalar(x: f64) -> Point {
        Point::Euclidean { coords: vec![x] }
    }

    pub fn tripod(branch: u8, radius: f64) -> Point {
        Point::Tripod { branch, radius }
    }

    /// The scalar coordinate; panics off Euclidean(1).
    pub fn as_scalar(&self) -> f64 {
        match self {
            Point::Euclidean { coords } if coords.len() == 1 => coords[0],
            _ => panic!("not a 1-dimensional Euclidean point"),
        }
    }

    pub fn coords(&self) -> Option<&[f64]> {
        match self {
            Point::Euclidean { coords } => Some(coords),
            Point::Tripod { .. } => None,
        }
    }

    /// Rewrites a zero-radius tripod point to the canonical origin tag.
    pub fn canonicalize(self) -> Point {
        match self {
            Point::Tripod { radius: 0.0, .. } => Point::Tripod { branch: 0, radius: 0.0 },
            other => other,
        }
    }
}

/// One of the supported ambient spaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum MetricSpace {
    Euclidean { dim: usize },
    Tripod,
}

impl MetricSpace {
    pub fn euclidean(dim: usize) -> MetricSpace {
        MetricSpace::Euclidean { dim }
    }

    /// Checks membership: dimension for Euclidean points, branch in
    /// {0,1,2} and radius >= 0 for tripod points. All coordinates must be
    /// finite.
    pub fn validate_point(&self, p: &Point) -> Result<()> {
        match (self, p) {
            (MetricSpace::Euclidean { dim }, Point::Euclidean { coords }) => {
                if coords.len() != *dim {
                    return Err(Error::DimensionMismatch { expected: *dim, got: coords.len() });
                }
                if coords.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFiniteCoordinate);
                }
                Ok(())
            }
            (MetricSpace::Tripod, Point::Tripod { branch, radius }) => {
                if *branch > 2 {
                    return Err(Error::InvalidBranch(*branch));
                }
                if !radius.is_finite() {
                    return Err(Error::NonFiniteCoordinate);
                }
                if *radius < 0.0 {
                    return Err(Error::NegativeRadius(*radius));
                }
                Ok(())
            }
            (MetricSpace::Euclidean { .. }, Point::Tripod { .. }) => {
                Err(Error::SpaceMismatch("tripod point in a Euclidean space".into()))
            }
            (MetricSpace::Tripod, Point::Euclidean { .. }) => {
                Err(Error::SpaceMismatch("Euclidean point in the tripod".into()))
            }
        }
    }

    pub fn distance(&self, a: &Point, b: &Point) -> Result<f64> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        Ok(distance_unchecked(a, b))
    }

    /// The point at parameter `theta` in [0, 1] on the geodesic from `a`
    /// to `b`, at distance `theta * d(a, b)` from `a`.
    ///
    /// On the tripod, points on distinct branches are joined through the
    /// origin; a zero-radius endpoint counts as lying on every branch.
    pub fn geodesic_point(&self, a: &Point, b: &Point, theta: f64) -> Result<Point> {
        self.validate_point(a)?;
        self.validate_point(b)?;
        if !(0.0..=1.0).contains(&theta) {
            return Err(Error::InterpolationParameter(theta));
        }
        Ok(geodesic_unchecked(a, b, theta))
    }

    /// Space of the given point, for assembling curves from raw knots.
    pub fn of_point(p: &Point) -> MetricSpace {
        match p {
            Point::Euclidean { coords } => MetricSpace::Euclidean { dim: coords.len() },
            Point::Tripod { .. } => MetricSpace::Tripod,
        }
    }
}

/// Distance between two already-validated points of the same space.
pub(crate) fn distance_unchecked(a: &Point, b: &Point) -> f64 {
    match (a, b) {
        (Point::Euclidean { coords: x }, Point::Euclidean { coords: y }) => x
            .iter()
            .zip(y.iter())
            .map(|(xi, yi)| (xi - yi) * (xi - yi))
            .sum::<f64>()
            .sqrt(),
        (Point::Tripod { branch: ba, radius: ra }, Point::Tripod { branch: bb, radius: rb }) => {
            // zero-radius points sit at the origin whatever their tag
            if ba == bb || *ra == 0.0 || *rb == 0.0 {
                (ra - rb).abs()
            } else {
                ra + rb
            }
        }
        _ => f64::NAN,
    }
}

pub(crate) fn geodesic_unchecked(a: &Point, b: &Point, theta: f64) -> Point {
    if theta == 0.0 {
        return a.clone();
    }
    if theta == 1.0 {
        return b.clone();
    }
    match (a, b) {
        (Point::Euclidean { coords: x }, Point::Euclidean { coords: y }) => Point::Euclidean {
            coords: x
                .iter()
                .zip(y.iter())
                .map(|(xi, yi)| xi + theta * (yi - xi))
                .collect(),
        },
        (Point::Tripod { branch: ba, radius: ra }, Point::Tripod { branch: bb, radius: rb }) => {
            let same_side = ba == bb || *ra == 0.0 || *rb == 0.0;
            if same_side {
                // segment along a single branch; pick the tag of whichever
                // endpoint actually leaves the origin
                let branch = if *ra > 0.0 { *ba } else { *bb };
                Point::Tripod { branch, radius: ra + theta * (rb - ra) }.canonicalize()
            } else {
                // through the origin: travel theta*(ra+rb) from a
                let travelled = theta * (ra + rb);
                if travelled <= *ra {
                    Point::Tripod { branch: *ba, radius: ra - travelled }.canonicalize()
                } else {
                    Point::Tripod { branch: *bb, radius: travelled - ra }
                }
            }
        }
        _ => a.clone(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn euclidean_distance_matches_norm() {
        let s = MetricSpace::euclidean(2);
        let a = Point::euclidean(vec![0.0, 0.0]);
        let b = Point::euclidean(vec![3.0, 4.0]);
        assert_eq!(s.distance(&a, &b).unwrap(), 5.0);
    }

    #[test]
    fn tripod_distance_same_and_different_branch() {
        let s = MetricSpace::Tripod;
        let a = Point::tripod(0, 2.0);
        let b = Point::tripod(0, 0.5);
        assert_eq!(s.distance(&a, &b).unwrap(), 1.5);
        let c = Point::tripod(1, 1.0);
        assert_eq!(s.distance(&a, &c).unwrap(), 3.0);
    }

    #[test]
    fn tripod_origin_identified_across_branch_tags() {
        let s = MetricSpace::Tripod;
        let o0 = Point::tripod(0, 0.0);
        let o2 = Point::tripod(2, 0.0);
        assert_eq!(s.distance(&o0, &o2).unwrap(), 0.0);
        assert_eq!(s.distance(&o2, &Point::tripod(1, 4.0)).unwrap(), 4.0);
    }

    #[test]
    fn geodesic_crosses_the_origin() {
        // branch 0 radius 2 to branch 1 radius 2, theta 0.75: past the origin
        let s = MetricSpace::Tripod;
        let a = Point::tripod(0, 2.0);
        let b = Point::tripod(1, 2.0);
        let mid = s.geodesic_point(&a, &b, 0.75).unwrap();
        assert_eq!(mid, Point::tripod(1, 1.0));
        // exactly at the gluing point
        let origin = s.geodesic_point(&a, &b, 0.5).unwrap();
        assert_eq!(origin, Point::tripod(0, 0.0));
    }

    #[test]
    fn geodesic_endpoints_are_exact() {
        let s = MetricSpace::euclidean(3);
        let a = Point::euclidean(vec![0.1, -0.2, 0.3]);
        let b = Point::euclidean(vec![1.0, 2.0, -3.0]);
        assert_eq!(s.geodesic_point(&a, &b, 0.0).unwrap(), a);
        assert_eq!(s.geodesic_point(&a, &b, 1.0).unwrap(), b);
    }

    #[test]
    fn geodesic_parameter_is_metrically_affine() {
        let s = MetricSpace::Tripod;
        let a = Point::tripod(2, 1.25);
        let b = Point::tripod(1, 0.75);
        let d = s.distance(&a, &b).unwrap();
        for k in 0..=8 {
            let th = k as f64 / 8.0;
            let g = s.geodesic_point(&a, &b, th).unwrap();
            let from_a = s.distance(&a, &g).unwrap();
            assert!((from_a - th * d).abs() <= 1e-12, "theta {th}: {from_a} vs {}", th * d);
        }
    }

    #[test]
    fn validate_rejects_wrong_dimension_and_branch() {
        let s = MetricSpace::euclidean(2);
        let p = Point::euclidean(vec![1.0]);
        assert!(matches!(s.validate_point(&p), Err(Error::DimensionMismatch { .. })));
        let t = MetricSpace::Tripod;
        assert!(matches!(t.validate_point(&Point::tripod(3, 1.0)), Err(Error::InvalidBranch(3))));
        assert!(matches!(t.validate_point(&Point::tripod(0, -0.5)), Err(Error::NegativeRadius(_))));
    }

    #[test]
    fn validate_rejects_non_finite() {
        let s = MetricSpace::euclidean(1);
        assert!(matches!(s.validate_point(&Point::scalar(f64::NAN)), Err(Error::NonFiniteCoordinate)));
    }

    #[test]
    fn theta_outside_unit_interval_is_refused() {
        let s = MetricSpace::euclidean(1);
        let a = Point::scalar(0.0);
        let b = Point::scalar(1.0);
        assert!(matches!(
            s.geodesic_point(&a, &b, 1.5),
            Err(Error::InterpolationParameter(_))
        ));
    }

    #[test]
    fn point_json_shape() {
        let p = Point::euclidean(vec![1.0, 2.5]);
        assert_eq!(
            serde_json::to_string(&p).unwrap(),
            r#"{"space":"euclidean","coords":[1.0,2.5]}"#
        );
        let t: Point = serde_json::from_str(r#"{"space":"tripod","branch":0,"radius":2.0}"#).unwrap();
        assert_eq!(t, Point::tripod(0, 2.0));
    }
}
