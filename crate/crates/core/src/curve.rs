//! Discretely sampled curves.
//!
//! A curve is a strictly increasing time grid starting at 0 with one point
//! per knot, tagged with the driving exponent p. Derived node data (energy
//! values, slopes, speed estimates) is cached on the curve once computed so
//! checkers and exports can share it.

use crate::analysis;
use crate::error::{Error, Result};
use crate::functional::Functional;
use crate::space::{distance_unchecked, geodesic_unchecked, MetricSpace, Point};

#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    space: MetricSpace,
    times: Vec<f64>,
    points: Vec<Point>,
    p: f64,
    f_values: Option<Vec<f64>>,
    slopes: Option<Vec<f64>>,
    metric_derivatives: Option<Vec<f64>>,
}

impl SampledCurve {
    pub fn new(space: MetricSpace, times: Vec<f64>, points: Vec<Point>, p: f64) -> Result<SampledCurve> {
        if times.is_empty() {
            return Err(Error::InvalidCurve("empty time grid".into()));
        }
        if times.len() != points.len() {
            return Err(Error::InvalidCurve(format!(
                "{} times but {} points",
                times.len(),
                points.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidCurve(format!("grid must start at 0, got {}", times[0])));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidCurve("time grid must be strictly increasing".into()));
        }
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        for pt in &points {
            space.validate_point(pt)?;
        }
        Ok(SampledCurve {
            space,
            times,
            points,
            p,
            f_values: None,
            slopes: None,
            metric_derivatives: None,
        })
    }

    pub fn space(&self) -> MetricSpace {
        self.space
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid curve has at least one knot
    }

    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap()
    }

    pub fn f_values(&self) -> Option<&[f64]> {
        self.f_values.as_deref()
    }

    pub fn slopes(&self) -> Option<&[f64]> {
        self.slopes.as_deref()
    }

    pub fn metric_derivatives(&self) -> Option<&[f64]> {
        self.metric_derivatives.as_deref()
    }

    /// Largest upward step of the cached energy values; 0 for a perfectly
    /// non-increasing sequence.
    pub fn f_increase_defect(&self) -> Option<f64> {
        let f = self.f_values.as_ref()?;
        Some(
            f.windows(2)
                .map(|w| (w[1] - w[0]).max(0.0))
                .fold(0.0, f64::max),
        )
    }

    /// Fills the energy, slope and speed caches from the functional.
    /// Slopes use the closed forms; speeds are difference quotients of the
    /// grid (central inside, second-order one-sided at the ends).
    pub fn analyzed(mut self, f: &Functional) -> Result<SampledCurve> {
        if f.space() != self.space {
            return Err(Error::SpaceMismatch("functional lives on a different space".into()));
        }
        let mut fv = Vec::with_capacity(self.len());
        let mut sl = Vec::with_capacity(self.len());
        for pt in &self.points {
            fv.push(f.evaluate(pt)?);
            sl.push(f.slope(pt)?);
        }
        self.f_values = Some(fv);
        self.slopes = Some(sl);
        if self.len() >= 2 {
            self.metric_derivatives = Some(analysis::metric_derivative(&self)?);
        } else {
            self.metric_derivatives = Some(vec![0.0]);
        }
        Ok(self)
    }

    /// Installs externally computed caches; lengths must match the grid.
    pub fn with_caches(
        mut self,
        f_values: Option<Vec<f64>>,
        slopes: Option<Vec<f64>>,
        metric_derivatives: Option<Vec<f64>>,
    ) -> Result<SampledCurve> {
        for cache in [&f_values, &slopes, &metric_derivatives].into_iter().flatten() {
            if cache.len() != self.len() {
                return Err(Error::InvalidCurve("cache length does not match the grid".into()));
            }
        }
        self.f_values = f_values;
        self.slopes = slopes;
        self.metric_derivatives = metric_derivatives;
        Ok(self)
    }

    /// Point at time `t`: geodesic interpolation between the bracketing
    /// knots, clamped to the grid range.
    pub fn eval(&self, t: f64) -> Point {
        let times = &self.times;
        if t <= times[0] {
            return self.points[0].clone();
        }
        if t >= *times.last().unwrap() {
            return self.points.last().unwrap().clone();
        }
        let j = times.partition_point(|&tk| tk <= t);
        let (t0, t1) = (times[j - 1], times[j]);
        let th = (t - t0) / (t1 - t0);
        geodesic_unchecked(&self.points[j - 1], &self.points[j], th)
    }

    /// Keeps knots 0..=last; caches are truncated alongside.
    pub fn truncated(&self, last: usize) -> Result<SampledCurve> {
        if last >= self.len() {
            return Err(Error::InvalidCurve(format!(
                "truncation index {last} beyond {} knots",
                self.len()
            )));
        }
        let take = |v: &Option<Vec<f64>>| v.as_ref().map(|v| v[..=last].to_vec());
        Ok(SampledCurve {
            space: self.space,
            times: self.times[..=last].to_vec(),
            points: self.points[..=last].to_vec(),
            p: self.p,
            f_values: take(&self.f_values),
            slopes: take(&self.slopes),
            metric_derivatives: None, // endpoint estimates change with the grid
        })
    }

    /// Same knots, different exponent tag.
    pub fn with_exponent(mut self, p: f64) -> Result<SampledCurve> {
        if !(p > 1.0) || !p.is_finite() {
            return Err(Error::InvalidExponent(p));
        }
        self.p = p;
        Ok(self)
    }

    /// Largest distance between this curve and `other` sampled at this
    /// curve's knots (`other` is interpolated).
    pub fn sup_distance_at_knots(&self, other: &SampledCurve) -> Result<f64> {
        if self.space != other.space {
            return Err(Error::SpaceMismatch("curves live on different spaces".into()));
        }
        let mut sup: f64 = 0.0;
        for (t, pt) in self.times.iter().zip(&self.points) {
            sup = sup.max(distance_unchecked(pt, &other.eval(*t)));
        }
        Ok(sup)
    }
}
