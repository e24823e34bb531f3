//! Energy functionals with declared convexity data.
//!
//! Each built-in functional carries the triple (p0, lambda, psi) certifying
//! `f(g_t) <= (1-t) f(g_0) + t f(g_1) - lambda t (1 - psi(t)) d^p0(g_0, g_1)`
//! along geodesics. That declaration feeds three consumers: the global
//! descending-slope formula, the well-posedness window for proximal steps,
//! and the convexity-along-curve checker. The profile is a claim about the
//! functional; property tests sample the inequality directly to certify it.

use crate::error::{Error, Result};
use crate::space::{distance_unchecked, MetricSpace, Point};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Shape of the psi correction in the convexity modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PsiFamily {
    /// psi(t) = t
    Linear,
    /// psi(t) = t^(p0 - 1)
    Power,
}

/// Convexity data (p0, lambda, psi) declared by a functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvexityProfile {
    pub p0: f64,
    pub lambda: f64,
    pub psi: PsiFamily,
}

impl ConvexityProfile {
    pub fn new(p0: f64, lambda: f64, psi: PsiFamily) -> Result<ConvexityProfile> {
        if !(p0 > 1.0) || !p0.is_finite() {
            return Err(Error::InvalidExponent(p0));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite lambda {lambda}")));
        }
        Ok(ConvexityProfile { p0, lambda, psi })
    }

    /// Negative part of lambda; 0 for convex profiles.
    pub fn lambda_minus(&self) -> f64 {
        (-self.lambda).max(0.0)
    }

    pub fn psi_value(&self, t: f64) -> f64 {
        match self.psi {
            PsiFamily::Linear => t,
            PsiFamily::Power => t.powf(self.p0 - 1.0),
        }
    }

    /// Largest admissible proximal step for exponent `p`: tau^(p-1) must
    /// stay strictly below 1/lambda_minus. `None` means unrestricted.
    pub fn step_limit(&self, p: f64) -> Option<f64> {
        let lm = self.lambda_minus();
        if lm == 0.0 {
            None
        } else {
            Some((1.0 / lm).powf(1.0 / (p - 1.0)))
        }
    }
}

/// Built-in energy functionals.
#[derive(Debug, Clone, PartialEq)]
pub enum FunctionalKind {
    /// scale * d^2(x, center) / 2
    Quadratic { scale: f64, center: Point },
    /// -|x|^2 / 2 on Euclidean space; unbounded below
    NegativeQuadratic,
    /// |x| on the Euclidean line
    NormLike,
    /// d(x, anchor) on the tripod
    DistanceToPoint { anchor: Point },
}

/// An energy functional bound to its ambient space.
#[derive(Debug, Clone, PartialEq)]
pub struct Functional {
    space: MetricSpace,
    kind: FunctionalKind,
}

impl Functional {
    pub fn quadratic(space: MetricSpace, scale: f64, center: Point) -> Result<Functional> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::InvalidConfig(format!("quadratic scale must be positive, got {scale}")));
        }
        space.validate_point(&center)?;
        Ok(Functional { space, kind: FunctionalKind::Quadratic { scale, center } })
    }

    pub fn negative_quadratic(dim: usize) -> Functional {
        Functional { space: MetricSpace::euclidean(dim), kind: FunctionalKind::NegativeQuadratic }
    }

    /// |x| on Euclidean(1).
    pub fn norm_like() -> Functional {
        Functional { space: MetricSpace::euclidean(1), kind: FunctionalKind::NormLike }
    }

    pub fn distance_to_point(anchor: Point) -> Result<Functional> {
        MetricSpace::Tripod.validate_point(&anchor)?;
        Ok(Functional { space: MetricSpace::Tripod, kind: FunctionalKind::DistanceToPoint { anchor } })
    }

    pub fn space(&self) -> MetricSpace {
        self.space
    }

    pub fn kind(&self) -> &FunctionalKind {
        &self.kind
    }

    /// Stable name used in configs and exports.
    pub fn tag(&self) -> &'static str {
        match self.kind {
            FunctionalKind::Quadratic { .. } => "quadratic",
            FunctionalKind::NegativeQuadratic => "negative_quadratic",
            FunctionalKind::NormLike => "norm_like",
            FunctionalKind::DistanceToPoint { .. } => "distance_to_point",
        }
    }

    pub fn profile(&self) -> ConvexityProfile {
        let (lambda, psi) = match &self.kind {
            FunctionalKind::Quadratic { scale, .. } => (scale / 2.0, PsiFamily::Linear),
            FunctionalKind::NegativeQuadratic => (-2.0, PsiFamily::Linear),
            FunctionalKind::NormLike => (0.0, PsiFamily::Linear),
            FunctionalKind::DistanceToPoint { .. } => (0.0, PsiFamily::Linear),
        };
        ConvexityProfile { p0: 2.0, lambda, psi }
    }

    /// Infimum over the whole space, where known.
    pub fn inf_value(&self) -> Option<f64> {
        match self.kind {
            FunctionalKind::Quadratic { .. } => Some(0.0),
            FunctionalKind::NegativeQuadratic => None,
            FunctionalKind::NormLike => Some(0.0),
            FunctionalKind::DistanceToPoint { .. } => Some(0.0),
        }
    }

    /// Global minimizer, where one exists.
    pub fn minimizer(&self) -> Option<Point> {
        match &self.kind {
            FunctionalKind::Quadratic { center, .. } => Some(center.clone()),
            FunctionalKind::NegativeQuadratic => None,
            FunctionalKind::NormLike => Some(Point::scalar(0.0)),
            FunctionalKind::DistanceToPoint { anchor } => Some(anchor.clone()),
        }
    }

    /// Natural reference point used by the default candidate sampler.
    pub fn reference_point(&self) -> Point {
        match (&self.kind, self.space) {
            (FunctionalKind::Quadratic { center, .. }, _) => center.clone(),
            (FunctionalKind::DistanceToPoint { anchor }, _) => anchor.clone(),
            (_, MetricSpace::Euclidean { dim }) => Point::euclidean(vec![0.0; dim]),
            (_, MetricSpace::Tripod) => Point::tripod(0, 0.0),
        }
    }

    pub fn evaluate(&self, v: &Point) -> Result<f64> {
        self.space.validate_point(v)?;
        Ok(match &self.kind {
            FunctionalKind::Quadratic { scale, center } => {
                let d = distance_unchecked(v, center);
                scale * d * d / 2.0
            }
            FunctionalKind::NegativeQuadratic => {
                let n2: f64 = v.coords().unwrap().iter().map(|x| x * x).sum();
                -n2 / 2.0
            }
            FunctionalKind::NormLike => v.as_scalar().abs(),
            FunctionalKind::DistanceToPoint { anchor } => distance_unchecked(v, anchor),
        })
    }

    /// Closed-form descending slope.
    ///
    /// For the two 1-homogeneous functionals the slope is 1 away from the
    /// minimum and 0 at it: at the minimum no value below f(v) exists, so
    /// the positive part in the slope definition kills the limsup.
    pub fn slope(&self, v: &Point) -> Result<f64> {
        self.space.validate_point(v)?;
        Ok(match &self.kind {
            FunctionalKind::Quadratic { scale, center } => scale * distance_unchecked(v, center),
            FunctionalKind::NegativeQuadratic => {
                v.coords().unwrap().iter().map(|x| x * x).sum::<f64>().sqrt()
            }
            FunctionalKind::NormLike => {
                if v.as_scalar() == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
            FunctionalKind::DistanceToPoint { anchor } => {
                if distance_unchecked(v, anchor) == 0.0 {
                    0.0
                } else {
                    1.0
                }
            }
        })
    }

    /// Gradient for Euclidean functionals, used by the numeric proximal
    /// fallback. `None` off Euclidean space.
    fn euclidean_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        match &self.kind {
            FunctionalKind::Quadratic { scale, center } => {
                let z = center.coords()?;
                Some(x.iter().zip(z).map(|(xi, zi)| scale * (xi - zi)).collect())
            }
            FunctionalKind::NegativeQuadratic => Some(x.iter().map(|xi| -xi).collect()),
            FunctionalKind::NormLike => Some(vec![if x[0] == 0.0 { 0.0 } else { x[0].signum() }]),
            FunctionalKind::DistanceToPoint { .. } => None,
        }
    }

    /// Rejects steps outside the well-posedness window tau^(p-1) < 1/lambda_minus.
    ///
    /// With lambda < 0 and p below p0 the movement cost d^p grows slower than
    /// the declared d^p0 decline, so the proximal objective is unbounded below
    /// no matter how small the step; such requests are refused outright.
    pub fn check_step(&self, p: f64, tau: f64) -> Result<()> {
        check_exponent(p)?;
        if !(tau > 0.0) || !tau.is_finite() {
            return Err(Error::InvalidConfig(format!("step must be positive, got {tau}")));
        }
        let profile = self.profile();
        if profile.lambda < 0.0 && p < profile.p0 - 1e-12 {
            return Err(Error::HypothesisViolation(format!(
                "exponent {p} below p0 = {}: no step makes the proximal objective bounded below",
                profile.p0
            )));
        }
        if let Some(limit) = self.profile().step_limit(p) {
            if tau >= limit {
                return Err(Error::StepOutsideWindow { tau, limit });
            }
        }
        Ok(())
    }

    /// Movement cost d^p(w, v) / (p tau^(p-1)) of the proximal objective.
    pub fn movement_cost(&self, p: f64, tau: f64, w: &Point, v: &Point) -> Result<f64> {
        let d = self.space.distance(w, v)?;
        Ok(d.powf(p) / (p * tau.powf(p - 1.0)))
    }

    /// Minimizer of `w -> f(w) + d^p(w, v) / (p tau^(p-1))`.
    ///
    /// Closed forms exist for the quadratic with p = 2 (a geodesic
    /// contraction toward the center), for both 1-homogeneous functionals
    /// with any p (move distance min(tau, d) toward the minimum), and for
    /// the concave quadratic with p = 2 (radial dilation by 1/(1-tau)).
    /// Everything else falls to a damped descent (Euclidean) or a
    /// per-branch golden-section search (tripod).
    pub fn proximal(&self, p: f64, tau: f64, v: &Point) -> Result<Point> {
        self.check_step(p, tau)?;
        self.space.validate_point(v)?;
        match (&self.kind, p == 2.0) {
            (FunctionalKind::Quadratic { scale, center }, true) => {
                let th = scale * tau / (1.0 + scale * tau);
                self.space.geodesic_point(v, center, th)
            }
            (FunctionalKind::NegativeQuadratic, true) => {
                let coords = v.coords().unwrap().iter().map(|x| x / (1.0 - tau)).collect();
                Ok(Point::euclidean(coords))
            }
            (FunctionalKind::NormLike, _) => {
                let x = v.as_scalar();
                Ok(Point::scalar(x.signum() * (x.abs() - tau).max(0.0)))
            }
            (FunctionalKind::DistanceToPoint { anchor }, _) => {
                let d = distance_unchecked(v, anchor);
                if d <= tau {
                    Ok(anchor.clone())
                } else {
                    self.space.geodesic_point(v, anchor, tau / d)
                }
            }
            _ => match self.space {
                MetricSpace::Euclidean { .. } => self.proximal_descent(p, tau, v),
                MetricSpace::Tripod => self.proximal_tripod(p, tau, v),
            },
        }
    }

    /// Envelope value `inf_w f(w) + d^p(w, v) / (p t^(p-1))`, evaluated at
    /// the proximal point.
    pub fn moreau_envelope(&self, p: f64, t: f64, v: &Point) -> Result<f64> {
        let w = self.proximal(p, t, v)?;
        Ok(self.evaluate(&w)? + self.movement_cost(p, t, &w, v)?)
    }

    fn proximal_objective(&self, p: f64, tau: f64, w: &Point, v: &Point) -> Result<f64> {
        Ok(self.evaluate(w)? + self.movement_cost(p, tau, w, v)?)
    }

    /// Damped gradient descent with backtracking on the proximal objective.
    fn proximal_descent(&self, p: f64, tau: f64, v: &Point) -> Result<Point> {
        let vx = v.coords().unwrap().to_vec();
        let scale = tau.powf(p - 1.0);
        let mut x = vx.clone();
        let mut fx = self.proximal_objective(p, tau, &Point::euclidean(x.clone()), v)?;
        let mut eta: f64 = 1.0;
        let mut stalled = 0u32;
        for _ in 0..100_000 {
            let mut g = self
                .euclidean_gradient(&x)
                .ok_or_else(|| Error::MinimizerDiverged("no gradient available".into()))?;
            let diff: Vec<f64> = x.iter().zip(&vx).map(|(a, b)| a - b).collect();
            let dn = diff.iter().map(|d| d * d).sum::<f64>().sqrt();
            if dn > 0.0 {
                let factor = dn.powf(p - 2.0) / scale;
                for (gi, di) in g.iter_mut().zip(&diff) {
                    *gi += factor * di;
                }
            }
            let gn = g.iter().map(|gi| gi * gi).sum::<f64>().sqrt();
            if eta * gn < 1e-12 {
                return Ok(Point::euclidean(x));
            }
            // backtracking until the objective actually decreases
            loop {
                let trial: Vec<f64> = x.iter().zip(&g).map(|(xi, gi)| xi - eta * gi).collect();
                let ft = self.proximal_objective(p, tau, &Point::euclidean(trial.clone()), v)?;
                if ft <= fx - 1e-4 * eta * gn * gn {
                    // once accepted decreases drop under the rounding floor of
                    // the objective, the argmin is resolved as finely as value
                    // comparisons allow; the gradient noise keeps eta * gn from
                    // ever reaching the small-step exit, so stop here instead
                    if fx - ft <= f64::EPSILON * (1.0 + fx.abs()) {
                        stalled += 1;
                    } else {
                        stalled = 0;
                    }
                    x = trial;
                    fx = ft;
                    eta *= 1.3;
                    break;
                }
                eta *= 0.5;
                if eta * gn < 1e-12 {
                    return Ok(Point::euclidean(x));
                }
            }
            if stalled >= 8 {
                return Ok(Point::euclidean(x));
            }
        }
        Err(Error::MinimizerDiverged("descent iteration cap reached".into()))
    }

    /// Golden-section search along each branch; the objective restricted to
    /// a branch is convex in the radius for every built-in functional.
    fn proximal_tripod(&self, p: f64, tau: f64, v: &Point) -> Result<Point> {
        let r_v = match v {
            Point::Tripod { radius, .. } => *radius,
            _ => unreachable!(),
        };
        let r_ref = match self.reference_point() {
            Point::Tripod { radius, .. } => radius,
            _ => 0.0,
        };
        let upper = r_v.max(r_ref) + 1.0;
        let mut best: Option<(f64, Point)> = None;
        for branch in 0..3u8 {
            let eval = |r: f64| -> Result<f64> {
                self.proximal_objective(p, tau, &Point::tripod(branch, r), v)
            };
            let r = golden_section(&eval, 0.0, upper)?;
            for cand in [r, 0.0, r_v.min(upper)] {
                let val = eval(cand)?;
                if best.as_ref().is_none_or(|(b, _)| val < *b) {
                    best = Some((val, Point::tripod(branch, cand).canonicalize()));
                }
            }
        }
        Ok(best.unwrap().1)
    }

    /// Defect of the declared convexity inequality on the geodesic from
    /// `v0` to `v1` at parameter `theta`; positive values are violations.
    pub fn convexity_defect(&self, v0: &Point, v1: &Point, theta: f64) -> Result<f64> {
        let profile = self.profile();
        let g = self.space.geodesic_point(v0, v1, theta)?;
        let d = self.space.distance(v0, v1)?;
        let bound = (1.0 - theta) * self.evaluate(v0)? + theta * self.evaluate(v1)?
            - profile.lambda * theta * (1.0 - profile.psi_value(theta)) * d.powf(profile.p0);
        Ok(self.evaluate(&g)? - bound)
    }

    /// Global slope formula for functionals with declared convexity:
    /// `sup_w (f(v) - f(w)) / d(v, w) - lambda_minus * d^(p0-1)(v, w)`,
    /// clamped at zero, taken over the candidate set.
    pub fn slope_from_candidates(&self, v: &Point, candidates: &[Point]) -> Result<f64> {
        let profile = self.profile();
        let lm = profile.lambda_minus();
        let fv = self.evaluate(v)?;
        let mut best = f64::NEG_INFINITY;
        let mut usable = false;
        for w in candidates {
            self.space.validate_point(w)?;
            let d = distance_unchecked(v, w);
            if d < 1e-12 {
                continue;
            }
            usable = true;
            let val = (fv - self.evaluate(w)?) / d - lm * d.powf(profile.p0 - 1.0);
            if val > best {
                best = val;
            }
        }
        if !usable {
            return Err(Error::EmptyCandidates);
        }
        Ok(best.max(0.0))
    }

    /// Default candidate set for the global slope formula: a coarse sweep
    /// over a ball of radius 8 * max(1, d(v, reference)) plus log-spaced
    /// offsets around `v` down to 1e-9, each half of size 2048.
    pub fn default_candidates(&self, v: &Point, seed: u64) -> Result<Vec<Point>> {
        self.space.validate_point(v)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let radius = 8.0 * distance_unchecked(v, &self.reference_point()).max(1.0);
        let half = 2048usize;
        let mut out = Vec::with_capacity(2 * half);
        match (self.space, v) {
            (MetricSpace::Euclidean { dim }, Point::Euclidean { coords }) => {
                if dim == 1 {
                    let x = coords[0];
                    for k in 0..half {
                        let t = (k as f64 + 0.5) / half as f64;
                        out.push(Point::scalar(x - radius + 2.0 * radius * t));
                    }
                    for k in 0..half {
                        let exp = -9.0 + (9.0 + radius.log10()) * (k / 2) as f64 / (half / 2) as f64;
                        let off = 10f64.powf(exp);
                        out.push(Point::scalar(if k % 2 == 0 { x + off } else { x - off }));
                    }
                } else {
                    for k in 0..half {
                        let r = radius * (k as f64 + 0.5) / half as f64;
                        out.push(Point::euclidean(offset_dir(coords, r, &mut rng)));
                    }
                    for k in 0..half {
                        let exp = -9.0 + (9.0 + radius.log10()) * k as f64 / half as f64;
                        out.push(Point::euclidean(offset_dir(coords, 10f64.powf(exp), &mut rng)));
                    }
                }
            }
            (MetricSpace::Tripod, Point::Tripod { branch, radius: rv }) => {
                let per_branch = half / 3 + 1;
                for b in 0..3u8 {
                    for k in 0..per_branch {
                        let r = radius * (k as f64 + 0.5) / per_branch as f64;
                        out.push(Point::tripod(b, r));
                    }
                }
                for k in 0..half {
                    let exp = -9.0 + (9.0 + radius.log10()) * (k / 2) as f64 / (half / 2) as f64;
                    let off = 10f64.powf(exp);
                    if k % 2 == 0 {
                        out.push(Point::tripod(*branch, rv + off));
                    } else if rv - off >= 0.0 {
                        out.push(Point::tripod(*branch, rv - off));
                    } else {
                        out.push(Point::tripod((branch + 1) % 3, off - rv));
                    }
                }
            }
            _ => unreachable!(),
        }
        Ok(out)
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    Ok(())
}

/// Random point at the given distance from `x`.
fn offset_dir(x: &[f64], r: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut dir: Vec<f64> = (0..x.len()).map(|_| rng.gen::<f64>() * 2.0 - 1.0).collect();
    let n = dir.iter().map(|d| d * d).sum::<f64>().sqrt().max(1e-12);
    for d in dir.iter_mut() {
        *d /= n;
    }
    x.iter().zip(&dir).map(|(xi, di)| xi + r * di).collect()
}

/// Minimizes a unimodal function on [a, b] to width ~1e-13 * (1 + b - a).
fn golden_section(f: &dyn Fn(f64) -> Result<f64>, a: f64, b: f64) -> Result<f64> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut lo, mut hi) = (a, b);
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1)?;
    let mut f2 = f(x2)?;
    let tol = 1e-13 * (1.0 + (b - a).abs());
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2)?;
        }
    }
    Ok(0.5 * (lo + hi))
}
