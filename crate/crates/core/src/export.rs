//! Flat serialization of sampled flows.
//!
//! A [`CurveRecord`] is the JSON shape of a curve together with the run
//! metadata the CLI wants to carry around (step size, halting flags).
//! CSV export writes one row per knot with the cached analysis columns;
//! both formats print floats with 17 significant digits so that files
//! round-trip bit for bit.

use crate::curve::SampledCurve;
use crate::error::Result;
use crate::space::{MetricSpace, Point};
use serde::{Deserialize, Serialize};
use std::io::Write;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurveRecord {
    pub p: f64,
    pub functional: Option<String>,
    pub tau: Option<f64>,
    #[serde(default)]
    pub blew_up: bool,
    #[serde(default)]
    pub stopped_critical: bool,
    pub space: MetricSpace,
    pub times: Vec<f64>,
    pub points: Vec<Point>,
    pub f_values: Option<Vec<f64>>,
    pub slopes: Option<Vec<f64>>,
    pub metric_derivatives: Option<Vec<f64>>,
}

impl CurveRecord {
    pub fn from_curve(curve: &SampledCurve) -> CurveRecord {
        CurveRecord {
            p: curve.p(),
            functional: None,
            tau: None,
            blew_up: false,
            stopped_critical: false,
            space: curve.space(),
            times: curve.times().to_vec(),
            points: curve.points().to_vec(),
            f_values: curve.f_values().map(|v| v.to_vec()),
            slopes: curve.slopes().map(|v| v.to_vec()),
            metric_derivatives: curve.metric_derivatives().map(|v| v.to_vec()),
        }
    }

    pub fn into_curve(self) -> Result<SampledCurve> {
        let curve = SampledCurve::new(self.space, self.times, self.points, self.p)?;
        curve.with_caches(self.f_values, self.slopes, self.metric_derivatives)
    }
}

pub fn write_json<W: Write>(mut out: W, record: &CurveRecord) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

pub fn read_json(data: &str) -> Result<CurveRecord> {
    Ok(serde_json::from_str(data)?)
}

fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// One row per knot: `t,<point fields>,f,slope,metric_derivative` where the
/// point fields are `x0..x{d-1}` on Euclidean space and `branch,radius` on
/// the tripod. Missing caches print as `nan`.
pub fn write_csv<W: Write>(mut out: W, curve: &SampledCurve) -> Result<()> {
    let mut header = vec!["t".to_string()];
    match curve.space() {
        MetricSpace::Euclidean { dim } => {
            header.extend((0..dim).map(|i| format!("x{i}")));
        }
        MetricSpace::Tripod => {
            header.push("branch".into());
            header.push("radius".into());
        }
    }
    header.extend(["f".into(), "slope".into(), "metric_derivative".into()]);
    writeln!(out, "{}", header.join(","))?;

    let col = |cache: Option<&[f64]>, i: usize| -> String {
        match cache {
            Some(v) => fmt(v[i]),
            None => "nan".into(),
        }
    };
    for (i, t) in curve.times().iter().enumerate() {
        let mut row = vec![fmt(*t)];
        match &curve.points()[i] {
            Point::Euclidean { coords } => row.extend(coords.iter().map(|c| fmt(*c))),
            Point::Tripod { branch, radius } => {
                row.push(branch.to_string());
                row.push(fmt(*radius));
            }
        }
        row.push(col(curve.f_values(), i));
        row.push(col(curve.slopes(), i));
        row.push(col(curve.metric_derivatives(), i));
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}
