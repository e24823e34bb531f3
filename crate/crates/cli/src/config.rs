//! Experiment configuration: a single JSON file per run, with dotted-path
//! overrides so sweeps can vary one field without editing the file.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use maxslope::{Functional, MetricSpace, Point, SolverConfig};
use serde::{Deserialize, Serialize};

/// Space tag; the only registered spaces are Euclidean R^d and the tripod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    Euclidean { dim: usize },
    Tripod,
}

impl SpaceSpec {
    pub fn build(&self) -> Result<MetricSpace> {
        match self {
            SpaceSpec::Euclidean { dim } => {
                if *dim == 0 {
                    bail!("euclidean space needs dim >= 1");
                }
                Ok(MetricSpace::euclidean(*dim))
            }
            SpaceSpec::Tripod => Ok(MetricSpace::Tripod),
        }
    }
}

/// Functional tag plus parameters. Which spaces each tag accepts is
/// checked in [`FunctionalSpec::build`], not at parse time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FunctionalSpec {
    Quadratic { scale: f64, center: Point },
    NegativeQuadratic,
    NormLike,
    DistanceToPoint { anchor: Point },
}

impl FunctionalSpec {
    pub fn tag(&self) -> &'static str {
        match self {
            FunctionalSpec::Quadratic { .. } => "quadratic",
            FunctionalSpec::NegativeQuadratic => "negative_quadratic",
            FunctionalSpec::NormLike => "norm_like",
            FunctionalSpec::DistanceToPoint { .. } => "distance_to_point",
        }
    }

    pub fn build(&self, space: MetricSpace) -> Result<Functional> {
        match self {
            FunctionalSpec::Quadratic { scale, center } => {
                Ok(Functional::quadratic(space, *scale, center.clone())?)
            }
            FunctionalSpec::NegativeQuadratic => match space {
                MetricSpace::Euclidean { dim } => Ok(Functional::negative_quadratic(dim)),
                MetricSpace::Tripod => bail!("negative_quadratic needs a Euclidean space"),
            },
            FunctionalSpec::NormLike => match space {
                MetricSpace::Euclidean { dim: 1 } => Ok(Functional::norm_like()),
                _ => bail!("norm_like lives on the Euclidean line"),
            },
            FunctionalSpec::DistanceToPoint { anchor } => match space {
                MetricSpace::Tripod => Ok(Functional::distance_to_point(anchor.clone())?),
                _ => bail!("distance_to_point lives on the tripod"),
            },
        }
    }
}

fn default_max_steps() -> usize {
    2_000_000
}

fn default_blow_up_radius() -> f64 {
    1e6
}

/// Where the p-flow comes from: a closed-form oracle on a uniform grid,
/// one member of the non-unique fan leaving the origin, or the
/// minimizing-movements solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    Oracle {
        horizon: f64,
        nodes: usize,
    },
    Theta {
        theta: f64,
        horizon: f64,
        nodes: usize,
    },
    MinimizingMovements {
        tau: f64,
        horizon: f64,
        #[serde(default = "default_max_steps")]
        max_steps: usize,
        #[serde(default)]
        stop_on_critical: bool,
        #[serde(default = "default_blow_up_radius")]
        blow_up_radius: f64,
    },
}

impl SourceSpec {
    pub fn solver_config(&self) -> Option<SolverConfig> {
        match self {
            SourceSpec::MinimizingMovements {
                tau,
                horizon,
                max_steps,
                stop_on_critical,
                blow_up_radius,
            } => Some(SolverConfig {
                tau: *tau,
                horizon: *horizon,
                max_steps: *max_steps,
                stop_on_critical: *stop_on_critical,
                blow_up_radius: *blow_up_radius,
            }),
            _ => None,
        }
    }
}

/// Checker toggles. The energy identity and the duality check run by
/// default; everything else is opt-in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Checks {
    pub energy_identity: bool,
    /// Divide energy residuals by 1 + |u'|^p + |slope|^q. On blow-up flows
    /// the absolute residual grows with the value and measures nothing;
    /// the scaled one stays at the discretization order.
    pub energy_scaled: bool,
    pub stationarity: bool,
    pub convexity: bool,
    pub slope_monotone: bool,
    pub regularizing: bool,
    pub duality: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            energy_identity: true,
            energy_scaled: false,
            stationarity: false,
            convexity: false,
            slope_monotone: false,
            regularizing: false,
            duality: true,
        }
    }
}

/// Checker tolerances. Defaults match the documented contract: energy
/// identity 1e-2 at tau = 1e-3, duality and round trips 1e-3 at 10^4
/// nodes, convexity 1e-6, slope monotonicity 1e-8.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub energy: f64,
    pub duality: f64,
    pub convexity: f64,
    pub slope_monotone: f64,
    pub regularizing: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            energy: 1e-2,
            duality: 1e-3,
            convexity: 1e-6,
            slope_monotone: 1e-8,
            regularizing: 1e-8,
        }
    }
}

impl Tolerances {
    pub fn scaled(&self, factor: f64) -> Tolerances {
        Tolerances {
            energy: self.energy * factor,
            duality: self.duality * factor,
            convexity: self.convexity * factor,
            slope_monotone: self.slope_monotone * factor,
            regularizing: self.regularizing * factor,
        }
    }

    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("energy", self.energy),
            ("duality", self.duality),
            ("convexity", self.convexity),
            ("slope_monotone", self.slope_monotone),
            ("regularizing", self.regularizing),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                bail!("tolerance {name} must be positive and finite, got {v}");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub space: SpaceSpec,
    pub functional: FunctionalSpec,
    pub p: f64,
    /// Target exponents for the transform; empty means no transforms.
    #[serde(default)]
    pub p_prime: Vec<f64>,
    pub initial: Point,
    pub source: SourceSpec,
    #[serde(default)]
    pub checks: Checks,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// A blocked transform counts as a pass when this is set; the status
    /// still lands in the report.
    #[serde(default)]
    pub expected_blocked: bool,
    /// Node count for the arc-length grid behind the convexity check.
    #[serde(default = "default_reparam_samples")]
    pub reparam_samples: usize,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Recorded in the run metadata; reserved for samplers.
    #[serde(default)]
    pub seed: u64,
}

fn default_reparam_samples() -> usize {
    301
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            bail!("experiment name must not be empty");
        }
        if !(self.p > 1.0) || !self.p.is_finite() {
            bail!("exponent p must be finite and above 1, got {}", self.p);
        }
        for pp in &self.p_prime {
            if !(*pp > 1.0) || !pp.is_finite() {
                bail!("target exponent {pp} must be finite and above 1");
            }
        }
        if self.reparam_samples < 3 {
            bail!("reparam_samples must be at least 3");
        }
        self.tolerances.validate()?;
        if let SourceSpec::Theta { theta: _, horizon, nodes } = self.source {
            if self.functional != FunctionalSpec::NegativeQuadratic
                || self.space != (SpaceSpec::Euclidean { dim: 2 })
            {
                bail!("theta sources describe planar negative_quadratic flows only");
            }
            if !(self.p > 2.0) {
                bail!("theta sources need p > 2, got {}", self.p);
            }
            if !(horizon > 0.0) || nodes < 2 {
                bail!("theta source needs a positive horizon and at least 2 nodes");
            }
        }
        Ok(())
    }
}

/// Reads a config file and applies `--set` overrides before
/// deserialization, so overrides can touch any field the file could.
pub fn load_config(path: &Path, sets: &[(String, String)]) -> Result<ExperimentConfig> {
    let raw = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    let mut value: serde_json::Value =
        serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
    for (key, text) in sets {
        apply_set(&mut value, key, text)?;
    }
    let config: ExperimentConfig =
        serde_json::from_value(value).context("config does not match the expected shape")?;
    config.validate()?;
    Ok(config)
}

/// Splits `--set` arguments of the form `dotted.path=value`.
pub fn parse_set(arg: &str) -> Result<(String, String)> {
    let (key, value) = arg
        .split_once('=')
        .ok_or_else(|| anyhow!("--set takes key=value, got {arg:?}"))?;
    if key.is_empty() {
        bail!("--set key must not be empty in {arg:?}");
    }
    Ok((key.to_string(), value.to_string()))
}

/// Writes `text` (parsed as JSON when possible, kept as a string
/// otherwise) at the dotted path, creating intermediate objects.
fn apply_set(root: &mut serde_json::Value, key: &str, text: &str) -> Result<()> {
    let parsed: serde_json::Value = serde_json::from_str(text)
        .unwrap_or_else(|_| serde_json::Value::String(text.to_string()));
    let mut cursor = root;
    let parts: Vec<&str> = key.split('.').collect();
    for part in &parts[..parts.len() - 1] {
        cursor = cursor
            .as_object_mut()
            .ok_or_else(|| anyhow!("--set path {key} crosses a non-object"))?
            .entry(part.to_string())
            .or_insert_with(|| serde_json::Value::Object(Default::default()));
    }
    cursor
        .as_object_mut()
        .ok_or_else(|| anyhow!("--set path {key} crosses a non-object"))?
        .insert(parts[parts.len() - 1].to_string(), parsed);
    Ok(())
}
