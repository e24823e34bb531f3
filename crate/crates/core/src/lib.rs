//! Steepest-descent curves in metric spaces.
//!
//! The crate works with sampled curves u : [0, T] -> X in a geodesic
//! space X (Euclidean space or the tripod), driven by a functional F
//! whose descending slope is known in closed form. Around that sit:
//!
//! * a minimizing-movements solver and a library of closed-form flows
//!   ([`solver`]);
//! * the time change that turns a p-flow into a p'-flow, with the case
//!   analysis of when the transformed flow extends past its natural
//!   domain ([`transform`]);
//! * checkers for the identities a curve of maximal slope must satisfy:
//!   the energy identity, convexity along geodesics and along the flow,
//!   monotone slopes, and the regularizing bounds ([`analysis`]);
//! * flat JSON/CSV export ([`export`]).
//!
//! Everything downstream of [`space`] touches the geometry only through
//! distances and geodesic interpolation, so adding a space means
//! implementing those two operations.

// validation uses !(v > 0.0) so that NaN fails the guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod curve;
pub mod error;
pub mod export;
pub mod extended;
pub mod functional;
pub mod map;
pub mod solver;
pub mod space;
pub mod transform;

pub use analysis::{
    arc_length_reparametrize, check_convexity_along_curve, check_energy_identity,
    check_energy_identity_scaled, check_regularizing_bounds, check_slope_monotone,
    detect_positivity_horizon, lipschitz_defect, metric_derivative, DiagnosticsReport,
    PositivityHorizon, RegularizingOptions, RegularizingOutcome, Reparametrized,
};
pub use curve::SampledCurve;
pub use error::{Error, Result};
pub use extended::Extended;
pub use functional::{ConvexityProfile, Functional};
pub use map::TimeMap;
pub use solver::{
    oracle_flow, refine_until, solve_minimizing_movements, theta_flow, uniform_grid,
    RefineOutcome, SolveOutcome, SolverConfig,
};
pub use space::{MetricSpace, Point};
pub use transform::{
    forward_time_map, transform_curve, transform_exponent, verify_duality, ExtensionCase,
    TransformCondition, TransformOptions, TransformResult,
};
