//! Graph transform for local unstable and stable manifolds.
//!
//! Around an anchor orbit each step is charted in the splitting frame
//! `(e_s, e_u)`, so a local manifold is the graph of a Lipschitz function
//! `φ_n: E^u → E^s`. The transform maps `φ_n` to `ψ_{n+1}`; its fixed point on
//! a finite window gives the unstable manifolds, and the reflected inverse
//! family gives the stable ones.

mod chart;
mod manifold;
mod rates;
mod schedule;
mod transform;

pub use chart::{estimate_sigma, ChartedStep, Remainder};
pub use manifold::{
    adapted_deltas, prepare, stable_manifold, unstable_manifold, AnchorContext, ChartedOrbit, ManifoldCloud, ManifoldConfig,
    ManifoldProperties, ManifoldResult, Prepared, Side,
};
pub use rates::{omega, omega_branches, one_step_lambda, tau, IndexRates, RateParams, RateTable};
pub use schedule::{schedule_deltas, DeltaSchedule, ScheduleRow, SigmaConfig};
pub use transform::{
    apply_operator, fixed_point, graph_distance, graph_transform_step, interpolation_defect,
    FixedPointRun, GraphFamily, LipschitzGraph, StepStats,
};
