//! Invariant splitting, Anosov certificates, angles and the adapted metric.

mod adapted;
mod anosov;
mod angles;
mod splitting;

pub use adapted::{AdaptedMetric, EquivalenceCheck};
pub use anosov::{minimal_gathering_length, verify_anosov, AnosovCertificate};
pub use angles::{angles_sequence, property_of_angles, AngleSequence};
pub use splitting::{
    cos_between, estimate_splitting, pushforward_residual, sine_between, stretch_factors, FramedOrbit,
    SplittingFrame,
};
