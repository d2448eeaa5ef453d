//! Finite-window exponents, local stable/unstable sets and the coincidence checks.

mod decay;
mod nesting;
mod probe;
mod sets;

pub use decay::{decay_report, least_squares_tail_slope, tail_slope, Companion, DecayReport, Trace, UNDERFLOW};
pub use nesting::{metric_equivalence_nesting, NestingReport};
pub use probe::{expansivity_probe, ExpansivityWitness, ProbeConfig, ProbeResult};
pub use sets::{coincidence_quantities, manifold_subset_check, CoincidenceReport, SubsetCheck};
