//! Anosov families on flat 2-tori.
//!
//! The crate represents two-sided sequences of torus diffeomorphisms with
//! per-component metrics, certifies their hyperbolicity, and builds local
//! stable and unstable manifolds with a graph-transform fixed point.

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod family;
pub mod graph;
pub mod hyperbolicity;
pub mod laws;
pub mod map;
pub mod orbit;
pub mod scenario;
pub mod torus;

pub use error::{Error, Result};
pub use family::NsdsFamily;
pub use map::{PerturbationTerm, StepMap, TorusMap};
pub use torus::{MetricTensor, TorusPoint};
