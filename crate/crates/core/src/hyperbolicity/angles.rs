use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::splitting::SplittingFrame;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngleSequence {
    pub indices: Vec<i64>,
    /// `θ_i`: smallest sampled angle at index `i`.
    pub thetas: Vec<f64>,
    pub cosines: Vec<f64>,
}

/// `θ_i = min_p θ(p)` over the frames sampled at each index.
pub fn angles_sequence(frames_at: &BTreeMap<i64, Vec<SplittingFrame>>) -> AngleSequence {
    let mut out = AngleSequence {
        indices: Vec::new(),
        thetas: Vec::new(),
        cosines: Vec::new(),
    };
    for (&i, frames) in frames_at {
        if frames.is_empty() {
            continue;
        }
        let c = frames.iter().map(|f| f.cos_theta).fold(f64::NEG_INFINITY, f64::max);
        out.indices.push(i);
        out.cosines.push(c);
        out.thetas.push(c.acos());
    }
    out
}

/// `(μ < 1 − margin, μ)` with `μ = max_i cos θ_i`.
pub fn property_of_angles(cosines: &[f64], margin: f64) -> (bool, f64) {
    let mu = cosines.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (!cosines.is_empty() && mu < 1.0 - margin, mu)
}
