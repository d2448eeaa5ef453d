use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::decay::{decay_report, least_squares_tail_slope, Companion};
use crate::error::Result;
use crate::family::NsdsFamily;
use crate::graph::ChartedOrbit;
use crate::torus::TorusPoint;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpansivityWitness {
    pub x: TorusPoint,
    /// `y = x + separation·e_u(x)`.
    pub y: TorusPoint,
    pub separation: f64,
    pub forward_log_distances: Vec<f64>,
    pub backward_log_distances: Vec<f64>,
    pub forward_slope: f64,
    pub backward_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub samples_tried: usize,
    pub horizon: usize,
    pub witness: Option<ExpansivityWitness>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    pub samples: usize,
    pub horizon: usize,
    pub separation: f64,
    pub split_depth: usize,
    pub split_tolerance: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            samples: 8,
            horizon: 20,
            separation: 0.01,
            split_depth: 30,
            split_tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// Search for `x ≠ y` on a common unstable line whose distances shrink in both
/// time directions. The first sample is `start`, the rest are drawn from the seed.
pub fn expansivity_probe(family: &NsdsFamily, start: &TorusPoint, cfg: &ProbeConfig) -> Result<ProbeResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = cfg.horizon as i64;
    for s in 0..cfg.samples.max(1) {
        let x = if s == 0 {
            TorusPoint::new(0, start.x(), start.y())
        } else {
            TorusPoint::new(0, rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0))
        };
        let charts = ChartedOrbit::new(family, &x, h, cfg.split_depth, cfg.split_tolerance)?;
        let eu = charts.orbit.frame(0)?.unstable();
        let report = decay_report(
            family,
            &charts,
            Companion::Frame {
                v: 0.0,
                w: cfg.separation,
            },
            |_| f64::INFINITY,
            cfg.horizon,
        )?;
        let fwd = &report.forward.log_distances;
        let bwd = &report.backward.log_distances;
        let (Some(fs), Some(bs)) = (least_squares_tail_slope(fwd), least_squares_tail_slope(bwd)) else {
            continue;
        };
        let start_log = fwd[0];
        let shrinks = fwd.last().is_some_and(|&l| l < start_log) && bwd.last().is_some_and(|&l| l < start_log);
        if fs < 0.0 && bs < 0.0 && shrinks {
            return Ok(ProbeResult {
                samples_tried: s + 1,
                horizon: cfg.horizon,
                witness: Some(ExpansivityWitness {
                    x,
                    y: x.translate(eu * cfg.separation),
                    separation: cfg.separation,
                    forward_log_distances: fwd.clone(),
                    backward_log_distances: bwd.clone(),
                    forward_slope: fs,
                    backward_slope: bs,
                }),
            });
        }
    }
    Ok(ProbeResult {
        samples_tried: cfg.samples.max(1),
        horizon: cfg.horizon,
        witness: None,
    })
}
