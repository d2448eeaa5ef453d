use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::decay::{decay_report, tail_slope, Companion, DecayReport};
use crate::error::Result;
use crate::family::NsdsFamily;
use crate::graph::{ManifoldResult, RateTable, Side};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetCheck {
    pub side: Side,
    pub samples: usize,
    pub members: usize,
    /// Largest sampled tail slope in the contracting time direction.
    pub worst_slope: f64,
    pub log_lambda_tilde: f64,
    pub all_members: bool,
    pub slopes_ok: bool,
    pub reports: Vec<DecayReport>,
}

/// Sample the index-0 manifold and test set membership of every sample.
/// Unstable clouds are checked backward, stable clouds forward; the ball at
/// index `n` has radius `2δ_n`, which contains the box `[-δ_n, δ_n]²`.
pub fn manifold_subset_check(
    family: &NsdsFamily,
    charts: &crate::graph::ChartedOrbit,
    manifold: &ManifoldResult,
    samples: usize,
    horizon: usize,
) -> Result<SubsetCheck> {
    let cloud = manifold.cloud(0)?;
    let m = cloud.w.len() - 1;
    let count = samples.clamp(1, m + 1);
    let radius = |n: i64| -> f64 {
        // the stable side is indexed by the reflected family
        let k = match manifold.side {
            Side::Unstable => n,
            Side::Stable => -n,
        };
        manifold.schedule.delta_at(k).map(|d| 2.0 * d).unwrap_or(0.0)
    };
    let mut reports = Vec::with_capacity(count);
    for s in 0..count {
        let k = if count == 1 { m / 2 } else { s * m / (count - 1) };
        let companion = Companion::Tangent {
            dx: cloud.lifted[k][0] - cloud.anchor.x(),
            dy: cloud.lifted[k][1] - cloud.anchor.y(),
        };
        reports.push(decay_report(family, charts, companion, radius, horizon)?);
    }
    Ok(summarize(manifold.side, reports, manifold.params.lambda_tilde))
}

pub(crate) fn summarize(side: Side, reports: Vec<DecayReport>, lambda_tilde: f64) -> SubsetCheck {
    let member = |r: &DecayReport| match side {
        Side::Unstable => r.in_unstable_set,
        Side::Stable => r.in_stable_set,
    };
    let slope = |r: &DecayReport| match side {
        Side::Unstable => r.omega_estimate,
        Side::Stable => r.theta_estimate,
    };
    let members = reports.iter().filter(|r| member(r)).count();
    let worst_slope = reports
        .iter()
        .filter(|r| !r.coincident)
        .filter_map(slope)
        .fold(f64::NEG_INFINITY, f64::max);
    let log_lambda_tilde = lambda_tilde.ln();
    SubsetCheck {
        side,
        samples: reports.len(),
        members,
        worst_slope,
        log_lambda_tilde,
        all_members: members == reports.len(),
        slopes_ok: worst_slope <= log_lambda_tilde,
        reports,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceReport {
    pub horizon: i64,
    /// `max θ_n` over `n ∈ [-N, -N/2]`.
    pub omega_angle: f64,
    /// `max θ_n` over `n ∈ [N/2, N]`.
    pub theta_angle: f64,
    /// Smallest chord slope of `G(n) = log((Δ_{-n}/2) ς_0⁻¹⋯ς_{-n+1}⁻¹)` from the
    /// start of the tail half; insensitive to the constant in front of the product.
    pub omega_tilde: f64,
    /// Same for `F(n) = log((Δ_n/2) τ_0⁻¹⋯τ_{n-1}⁻¹)`.
    pub theta_tilde: f64,
    /// `min G(n)/n` over the tail half, the quantity taken literally.
    pub omega_tilde_literal: f64,
    pub theta_tilde_literal: f64,
    pub tolerance: f64,
    pub cccc_satisfied: bool,
}

/// Finite-window angle and rate quantities; `thetas` and `deltas` are keyed by index.
pub fn coincidence_quantities(
    rates: &RateTable,
    thetas: &BTreeMap<i64, f64>,
    deltas: &BTreeMap<i64, f64>,
    horizon: i64,
    tolerance: f64,
) -> Result<CoincidenceReport> {
    let get = |m: &BTreeMap<i64, f64>, n: i64| {
        m.get(&n).copied().ok_or(crate::error::Error::WindowExceeded {
            index: n,
            window: horizon,
        })
    };
    let n0 = horizon / 2;
    let mut omega_angle = f64::NEG_INFINITY;
    let mut theta_angle = f64::NEG_INFINITY;
    for n in n0..=horizon {
        omega_angle = omega_angle.max(get(thetas, -n)?);
        theta_angle = theta_angle.max(get(thetas, n)?);
    }
    // F(n) = log((Δ_n/2)·τ_0⁻¹⋯τ_{n-1}⁻¹), G(n) the backward analogue
    let mut f = vec![(get(deltas, 0)? / 2.0).ln()];
    let mut g = f.clone();
    let (mut log_tau, mut log_varsigma) = (0.0, 0.0);
    for n in 1..=horizon {
        log_tau -= rates.at(n - 1)?.tau.ln();
        log_varsigma -= rates.at(-n + 1)?.varsigma.ln();
        f.push((get(deltas, n)? / 2.0).ln() + log_tau);
        g.push((get(deltas, -n)? / 2.0).ln() + log_varsigma);
    }
    let literal = |v: &[f64]| {
        (n0.max(1)..=horizon)
            .map(|n| v[n as usize] / n as f64)
            .fold(f64::INFINITY, f64::min)
    };
    let liminf = |v: &[f64]| {
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        tail_slope(&neg).map_or(f64::NAN, |s| -s)
    };
    let theta_tilde = liminf(&f);
    let omega_tilde = liminf(&g);
    let cccc_satisfied = omega_tilde.min(theta_tilde) >= -tolerance && omega_angle.min(theta_angle) > 0.0;
    Ok(CoincidenceReport {
        horizon,
        omega_angle,
        theta_angle,
        omega_tilde,
        theta_tilde,
        omega_tilde_literal: literal(&g),
        theta_tilde_literal: literal(&f),
        tolerance,
        cccc_satisfied,
    })
}
