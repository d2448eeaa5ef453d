use serde::{Deserialize, Serialize};

use super::decay::{decay_report, Companion};
use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::graph::ChartedOrbit;
use crate::torus::symmetric_eigenvalues;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    /// Extremes of `‖v‖_A / ‖v‖_B` over the window.
    pub ratio_min: f64,
    pub ratio_max: f64,
    /// `ε'_n / ε_n = max ‖v‖_B / ‖v‖_A` per index on `[-h, h]`.
    pub epsilon_scale: Vec<f64>,
    pub samples: usize,
    pub members_a: usize,
    /// Samples in the set under A that are also in the set under B.
    pub nested: usize,
    pub holds: bool,
    pub forward_slopes_a: Vec<Option<f64>>,
    pub forward_slopes_b: Vec<Option<f64>>,
}

/// Range of `‖v‖_A / ‖v‖_B` for constant tensors, exactly.
fn norm_ratio_range(a: &nalgebra::Matrix2<f64>, b: &nalgebra::Matrix2<f64>) -> Result<(f64, f64)> {
    let chol = b
        .cholesky()
        .ok_or_else(|| Error::InvalidMetric("metric B not positive definite".into()))?;
    let l_inv = chol
        .l()
        .try_inverse()
        .ok_or_else(|| Error::InvalidMetric("metric B singular".into()))?;
    let (lo, hi) = symmetric_eigenvalues(&(l_inv * a * l_inv.transpose()));
    Ok((lo.sqrt(), hi.sqrt()))
}

/// Check `k‖v‖_B ≤ ‖v‖_A ≤ K‖v‖_B` on `[-h, h]`, build `ε'` and test that
/// stable-set membership under A implies membership under B with `ε'`.
/// Both families must share their maps; `samples` are tangent displacements at `p`.
#[allow(clippy::too_many_arguments)]
pub fn metric_equivalence_nesting(
    family_a: &NsdsFamily,
    family_b: &NsdsFamily,
    charts_a: &ChartedOrbit,
    charts_b: &ChartedOrbit,
    k: f64,
    big_k: f64,
    eps: f64,
    samples: &[(f64, f64)],
    horizon: usize,
) -> Result<NestingReport> {
    let h = horizon as i64;
    let mut ratio_min = f64::INFINITY;
    let mut ratio_max = 0.0f64;
    let mut epsilon_scale = Vec::with_capacity(2 * horizon + 1);
    for n in -h..=h {
        let (lo, hi) = norm_ratio_range(&family_a.metric_at(n)?.matrix(), &family_b.metric_at(n)?.matrix())?;
        if lo < k * (1.0 - 1e-12) || hi > big_k * (1.0 + 1e-12) {
            return Err(Error::NotUniformlyEquivalent(format!(
                "at index {n} the ratio ‖v‖_A/‖v‖_B spans [{lo}, {hi}], outside [{k}, {big_k}]"
            )));
        }
        ratio_min = ratio_min.min(lo);
        ratio_max = ratio_max.max(hi);
        epsilon_scale.push(1.0 / lo);
    }
    let scale = epsilon_scale.clone();
    let eps_b = |n: i64| eps * scale[(n + h) as usize];
    let mut members_a = 0;
    let mut nested = 0;
    let mut slopes_a = Vec::with_capacity(samples.len());
    let mut slopes_b = Vec::with_capacity(samples.len());
    for &(dx, dy) in samples {
        let c = Companion::Tangent { dx, dy };
        let ra = decay_report(family_a, charts_a, c, |_| eps, horizon)?;
        let rb = decay_report(family_b, charts_b, c, eps_b, horizon)?;
        slopes_a.push(ra.theta_estimate);
        slopes_b.push(rb.theta_estimate);
        if ra.in_stable_set {
            members_a += 1;
            if rb.in_stable_set {
                nested += 1;
            }
        }
    }
    Ok(NestingReport {
        ratio_min,
        ratio_max,
        epsilon_scale,
        samples: samples.len(),
        members_a,
        nested,
        holds: nested == members_a,
        forward_slopes_a: slopes_a,
        forward_slopes_b: slopes_b,
    })
}
