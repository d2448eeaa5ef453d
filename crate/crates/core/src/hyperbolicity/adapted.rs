use nalgebra::{Matrix2, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::splitting::{stretch_factors, FramedOrbit, SplittingFrame};
use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::torus::{symmetric_eigenvalues, MetricTensor};

/// Truncated adapted metric `⟨·,·⟩_*` along an anchor orbit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptedMetric {
    pub zeta: f64,
    pub lambda: f64,
    pub truncation_depth: usize,
    pub lo: i64,
    star: Vec<MetricTensor>,
    delta: Vec<f64>,
    frames: Vec<SplittingFrame>,
}

/// Two-sided comparison `Δ‖v‖_* ≤ ‖v‖ ≤ 2‖v‖_*` at one index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceCheck {
    pub index: i64,
    pub delta: f64,
    /// Smallest sampled `‖v‖/‖v‖_*`.
    pub sampled_min: f64,
    pub sampled_max: f64,
    /// Exact extremes from the generalized eigenproblem.
    pub exact_min: f64,
    pub exact_max: f64,
    pub holds: bool,
}

/// `1, f_0, f_0 f_1, …`
fn cumulative(factors: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(factors.len() + 1);
    let mut acc = 1.0;
    out.push(acc);
    for f in factors {
        acc *= f;
        out.push(acc);
    }
    out
}

fn weighted_sum(norms: impl Iterator<Item = f64>, weight: f64) -> f64 {
    let mut w = 1.0;
    let mut s = 0.0;
    for n in norms {
        s += w * n * n;
        w /= weight * weight;
    }
    s
}

impl AdaptedMetric {
    /// Build `⟨·,·⟩_*` at every orbit point: `e_s ⊥ e_u`,
    /// `‖e_s‖_*² = Σ_{k≤K} (λ+ζ)^{-2k}‖Df^k e_s‖²` and the backward analogue on `e_u`.
    /// `c` is the certified decay constant, used for the truncation tail;
    /// `split_depth` is the power-iteration depth for directions along the orbit.
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        family: &NsdsFamily,
        orbit: &FramedOrbit,
        c: f64,
        lambda: f64,
        zeta: f64,
        depth: usize,
        split_depth: usize,
        tail_tolerance: f64,
    ) -> Result<Self> {
        if !(zeta > 0.0 && zeta < 1.0 - lambda) {
            return Err(Error::InvalidArgument(format!(
                "zeta {zeta} outside (0, 1 - λ) = (0, {})",
                1.0 - lambda
            )));
        }
        let rate = lambda + zeta;
        let r = (lambda / rate).powi(2);
        let tail = c * c * r.powi(depth as i32 + 1) / (1.0 - r);
        let mut star = Vec::new();
        let mut delta = Vec::new();
        for (slot, fr) in orbit.frames().iter().enumerate() {
            let n = orbit.lo + slot as i64;
            if tail > tail_tolerance {
                return Err(Error::TruncationDepth {
                    index: n,
                    depth,
                    tail,
                });
            }
            // f64 rounding would feed the expanding direction if e_s were pushed forward directly
            let s_norms = cumulative(&stretch_factors(family, n, &fr.point, depth, split_depth, true)?);
            let u_norms = cumulative(&stretch_factors(family, n, &fr.point, depth, split_depth, false)?);
            let s2 = weighted_sum(s_norms.into_iter(), rate);
            let u2 = weighted_sum(u_norms.into_iter(), rate);
            // Gram matrix diag(s2, u2) in the frame basis, pulled back to standard coordinates
            let q_inv = fr
                .basis()
                .try_inverse()
                .ok_or_else(|| Error::InvalidMetric("degenerate splitting frame".into()))?;
            let g = q_inv.transpose() * Matrix2::new(s2, 0.0, 0.0, u2) * q_inv;
            let g = Matrix2::new(g[(0, 0)], 0.5 * (g[(0, 1)] + g[(1, 0)]), 0.5 * (g[(0, 1)] + g[(1, 0)]), g[(1, 1)]);
            star.push(MetricTensor::new(g, n)?);
            delta.push((1.0 - fr.cos_theta) * (zeta / rate).powi(2));
        }
        Ok(Self {
            zeta,
            lambda,
            truncation_depth: depth,
            lo: orbit.lo,
            star,
            delta,
            frames: orbit.frames().to_vec(),
        })
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.star.len() as i64 - 1
    }

    fn slot(&self, n: i64) -> Result<usize> {
        if n < self.lo || n > self.hi() {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.lo.abs().max(self.hi().abs()),
            });
        }
        Ok((n - self.lo) as usize)
    }

    pub fn star_tensor_at(&self, n: i64) -> Result<&MetricTensor> {
        Ok(&self.star[self.slot(n)?])
    }

    /// `Δ_n = (1 − cos θ_n)(ζ/(λ+ζ))²`.
    pub fn delta_at(&self, n: i64) -> Result<f64> {
        Ok(self.delta[self.slot(n)?])
    }

    /// `⟨e_s, e_u⟩_*` at index `n`.
    pub fn frame_inner(&self, n: i64) -> Result<f64> {
        let s = self.slot(n)?;
        let fr = &self.frames[s];
        Ok(self.star[s].inner(&fr.stable(), &fr.unstable()))
    }

    pub fn check_equivalence<R: Rng>(
        &self,
        family: &NsdsFamily,
        n: i64,
        samples: usize,
        rng: &mut R,
    ) -> Result<EquivalenceCheck> {
        let star = self.star_tensor_at(n)?;
        let g = family.metric_at(n)?;
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for _ in 0..samples {
            let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let scale: f64 = rng.gen_range(0.1..10.0);
            let v = Vector2::new(t.cos(), t.sin()) * scale;
            let ratio = g.norm(&v) / star.norm(&v);
            lo = lo.min(ratio);
            hi = hi.max(ratio);
        }
        // ‖v‖²/‖v‖_*² ranges over the eigenvalues of S^{-1/2} G S^{-1/2}
        let s = star.matrix();
        let chol = s
            .cholesky()
            .ok_or_else(|| Error::InvalidMetric("star tensor not positive definite".into()))?;
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::InvalidMetric("singular star tensor".into()))?;
        let m = l_inv * g.matrix() * l_inv.transpose();
        let (e_lo, e_hi) = symmetric_eigenvalues(&m);
        let delta = self.delta_at(n)?;
        let (exact_min, exact_max) = (e_lo.sqrt(), e_hi.sqrt());
        let tol = 1e-12;
        Ok(EquivalenceCheck {
            index: n,
            delta,
            sampled_min: lo,
            sampled_max: hi,
            exact_min,
            exact_max,
            holds: delta <= lo * (1.0 + tol) && hi <= 2.0 * (1.0 + tol),
        })
    }
}
