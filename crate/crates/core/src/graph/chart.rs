use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::hyperbolicity::FramedOrbit;
use crate::map::StepMap;

/// Remainder evaluator `(v, w) ↦ (a, b)` for hand-built steps.
pub type Remainder = Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>;

#[derive(Clone)]
enum Kind {
    /// Flat chart of a family step around an anchor orbit.
    Chart {
        map: StepMap,
        base: Vector2<f64>,
        image_base: Vector2<f64>,
        q: Matrix2<f64>,
        q_next_inv: Matrix2<f64>,
        q_next: Matrix2<f64>,
        q_inv: Matrix2<f64>,
    },
    /// Diagonal part plus a supplied remainder.
    Synthetic(Remainder),
}

/// `f̃_n` in frame coordinates `(v, w)` = (stable, unstable), split as
/// `F_n x + (a_n, b_n)(x)` with `F_n = diag(f_ss, f_uu)`.
#[derive(Clone)]
pub struct ChartedStep {
    pub index: i64,
    pub f_ss: f64,
    pub f_uu: f64,
    /// Off-diagonal entries of the charted derivative; zero up to the splitting residual.
    pub off_diagonal: (f64, f64),
    /// Injectivity radii of the source and target components.
    pub source_radius: f64,
    pub target_radius: f64,
    /// `max(1, sup ‖Df‖)` over a torus grid.
    pub lipschitz: f64,
    linear: bool,
    kind: Kind,
}

impl fmt::Debug for ChartedStep {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedStep")
            .field("index", &self.index)
            .field("f_ss", &self.f_ss)
            .field("f_uu", &self.f_uu)
            .field("off_diagonal", &self.off_diagonal)
            .field("source_radius", &self.source_radius)
            .field("target_radius", &self.target_radius)
            .field("lipschitz", &self.lipschitz)
            .field("linear", &self.linear)
            .finish()
    }
}

const LIP_GRID: usize = 64;

fn sup_derivative_norm(family: &NsdsFamily, n: i64, map: &StepMap) -> Result<f64> {
    let g = *family.metric_at(n)?;
    let h = *family.metric_at(n + 1)?;
    if let Some(a) = map.linear_matrix() {
        return Ok(g.operator_norm(&crate::map::int_matrix(&a), &h));
    }
    (0..LIP_GRID * LIP_GRID)
        .into_par_iter()
        .map(|k| {
            let z = Vector2::new(
                (k / LIP_GRID) as f64 / LIP_GRID as f64,
                (k % LIP_GRID) as f64 / LIP_GRID as f64,
            );
            map.jacobian(&z).map(|j| g.operator_norm(&j, &h))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
}

impl ChartedStep {
    /// Chart of `f_n` between the frames at `p_n` and `p_{n+1}` of the anchor orbit.
    pub fn build(family: &NsdsFamily, orbit: &FramedOrbit, n: i64) -> Result<Self> {
        let map = family.map_at(n)?.clone();
        let p = orbit.point(n)?;
        let q = orbit.frame(n)?.basis();
        let q_next = orbit.frame(n + 1)?.basis();
        let singular = || Error::InvalidMetric(format!("degenerate frame near index {n}"));
        let q_next_inv = q_next.try_inverse().ok_or_else(singular)?;
        let q_inv = q.try_inverse().ok_or_else(singular)?;
        let base = p.as_vector();
        let image_base = map.apply_lift(&base)?;
        let full = q_next_inv * map.jacobian(&base)? * q;
        let linear = map.is_linear();
        Ok(Self {
            index: n,
            f_ss: full[(0, 0)],
            f_uu: full[(1, 1)],
            off_diagonal: (full[(0, 1)], full[(1, 0)]),
            source_radius: family.metric_at(n)?.injectivity_radius(),
            target_radius: family.metric_at(n + 1)?.injectivity_radius(),
            lipschitz: sup_derivative_norm(family, n, &map)?.max(1.0),
            linear,
            kind: Kind::Chart {
                map,
                base,
                image_base,
                q,
                q_next_inv,
                q_next,
                q_inv,
            },
        })
    }

    /// Step with a prescribed diagonal and remainder; radii are unbounded.
    pub fn synthetic(index: i64, f_ss: f64, f_uu: f64, remainder: Option<Remainder>) -> Self {
        let linear = remainder.is_none();
        Self {
            index,
            f_ss,
            f_uu,
            off_diagonal: (0.0, 0.0),
            source_radius: f64::INFINITY,
            target_radius: f64::INFINITY,
            lipschitz: 1.0,
            linear,
            kind: Kind::Synthetic(remainder.unwrap_or_else(|| Arc::new(|_, _| (0.0, 0.0)))),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// Restricted one-step rates `(μ_n, κ_n)`.
    pub fn rates(&self) -> (f64, f64) {
        (self.f_ss.abs(), 1.0 / self.f_uu.abs())
    }

    /// Largest box half-width allowed by the chart caps. The box `[-δ,δ]²` in
    /// unit-frame coordinates lies in the metric ball of radius `2δ`.
    pub fn cap(&self) -> f64 {
        0.5 * self.source_radius.min(self.target_radius / self.lipschitz)
    }

    /// `f̃_n(v, w)`.
    pub fn apply(&self, v: f64, w: f64) -> Result<(f64, f64)> {
        if self.linear {
            // flat charts of a linear map are linear; the frame makes them diagonal
            return Ok((self.f_ss * v, self.f_uu * w));
        }
        match &self.kind {
            Kind::Chart {
                map,
                base,
                image_base,
                q,
                q_next_inv,
                ..
            } => {
                let z = base + q * Vector2::new(v, w);
                let y = q_next_inv * (map.apply_lift(&z)? - image_base);
                Ok((y[0], y[1]))
            }
            Kind::Synthetic(r) => {
                let (a, b) = r(v, w);
                Ok((self.f_ss * v + a, self.f_uu * w + b))
            }
        }
    }

    /// `(a_n, b_n)(v, w) = f̃_n(v, w) − F_n (v, w)`.
    pub fn remainder(&self, v: f64, w: f64) -> Result<(f64, f64)> {
        if self.linear {
            return Ok((0.0, 0.0));
        }
        if let Kind::Synthetic(r) = &self.kind {
            return Ok(r(v, w));
        }
        let (x, y) = self.apply(v, w)?;
        Ok((x - self.f_ss * v, y - self.f_uu * w))
    }

    /// `f̃_n^{-1}(v, w)`.
    pub fn apply_inverse(&self, v: f64, w: f64) -> Result<(f64, f64)> {
        if self.linear {
            return Ok((v / self.f_ss, w / self.f_uu));
        }
        match &self.kind {
            Kind::Chart {
                map,
                base,
                image_base,
                q_next,
                q_inv,
                ..
            } => {
                let y = image_base + q_next * Vector2::new(v, w);
                let x = q_inv * (map.inverse_lift(&y)? - base);
                Ok((x[0], x[1]))
            }
            Kind::Synthetic(_) => {
                // Newton on the diagonal-dominant map, seeded at F^{-1} y
                let mut x = (v / self.f_ss, w / self.f_uu);
                for _ in 0..100 {
                    let (a, b) = self.apply(x.0, x.1)?;
                    let (ra, rb) = (a - v, b - w);
                    if ra.abs().max(rb.abs()) <= 1e-15 * (1.0 + v.abs().max(w.abs())) {
                        return Ok(x);
                    }
                    x = (x.0 - ra / self.f_ss, x.1 - rb / self.f_uu);
                }
                Err(Error::InversionFailure {
                    iterations: 100,
                    residual: f64::NAN,
                })
            }
        }
    }

    /// Frame coordinates to a displacement in the source component.
    pub fn to_tangent(&self, v: f64, w: f64) -> Vector2<f64> {
        match &self.kind {
            Kind::Chart { q, .. } => q * Vector2::new(v, w),
            Kind::Synthetic(_) => Vector2::new(v, w),
        }
    }

    /// Displacement in the source component to frame coordinates.
    pub fn from_tangent(&self, d: &Vector2<f64>) -> (f64, f64) {
        match &self.kind {
            Kind::Chart { q_inv, .. } => {
                let x = q_inv * d;
                (x[0], x[1])
            }
            Kind::Synthetic(_) => (d[0], d[1]),
        }
    }

    /// Errors if `f̃_n` pushes the boundary of `[-δ,δ]²` outside the target injectivity ball.
    pub fn check_cap(&self, delta: f64, samples: usize) -> Result<()> {
        let radius = self.target_radius;
        if !radius.is_finite() {
            return Ok(());
        }
        let s = samples.max(2);
        for k in 0..4 * s {
            let t = -delta + 2.0 * delta * (k % s) as f64 / (s - 1) as f64;
            let (v, w) = match k / s {
                0 => (t, -delta),
                1 => (t, delta),
                2 => (-delta, t),
                _ => (delta, t),
            };
            let (x, y) = self.apply(v, w)?;
            // frame vectors are unit, so |x| + |y| bounds the metric length
            let norm = x.abs() + y.abs();
            if norm > radius {
                return Err(Error::CapViolation {
                    index: self.index,
                    norm,
                    radius,
                });
            }
        }
        Ok(())
    }
}

/// Finite-difference bound on `sup ‖Da_n‖, ‖Db_n‖` over `[-δ,δ]²`, times `safety`.
pub fn estimate_sigma(step: &ChartedStep, delta: f64, grid_density: usize, safety: f64) -> Result<f64> {
    if step.is_linear() {
        return Ok(0.0);
    }
    let m = grid_density.max(2);
    let h = 1e-5 * delta.max(1e-300);
    let node = |k: usize| -delta + 2.0 * delta * k as f64 / (m - 1) as f64;
    let sup = (0..m * m)
        .into_par_iter()
        .map(|k| -> Result<f64> {
            let (v, w) = (node(k / m), node(k % m));
            let (av1, bv1) = step.remainder(v + h, w)?;
            let (av0, bv0) = step.remainder(v - h, w)?;
            let (aw1, bw1) = step.remainder(v, w + h)?;
            let (aw0, bw0) = step.remainder(v, w - h)?;
            let grad_a = ((av1 - av0) / (2.0 * h)).hypot((aw1 - aw0) / (2.0 * h));
            let grad_b = ((bv1 - bv0) / (2.0 * h)).hypot((bw1 - bw0) / (2.0 * h));
            Ok(grad_a.max(grad_b))
        })
        .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))?;
    Ok(sup * safety)
}
