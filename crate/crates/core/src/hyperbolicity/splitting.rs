use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::torus::{MetricTensor, TorusPoint};

/// Unit stable/unstable directions at a point, with the angle between them
/// and the one-step rates along each direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplittingFrame {
    pub point: TorusPoint,
    pub e_s: [f64; 2],
    pub e_u: [f64; 2],
    /// Angle between the lines `E^s` and `E^u`, in `(0, π/2]` after orientation.
    pub theta: f64,
    pub cos_theta: f64,
    /// `‖Df e_s‖ / ‖e_s‖`.
    pub mu_local: f64,
    /// `‖Df^{-1} w‖ / ‖w‖` for `w` in `E^u` at the image.
    pub kappa_local: f64,
    /// Sine of the angle between estimates at depth and depth - 1 (0 for supplied frames).
    pub residual: f64,
    pub depth: usize,
}

/// Sine of the angle between two vectors under a metric, computed from the
/// area form so small angles keep full relative precision.
pub fn sine_between(g: &MetricTensor, u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    let det_g = g.matrix().determinant();
    let cross = (u[0] * v[1] - u[1] * v[0]).abs();
    (cross * det_g.sqrt() / (g.norm(u) * g.norm(v))).min(1.0)
}

pub fn cos_between(g: &MetricTensor, u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
    (g.inner(u, v) / (g.norm(u) * g.norm(v))).clamp(-1.0, 1.0)
}

const SEED: (f64, f64) = (1.0, 1.0);

fn seed_for(product: &Matrix2<f64>, g: &MetricTensor) -> Vector2<f64> {
    let s = Vector2::new(SEED.0, SEED.1) / 2f64.sqrt();
    let image = product * s;
    if image.amax() == 0.0 || sine_between(g, &image, &s) < 1e-12 {
        Vector2::new(1.0, 1.0 + 2f64.powi(-20))
    } else {
        s
    }
}

fn orient(g: &MetricTensor, e_s: Vector2<f64>, e_u: Vector2<f64>) -> (Vector2<f64>, Vector2<f64>) {
    let e_u = if e_u[0] < 0.0 || (e_u[0] == 0.0 && e_u[1] < 0.0) {
        -e_u
    } else {
        e_u
    };
    let e_s = if g.inner(&e_s, &e_u) < 0.0 { -e_s } else { e_s };
    (e_s, e_u)
}

impl SplittingFrame {
    /// Frame from explicitly supplied directions (normalized in the component metric).
    pub fn from_directions(
        family: &NsdsFamily,
        i: i64,
        p: &TorusPoint,
        e_s: Vector2<f64>,
        e_u: Vector2<f64>,
    ) -> Result<Self> {
        let g = family.metric_at(i)?;
        if p.component != i {
            return Err(Error::ComponentMismatch {
                expected: i,
                got: p.component,
            });
        }
        let (e_s, e_u) = orient(g, g.normalize(&e_s), g.normalize(&e_u));
        let cos_theta = cos_between(g, &e_s, &e_u);
        let (mu_local, kappa_local) = match family.map_at(i) {
            Ok(m) => {
                let j = m.jacobian(&p.as_vector())?;
                let gn = family.metric_at(i + 1)?;
                (gn.norm(&(j * e_s)), 1.0 / gn.norm(&(j * e_u)))
            }
            Err(_) => (f64::NAN, f64::NAN),
        };
        Ok(Self {
            point: *p,
            e_s: [e_s[0], e_s[1]],
            e_u: [e_u[0], e_u[1]],
            theta: cos_theta.acos(),
            cos_theta,
            mu_local,
            kappa_local,
            residual: 0.0,
            depth: 0,
        })
    }

    pub fn stable(&self) -> Vector2<f64> {
        Vector2::new(self.e_s[0], self.e_s[1])
    }

    pub fn unstable(&self) -> Vector2<f64> {
        Vector2::new(self.e_u[0], self.e_u[1])
    }

    /// Columns `(e_s, e_u)`: frame coordinates to standard coordinates.
    pub fn basis(&self) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.stable(), self.unstable()])
    }
}

/// Forward power iteration: image of a seed under the cocycle ending at `p`.
fn unstable_direction(
    family: &NsdsFamily,
    i: i64,
    backward_orbit: &[TorusPoint],
    depth: usize,
) -> Result<Vector2<f64>> {
    let start_index = i - depth as i64;
    let start = &backward_orbit[depth];
    let product = family.derivative_cocycle(start_index, depth as i64, start)?;
    let mut v = seed_for(&product, family.metric_at(start_index)?);
    for k in (1..=depth).rev() {
        let idx = i - k as i64;
        let j = family.map_at(idx)?.jacobian(&backward_orbit[k].as_vector())?;
        v = family.metric_at(idx + 1)?.normalize(&(j * v));
    }
    Ok(v)
}

/// Backward power iteration through inverse Jacobians along the forward orbit.
fn stable_direction(
    family: &NsdsFamily,
    i: i64,
    forward_orbit: &[TorusPoint],
    depth: usize,
) -> Result<Vector2<f64>> {
    let end_index = i + depth as i64;
    let end = &forward_orbit[depth];
    let product = family.derivative_cocycle(end_index, -(depth as i64), end)?;
    let mut v = seed_for(&product, family.metric_at(end_index)?);
    for k in (1..=depth).rev() {
        let idx = i + k as i64 - 1;
        let j = family.map_at(idx)?.jacobian(&forward_orbit[k - 1].as_vector())?;
        let ji = j
            .try_inverse()
            .ok_or_else(|| Error::InvalidMap(format!("singular Jacobian at index {idx}")))?;
        v = family.metric_at(idx)?.normalize(&(ji * v));
    }
    Ok(v)
}

/// One-step stretch factors `‖Df s_k‖` along `p, f p, …`, where `s_k` is the
/// unit stable direction at `f^k p` (`forward = true`), or the backward
/// analogue `‖Df^{-1} u_k‖` on unstable directions along `p, f^{-1} p, …`.
/// Directions come from iterating against the expanding direction, so they
/// stay accurate where pushing a single vector forward would not.
pub fn stretch_factors(
    family: &NsdsFamily,
    i: i64,
    p: &TorusPoint,
    steps: usize,
    depth: usize,
    forward: bool,
) -> Result<Vec<f64>> {
    let total = (steps + depth) as i64;
    let sign = if forward { 1 } else { -1 };
    let orbit = family.orbit(i, sign * total, p)?;
    let comp = |k: usize| i + sign * k as i64;
    let end = steps + depth;
    let mut v = Vector2::new(SEED.0, SEED.1) / 2f64.sqrt();
    let mut factors = vec![0.0; steps];
    for k in (1..=end).rev() {
        // move the direction at orbit[k] to orbit[k-1]
        let step = if forward {
            let idx = comp(k - 1);
            let j = family.map_at(idx)?.jacobian(&orbit[k - 1].as_vector())?;
            j.try_inverse()
                .ok_or_else(|| Error::InvalidMap(format!("singular Jacobian at index {idx}")))?
        } else {
            family.map_at(comp(k))?.jacobian(&orbit[k].as_vector())?
        };
        let img = step * v;
        let len = family.metric_at(comp(k - 1))?.norm(&img);
        v = img / len;
        if k <= steps {
            factors[k - 1] = 1.0 / len;
        }
    }
    Ok(factors)
}

/// Estimate `E^s ⊕ E^u` at `p ∈ M_i` by power iteration of depth `depth` on
/// the derivative cocycle in both time directions.
pub fn estimate_splitting(
    family: &NsdsFamily,
    i: i64,
    p: &TorusPoint,
    depth: usize,
    tolerance: f64,
) -> Result<SplittingFrame> {
    if depth < 2 {
        return Err(Error::InsufficientDepth {
            depth,
            residual: 1.0,
            tolerance,
        });
    }
    let d = depth as i64;
    let backward = family.orbit(i, -d, p)?;
    let forward = family.orbit(i, d, p)?;
    let g = family.metric_at(i)?;

    let e_u = unstable_direction(family, i, &backward, depth)?;
    let e_u_prev = unstable_direction(family, i, &backward, depth - 1)?;
    let e_s = stable_direction(family, i, &forward, depth)?;
    let e_s_prev = stable_direction(family, i, &forward, depth - 1)?;

    let residual = sine_between(g, &e_u, &e_u_prev).max(sine_between(g, &e_s, &e_s_prev));
    if !(residual <= tolerance) {
        return Err(Error::InsufficientDepth {
            depth,
            residual,
            tolerance,
        });
    }
    let mut frame = SplittingFrame::from_directions(family, i, p, e_s, e_u)?;
    frame.residual = residual;
    frame.depth = depth;
    Ok(frame)
}

/// Collinearity defect of a frame pushed forward one step, compared with the
/// frame at the image point: `max(sin∠(Df e_s, e_s'), sin∠(Df e_u, e_u'))`.
pub fn pushforward_residual(
    family: &NsdsFamily,
    frame: &SplittingFrame,
    image: &SplittingFrame,
) -> Result<f64> {
    let i = frame.point.component;
    let j = family.map_at(i)?.jacobian(&frame.point.as_vector())?;
    let g = family.metric_at(i + 1)?;
    Ok(sine_between(g, &(j * frame.stable()), &image.stable())
        .max(sine_between(g, &(j * frame.unstable()), &image.unstable())))
}

/// Anchor orbit `p_n = f_{i0}^{n - i0}(p)` for components `n ∈ [lo, hi]`
/// together with a splitting frame at every orbit point.
#[derive(Debug, Clone, PartialEq)]
pub struct FramedOrbit {
    pub lo: i64,
    pub hi: i64,
    points: Vec<TorusPoint>,
    frames: Vec<SplittingFrame>,
}

impl FramedOrbit {
    pub fn new(
        family: &NsdsFamily,
        p: &TorusPoint,
        lo: i64,
        hi: i64,
        depth: usize,
        tolerance: f64,
    ) -> Result<Self> {
        let i0 = p.component;
        if lo > i0 || hi < i0 {
            return Err(Error::InvalidArgument(format!(
                "orbit range [{lo}, {hi}] must contain the anchor component {i0}"
            )));
        }
        let back = family.orbit(i0, lo - i0, p)?;
        let fwd = family.orbit(i0, hi - i0, p)?;
        let points: Vec<TorusPoint> = back.iter().rev().chain(fwd.iter().skip(1)).copied().collect();
        let frames = points
            .iter()
            .map(|q| estimate_splitting(family, q.component, q, depth, tolerance))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lo,
            hi,
            points,
            frames,
        })
    }

    /// Orbit with frames supplied by a closure (used for analytic splittings).
    pub fn with_frames<F>(family: &NsdsFamily, p: &TorusPoint, lo: i64, hi: i64, frame_at: F) -> Result<Self>
    where
        F: Fn(&TorusPoint) -> Result<SplittingFrame>,
    {
        let i0 = p.component;
        let back = family.orbit(i0, lo - i0, p)?;
        let fwd = family.orbit(i0, hi - i0, p)?;
        let points: Vec<TorusPoint> = back.iter().rev().chain(fwd.iter().skip(1)).copied().collect();
        let frames = points.iter().map(frame_at).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            lo,
            hi,
            points,
            frames,
        })
    }

    pub fn contains(&self, n: i64) -> bool {
        (self.lo..=self.hi).contains(&n)
    }

    fn slot(&self, n: i64) -> Result<usize> {
        if !self.contains(n) {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.lo.abs().max(self.hi.abs()),
            });
        }
        Ok((n - self.lo) as usize)
    }

    pub fn point(&self, n: i64) -> Result<&TorusPoint> {
        Ok(&self.points[self.slot(n)?])
    }

    pub fn frame(&self, n: i64) -> Result<&SplittingFrame> {
        Ok(&self.frames[self.slot(n)?])
    }

    pub fn frames(&self) -> &[SplittingFrame] {
        &self.frames
    }

    pub fn points(&self) -> &[TorusPoint] {
        &self.points
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{PerturbationTerm, TorusMap};
    use approx::assert_abs_diff_eq;

    fn cat(window: i64) -> NsdsFamily {
        NsdsFamily::constant(
            TorusMap::linear([[2, 1], [1, 1]]).unwrap().into(),
            MetricTensor::identity(0),
            window,
        )
        .unwrap()
    }

    fn perturbed(window: i64) -> NsdsFamily {
        let m = TorusMap::new(
            [[2, 1], [1, 1]],
            vec![PerturbationTerm {
                amplitude: 1.0,
                frequency: [1, 0],
                target: 0,
                phase: 0.0,
            }],
            0.05,
        )
        .unwrap();
        NsdsFamily::constant(m.into(), MetricTensor::identity(0), window).unwrap()
    }

    fn acute_sine(u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
        sine_between(&MetricTensor::identity(0), u, v)
    }

    #[test]
    fn cat_map_eigendirections() {
        let f = cat(40);
        let p = TorusPoint::new(0, 0.13, 0.57);
        let fr = estimate_splitting(&f, 0, &p, 25, 1e-8).unwrap();
        let golden = (1.0 + 5f64.sqrt()) / 2.0;
        let u = Vector2::new(golden, 1.0);
        let s = Vector2::new(1.0 - golden, 1.0);
        assert!(acute_sine(&fr.unstable(), &u) < 1e-9);
        assert!(acute_sine(&fr.stable(), &s) < 1e-9);
        assert_abs_diff_eq!(fr.theta, std::f64::consts::FRAC_PI_2, epsilon = 1e-9);
        let lam = (3.0 - 5f64.sqrt()) / 2.0;
        assert_abs_diff_eq!(fr.mu_local, lam, epsilon = 1e-12);
        assert_abs_diff_eq!(fr.kappa_local, lam, epsilon = 1e-12);
    }

    #[test]
    fn diagonal_family_axes() {
        let f = NsdsFamily::constant(
            TorusMap::linear([[2, 1], [1, 1]]).unwrap().into(),
            MetricTensor::identity(0),
            3,
        )
        .unwrap();
        // too shallow to separate the directions to 1e-12
        let p = TorusPoint::new(0, 0.1, 0.1);
        assert!(matches!(
            estimate_splitting(&f, 0, &p, 2, 1e-12),
            Err(Error::InsufficientDepth { .. })
        ));
    }

    #[test]
    fn perturbed_frame_residual() {
        let f = perturbed(64);
        let p = TorusPoint::new(0, 0.1, 0.2);
        let fr = estimate_splitting(&f, 0, &p, 30, 1e-6).unwrap();
        assert!(fr.residual < 1e-6);
        let q = f.compose(0, 1, &p).unwrap();
        let fr1 = estimate_splitting(&f, 1, &q, 30, 1e-6).unwrap();
        assert!(pushforward_residual(&f, &fr, &fr1).unwrap() < 1e-5);
        let deep = estimate_splitting(&f, 0, &p, 60, 1e-6).unwrap();
        assert!(acute_sine(&fr.unstable(), &deep.unstable()) < 1e-9);
        assert!(acute_sine(&fr.stable(), &deep.stable()) < 1e-9);
    }

    #[test]
    fn framed_orbit_indexing() {
        let f = perturbed(40);
        let p = TorusPoint::new(0, 0.1, 0.2);
        let o = FramedOrbit::new(&f, &p, -3, 4, 20, 1e-6).unwrap();
        assert_eq!(o.point(0).unwrap(), &p);
        assert_eq!(o.point(-3).unwrap().component, -3);
        assert_eq!(o.frame(4).unwrap().point.component, 4);
        assert!(o.point(5).is_err());
    }
}
