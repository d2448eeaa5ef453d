//! Flat 2-tori with constant metric tensors.
//!
//! Every component `M_i` is the unit square `[0,1)^2` with opposite sides
//! identified, carrying a constant positive-definite tensor `g_i`. Geodesics
//! are straight lines, so `exp_p(v) = p + v (mod 1)` and the inverse chart is
//! the nearest lattice lift of a coordinate difference.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reduce a real into `[0, 1)`.
pub fn wrap_unit(x: f64) -> f64 {
    let r = x - x.floor();
    // x - floor(x) can round up to exactly 1.0 for tiny negative x
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// A point of the component `M_i`, stored by its fundamental-domain representative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub component: i64,
    coords: [f64; 2],
}

impl TorusPoint {
    pub fn new(component: i64, x: f64, y: f64) -> Self {
        Self {
            component,
            coords: [wrap_unit(x), wrap_unit(y)],
        }
    }

    pub fn from_lift(component: i64, lift: Vector2<f64>) -> Self {
        Self::new(component, lift[0], lift[1])
    }

    pub fn coords(&self) -> [f64; 2] {
        self.coords
    }

    pub fn x(&self) -> f64 {
        self.coords[0]
    }

    pub fn y(&self) -> f64 {
        self.coords[1]
    }

    pub fn as_vector(&self) -> Vector2<f64> {
        Vector2::new(self.coords[0], self.coords[1])
    }

    /// `exp_p(v)`: translate by a tangent vector and reduce.
    pub fn translate(&self, v: Vector2<f64>) -> Self {
        Self::from_lift(self.component, self.as_vector() + v)
    }
}

/// Constant inner product on one component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricTensor {
    g: [[f64; 2]; 2],
    pub component: i64,
}

/// Eigenvalues `(min, max)` of a symmetric 2x2 matrix.
pub fn symmetric_eigenvalues(m: &Matrix2<f64>) -> (f64, f64) {
    let a = m[(0, 0)];
    let d = m[(1, 1)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let mean = 0.5 * (a + d);
    let half_diff = 0.5 * (a - d);
    let rad = half_diff.hypot(b);
    (mean - rad, mean + rad)
}

impl MetricTensor {
    pub fn new(g: Matrix2<f64>, component: i64) -> Result<Self> {
        if !g.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidMetric("non-finite entry".into()));
        }
        let scale = g.abs().max().max(f64::MIN_POSITIVE);
        if (g[(0, 1)] - g[(1, 0)]).abs() > 1e-12 * scale {
            return Err(Error::InvalidMetric(format!(
                "not symmetric: off-diagonal {} vs {}",
                g[(0, 1)],
                g[(1, 0)]
            )));
        }
        let sym = Matrix2::new(g[(0, 0)], g[(0, 1)], g[(0, 1)], g[(1, 1)]);
        let (lo, _) = symmetric_eigenvalues(&sym);
        if lo <= 0.0 {
            return Err(Error::InvalidMetric(format!(
                "not positive definite: smallest eigenvalue {lo:e}"
            )));
        }
        Ok(Self {
            g: [[sym[(0, 0)], sym[(0, 1)]], [sym[(1, 0)], sym[(1, 1)]]],
            component,
        })
    }

    pub fn identity(component: i64) -> Self {
        Self {
            g: [[1.0, 0.0], [0.0, 1.0]],
            component,
        }
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.g[0][0], self.g[0][1], self.g[1][0], self.g[1][1])
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.matrix() * factor, self.component)
    }

    pub fn with_component(&self, component: i64) -> Self {
        Self { component, ..*self }
    }

    pub fn eigenvalues(&self) -> (f64, f64) {
        symmetric_eigenvalues(&self.matrix())
    }

    pub fn inner(&self, u: &Vector2<f64>, v: &Vector2<f64>) -> f64 {
        let g = &self.g;
        u[0] * (g[0][0] * v[0] + g[0][1] * v[1]) + u[1] * (g[1][0] * v[0] + g[1][1] * v[1])
    }

    pub fn norm(&self, v: &Vector2<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }

    pub fn normalize(&self, v: &Vector2<f64>) -> Vector2<f64> {
        v / self.norm(v)
    }

    /// Operator norm of `j: (R^2, self) -> (R^2, target)`.
    pub fn operator_norm(&self, j: &Matrix2<f64>, target: &MetricTensor) -> f64 {
        // largest eigenvalue of g_src^{-1} J^T g_dst J, a g_src-self-adjoint operator
        let src = self.matrix();
        let m = j.transpose() * target.matrix() * j;
        let inv = match src.try_inverse() {
            Some(inv) => inv,
            None => return f64::INFINITY,
        };
        let op = inv * m;
        let tr = op.trace();
        let det = op.determinant();
        let disc = (0.25 * tr * tr - det).max(0.0).sqrt();
        (0.5 * tr + disc).max(0.0).sqrt()
    }

    fn lattice_bound(&self, radius: f64) -> i64 {
        let (lo, _) = self.eigenvalues();
        (radius / lo.sqrt()).ceil() as i64 + 1
    }

    /// Representative `d + k` (k integer) of minimal norm. Ties go to the
    /// lexicographically smallest `k`.
    pub fn nearest_lift(&self, d: &Vector2<f64>) -> Vector2<f64> {
        let base = Vector2::new(d[0] - d[0].round(), d[1] - d[1].round());
        let shift = Vector2::new(base[0] - d[0], base[1] - d[1]);
        let bound = self.lattice_bound(self.norm(&base));
        let mut best = base;
        let mut best_norm = f64::INFINITY;
        let mut best_k = (i64::MAX, i64::MAX);
        for k0 in -bound..=bound {
            for k1 in -bound..=bound {
                let cand = base + Vector2::new(k0 as f64, k1 as f64);
                let n = self.norm(&cand);
                // compare on the absolute lattice vector so ties are lexicographic in k
                let k_abs = (
                    (shift[0] + k0 as f64).round() as i64,
                    (shift[1] + k1 as f64).round() as i64,
                );
                if n < best_norm || (n == best_norm && k_abs < best_k) {
                    best = cand;
                    best_norm = n;
                    best_k = k_abs;
                }
            }
        }
        best
    }

    fn check_component(&self, p: &TorusPoint) -> Result<()> {
        if p.component != self.component {
            return Err(Error::ComponentMismatch {
                expected: self.component,
                got: p.component,
            });
        }
        Ok(())
    }

    /// Riemannian distance on the flat torus.
    pub fn distance(&self, p: &TorusPoint, q: &TorusPoint) -> Result<f64> {
        self.check_component(p)?;
        self.check_component(q)?;
        let d = q.as_vector() - p.as_vector();
        Ok(self.norm(&self.nearest_lift(&d)))
    }

    /// `exp_p^{-1}(q)`.
    pub fn log_map(&self, p: &TorusPoint, q: &TorusPoint) -> Result<Vector2<f64>> {
        self.check_component(p)?;
        self.check_component(q)?;
        Ok(self.nearest_lift(&(q.as_vector() - p.as_vector())))
    }

    /// Half the length of the shortest nonzero lattice vector.
    pub fn injectivity_radius(&self) -> f64 {
        let e0 = self.norm(&Vector2::new(1.0, 0.0));
        let e1 = self.norm(&Vector2::new(0.0, 1.0));
        let start = e0.min(e1);
        let bound = self.lattice_bound(start);
        let mut best = start;
        for k0 in -bound..=bound {
            for k1 in -bound..=bound {
                if k0 == 0 && k1 == 0 {
                    continue;
                }
                let n = self.norm(&Vector2::new(k0 as f64, k1 as f64));
                if n < best {
                    best = n;
                }
            }
        }
        0.5 * best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn diag(a: f64, b: f64) -> MetricTensor {
        MetricTensor::new(Matrix2::new(a, 0.0, 0.0, b), 0).unwrap()
    }

    #[test]
    fn distance_wraps_around() {
        let g = MetricTensor::identity(0);
        let p = TorusPoint::new(0, 0.9, 0.0);
        let q = TorusPoint::new(0, 0.1, 0.0);
        assert_abs_diff_eq!(g.distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
        assert_eq!(g.distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn distance_scaled_metric() {
        let g = diag(4.0, 1.0);
        let p = TorusPoint::new(0, 0.0, 0.0);
        let q = TorusPoint::new(0, 0.1, 0.0);
        assert_abs_diff_eq!(g.distance(&p, &q).unwrap(), 0.2, epsilon = 1e-15);
    }

    #[test]
    fn distance_rejects_foreign_points() {
        let g = MetricTensor::identity(0);
        let p = TorusPoint::new(1, 0.0, 0.0);
        assert!(matches!(
            g.distance(&p, &p),
            Err(Error::ComponentMismatch { .. })
        ));
    }

    #[test]
    fn injectivity_radii() {
        assert_abs_diff_eq!(MetricTensor::identity(0).injectivity_radius(), 0.5);
        assert_abs_diff_eq!(diag(0.64, 0.64).injectivity_radius(), 0.4, epsilon = 1e-15);
        assert_abs_diff_eq!(diag(4.0, 1.0).injectivity_radius(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn rejects_bad_tensors() {
        assert!(MetricTensor::new(Matrix2::new(1.0, 0.5, 0.4, 1.0), 0).is_err());
        assert!(MetricTensor::new(Matrix2::new(1.0, 2.0, 2.0, 1.0), 0).is_err());
        assert!(MetricTensor::new(Matrix2::new(-1.0, 0.0, 0.0, 1.0), 0).is_err());
    }

    #[test]
    fn skewed_lattice_finds_short_vector() {
        // g in which (1,1) is much shorter than either axis vector
        let g = MetricTensor::new(Matrix2::new(10.0, -9.9, -9.9, 10.0), 0).unwrap();
        let r = g.injectivity_radius();
        assert_abs_diff_eq!(r, 0.5 * (0.2f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn wrap_handles_negative_zero_edge() {
        let x = wrap_unit(-1e-18);
        assert!((0.0..1.0).contains(&x));
    }

    #[test]
    fn operator_norm_identity_metrics() {
        let g = MetricTensor::identity(0);
        let a = Matrix2::new(2.0, 1.0, 1.0, 1.0);
        assert_abs_diff_eq!(
            g.operator_norm(&a, &g),
            (3.0 + 5f64.sqrt()) / 2.0,
            epsilon = 1e-12
        );
    }
}
