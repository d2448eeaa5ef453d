//! Metric laws `i ↦ g_i` built on the eigenbasis of a hyperbolic linear part.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{int_matrix, IntMatrix};
use crate::torus::MetricTensor;

/// Unit eigenvectors `(v_s, v_u)` and eigenvalues `(λ_s, λ_u)` of a hyperbolic integer matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigenbasis {
    pub stable: Vector2<f64>,
    pub unstable: Vector2<f64>,
    pub contracting: f64,
    pub expanding: f64,
}

impl Eigenbasis {
    pub fn of(a: &IntMatrix) -> Result<Self> {
        let m = int_matrix(a);
        let tr = m.trace();
        let det = m.determinant();
        let disc = tr * tr / 4.0 - det;
        if disc <= 0.0 {
            return Err(Error::InvalidMap("linear part has no real eigenvalues".into()));
        }
        let r = disc.sqrt();
        let (l1, l2) = (tr / 2.0 + r, tr / 2.0 - r);
        let (big, small) = if l1.abs() >= l2.abs() { (l1, l2) } else { (l2, l1) };
        if !(big.abs() > 1.0 && small.abs() < 1.0) {
            return Err(Error::InvalidMap(format!(
                "linear part is not hyperbolic: eigenvalues {l1}, {l2}"
            )));
        }
        let vec_for = |l: f64| {
            let c1 = Vector2::new(m[(0, 1)], l - m[(0, 0)]);
            let c2 = Vector2::new(l - m[(1, 1)], m[(1, 0)]);
            let v = if c1.norm() >= c2.norm() { c1 } else { c2 };
            let v = v / v.norm();
            if v[0] < 0.0 || (v[0] == 0.0 && v[1] < 0.0) {
                -v
            } else {
                v
            }
        };
        Ok(Self {
            stable: vec_for(small),
            unstable: vec_for(big),
            contracting: small.abs(),
            expanding: big.abs(),
        })
    }

    /// Columns `(v_s, v_u)`.
    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::from_columns(&[self.stable, self.unstable])
    }

    /// Tensor whose Gram matrix in the eigenbasis is `gram`.
    pub fn tensor_with_gram(&self, gram: Matrix2<f64>, component: i64) -> Result<MetricTensor> {
        let q_inv = self
            .matrix()
            .try_inverse()
            .ok_or_else(|| Error::InvalidMetric("degenerate eigenbasis".into()))?;
        let g = q_inv.transpose() * gram * q_inv;
        let off = 0.5 * (g[(0, 1)] + g[(1, 0)]);
        MetricTensor::new(Matrix2::new(g[(0, 0)], off, off, g[(1, 1)]), component)
    }
}

/// `ζ_i` for the angle-controlled metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ZetaLaw {
    Constant { value: f64 },
    /// `ζ_i = limit + (base − limit)·rate^{|i|}`.
    Converging { base: f64, limit: f64, rate: f64 },
}

impl ZetaLaw {
    pub fn at(&self, i: i64) -> f64 {
        match *self {
            ZetaLaw::Constant { value } => value,
            ZetaLaw::Converging { base, limit, rate } => limit + (base - limit) * rate.powi(i.unsigned_abs() as i32),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |z: f64| z > -1.0 && z < 1.0;
        let valid = match *self {
            ZetaLaw::Constant { value } => ok(value),
            ZetaLaw::Converging { base, limit, rate } => {
                ok(base) && (-1.0..=1.0).contains(&limit) && (0.0..1.0).contains(&rate)
            }
        };
        if valid {
            Ok(())
        } else {
            Err(Error::InvalidMetric(format!("zeta law {self:?} leaves (-1, 1)")))
        }
    }
}

/// `g_i = a^{2i} P_s + b^{2i} P_u` for `i ≥ 0` (in the eigenbasis) and the flat metric for `i < 0`.
pub fn scaled_eigen_metric(basis: &Eigenbasis, a: f64, b: f64, i: i64) -> Result<MetricTensor> {
    if i < 0 {
        return Ok(MetricTensor::identity(i));
    }
    let k = 2 * i as i32;
    basis.tensor_with_gram(Matrix2::new(a.powi(k), 0.0, 0.0, b.powi(k)), i)
}

/// Gram matrix `[[1, ζ_i], [ζ_i, 1]]` on the unit eigenvectors, so `cos θ_i = ζ_i`.
pub fn skewed_eigen_metric(basis: &Eigenbasis, law: &ZetaLaw, i: i64) -> Result<MetricTensor> {
    let z = law.at(i);
    basis.tensor_with_gram(Matrix2::new(1.0, z, z, 1.0), i)
}
