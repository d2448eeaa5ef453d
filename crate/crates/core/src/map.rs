//! Torus diffeomorphisms `z -> A z + eps * P(z)` with `A` unimodular and `P`
//! a finite trigonometric sum, plus chains of such maps (and their inverses).

use std::f64::consts::TAU;

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::torus::{MetricTensor, TorusPoint};

pub type IntMatrix = [[i64; 2]; 2];

pub fn int_matrix(m: &IntMatrix) -> Matrix2<f64> {
    Matrix2::new(m[0][0] as f64, m[0][1] as f64, m[1][0] as f64, m[1][1] as f64)
}

pub fn int_mul(a: &IntMatrix, b: &IntMatrix) -> IntMatrix {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

pub fn int_det(a: &IntMatrix) -> i64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

/// Exact inverse of a unimodular integer matrix.
pub fn int_inverse(a: &IntMatrix) -> IntMatrix {
    let d = int_det(a);
    debug_assert!(d.abs() == 1);
    [[a[1][1] * d, -a[0][1] * d], [-a[1][0] * d, a[0][0] * d]]
}

pub const IDENTITY: IntMatrix = [[1, 0], [0, 1]];

/// One mode `amplitude * sin(2π k·z + phase)` added to coordinate `target`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerturbationTerm {
    pub amplitude: f64,
    pub frequency: [i64; 2],
    pub target: usize,
    pub phase: f64,
}

impl PerturbationTerm {
    fn argument(&self, z: &Vector2<f64>) -> f64 {
        TAU * (self.frequency[0] as f64 * z[0] + self.frequency[1] as f64 * z[1]) + self.phase
    }

    /// Bound on the operator norm of this term's derivative.
    fn derivative_bound(&self) -> f64 {
        let k = (self.frequency[0] as f64).hypot(self.frequency[1] as f64);
        self.amplitude.abs() * TAU * k
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TorusMap {
    linear: IntMatrix,
    terms: Vec<PerturbationTerm>,
    epsilon: f64,
}

const NEWTON_MAX_ITER: usize = 60;

impl TorusMap {
    pub fn new(linear: IntMatrix, terms: Vec<PerturbationTerm>, epsilon: f64) -> Result<Self> {
        if int_det(&linear).abs() != 1 {
            return Err(Error::InvalidMap(format!(
                "|det A| = {} (must be 1)",
                int_det(&linear).abs()
            )));
        }
        if !epsilon.is_finite() {
            return Err(Error::InvalidMap("non-finite epsilon".into()));
        }
        for t in &terms {
            if t.target > 1 {
                return Err(Error::InvalidMap(format!("target coordinate {} > 1", t.target)));
            }
            if !t.amplitude.is_finite() || !t.phase.is_finite() {
                return Err(Error::InvalidMap("non-finite perturbation term".into()));
            }
        }
        let map = Self {
            linear,
            terms,
            epsilon,
        };
        let lip = map.epsilon.abs() * map.perturbation_lipschitz();
        let smin = map.smallest_singular_value();
        if lip >= smin {
            return Err(Error::InvalidMap(format!(
                "eps * Lip(P) = {lip:.6} is not below the smallest singular value {smin:.6} of A"
            )));
        }
        Ok(map)
    }

    pub fn linear(a: IntMatrix) -> Result<Self> {
        Self::new(a, Vec::new(), 0.0)
    }

    pub fn linear_part(&self) -> &IntMatrix {
        &self.linear
    }

    pub fn terms(&self) -> &[PerturbationTerm] {
        &self.terms
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn is_linear(&self) -> bool {
        self.epsilon == 0.0 || self.terms.iter().all(|t| t.amplitude == 0.0)
    }

    /// Sum of derivative bounds of the perturbation modes (a Lipschitz constant of `P`).
    pub fn perturbation_lipschitz(&self) -> f64 {
        self.terms.iter().map(PerturbationTerm::derivative_bound).sum()
    }

    pub fn smallest_singular_value(&self) -> f64 {
        let a = int_matrix(&self.linear);
        let ata = a.transpose() * a;
        crate::torus::symmetric_eigenvalues(&ata).0.max(0.0).sqrt()
    }

    fn perturbation(&self, z: &Vector2<f64>) -> Vector2<f64> {
        let mut out = Vector2::zeros();
        for t in &self.terms {
            out[t.target] += t.amplitude * t.argument(z).sin();
        }
        out
    }

    /// The map on the universal cover `R^2`.
    pub fn apply_lift(&self, z: &Vector2<f64>) -> Vector2<f64> {
        let a = &self.linear;
        let lin = Vector2::new(
            a[0][0] as f64 * z[0] + a[0][1] as f64 * z[1],
            a[1][0] as f64 * z[0] + a[1][1] as f64 * z[1],
        );
        if self.is_linear() {
            lin
        } else {
            lin + self.perturbation(z) * self.epsilon
        }
    }

    pub fn jacobian(&self, z: &Vector2<f64>) -> Matrix2<f64> {
        let mut j = int_matrix(&self.linear);
        if !self.is_linear() {
            for t in &self.terms {
                let c = self.epsilon * t.amplitude * TAU * t.argument(z).cos();
                j[(t.target, 0)] += c * t.frequency[0] as f64;
                j[(t.target, 1)] += c * t.frequency[1] as f64;
            }
        }
        j
    }

    /// Unique `z in R^2` with `apply_lift(z) = y`, by Newton's method seeded
    /// at `A^{-1} y`, falling back to the contraction `z <- A^{-1}(y - eps P(z))`
    /// whenever a Newton step fails to reduce the residual.
    pub fn inverse_lift(&self, y: &Vector2<f64>) -> Result<Vector2<f64>> {
        let ainv = int_matrix(&int_inverse(&self.linear));
        let mut z = ainv * y;
        if self.is_linear() {
            return Ok(z);
        }
        let scale = 1.0 + y.amax();
        let mut res = self.apply_lift(&z) - y;
        let mut res_norm = res.amax();
        for _ in 0..NEWTON_MAX_ITER {
            if res_norm <= 4.0 * f64::EPSILON * scale {
                return Ok(z);
            }
            let j = self.jacobian(&z);
            let step = match j.try_inverse() {
                Some(ji) => ji * res,
                None => ainv * res,
            };
            let cand = z - step;
            let cand_res = self.apply_lift(&cand) - y;
            let cand_norm = cand_res.amax();
            if cand_norm < res_norm {
                z = cand;
                res = cand_res;
                res_norm = cand_norm;
                if step.amax() <= f64::EPSILON * (1.0 + z.amax()) {
                    return Ok(z);
                }
            } else {
                let fp = ainv * (y - self.perturbation(&z) * self.epsilon);
                let fp_res = self.apply_lift(&fp) - y;
                let fp_norm = fp_res.amax();
                if fp_norm >= res_norm {
                    // neither step improves: we are at the rounding floor
                    break;
                }
                z = fp;
                res = fp_res;
                res_norm = fp_norm;
            }
        }
        if res_norm <= 1e-12 * scale {
            Ok(z)
        } else {
            Err(Error::InversionFailure {
                iterations: NEWTON_MAX_ITER,
                residual: res_norm,
            })
        }
    }

    /// Preimage of `q` on the torus, placed in the component of `metric_domain`.
    pub fn inverse_map(&self, metric_domain: &MetricTensor, q: &TorusPoint) -> Result<TorusPoint> {
        let z = self.inverse_lift(&q.as_vector())?;
        let p = TorusPoint::from_lift(metric_domain.component, z);
        let image = self.apply_lift(&p.as_vector());
        let lifted = crate::torus::MetricTensor::identity(0).nearest_lift(&(image - q.as_vector()));
        let residual = lifted.amax();
        if residual > 1e-12 {
            return Err(Error::InversionFailure {
                iterations: NEWTON_MAX_ITER,
                residual,
            });
        }
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Piece {
    map: TorusMap,
    inverted: bool,
}

/// A finite composition of torus maps and inverses, applied left to right.
///
/// Ordinary families hold single forward pieces; gatherings and reflected
/// families produce longer or inverted chains.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepMap {
    pieces: Vec<Piece>,
}

impl From<TorusMap> for StepMap {
    fn from(map: TorusMap) -> Self {
        Self {
            pieces: vec![Piece {
                map,
                inverted: false,
            }],
        }
    }
}

impl StepMap {
    pub fn identity() -> Self {
        Self { pieces: Vec::new() }
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &StepMap) -> StepMap {
        let mut pieces = self.pieces.clone();
        pieces.extend(other.pieces.iter().cloned());
        StepMap { pieces }.collapsed()
    }

    pub fn inverse(&self) -> StepMap {
        StepMap {
            pieces: self
                .pieces
                .iter()
                .rev()
                .map(|p| Piece {
                    map: p.map.clone(),
                    inverted: !p.inverted,
                })
                .collect(),
        }
    }

    pub fn is_linear(&self) -> bool {
        self.pieces.iter().all(|p| p.map.is_linear())
    }

    /// Integer matrix of the whole chain when every piece is linear.
    pub fn linear_matrix(&self) -> Option<IntMatrix> {
        if !self.is_linear() {
            return None;
        }
        let mut m = IDENTITY;
        for p in &self.pieces {
            let a = if p.inverted {
                int_inverse(p.map.linear_part())
            } else {
                *p.map.linear_part()
            };
            m = int_mul(&a, &m);
        }
        Some(m)
    }

    /// Linear chains fold into a single unimodular map.
    fn collapsed(self) -> StepMap {
        match self.linear_matrix() {
            Some(m) if self.pieces.len() > 1 => {
                StepMap::from(TorusMap::linear(m).expect("product of unimodular matrices"))
            }
            _ => self,
        }
    }

    /// The single forward torus map, if the chain is exactly one.
    pub fn as_single(&self) -> Option<&TorusMap> {
        match self.pieces.as_slice() {
            [p] if !p.inverted => Some(&p.map),
            _ => None,
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn apply_lift(&self, z: &Vector2<f64>) -> Result<Vector2<f64>> {
        if let Some(m) = self.linear_matrix() {
            if self.pieces.len() <= 1 {
                return Ok(int_matrix(&m) * z);
            }
        }
        let mut z = *z;
        for p in &self.pieces {
            z = if p.inverted {
                p.map.inverse_lift(&z)?
            } else {
                p.map.apply_lift(&z)
            };
        }
        Ok(z)
    }

    pub fn jacobian(&self, z: &Vector2<f64>) -> Result<Matrix2<f64>> {
        let mut z = *z;
        let mut j = Matrix2::identity();
        for p in &self.pieces {
            if p.inverted {
                let pre = p.map.inverse_lift(&z)?;
                let jp = p.map.jacobian(&pre);
                let ji = jp.try_inverse().ok_or_else(|| {
                    Error::InvalidMap("singular Jacobian in inverted piece".into())
                })?;
                j = ji * j;
                z = pre;
            } else {
                j = p.map.jacobian(&z) * j;
                z = p.map.apply_lift(&z);
            }
        }
        Ok(j)
    }

    pub fn inverse_lift(&self, y: &Vector2<f64>) -> Result<Vector2<f64>> {
        self.inverse().apply_lift(y)
    }

    pub fn apply(&self, p: &TorusPoint, target_component: i64) -> Result<TorusPoint> {
        Ok(TorusPoint::from_lift(
            target_component,
            self.apply_lift(&p.as_vector())?,
        ))
    }

    /// Upper bound on `eps * Lip(P)` summed over pieces (zero for linear chains).
    pub fn perturbation_size(&self) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.map.epsilon().abs() * p.map.perturbation_lipschitz())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    const CAT: IntMatrix = [[2, 1], [1, 1]];

    fn sine_x(eps: f64) -> TorusMap {
        TorusMap::new(
            CAT,
            vec![PerturbationTerm {
                amplitude: 1.0,
                frequency: [1, 0],
                target: 0,
                phase: 0.0,
            }],
            eps,
        )
        .unwrap()
    }

    #[test]
    fn determinant_must_be_unit() {
        assert!(TorusMap::linear([[2, 0], [0, 1]]).is_err());
        assert!(TorusMap::linear([[0, 1], [1, 0]]).is_ok());
    }

    #[test]
    fn perturbation_bound_is_checked() {
        // 2π * 0.1 > 1/golden ratio
        assert!(matches!(
            TorusMap::new(CAT, sine_x(0.05).terms().to_vec(), 0.1),
            Err(Error::InvalidMap(_))
        ));
        assert!(TorusMap::new(CAT, sine_x(0.05).terms().to_vec(), 0.05).is_ok());
    }

    #[test]
    fn jacobian_of_sine_perturbation_at_origin() {
        let eps = 0.05;
        let j = sine_x(eps).jacobian(&Vector2::zeros());
        assert_abs_diff_eq!(j[(0, 0)], 2.0 + TAU * eps, epsilon = 1e-15);
        assert_eq!(j[(0, 1)], 1.0);
        assert_eq!(j[(1, 0)], 1.0);
        assert_eq!(j[(1, 1)], 1.0);
    }

    #[test]
    fn linear_inverse_example() {
        let m = TorusMap::linear(CAT).unwrap();
        let q = TorusPoint::new(0, 0.0, 0.75);
        let p = m.inverse_map(&MetricTensor::identity(-1), &q).unwrap();
        assert_abs_diff_eq!(p.x(), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(p.y(), 0.5, epsilon = 1e-15);
        assert_eq!(p.component, -1);
    }

    #[test]
    fn perturbed_round_trip_matches_contraction_oracle() {
        let m = sine_x(0.05);
        let p = Vector2::new(0.3, 0.3);
        let y = m.apply_lift(&p);
        let z = m.inverse_lift(&y).unwrap();
        assert_abs_diff_eq!(z[0], 0.3, epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], 0.3, epsilon = 1e-12);

        // independent oracle: plain fixed-point iteration on z = A^{-1}(y - eps P(z))
        let ainv = int_matrix(&int_inverse(&CAT));
        let mut w = ainv * y;
        for _ in 0..400 {
            let pert = Vector2::new((TAU * w[0]).sin(), 0.0) * 0.05;
            w = ainv * (y - pert);
        }
        assert_abs_diff_eq!(z[0], w[0], epsilon = 1e-12);
        assert_abs_diff_eq!(z[1], w[1], epsilon = 1e-12);
    }

    #[test]
    fn chain_jacobian_and_inverse() {
        let m = StepMap::from(sine_x(0.05));
        let chain = m.then(&m);
        let z = Vector2::new(0.12, 0.71);
        let y = chain.apply_lift(&z).unwrap();
        let back = chain.inverse_lift(&y).unwrap();
        assert_abs_diff_eq!(back[0], z[0], epsilon = 1e-11);
        assert_abs_diff_eq!(back[1], z[1], epsilon = 1e-11);

        let j = chain.jacobian(&z).unwrap();
        let ji = chain.inverse().jacobian(&y).unwrap();
        let id = j * ji;
        assert_abs_diff_eq!(id[(0, 0)], 1.0, epsilon = 1e-10);
        assert_abs_diff_eq!(id[(0, 1)], 0.0, epsilon = 1e-10);
    }

    #[test]
    fn linear_chains_collapse() {
        let m = StepMap::from(TorusMap::linear(CAT).unwrap());
        let sq = m.then(&m);
        assert_eq!(sq.len(), 1);
        assert_eq!(sq.linear_matrix(), Some([[5, 3], [3, 2]]));
        let inv = m.inverse();
        assert_eq!(m.then(&inv).linear_matrix(), Some(IDENTITY));
    }
}
