//! The total space `M = ⨿ M_i` and the two-sided family `f = (f_i)`,
//! materialized on a finite window of indices.

use nalgebra::Matrix2;

use crate::error::{Error, Result};
use crate::map::StepMap;
use crate::torus::{MetricTensor, TorusPoint};

/// A non-stationary system on flat tori, materialized on `[-window, window]`.
///
/// `map_at(i)` is `f_i: M_i -> M_{i+1}` and exists for `i` in
/// `[-window, window - 1]`; `metric_at(i)` exists for `i` in `[-window, window]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NsdsFamily {
    window: i64,
    maps: Vec<StepMap>,
    metrics: Vec<MetricTensor>,
}

impl NsdsFamily {
    /// Materialize a family from index laws. Each law is evaluated twice per
    /// index and the results must agree bit for bit.
    pub fn from_laws<F, G>(window: i64, map_law: F, metric_law: G) -> Result<Self>
    where
        F: Fn(i64) -> Result<StepMap>,
        G: Fn(i64) -> Result<MetricTensor>,
    {
        if window < 1 {
            return Err(Error::InvalidArgument(format!("window {window} < 1")));
        }
        let mut maps = Vec::with_capacity(2 * window as usize);
        for i in -window..window {
            let m = map_law(i)?;
            if m != map_law(i)? {
                return Err(Error::InvalidMap(format!("map law is not deterministic at {i}")));
            }
            maps.push(m);
        }
        let mut metrics = Vec::with_capacity(2 * window as usize + 1);
        for i in -window..=window {
            let g = metric_law(i)?.with_component(i);
            if g != metric_law(i)?.with_component(i) {
                return Err(Error::InvalidMetric(format!(
                    "metric law is not deterministic at {i}"
                )));
            }
            metrics.push(g);
        }
        Ok(Self {
            window,
            maps,
            metrics,
        })
    }

    /// Constant family: the same map and metric at every index.
    pub fn constant(map: StepMap, metric: MetricTensor, window: i64) -> Result<Self> {
        Self::from_laws(window, |_| Ok(map.clone()), |i| Ok(metric.with_component(i)))
    }

    pub fn window(&self) -> i64 {
        self.window
    }

    fn check_index(&self, i: i64) -> Result<()> {
        if i.abs() > self.window {
            return Err(Error::WindowExceeded {
                index: i,
                window: self.window,
            });
        }
        Ok(())
    }

    pub fn map_at(&self, i: i64) -> Result<&StepMap> {
        if i < -self.window || i >= self.window {
            return Err(Error::WindowExceeded {
                index: if i < 0 { i } else { i + 1 },
                window: self.window,
            });
        }
        Ok(&self.maps[(i + self.window) as usize])
    }

    pub fn metric_at(&self, i: i64) -> Result<&MetricTensor> {
        self.check_index(i)?;
        Ok(&self.metrics[(i + self.window) as usize])
    }

    fn check_point(&self, i: i64, p: &TorusPoint) -> Result<()> {
        if p.component != i {
            return Err(Error::ComponentMismatch {
                expected: i,
                got: p.component,
            });
        }
        Ok(())
    }

    /// `f_{i-1}^{-1}(q)` for `q` in `M_i`.
    pub fn inverse_step(&self, i: i64, q: &TorusPoint) -> Result<TorusPoint> {
        self.check_point(i, q)?;
        let m = self.map_at(i - 1)?;
        let z = m.inverse_lift(&q.as_vector())?;
        Ok(TorusPoint::from_lift(i - 1, z))
    }

    /// `f_i^n(p)`; negative `n` composes inverses.
    pub fn compose(&self, i: i64, n: i64, p: &TorusPoint) -> Result<TorusPoint> {
        self.check_point(i, p)?;
        self.check_index(i)?;
        self.check_index(i + n)?;
        let mut q = *p;
        if n >= 0 {
            for k in i..i + n {
                q = self.map_at(k)?.apply(&q, k + 1)?;
            }
        } else {
            for k in (i + n + 1..=i).rev() {
                q = self.inverse_step(k, &q)?;
            }
        }
        Ok(q)
    }

    /// Orbit `f_i^k(p)` for `k = 0..=n` (or `0, -1, ..., n` when `n < 0`).
    pub fn orbit(&self, i: i64, n: i64, p: &TorusPoint) -> Result<Vec<TorusPoint>> {
        self.check_point(i, p)?;
        self.check_index(i + n)?;
        let mut out = Vec::with_capacity(n.unsigned_abs() as usize + 1);
        let mut q = *p;
        out.push(q);
        if n >= 0 {
            for k in i..i + n {
                q = self.map_at(k)?.apply(&q, k + 1)?;
                out.push(q);
            }
        } else {
            for k in (i + n + 1..=i).rev() {
                q = self.inverse_step(k, &q)?;
                out.push(q);
            }
        }
        Ok(out)
    }

    /// `D(f_i^n)_p` by the chain rule along the orbit.
    pub fn derivative_cocycle(&self, i: i64, n: i64, p: &TorusPoint) -> Result<Matrix2<f64>> {
        self.check_point(i, p)?;
        self.check_index(i)?;
        self.check_index(i + n)?;
        if n >= 0 {
            let mut j = Matrix2::identity();
            let mut q = *p;
            for k in i..i + n {
                let m = self.map_at(k)?;
                j = m.jacobian(&q.as_vector())? * j;
                q = m.apply(&q, k + 1)?;
            }
            Ok(j)
        } else {
            // chain inverse Jacobians; inverting the long forward product loses det = ±1
            let mut j = Matrix2::identity();
            let mut q = *p;
            for k in (i + n..i).rev() {
                q = self.inverse_step(k + 1, &q)?;
                let step = self.map_at(k)?.jacobian(&q.as_vector())?;
                let inv = step
                    .try_inverse()
                    .ok_or_else(|| Error::InvalidMap(format!("singular Jacobian at index {k}")))?;
                j = inv * j;
            }
            Ok(j)
        }
    }

    pub fn distance(&self, p: &TorusPoint, q: &TorusPoint) -> Result<f64> {
        self.metric_at(p.component)?.distance(p, q)
    }

    /// Gathering of length `len`: `f~_i = f_{len i}^{len}` with metric `g_{len i}`.
    pub fn gathering(&self, len: i64) -> Result<NsdsFamily> {
        if len < 1 {
            return Err(Error::InvalidArgument(format!("gathering length {len} < 1")));
        }
        if len > self.window {
            return Err(Error::WindowExceeded {
                index: len,
                window: self.window,
            });
        }
        let window = self.window / len;
        NsdsFamily::from_laws(
            window,
            |i| {
                let mut chain = StepMap::identity();
                for k in len * i..len * (i + 1) {
                    chain = chain.then(self.map_at(k)?);
                }
                Ok(chain)
            },
            |i| self.metric_at(len * i).copied(),
        )
    }

    /// Index-reflected inverse family: `f^_j = f_{-j-1}^{-1}` on `M^_j = M_{-j}`.
    pub fn reflected(&self) -> Result<NsdsFamily> {
        NsdsFamily::from_laws(
            self.window,
            |j| Ok(self.map_at(-j - 1)?.inverse()),
            |j| self.metric_at(-j).copied(),
        )
    }

    /// Same maps, different metrics.
    pub fn with_metric_law<G>(&self, metric_law: G) -> Result<NsdsFamily>
    where
        G: Fn(i64) -> Result<MetricTensor>,
    {
        NsdsFamily::from_laws(self.window, |i| self.map_at(i).cloned(), metric_law)
    }
}
