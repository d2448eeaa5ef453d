use serde::{Deserialize, Serialize};

use super::chart::ChartedStep;
use crate::error::{Error, Result};

/// Free parameters of the graph transform.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub lambda: f64,
    pub gamma: f64,
    pub lambda_tilde: f64,
}

impl RateParams {
    /// Midpoints of the admissible intervals: `γ = (λ²+1)/2`, `λ̃ = (3+λ)/4`.
    pub fn defaults(lambda: f64) -> Self {
        Self {
            lambda,
            gamma: (lambda * lambda + 1.0) / 2.0,
            lambda_tilde: (3.0 + lambda) / 4.0,
        }
    }

    pub fn alpha(&self) -> f64 {
        (1.0 / self.lambda - 1.0) / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.lambda;
        if !(l > 0.0 && l < 1.0) {
            return Err(Error::InvalidArgument(format!("lambda {l} outside (0,1)")));
        }
        if !(self.gamma > l * l && self.gamma < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "gamma {} outside (λ², 1) = ({}, 1)",
                self.gamma,
                l * l
            )));
        }
        if !(self.lambda_tilde > (1.0 + l) / 2.0 && self.lambda_tilde < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "lambda_tilde {} outside ((1+λ)/2, 1) = ({}, 1)",
                self.lambda_tilde,
                (1.0 + l) / 2.0
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexRates {
    pub index: i64,
    pub mu: f64,
    pub kappa: f64,
    pub omega: f64,
    pub tau: f64,
    pub varpi: f64,
    pub varsigma: f64,
    /// `(κ⁻¹ + αμ)/(1+α)`: admissible growth of `δ` from this index to the next.
    pub growth: f64,
}

/// The three branches of the margin: `[(κ⁻¹−μ)α/(1+α)², (γκ⁻¹−μ)/((1+α)(1+γ)), (2λλ̃κ⁻¹−1−λ)/(1+λ)]`.
pub fn omega_branches(mu: f64, kappa: f64, p: &RateParams) -> [f64; 3] {
    let a = p.alpha();
    let k_inv = 1.0 / kappa;
    [
        (k_inv - mu) * a / ((1.0 + a) * (1.0 + a)),
        (p.gamma * k_inv - mu) / ((1.0 + a) * (1.0 + p.gamma)),
        (2.0 * p.lambda * p.lambda_tilde * k_inv - 1.0 - p.lambda) / (1.0 + p.lambda),
    ]
}

pub fn omega(mu: f64, kappa: f64, p: &RateParams) -> f64 {
    omega_branches(mu, kappa, p).into_iter().fold(f64::INFINITY, f64::min)
}

/// `τ = (1+α)/(κ⁻¹ − ω(1+α))`.
pub fn tau(kappa: f64, omega: f64, alpha: f64) -> f64 {
    (1.0 + alpha) / (1.0 / kappa - omega * (1.0 + alpha))
}

impl IndexRates {
    pub fn new(index: i64, mu: f64, kappa: f64, p: &RateParams) -> Result<Self> {
        let a = p.alpha();
        let om = omega(mu, kappa, p);
        if !(om > 0.0) {
            return Err(Error::HyperbolicityMargin {
                index,
                detail: format!("omega = {om:e} ≤ 0 (mu = {mu}, kappa = {kappa})"),
            });
        }
        let vp = omega(kappa, mu, p);
        if !(vp > 0.0) {
            return Err(Error::HyperbolicityMargin {
                index,
                detail: format!("varpi = {vp:e} ≤ 0 (mu = {mu}, kappa = {kappa})"),
            });
        }
        Ok(Self {
            index,
            mu,
            kappa,
            omega: om,
            tau: tau(kappa, om, a),
            varpi: vp,
            varsigma: tau(mu, vp, a),
            growth: (1.0 / kappa + a * mu) / (1.0 + a),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub params: RateParams,
    pub alpha: f64,
    pub lo: i64,
    pub rows: Vec<IndexRates>,
}

impl RateTable {
    pub fn from_steps(steps: &[ChartedStep], params: RateParams) -> Result<Self> {
        params.validate()?;
        let rows = steps
            .iter()
            .map(|s| {
                let (mu, kappa) = s.rates();
                IndexRates::new(s.index, mu, kappa, &params)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            params,
            alpha: params.alpha(),
            lo: steps.first().map(|s| s.index).unwrap_or(0),
            rows,
        })
    }

    pub fn at(&self, n: i64) -> Result<&IndexRates> {
        let k = n - self.lo;
        if k < 0 || k as usize >= self.rows.len() {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.lo.abs().max(self.lo + self.rows.len() as i64 - 1),
            });
        }
        Ok(&self.rows[k as usize])
    }

    /// `max_n τ_n < λ̃` and `max_n ς_n < λ̃`.
    pub fn contraction_certified(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.tau < self.params.lambda_tilde && r.varsigma < self.params.lambda_tilde)
    }
}

/// Largest one-step rate over the steps: the default `λ`.
pub fn one_step_lambda(steps: &[ChartedStep]) -> f64 {
    steps
        .iter()
        .map(|s| {
            let (m, k) = s.rates();
            m.max(k)
        })
        .fold(0.0, f64::max)
}
