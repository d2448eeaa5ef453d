use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::{estimate_sigma, ChartedStep};
use super::rates::RateTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaConfig {
    /// Lattice points per axis; odd so that 0 is a node.
    pub grid_density: usize,
    pub safety: f64,
}

impl Default for SigmaConfig {
    fn default() -> Self {
        Self {
            grid_density: 17,
            safety: 1.25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    pub index: i64,
    pub delta: f64,
    pub cap: f64,
    pub sigma: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaSchedule {
    pub lo: i64,
    pub rows: Vec<ScheduleRow>,
    pub certified: bool,
}

impl DeltaSchedule {
    pub fn delta_at(&self, n: i64) -> Result<f64> {
        let k = n - self.lo;
        if k < 0 || k as usize >= self.rows.len() {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.lo.abs().max(self.lo + self.rows.len() as i64 - 1),
            });
        }
        Ok(self.rows[k as usize].delta)
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.rows.len() as i64 - 1
    }

    pub fn min_delta(&self) -> f64 {
        self.rows.iter().map(|r| r.delta).fold(f64::INFINITY, f64::min)
    }
}

const BISECTION_STEPS: usize = 50;
const SHRINK: f64 = 0.9;
/// Below this fraction of the cap a schedule entry counts as empty.
const FEASIBLE_FLOOR: f64 = 1e-9;

fn largest_feasible(step: &ChartedStep, cap: f64, omega: f64, cfg: &SigmaConfig) -> Result<f64> {
    if estimate_sigma(step, cap, cfg.grid_density, cfg.safety)? < omega {
        return Ok(cap);
    }
    let (mut lo, mut hi) = (0.0, cap);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if estimate_sigma(step, mid, cfg.grid_density, cfg.safety)? < omega {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if lo <= FEASIBLE_FLOOR * cap {
        return Err(Error::ScheduleInfeasible {
            index: step.index,
            detail: format!("no radius in (0, {cap:e}] with sigma below omega = {omega:e}"),
        });
    }
    Ok(lo)
}

/// `δ_n` for every step: largest radius under the cap with `σ_n(δ_n) < ω_n`,
/// then a forward pass enforcing `δ_n ≤ ((κ⁻¹+αμ)/(1+α))_{n-1} δ_{n-1}`.
pub fn schedule_deltas(steps: &[ChartedStep], rates: &RateTable, cfg: &SigmaConfig) -> Result<DeltaSchedule> {
    let first = steps
        .first()
        .ok_or_else(|| Error::InvalidArgument("no steps to schedule".into()))?;
    let initial: Vec<(f64, f64)> = steps
        .par_iter()
        .map(|s| {
            let omega = rates.at(s.index)?.omega;
            Ok((largest_feasible(s, s.cap(), omega, cfg)?, omega))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<ScheduleRow> = Vec::with_capacity(steps.len());
    for (k, s) in steps.iter().enumerate() {
        let (mut delta, omega) = initial[k];
        if k > 0 {
            let prev = &rows[k - 1];
            delta = delta.min(rates.at(prev.index)?.growth * prev.delta);
        }
        let mut sigma = estimate_sigma(s, delta, cfg.grid_density, cfg.safety)?;
        while sigma >= omega {
            delta *= SHRINK;
            if delta <= FEASIBLE_FLOOR * s.cap() {
                return Err(Error::ScheduleInfeasible {
                    index: s.index,
                    detail: "sigma estimate does not fall below omega after shrinking".into(),
                });
            }
            sigma = estimate_sigma(s, delta, cfg.grid_density, cfg.safety)?;
        }
        s.check_cap(delta, cfg.grid_density)?;
        rows.push(ScheduleRow {
            index: s.index,
            delta,
            cap: s.cap(),
            sigma,
            omega,
        });
    }
    Ok(DeltaSchedule {
        lo: first.index,
        rows,
        certified: true,
    })
}
