use serde::{Deserialize, Serialize};

use super::splitting::{stretch_factors, SplittingFrame};
use crate::error::{Error, Result};
use crate::family::NsdsFamily;

/// Relative allowance for rounding in `‖Df^n v‖ ≤ cλⁿ‖v‖`.
const ROUNDING: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnosovCertificate {
    pub c: f64,
    pub lambda: f64,
    pub horizon: usize,
    pub samples_checked: usize,
    /// Largest `‖Df^n v‖ − cλⁿ` over samples, both time directions.
    pub max_violation: f64,
    pub window_used: i64,
    pub passes: bool,
}

/// Check the two decay inequalities for `1 ≤ n ≤ horizon` at every frame.
/// `‖Df^n e_s‖` is the product of one-step stretch factors along the stable
/// line, each evaluated on a direction iterated against the expansion; the
/// power-iteration depth is the frame's own.
pub fn verify_anosov(
    family: &NsdsFamily,
    frames: &[SplittingFrame],
    c: f64,
    lambda: f64,
    horizon: usize,
) -> Result<AnosovCertificate> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidArgument(format!("lambda {lambda} outside (0,1)")));
    }
    if !(c >= 1.0) {
        return Err(Error::InvalidArgument(format!("c {c} below 1")));
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut window_used = 0i64;
    for fr in frames {
        let i = fr.point.component;
        let h = horizon as i64;
        let reach = h + fr.depth as i64;
        window_used = window_used.max((i + reach).abs()).max((i - reach).abs());
        let (fwd, bwd) = if fr.depth == 0 {
            pushed_factors(family, fr, horizon)?
        } else {
            // products of one-step factors along the invariant lines
            (
                stretch_factors(family, i, &fr.point, horizon, fr.depth, true)?,
                stretch_factors(family, i, &fr.point, horizon, fr.depth, false)?,
            )
        };
        let (mut vs, mut vu, mut bound) = (1.0, 1.0, c);
        for (a, b) in fwd.iter().zip(&bwd) {
            bound *= lambda;
            vs *= a;
            vu *= b;
            max_violation = max_violation
                .max(vs - bound - ROUNDING * bound)
                .max(vu - bound - ROUNDING * bound);
        }
    }
    if frames.is_empty() || horizon == 0 {
        max_violation = 0.0;
    }
    Ok(AnosovCertificate {
        c,
        lambda,
        horizon,
        samples_checked: frames.len(),
        max_violation,
        window_used,
        passes: max_violation <= 0.0,
    })
}

/// One-step factors of the frame's own vectors, pushed directly. Used for
/// frames supplied analytically rather than by power iteration.
fn pushed_factors(family: &NsdsFamily, fr: &SplittingFrame, horizon: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    let i = fr.point.component;
    let h = horizon as i64;
    let fwd_pts = family.orbit(i, h, &fr.point)?;
    let bwd_pts = family.orbit(i, -h, &fr.point)?;
    let (mut v, mut w) = (fr.stable(), fr.unstable());
    let (mut fwd, mut bwd) = (Vec::with_capacity(horizon), Vec::with_capacity(horizon));
    for n in 1..=horizon {
        let k = n as i64;
        let before = family.metric_at(i + k - 1)?.norm(&v);
        v = family.map_at(i + k - 1)?.jacobian(&fwd_pts[n - 1].as_vector())? * v;
        fwd.push(family.metric_at(i + k)?.norm(&v) / before);
        let before = family.metric_at(i - k + 1)?.norm(&w);
        let jb = family.map_at(i - k)?.jacobian(&bwd_pts[n].as_vector())?;
        w = jb
            .try_inverse()
            .ok_or_else(|| Error::InvalidMap(format!("singular Jacobian at index {}", i - k)))?
            * w;
        bwd.push(family.metric_at(i - k)?.norm(&w) / before);
    }
    Ok((fwd, bwd))
}

/// Least `n ≥ 1` with `cλⁿ ≤ λ`.
pub fn minimal_gathering_length(c: f64, lambda: f64) -> Result<u32> {
    if !(lambda > 0.0 && lambda < 1.0) || !(c >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "need c ≥ 1 and λ in (0,1), got c={c}, λ={lambda}"
        )));
    }
    let mut n = 1u32;
    let mut v = c * lambda;
    while v > lambda {
        n += 1;
        v *= lambda;
    }
    Ok(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gathering_length_scan() {
        assert_eq!(minimal_gathering_length(1.0, 0.3).unwrap(), 1);
        // 3·0.5² = 0.75 > 0.5, 3·0.5³ = 0.375 ≤ 0.5
        assert_eq!(minimal_gathering_length(3.0, 0.5).unwrap(), 3);
        assert!(minimal_gathering_length(0.5, 0.5).is_err());
    }
}
