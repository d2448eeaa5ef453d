use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::graph::ChartedOrbit;
use crate::torus::TorusPoint;

/// Distances below this are treated as rounding noise.
pub const UNDERFLOW: f64 = 1e-14;

/// How the second orbit is followed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum Companion {
    /// A point of `M_0`, iterated with the family itself.
    Point { x: f64, y: f64 },
    /// A displacement from the anchor in frame coordinates `(stable, unstable)`,
    /// iterated with the charted steps.
    Frame { v: f64, w: f64 },
    /// A displacement from the anchor in standard tangent coordinates.
    Tangent { dx: f64, dy: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    /// `log d_n` for `n = 0, 1, …` until underflow or the horizon.
    pub log_distances: Vec<f64>,
    pub underflow: bool,
    /// Every computed iterate stayed in its ball.
    pub ball_respected: bool,
    pub first_exit: Option<usize>,
    /// Tail slope: `max_{n0 < n ≤ L} (log d_n − log d_{n0})/(n − n0)`, `n0 = ⌈L/2⌉`.
    pub slope: Option<f64>,
}

impl Trace {
    fn from_distances(distances: &[f64], radii: &[f64]) -> Self {
        let mut logs = Vec::with_capacity(distances.len());
        let mut underflow = false;
        let mut first_exit = None;
        for (k, (&d, &r)) in distances.iter().zip(radii).enumerate() {
            if first_exit.is_none() && !(d < r) {
                first_exit = Some(k);
            }
            if d < UNDERFLOW {
                underflow = true;
                break;
            }
            logs.push(d.ln());
        }
        let slope = tail_slope(&logs);
        Self {
            log_distances: logs,
            underflow,
            ball_respected: first_exit.is_none(),
            first_exit,
            slope,
        }
    }

    /// Negative exponential rate, or decay to the rounding floor.
    pub fn decays(&self) -> bool {
        self.underflow || self.slope.is_some_and(|s| s < 0.0)
    }
}

/// Scale-invariant finite-window stand-in for `limsup (1/n) log d_n`.
pub fn tail_slope(logs: &[f64]) -> Option<f64> {
    if logs.len() < 2 {
        return None;
    }
    let last = logs.len() - 1;
    let n0 = last.div_ceil(2).min(last - 1);
    (n0 + 1..=last)
        .map(|n| (logs[n] - logs[n0]) / (n - n0) as f64)
        .reduce(f64::max)
}

/// Ordinary least-squares slope of `log d_n` against `n` over the tail half.
pub fn least_squares_tail_slope(logs: &[f64]) -> Option<f64> {
    if logs.len() < 3 {
        return None;
    }
    let last = logs.len() - 1;
    let n0 = last / 2;
    let xs: Vec<f64> = (n0..=last).map(|n| n as f64).collect();
    let ys = &logs[n0..=last];
    let mx = xs.iter().sum::<f64>() / xs.len() as f64;
    let my = ys.iter().sum::<f64>() / ys.len() as f64;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayReport {
    pub companion: Companion,
    pub horizon: usize,
    pub forward: Trace,
    pub backward: Trace,
    /// Finite-window stand-in for `Θ_{p,q}` (forward).
    pub theta_estimate: Option<f64>,
    /// Finite-window stand-in for `Ω_{p,q}` (backward).
    pub omega_estimate: Option<f64>,
    pub coincident: bool,
    pub in_stable_set: bool,
    pub in_unstable_set: bool,
}

/// Compare the orbit of a companion with the anchor orbit for `horizon` steps
/// in each direction. `eps(n)` is the ball radius at component `n`.
pub fn decay_report<E: Fn(i64) -> f64>(
    family: &NsdsFamily,
    charts: &ChartedOrbit,
    companion: Companion,
    eps: E,
    horizon: usize,
) -> Result<DecayReport> {
    let h = horizon as i64;
    if h > charts.window {
        return Err(Error::WindowExceeded {
            index: h,
            window: charts.window,
        });
    }
    let radii_f: Vec<f64> = (0..=h).map(&eps).collect();
    let radii_b: Vec<f64> = (0..=h).map(|k| eps(-k)).collect();
    let (fwd, bwd) = match companion {
        Companion::Point { x, y } => {
            let q = TorusPoint::new(0, x, y);
            let qf = family.orbit(0, h, &q)?;
            let qb = family.orbit(0, -h, &q)?;
            let df = (0..=h)
                .map(|k| family.distance(charts.orbit.point(k)?, &qf[k as usize]))
                .collect::<Result<Vec<_>>>()?;
            let db = (0..=h)
                .map(|k| family.distance(charts.orbit.point(-k)?, &qb[k as usize]))
                .collect::<Result<Vec<_>>>()?;
            (df, db)
        }
        Companion::Frame { v, w } => frame_distances(family, charts, (v, w), h)?,
        Companion::Tangent { dx, dy } => {
            let x = charts.step(0)?.from_tangent(&Vector2::new(dx, dy));
            frame_distances(family, charts, x, h)?
        }
    };
    let coincident = fwd[0] == 0.0;
    let forward = Trace::from_distances(&fwd, &radii_f);
    let backward = Trace::from_distances(&bwd, &radii_b);
    let in_stable_set = coincident || (forward.ball_respected && forward.decays());
    let in_unstable_set = coincident || (backward.ball_respected && backward.decays());
    Ok(DecayReport {
        companion,
        horizon,
        theta_estimate: forward.slope,
        omega_estimate: backward.slope,
        forward,
        backward,
        coincident,
        in_stable_set,
        in_unstable_set,
    })
}

/// Torus distances of a charted displacement along the anchor orbit.
fn frame_distances(
    family: &NsdsFamily,
    charts: &ChartedOrbit,
    x0: (f64, f64),
    h: i64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let dist = |n: i64, x: (f64, f64)| -> Result<f64> {
        let g = family.metric_at(n)?;
        let d = charts.step(n)?.to_tangent(x.0, x.1);
        Ok(g.norm(&g.nearest_lift(&d)))
    };
    let mut fwd = vec![dist(0, x0)?];
    let mut x = x0;
    for k in 0..h {
        x = charts.step(k)?.apply(x.0, x.1)?;
        fwd.push(dist(k + 1, x)?);
    }
    let mut bwd = vec![fwd[0]];
    let mut x = x0;
    for k in 0..h {
        x = charts.step(-k - 1)?.apply_inverse(x.0, x.1)?;
        bwd.push(dist(-k - 1, x)?);
    }
    Ok((fwd, bwd))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn slope_is_scale_invariant() {
        let logs: Vec<f64> = (0..21).map(|n| -0.9 * n as f64 + 0.1 * (n as f64).sin()).collect();
        let shifted: Vec<f64> = logs.iter().map(|l| l + 4f64.ln()).collect();
        assert_abs_diff_eq!(tail_slope(&logs).unwrap(), tail_slope(&shifted).unwrap(), epsilon = 1e-12);
        let line: Vec<f64> = (0..11).map(|n| -0.5 * n as f64 + 3.0).collect();
        assert_abs_diff_eq!(least_squares_tail_slope(&line).unwrap(), -0.5, epsilon = 1e-12);
        assert_eq!(tail_slope(&[1.0]), None);
    }
}
