use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::ChartedStep;
use super::rates::IndexRates;
use super::schedule::DeltaSchedule;
use crate::error::{Error, Result};

/// Piecewise-linear `φ: [-δ, δ] → E^s` on `M + 1` equispaced nodes (`M` even).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LipschitzGraph {
    pub index: i64,
    pub radius: f64,
    pub values: Vec<f64>,
}

impl LipschitzGraph {
    pub fn zero(index: i64, radius: f64, intervals: usize) -> Self {
        Self {
            index,
            radius,
            values: vec![0.0; intervals + 1],
        }
    }

    pub fn from_fn<F: Fn(f64) -> f64>(index: i64, radius: f64, intervals: usize, f: F) -> Self {
        let mut g = Self::zero(index, radius, intervals);
        for k in 0..=intervals {
            g.values[k] = f(g.node(k));
        }
        g.values[intervals / 2] = 0.0;
        g
    }

    /// Smooth random member of the admissible set: `0.9α Σ c_j (δ/(jπ)) sin(jπw/δ)`, `Σ|c_j| ≤ 1`.
    pub fn random<R: Rng>(index: i64, radius: f64, intervals: usize, alpha: f64, rng: &mut R) -> Self {
        let modes = 4;
        let mut c: Vec<f64> = (0..modes).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let total: f64 = c.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1.0);
        for x in &mut c {
            *x /= total;
        }
        let a = 0.9 * alpha.min(1.0);
        Self::from_fn(index, radius, intervals, |w| {
            c.iter()
                .enumerate()
                .map(|(j, cj)| {
                    let k = (j + 1) as f64 * std::f64::consts::PI;
                    a * cj * radius / k * (k * w / radius).sin()
                })
                .sum()
        })
    }

    pub fn intervals(&self) -> usize {
        self.values.len() - 1
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.radius / self.intervals() as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        let m = self.intervals();
        if 2 * k == m {
            return 0.0;
        }
        -self.radius + 2.0 * self.radius * k as f64 / m as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.node(k)).collect()
    }

    /// Piecewise-linear evaluation; clamps outside `[-δ, δ]`.
    pub fn eval(&self, w: f64) -> f64 {
        let m = self.intervals();
        let t = ((w + self.radius) / self.spacing()).clamp(0.0, m as f64);
        let k = (t.floor() as usize).min(m - 1);
        let s = t - k as f64;
        let (a, b) = (self.values[k], self.values[k + 1]);
        if s == 0.0 {
            a
        } else if s == 1.0 {
            b
        } else {
            a + s * (b - a)
        }
    }

    pub fn lipschitz(&self) -> f64 {
        let h = self.spacing();
        self.values
            .windows(2)
            .map(|p| (p[1] - p[0]).abs() / h)
            .fold(0.0, f64::max)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `|φ'(0)|` by a central difference over one grid spacing.
    pub fn slope_at_zero(&self) -> f64 {
        let c = self.intervals() / 2;
        (self.values[c + 1] - self.values[c - 1]).abs() / (2.0 * self.spacing())
    }
}

/// `sup_{x ≠ 0} |φ(x) − ψ(x)| / |x|` over grid nodes of matching graphs.
pub fn graph_distance(a: &LipschitzGraph, b: &LipschitzGraph) -> f64 {
    let mut d = 0.0f64;
    for k in 0..=a.intervals() {
        let x = a.node(k);
        if x != 0.0 {
            d = d.max((a.values[k] - b.eval(x)).abs() / x.abs());
        }
    }
    d
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepStats {
    /// Smallest chord slope of `r_n` on the grid, in absolute value.
    pub min_expansion: f64,
    pub expansion_bound: f64,
    pub lipschitz: f64,
    pub sup_norm: f64,
}

const ROOT_TOL: f64 = 1e-14;
const RELATIVE_SLACK: f64 = 1e-9;

/// Root of the strictly monotone `r` on `[lo, hi]` with `r(lo) ≤ target ≤ r(hi)`
/// (after sign normalization), by the Illinois variant of regula falsi.
fn invert_monotone<F: Fn(f64) -> Result<f64>>(r: &F, target: f64, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut flo = r(lo)? - target;
    let mut fhi = r(hi)? - target;
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    let mut side = 0i8;
    for _ in 0..200 {
        if (hi - lo).abs() <= ROOT_TOL {
            break;
        }
        let mut x = (lo * fhi - hi * flo) / (fhi - flo);
        if !(x > lo && x < hi) {
            x = 0.5 * (lo + hi);
        }
        let fx = r(x)? - target;
        if fx == 0.0 {
            return Ok(x);
        }
        if (fx < 0.0) == (flo < 0.0) {
            lo = x;
            flo = fx;
            if side == -1 {
                fhi *= 0.5;
            }
            side = -1;
        } else {
            hi = x;
            fhi = fx;
            if side == 1 {
                flo *= 0.5;
            }
            side = 1;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// One graph-transform step: `ψ_{n+1}(w') = F_ss φ(w) + a(φ(w), w)` where
/// `r(w) = F_uu w + b(φ(w), w) = w'`.
pub fn graph_transform_step(
    phi: &LipschitzGraph,
    step: &ChartedStep,
    rates: &IndexRates,
    alpha: f64,
    delta_next: f64,
) -> Result<(LipschitzGraph, StepStats)> {
    let n = step.index;
    let m = phi.intervals();
    let r = |w: f64| -> Result<f64> {
        let v = phi.eval(w);
        Ok(step.apply(v, w)?.1)
    };
    let nodes = phi.nodes();
    let r_nodes: Vec<f64> = nodes.iter().map(|&w| r(w)).collect::<Result<_>>()?;
    let bound = 1.0 / rates.kappa - rates.omega * (1.0 + alpha);
    let h = phi.spacing();
    let min_expansion = r_nodes
        .windows(2)
        .map(|p| (p[1] - p[0]).abs() / h)
        .fold(f64::INFINITY, f64::min);
    if min_expansion < bound * (1.0 - RELATIVE_SLACK) {
        return Err(Error::ContractViolation {
            index: n,
            detail: format!("r_n chord expansion {min_expansion:e} below bound {bound:e}"),
        });
    }
    let increasing = r_nodes[m] > r_nodes[0];
    let (low, high) = if increasing {
        (r_nodes[0], r_nodes[m])
    } else {
        (r_nodes[m], r_nodes[0])
    };
    if low > -delta_next || high < delta_next {
        return Err(Error::Coverage {
            index: n,
            low,
            high,
            needed: delta_next,
        });
    }
    let out_nodes: Vec<f64> = LipschitzGraph::zero(n + 1, delta_next, m).nodes();
    let values: Vec<f64> = out_nodes
        .par_iter()
        .map(|&target| -> Result<f64> {
            // bracket between consecutive nodes, then refine
            let k = match r_nodes.iter().position(|&x| x == target) {
                Some(k) => return psi_at(step, phi, nodes[k]),
                None => {
                    let idx = r_nodes.partition_point(|&x| if increasing { x < target } else { x > target });
                    idx.clamp(1, m)
                }
            };
            let (a, b) = (nodes[k - 1], nodes[k]);
            let w = if increasing {
                invert_monotone(&r, target, a, b)?
            } else {
                invert_monotone(&|x| r(x).map(|y| -y), -target, a, b)?
            };
            psi_at(step, phi, w)
        })
        .collect::<Result<_>>()?;
    let mut psi = LipschitzGraph {
        index: n + 1,
        radius: delta_next,
        values,
    };
    // r(0) = 0 and a(0, 0) = 0 make this exact already; pin it against rounding in the root finder
    psi.values[m / 2] = psi_at(step, phi, 0.0)?;
    let lipschitz = psi.lipschitz();
    let sup_norm = psi.sup_norm();
    if lipschitz > alpha * (1.0 + RELATIVE_SLACK) {
        return Err(Error::ContractViolation {
            index: n,
            detail: format!("psi Lipschitz constant {lipschitz:e} exceeds alpha {alpha:e}"),
        });
    }
    if sup_norm > delta_next * (1.0 + RELATIVE_SLACK) {
        return Err(Error::ContractViolation {
            index: n,
            detail: format!("psi leaves the stable ball: {sup_norm:e} > {delta_next:e}"),
        });
    }
    Ok((
        psi,
        StepStats {
            min_expansion,
            expansion_bound: bound,
            lipschitz,
            sup_norm,
        },
    ))
}

fn psi_at(step: &ChartedStep, phi: &LipschitzGraph, w: f64) -> Result<f64> {
    Ok(step.apply(phi.eval(w), w)?.0)
}

/// `|(exact transform − PL interpolation)(w)| / |w|` at the midpoints of the output grid.
pub fn interpolation_defect(
    phi: &LipschitzGraph,
    psi: &LipschitzGraph,
    step: &ChartedStep,
) -> Result<f64> {
    let r = |w: f64| -> Result<f64> { Ok(step.apply(phi.eval(w), w)?.1) };
    let h = psi.spacing();
    let mut worst = 0.0f64;
    for k in 0..psi.intervals() {
        let target = psi.node(k) + 0.5 * h;
        if target == 0.0 {
            continue;
        }
        let (lo, hi) = (-phi.radius, phi.radius);
        let increasing = r(hi)? > r(lo)?;
        let w = if increasing {
            invert_monotone(&r, target, lo, hi)?
        } else {
            invert_monotone(&|x| r(x).map(|y| -y), -target, lo, hi)?
        };
        let exact = psi_at(step, phi, w)?;
        worst = worst.max((exact - psi.eval(target)).abs() / target.abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphFamily {
    pub lo: i64,
    pub graphs: Vec<LipschitzGraph>,
    /// `d_Γ` between the last two iterates.
    pub metric_value: f64,
}

impl GraphFamily {
    pub fn zero(schedule: &DeltaSchedule, intervals: usize) -> Self {
        Self {
            lo: schedule.lo,
            graphs: schedule
                .rows
                .iter()
                .map(|r| LipschitzGraph::zero(r.index, r.delta, intervals))
                .collect(),
            metric_value: f64::INFINITY,
        }
    }

    pub fn at(&self, n: i64) -> Result<&LipschitzGraph> {
        let k = n - self.lo;
        if k < 0 || k as usize >= self.graphs.len() {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.lo.abs().max(self.lo + self.graphs.len() as i64 - 1),
            });
        }
        Ok(&self.graphs[k as usize])
    }

    pub fn hi(&self) -> i64 {
        self.lo + self.graphs.len() as i64 - 1
    }

    pub fn distance(&self, other: &GraphFamily) -> f64 {
        self.graphs
            .iter()
            .zip(&other.graphs)
            .map(|(a, b)| graph_distance(a, b))
            .fold(0.0, f64::max)
    }
}

/// Window operator: graph at the first index reset to zero, `ψ_{n+1}` from `φ_n` elsewhere.
pub fn apply_operator(
    family: &GraphFamily,
    steps: &[ChartedStep],
    rates: &[IndexRates],
    alpha: f64,
) -> Result<(GraphFamily, Vec<StepStats>)> {
    let count = family.graphs.len();
    let first = &family.graphs[0];
    let results: Vec<(LipschitzGraph, StepStats)> = (0..count - 1)
        .into_par_iter()
        .map(|k| {
            graph_transform_step(
                &family.graphs[k],
                &steps[k],
                &rates[k],
                alpha,
                family.graphs[k + 1].radius,
            )
        })
        .collect::<Result<_>>()?;
    let mut graphs = Vec::with_capacity(count);
    graphs.push(LipschitzGraph::zero(first.index, first.radius, first.intervals()));
    let mut stats = Vec::with_capacity(count - 1);
    for (g, s) in results {
        graphs.push(g);
        stats.push(s);
    }
    let mut next = GraphFamily {
        lo: family.lo,
        graphs,
        metric_value: 0.0,
    };
    next.metric_value = next.distance(family);
    Ok((next, stats))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedPointRun {
    pub family: GraphFamily,
    pub sweeps: usize,
    pub distance_trace: Vec<f64>,
    /// Ratios of successive step distances.
    pub contraction_trace: Vec<f64>,
    pub max_contraction: f64,
    pub stats: Vec<StepStats>,
}

/// Iterate the window operator from `init` until the step distance is at most `tol`.
pub fn fixed_point(
    init: GraphFamily,
    steps: &[ChartedStep],
    rates: &[IndexRates],
    alpha: f64,
    tol: f64,
    max_sweeps: usize,
) -> Result<FixedPointRun> {
    if steps.len() + 1 < init.graphs.len() || rates.len() + 1 < init.graphs.len() {
        return Err(Error::InvalidArgument("fewer steps than graph transitions".into()));
    }
    let mut current = init;
    let mut trace = Vec::new();
    for sweep in 1..=max_sweeps {
        let (next, stats) = apply_operator(&current, steps, rates, alpha)?;
        trace.push(next.metric_value);
        current = next;
        if current.metric_value <= tol {
            let contraction_trace: Vec<f64> = trace
                .windows(2)
                .filter(|p| p[0] > 0.0 && p[1] > 0.0)
                .map(|p| p[1] / p[0])
                .collect();
            let max_contraction = contraction_trace.iter().copied().fold(0.0, f64::max);
            return Ok(FixedPointRun {
                family: current,
                sweeps: sweep,
                distance_trace: trace,
                contraction_trace,
                max_contraction,
                stats,
            });
        }
    }
    Err(Error::NonConvergence {
        sweeps: max_sweeps,
        last: current.metric_value,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::rates::RateParams;
    use approx::assert_abs_diff_eq;

    fn rates(mu: f64, k_inv: f64) -> (IndexRates, f64) {
        let p = RateParams::defaults(mu.max(1.0 / k_inv));
        (IndexRates::new(0, mu, 1.0 / k_inv, &p).unwrap(), p.alpha())
    }

    #[test]
    fn linear_hand_substitution() {
        let step = ChartedStep::synthetic(0, 0.4, 2.5, None);
        let (r, alpha) = rates(0.4, 2.5);
        let phi = LipschitzGraph::from_fn(0, 0.2, 40, |w| 0.3 * w);
        let (psi, stats) = graph_transform_step(&phi, &step, &r, alpha, 0.2).unwrap();
        for k in 0..=40 {
            assert_abs_diff_eq!(psi.values[k], 0.048 * psi.node(k), epsilon = 1e-15);
        }
        assert_abs_diff_eq!(stats.min_expansion, 2.5, epsilon = 1e-12);
    }

    #[test]
    fn zero_graph_is_fixed_by_linear_steps() {
        let step = ChartedStep::synthetic(0, 0.4, 2.5, None);
        let (r, alpha) = rates(0.4, 2.5);
        let phi = LipschitzGraph::zero(0, 0.1, 20);
        let (psi, _) = graph_transform_step(&phi, &step, &r, alpha, 0.1).unwrap();
        assert!(psi.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn coverage_failure_detected() {
        let step = ChartedStep::synthetic(0, 0.4, 2.5, None);
        let (r, alpha) = rates(0.4, 2.5);
        let phi = LipschitzGraph::zero(0, 0.1, 20);
        assert!(matches!(
            graph_transform_step(&phi, &step, &r, alpha, 0.3),
            Err(Error::Coverage { .. })
        ));
    }

    #[test]
    fn pl_eval_hits_nodes() {
        let g = LipschitzGraph::from_fn(0, 1.0, 4, |w| w * w);
        assert_eq!(g.eval(0.5), 0.25);
        assert_eq!(g.eval(0.25), 0.125);
        assert_eq!(g.eval(-2.0), 1.0);
        assert_eq!(g.node(2), 0.0);
    }
}
