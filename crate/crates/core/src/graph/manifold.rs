use nalgebra::Vector2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::chart::ChartedStep;
use super::rates::{one_step_lambda, RateParams, RateTable};
use super::schedule::{schedule_deltas, DeltaSchedule, SigmaConfig};
use super::transform::{fixed_point, FixedPointRun, GraphFamily, LipschitzGraph};
use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::hyperbolicity::{AdaptedMetric, FramedOrbit};
use crate::torus::TorusPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Unstable,
    Stable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldConfig {
    /// Graphs live on indices `[-window, window]`.
    pub window: i64,
    /// Grid intervals `M` per graph (even).
    pub intervals: usize,
    pub split_depth: usize,
    pub split_tolerance: f64,
    /// Overrides the one-step `λ` measured on the window.
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub sigma: SigmaConfig,
    pub tol: f64,
    pub max_sweeps: usize,
    /// `ζ` of the adapted metric; default `(1 − λ)/2`.
    pub zeta: Option<f64>,
    pub adapted_depth: usize,
    /// Decay constant used for the adapted-metric tail.
    pub c: f64,
}

impl Default for ManifoldConfig {
    fn default() -> Self {
        Self {
            window: 8,
            intervals: 200,
            split_depth: 30,
            split_tolerance: 1e-6,
            lambda: None,
            gamma: None,
            lambda_tilde: None,
            sigma: SigmaConfig::default(),
            tol: 1e-10,
            max_sweeps: 200,
            zeta: None,
            adapted_depth: 40,
            c: 1.0,
        }
    }
}

impl ManifoldConfig {
    /// Family window needed by the orbit, its frames and the adapted metric.
    pub fn required_family_window(&self) -> i64 {
        self.window + 1 + (self.split_depth + self.adapted_depth) as i64
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if self.intervals < 2 || !self.intervals.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "grid intervals must be even and ≥ 2, got {}",
                self.intervals
            )));
        }
        if self.sigma.grid_density < 3 || self.sigma.grid_density.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "sigma grid density must be odd and ≥ 3, got {}",
                self.sigma.grid_density
            )));
        }
        Ok(())
    }

    fn params(&self, measured_lambda: f64) -> RateParams {
        let lambda = self.lambda.unwrap_or(measured_lambda);
        let d = RateParams::defaults(lambda);
        RateParams {
            lambda,
            gamma: self.gamma.unwrap_or(d.gamma),
            lambda_tilde: self.lambda_tilde.unwrap_or(d.lambda_tilde),
        }
    }
}

/// Anchor orbit of `p ∈ M_0` with frames on `[-N, N+1]` and charted steps on `[-N, N]`.
#[derive(Debug, Clone)]
pub struct ChartedOrbit {
    pub orbit: FramedOrbit,
    pub steps: Vec<ChartedStep>,
    pub window: i64,
}

impl ChartedOrbit {
    pub fn new(family: &NsdsFamily, p: &TorusPoint, window: i64, split_depth: usize, split_tolerance: f64) -> Result<Self> {
        if p.component != 0 {
            return Err(Error::ComponentMismatch {
                expected: 0,
                got: p.component,
            });
        }
        let need = window + 1 + split_depth as i64;
        if family.window() < need {
            return Err(Error::WindowExceeded {
                index: need,
                window: family.window(),
            });
        }
        let orbit = FramedOrbit::new(family, p, -window, window + 1, split_depth, split_tolerance)?;
        let steps = (-window..=window)
            .into_par_iter()
            .map(|k| ChartedStep::build(family, &orbit, k))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { orbit, steps, window })
    }

    pub fn step(&self, n: i64) -> Result<&ChartedStep> {
        let k = n + self.window;
        if k < 0 || k as usize >= self.steps.len() {
            return Err(Error::WindowExceeded {
                index: n,
                window: self.window,
            });
        }
        Ok(&self.steps[k as usize])
    }
}

/// Charted orbit plus the certified rate table.
#[derive(Debug, Clone)]
pub struct AnchorContext {
    pub charted: ChartedOrbit,
    pub rates: RateTable,
    pub window: i64,
}

impl AnchorContext {
    pub fn new(family: &NsdsFamily, p: &TorusPoint, cfg: &ManifoldConfig) -> Result<Self> {
        cfg.validate()?;
        let charted = ChartedOrbit::new(family, p, cfg.window, cfg.split_depth, cfg.split_tolerance)?;
        let rates = RateTable::from_steps(&charted.steps, cfg.params(one_step_lambda(&charted.steps)))?;
        Ok(Self {
            charted,
            rates,
            window: cfg.window,
        })
    }

    pub fn step(&self, n: i64) -> Result<&ChartedStep> {
        self.charted.step(n)
    }

    pub fn orbit(&self) -> &FramedOrbit {
        &self.charted.orbit
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldCloud {
    pub index: i64,
    pub anchor: TorusPoint,
    pub w: Vec<f64>,
    pub phi: Vec<f64>,
    pub points: Vec<TorusPoint>,
    /// Unwrapped coordinates `p_n + Q_n (φ(w), w)` with `p_n ∈ [0,1)²`.
    pub lifted: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldProperties {
    pub anchor_exact: bool,
    /// Largest `|φ_n'(0)|` by central differences.
    pub tangency: f64,
    /// Largest vertical distance from preimages of `W_n` nodes to the graph at `n − 1`.
    pub backward_invariance: f64,
    /// Largest vertical distance from images of `W_n` nodes to the graph at `n + 1`.
    pub forward_residual: f64,
    pub grid_spacing: f64,
    pub invariance_ok: bool,
    /// Largest ratio of the observed backward distance to the contraction bound.
    pub contraction_ratio: f64,
    pub contraction_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldResult {
    pub side: Side,
    pub window: i64,
    pub intervals: usize,
    pub params: RateParams,
    pub alpha: f64,
    pub rates: RateTable,
    pub schedule: DeltaSchedule,
    pub run: FixedPointRun,
    pub clouds: Vec<ManifoldCloud>,
    pub properties: ManifoldProperties,
    /// `Δ_n` on `[-N, N]` (in the side's own indexing).
    pub deltas: Vec<f64>,
}

impl ManifoldResult {
    pub fn cloud(&self, n: i64) -> Result<&ManifoldCloud> {
        self.clouds
            .iter()
            .find(|c| c.index == n)
            .ok_or(Error::WindowExceeded {
                index: n,
                window: self.window,
            })
    }
}

/// Everything the fixed point needs, before the iteration itself.
pub struct Prepared {
    pub ctx: AnchorContext,
    pub schedule: DeltaSchedule,
}

pub fn prepare(family: &NsdsFamily, p: &TorusPoint, cfg: &ManifoldConfig) -> Result<Prepared> {
    let ctx = AnchorContext::new(family, p, cfg)?;
    let schedule = schedule_deltas(&ctx.charted.steps, &ctx.rates, &cfg.sigma)?;
    Ok(Prepared { ctx, schedule })
}

impl Prepared {
    pub fn zero_family(&self, intervals: usize) -> GraphFamily {
        GraphFamily::zero(&self.schedule, intervals)
    }

    pub fn run(&self, init: GraphFamily, cfg: &ManifoldConfig) -> Result<FixedPointRun> {
        fixed_point(
            init,
            &self.ctx.charted.steps,
            &self.ctx.rates.rows,
            self.ctx.rates.alpha,
            cfg.tol,
            cfg.max_sweeps,
        )
    }
}

fn cloud_for(ctx: &AnchorContext, g: &LipschitzGraph) -> Result<ManifoldCloud> {
    let n = g.index;
    let anchor = *ctx.orbit().point(n)?;
    let step = ctx.step(n)?;
    let base = anchor.as_vector();
    let mut points = Vec::with_capacity(g.values.len());
    let mut lifted = Vec::with_capacity(g.values.len());
    let w = g.nodes();
    for (k, &wk) in w.iter().enumerate() {
        let z: Vector2<f64> = base + step.to_tangent(g.values[k], wk);
        lifted.push([z[0], z[1]]);
        points.push(TorusPoint::from_lift(n, z));
    }
    Ok(ManifoldCloud {
        index: n,
        anchor,
        w,
        phi: g.values.clone(),
        points,
        lifted,
    })
}

/// Backward steps checked against the contraction bound, `k + 1 ≤ 8`. Longer
/// runs end on graphs next to the truncated boundary at `-N`.
const CONTRACTION_STEPS: i64 = 8;

fn properties(
    ctx: &AnchorContext,
    family: &NsdsFamily,
    graphs: &GraphFamily,
    deltas: &[f64],
) -> Result<ManifoldProperties> {
    let n_max = ctx.window;
    let mut anchor_exact = true;
    let mut tangency = 0.0f64;
    let mut backward = 0.0f64;
    let mut forward = 0.0f64;
    let mut spacing = 0.0f64;
    for g in &graphs.graphs {
        let n = g.index;
        let c = g.intervals() / 2;
        anchor_exact &= g.values[c] == 0.0 && g.node(c) == 0.0;
        tangency = tangency.max(g.slope_at_zero());
        spacing = spacing.max(g.spacing());
        if n > -n_max {
            let prev = graphs.at(n - 1)?;
            let step = ctx.step(n - 1)?;
            for (k, &wk) in g.nodes().iter().enumerate() {
                let (xs, xu) = step.apply_inverse(g.values[k], wk)?;
                if xu.abs() <= prev.radius {
                    backward = backward.max((xs - prev.eval(xu)).abs());
                }
            }
        }
        if n < n_max {
            let next = graphs.at(n + 1)?;
            let step = ctx.step(n)?;
            for (k, &wk) in g.nodes().iter().enumerate() {
                let (ys, yu) = step.apply(g.values[k], wk)?;
                if yu.abs() <= next.radius {
                    forward = forward.max((ys - next.eval(yu)).abs());
                }
            }
        }
    }

    // backward contraction: d(f^{-(k+1)} q, f^{-(k+1)} p_{n+1}) ≤ (2/Δ_{n+1}) τ_{n-k}⋯τ_n d(q, p_{n+1})
    let mut ratio = 0.0f64;
    for g in &graphs.graphs {
        let m1 = g.index;
        if m1 <= -n_max {
            continue;
        }
        let delta = deltas[(m1 + n_max) as usize];
        let metric_norm = |idx: i64, v: f64, w: f64| -> Result<f64> {
            Ok(family.metric_at(idx)?.norm(&ctx.step(idx)?.to_tangent(v, w)))
        };
        let samples = g.intervals().min(16);
        for s in 0..=samples {
            let k = s * g.intervals() / samples;
            if 2 * k == g.intervals() {
                continue;
            }
            let d0 = metric_norm(m1, g.values[k], g.node(k))?;
            let mut x = (g.values[k], g.node(k));
            let mut prod = 1.0;
            let mut idx = m1;
            while idx > -n_max && m1 - idx < CONTRACTION_STEPS {
                x = ctx.step(idx - 1)?.apply_inverse(x.0, x.1)?;
                prod *= ctx.rates.at(idx - 1)?.tau;
                idx -= 1;
                let d = metric_norm(idx, x.0, x.1)?;
                let bound = 2.0 / delta * prod * d0;
                ratio = ratio.max(d / bound);
            }
        }
    }
    Ok(ManifoldProperties {
        anchor_exact,
        tangency,
        backward_invariance: backward,
        forward_residual: forward,
        grid_spacing: spacing,
        invariance_ok: backward <= 2.0 * spacing,
        contraction_ratio: ratio,
        contraction_ok: ratio <= 1.0 + 1e-6,
    })
}

/// `Δ_n` on `[-N, N]` from the adapted metric along the anchor orbit.
pub fn adapted_deltas(family: &NsdsFamily, ctx: &AnchorContext, cfg: &ManifoldConfig) -> Result<Vec<f64>> {
    let params = ctx.rates.params;
    let zeta = cfg.zeta.unwrap_or((1.0 - params.lambda) / 2.0);
    let adapted = AdaptedMetric::build(
        family,
        ctx.orbit(),
        cfg.c,
        params.lambda,
        zeta,
        cfg.adapted_depth,
        cfg.split_depth,
        1e-8,
    )?;
    (-cfg.window..=cfg.window).map(|n| adapted.delta_at(n)).collect()
}

/// Local unstable manifolds along the orbit of `p ∈ M_0` on indices `[-N, N]`.
pub fn unstable_manifold(family: &NsdsFamily, p: &TorusPoint, cfg: &ManifoldConfig) -> Result<ManifoldResult> {
    if family.window() < cfg.required_family_window() {
        return Err(Error::WindowExceeded {
            index: cfg.required_family_window(),
            window: family.window(),
        });
    }
    let prep = prepare(family, p, cfg)?;
    let run = prep.run(prep.zero_family(cfg.intervals), cfg)?;
    let ctx = &prep.ctx;
    let params = ctx.rates.params;
    let deltas = adapted_deltas(family, ctx, cfg)?;
    let clouds = run
        .family
        .graphs
        .iter()
        .map(|g| cloud_for(ctx, g))
        .collect::<Result<Vec<_>>>()?;
    let properties = properties(ctx, family, &run.family, &deltas)?;
    Ok(ManifoldResult {
        side: Side::Unstable,
        window: cfg.window,
        intervals: cfg.intervals,
        params,
        alpha: ctx.rates.alpha,
        rates: ctx.rates.clone(),
        schedule: prep.schedule,
        run,
        clouds,
        properties,
        deltas,
    })
}

/// Local stable manifolds: unstable manifolds of the reflected inverse family,
/// relabelled so that index `n` is the component of `f^n(p)`.
pub fn stable_manifold(family: &NsdsFamily, p: &TorusPoint, cfg: &ManifoldConfig) -> Result<ManifoldResult> {
    let reflected = family.reflected()?;
    let mut res = unstable_manifold(&reflected, p, cfg)?;
    res.side = Side::Stable;
    for c in &mut res.clouds {
        let n = -c.index;
        c.index = n;
        c.anchor.component = n;
        for q in &mut c.points {
            q.component = n;
        }
    }
    res.clouds.reverse();
    res.deltas.reverse();
    Ok(res)
}
