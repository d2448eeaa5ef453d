//! Scenario files: a TOML description of a family plus run settings.
//!
//! Unknown keys are rejected at every level. After parsing, every optional
//! field is filled in so the resolved scenario can be embedded in reports.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::NsdsFamily;
use crate::graph::{ManifoldConfig, SigmaConfig};
use crate::laws::{scaled_eigen_metric, skewed_eigen_metric, Eigenbasis, ZetaLaw};
use crate::map::{IntMatrix, PerturbationTerm, StepMap, TorusMap};
use crate::orbit::Companion;
use crate::torus::{MetricTensor, TorusPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    pub family: FamilySpec,
    #[serde(default)]
    pub run: RunSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub params: FreeParams,
    #[serde(default)]
    pub pairs: Vec<Companion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub linear: IntMatrix,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub terms: Vec<PerturbationTerm>,
    #[serde(default)]
    pub metric: MetricLaw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
pub enum MetricLaw {
    /// The same symmetric matrix on every component.
    Constant { matrix: [[f64; 2]; 2] },
    /// `a^{2i}` on the stable and `b^{2i}` on the unstable eigenline for `i ≥ 0`, flat for `i < 0`.
    ScaledEigen { a: f64, b: f64 },
    /// Unit eigenvectors with `cos θ_i = ζ_i`.
    SkewedEigen { zeta: ZetaLaw },
}

impl Default for MetricLaw {
    fn default() -> Self {
        MetricLaw::Constant {
            matrix: [[1.0, 0.0], [0.0, 1.0]],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSpec {
    /// Graph window `N`.
    pub window: i64,
    /// Grid intervals `M`.
    pub grid: usize,
    pub anchor: [f64; 2],
    /// Horizon of the Anosov check and of decay traces.
    pub horizon: usize,
    /// Points sampled from each manifold for the set-membership check.
    pub samples: usize,
    /// Extra seeded orbits whose frames enter the angle sequence.
    pub angle_orbits: usize,
    pub split_depth: usize,
    pub adapted_depth: usize,
    pub max_sweeps: usize,
}

impl Default for RunSpec {
    fn default() -> Self {
        Self {
            window: 8,
            grid: 200,
            anchor: [0.0, 0.0],
            horizon: 10,
            samples: 50,
            angle_orbits: 4,
            split_depth: 30,
            adapted_depth: 40,
            max_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub fixed_point: f64,
    pub splitting_residual: f64,
    /// Margin of the angle property.
    pub angle_margin: f64,
    /// Slack on `Ω̃, Θ̃ ≥ 0` in the coincidence check.
    pub coincidence: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            fixed_point: 1e-10,
            splitting_residual: 1e-6,
            angle_margin: 1e-6,
            coincidence: 1e-9,
        }
    }
}

/// Free constants; `None` means "use the default derived from the measured λ".
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreeParams {
    pub c: f64,
    pub lambda: Option<f64>,
    pub gamma: Option<f64>,
    pub lambda_tilde: Option<f64>,
    pub zeta: Option<f64>,
    pub safety: f64,
    pub sigma_grid: usize,
}

impl Default for FreeParams {
    fn default() -> Self {
        let s = SigmaConfig::default();
        Self {
            c: 1.0,
            lambda: None,
            gamma: None,
            lambda_tilde: None,
            zeta: None,
            safety: s.safety,
            sigma_grid: s.grid_density,
        }
    }
}

impl Scenario {
    /// Parse and validate; parse errors carry the TOML line and column.
    pub fn from_toml(text: &str) -> Result<Self> {
        let s: Scenario = toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("scenario: {e}")))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.run.window < 2 {
            return bad(format!("run.window must be at least 2, got {}", self.run.window));
        }
        if self.run.grid < 16 || !self.run.grid.is_multiple_of(2) {
            return bad(format!("run.grid must be even and at least 16, got {}", self.run.grid));
        }
        if self.run.horizon == 0 || self.run.samples == 0 {
            return bad("run.horizon and run.samples must be positive".into());
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("fixed_point", t.fixed_point),
            ("splitting_residual", t.splitting_residual),
            ("angle_margin", t.angle_margin),
            ("coincidence", t.coincidence),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return bad(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        let p = &self.params;
        if !(p.safety >= 1.0) {
            return bad(format!("params.safety must be at least 1, got {}", p.safety));
        }
        if !(p.c >= 1.0) {
            return bad(format!("params.c must be at least 1, got {}", p.c));
        }
        for (name, v) in [("lambda", p.lambda), ("gamma", p.gamma), ("lambda_tilde", p.lambda_tilde)] {
            if let Some(v) = v {
                if !(v > 0.0 && v < 1.0) {
                    return bad(format!("params.{name} must lie in (0, 1), got {v}"));
                }
            }
        }
        if let Some(z) = p.zeta {
            if !(z > 0.0 && z < 1.0) {
                return bad(format!("params.zeta must lie in (0, 1), got {z}"));
            }
        }
        match &self.family.metric {
            MetricLaw::Constant { matrix } => {
                MetricTensor::new(nalgebra::Matrix2::new(matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]), 0)?;
            }
            MetricLaw::ScaledEigen { a, b } => {
                if !(*a > 0.0 && *b > 0.0) {
                    return bad(format!("scaled_eigen needs a, b > 0, got {a}, {b}"));
                }
            }
            MetricLaw::SkewedEigen { zeta } => zeta.validate()?,
        }
        TorusMap::new(self.family.linear, self.family.terms.clone(), self.family.epsilon)?;
        self.manifold_config().validate()
    }

    pub fn anchor(&self) -> TorusPoint {
        TorusPoint::new(0, self.run.anchor[0], self.run.anchor[1])
    }

    pub fn manifold_config(&self) -> ManifoldConfig {
        ManifoldConfig {
            window: self.run.window,
            intervals: self.run.grid,
            split_depth: self.run.split_depth,
            split_tolerance: self.tolerances.splitting_residual,
            lambda: self.params.lambda,
            gamma: self.params.gamma,
            lambda_tilde: self.params.lambda_tilde,
            sigma: SigmaConfig {
                grid_density: self.params.sigma_grid,
                safety: self.params.safety,
            },
            tol: self.tolerances.fixed_point,
            max_sweeps: self.run.max_sweeps,
            zeta: self.params.zeta,
            adapted_depth: self.run.adapted_depth,
            c: self.params.c,
        }
    }

    /// Family window large enough for every command.
    pub fn family_window(&self) -> i64 {
        let cfg = self.manifold_config();
        cfg.required_family_window()
            .max(self.run.horizon as i64 + 1 + self.run.split_depth as i64)
    }

    pub fn family(&self) -> Result<NsdsFamily> {
        self.family_with_window(self.family_window())
    }

    pub fn family_with_window(&self, window: i64) -> Result<NsdsFamily> {
        let map = StepMap::from(TorusMap::new(
            self.family.linear,
            self.family.terms.clone(),
            self.family.epsilon,
        )?);
        match &self.family.metric {
            MetricLaw::Constant { matrix } => {
                let g = MetricTensor::new(
                    nalgebra::Matrix2::new(matrix[0][0], matrix[0][1], matrix[1][0], matrix[1][1]),
                    0,
                )?;
                NsdsFamily::constant(map, g, window)
            }
            MetricLaw::ScaledEigen { a, b } => {
                let basis = Eigenbasis::of(&self.family.linear)?;
                NsdsFamily::from_laws(window, |_| Ok(map.clone()), |i| scaled_eigen_metric(&basis, *a, *b, i))
            }
            MetricLaw::SkewedEigen { zeta } => {
                let basis = Eigenbasis::of(&self.family.linear)?;
                NsdsFamily::from_laws(window, |_| Ok(map.clone()), |i| skewed_eigen_metric(&basis, zeta, i))
            }
        }
    }
}
