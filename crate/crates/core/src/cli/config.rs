//! Scenario configuration: built-in presets and a flat dotted-key TOML file.
//!
//! ```toml
//! model.horizon = 50
//! model.dt = 1.0
//! model.accel_scale = 9.8
//! initial.states = [[0.0, 240.0, 10000.0, 0.0]]
//! destination.points = [[12000.0, 0.0]]
//! destination.theta_deg = 90.0
//! run.trajectories = 8
//! run.seed = 42
//! run.weight_mode = "optimal"
//! run.radial_mode = "uniform_ball"
//! run.relaxed = true
//! ```

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::Deserialize;

use crate::constraint::{heading_constraint, DestinationConstraint};
use crate::dynamics::{cv_noise_shape, cv_transition, SystemModel};
use crate::ellipsoid::RadialMode;
use crate::error::{Error, Result};
use crate::weights::WeightMode;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig8,
    Fig9,
    Fig10,
}

impl Preset {
    pub const ALL: [Preset; 5] = [Preset::Fig2, Preset::Fig3, Preset::Fig8, Preset::Fig9, Preset::Fig10];

    pub fn name(&self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig8 => "fig8",
            Preset::Fig9 => "fig9",
            Preset::Fig10 => "fig10",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown preset `{s}` (expected fig2, fig3, fig8, fig9 or fig10)")))
    }
}

/// Process-noise description.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    /// Acceleration-driven CV template scaled by the accel scale.
    CvTemplate,
    /// The same 4×4 block at every step.
    Block(DMatrix<f64>),
    /// Full `4N × 4N` stacked shape.
    Stacked(DMatrix<f64>),
}

/// Constraint matrix used by the monotone-shrinkage check.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prop4Constraint {
    /// `D = I`, arrival at a full state.
    FullState,
    /// The scenario's heading constraint (non-square, so rejected).
    Scenario,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifySettings {
    pub propositions: Vec<u8>,
    pub competitors: usize,
    pub prop1_instances: usize,
    /// Multiplier applied to the optimal `W2` of the optimality candidate; `1` checks the optimum itself.
    pub w2_scale: f64,
    pub prop4_constraint: Prop4Constraint,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            propositions: vec![1, 2, 3, 4],
            competitors: 50,
            prop1_instances: 100,
            w2_scale: 1.0,
            prop4_constraint: Prop4Constraint::FullState,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    /// Stem of the output files.
    pub name: String,
    pub horizon: usize,
    pub dt: f64,
    pub accel: f64,
    /// Each origin is paired with each destination.
    pub origins: Vec<DVector<f64>>,
    pub destinations: Vec<(f64, f64)>,
    pub theta_deg: f64,
    /// Trajectories per (origin, destination) pair.
    pub trajectories: usize,
    pub seed: u64,
    pub weight_mode: WeightMode,
    pub radial_mode: RadialMode,
    /// Also roll out the unconstrained model under the same draws.
    pub relaxed: bool,
    /// Also roll out identity weights under the same draws.
    pub compare_identity: bool,
    pub noise: NoiseSpec,
    pub verify: VerifySettings,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "scenario".into(),
            horizon: 50,
            dt: 1.0,
            accel: 9.8,
            origins: vec![DVector::from_vec(vec![0.0, 240.0, 10_000.0, 0.0])],
            destinations: vec![(12_000.0, 0.0)],
            theta_deg: 90.0,
            trajectories: 8,
            seed: 42,
            weight_mode: WeightMode::Optimal,
            radial_mode: RadialMode::UniformBall,
            relaxed: true,
            compare_identity: false,
            noise: NoiseSpec::CvTemplate,
            verify: VerifySettings::default(),
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    model: Option<RawModel>,
    initial: Option<RawInitial>,
    destination: Option<RawDestination>,
    run: Option<RawRun>,
    noise: Option<RawNoise>,
    verify: Option<RawVerify>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    horizon: Option<usize>,
    dt: Option<f64>,
    accel_scale: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawInitial {
    states: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDestination {
    points: Option<Vec<Vec<f64>>>,
    theta_deg: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    trajectories: Option<usize>,
    seed: Option<u64>,
    weight_mode: Option<String>,
    radial_mode: Option<String>,
    relaxed: Option<bool>,
    compare_identity: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNoise {
    q_block: Option<Vec<Vec<f64>>>,
    q_w0: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawVerify {
    propositions: Option<Vec<u8>>,
    competitors: Option<usize>,
    prop1_instances: Option<usize>,
    w2_scale: Option<f64>,
    prop4_constraint: Option<String>,
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return Err(Error::Config(format!("{what} must be a non-empty square array of rows")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ScenarioConfig {
    pub fn preset(preset: Preset) -> Self {
        let base = Self {
            name: preset.name().into(),
            ..Self::default()
        };
        match preset {
            Preset::Fig2 => base,
            Preset::Fig3 => Self { theta_deg: 0.0, ..base },
            Preset::Fig8 => Self {
                relaxed: false,
                compare_identity: true,
                ..base
            },
            Preset::Fig9 => Self {
                origins: [10_000.0, 5_000.0, 15_000.0]
                    .iter()
                    .map(|&y| DVector::from_vec(vec![0.0, 240.0, y, 0.0]))
                    .collect(),
                trajectories: 5,
                relaxed: false,
                ..base
            },
            Preset::Fig10 => Self {
                destinations: vec![(12_000.0, 0.0), (9_000.0, 2_000.0), (15_000.0, -2_000.0)],
                trajectories: 5,
                relaxed: false,
                ..base
            },
        }
    }

    /// Overrides fields with the keys present in `text`.
    pub fn apply_toml(&mut self, text: &str) -> Result<()> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if let Some(name) = raw.name {
            self.name = name;
        }
        if let Some(m) = raw.model {
            self.horizon = m.horizon.unwrap_or(self.horizon);
            self.dt = m.dt.unwrap_or(self.dt);
            self.accel = m.accel_scale.unwrap_or(self.accel);
        }
        if let Some(states) = raw.initial.and_then(|i| i.states) {
            if states.iter().any(|s| s.len() != 4) {
                return Err(Error::Config("initial.states entries must have 4 components (x, vx, y, vy)".into()));
            }
            self.origins = states.into_iter().map(DVector::from_vec).collect();
        }
        if let Some(d) = raw.destination {
            if let Some(points) = d.points {
                if points.iter().any(|p| p.len() != 2) {
                    return Err(Error::Config("destination.points entries must be (x, y) pairs".into()));
                }
                self.destinations = points.into_iter().map(|p| (p[0], p[1])).collect();
            }
            self.theta_deg = d.theta_deg.unwrap_or(self.theta_deg);
        }
        if let Some(r) = raw.run {
            self.trajectories = r.trajectories.unwrap_or(self.trajectories);
            self.seed = r.seed.unwrap_or(self.seed);
            if let Some(w) = r.weight_mode {
                self.weight_mode = w.parse()?;
            }
            if let Some(m) = r.radial_mode {
                self.radial_mode = m.parse()?;
            }
            self.relaxed = r.relaxed.unwrap_or(self.relaxed);
            self.compare_identity = r.compare_identity.unwrap_or(self.compare_identity);
        }
        if let Some(n) = raw.noise {
            match (n.q_block, n.q_w0) {
                (Some(_), Some(_)) => return Err(Error::Config("give either noise.q_block or noise.q_w0, not both".into())),
                (Some(b), None) => self.noise = NoiseSpec::Block(matrix_from_rows(&b, "noise.q_block")?),
                (None, Some(q)) => self.noise = NoiseSpec::Stacked(matrix_from_rows(&q, "noise.q_w0")?),
                (None, None) => {}
            }
        }
        if let Some(v) = raw.verify {
            if let Some(p) = v.propositions {
                self.verify.propositions = p;
            }
            self.verify.competitors = v.competitors.unwrap_or(self.verify.competitors);
            self.verify.prop1_instances = v.prop1_instances.unwrap_or(self.verify.prop1_instances);
            self.verify.w2_scale = v.w2_scale.unwrap_or(self.verify.w2_scale);
            if let Some(c) = v.prop4_constraint {
                self.verify.prop4_constraint = match c.as_str() {
                    "full" => Prop4Constraint::FullState,
                    "scenario" => Prop4Constraint::Scenario,
                    other => return Err(Error::Config(format!("unknown verify.prop4_constraint `{other}`"))),
                };
            }
        }
        self.validate()
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        cfg.apply_toml(text)?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Config("model.horizon must be at least 1".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config("model.dt must be positive".into()));
        }
        if !self.accel.is_finite() {
            return Err(Error::Config("model.accel_scale must be finite".into()));
        }
        if self.trajectories == 0 {
            return Err(Error::Config("run.trajectories must be at least 1".into()));
        }
        if self.origins.is_empty() || self.destinations.is_empty() {
            return Err(Error::Config("need at least one initial state and one destination".into()));
        }
        if let WeightMode::Custom(_) = self.weight_mode {
            return Err(Error::Config("custom weights are only available through the library".into()));
        }
        if let Some(p) = self.verify.propositions.iter().find(|p| !(1..=4).contains(*p)) {
            return Err(Error::Config(format!("unknown proposition {p} (expected 1 to 4)")));
        }
        match &self.noise {
            NoiseSpec::Block(b) if b.nrows() != 4 => Err(Error::Config("noise.q_block must be 4x4".into())),
            NoiseSpec::Stacked(q) if q.nrows() != 4 * self.horizon => Err(Error::Config(format!(
                "noise.q_w0 must be {0}x{0} for horizon {1}",
                4 * self.horizon,
                self.horizon
            ))),
            _ => Ok(()),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta_deg.to_radians()
    }

    /// Per-step noise block, when the noise is block diagonal.
    pub fn noise_block(&self) -> Option<DMatrix<f64>> {
        match &self.noise {
            NoiseSpec::CvTemplate => Some(cv_noise_shape(self.dt, self.accel)),
            NoiseSpec::Block(b) => Some(b.clone()),
            NoiseSpec::Stacked(_) => None,
        }
    }

    pub fn system(&self) -> Result<SystemModel> {
        let f = cv_transition(self.dt);
        let model = match &self.noise {
            NoiseSpec::Stacked(q) => SystemModel::new(vec![f; self.horizon], q.clone()),
            _ => SystemModel::time_invariant(f, self.noise_block().expect("block noise"), self.horizon),
        };
        model.map_err(|e| Error::Config(format!("noise model rejected: {e}")))
    }

    pub fn constraint(&self, destination: (f64, f64)) -> DestinationConstraint {
        heading_constraint(destination.0, destination.1, self.theta())
    }
}
