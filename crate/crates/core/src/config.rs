//! Experiment configuration files (TOML).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{build_grid, GridSpec};
use crate::oracles::taylor_green;
use crate::spectral::{box_mean, ScalarField, VectorField};

pub const DEFAULT_ETA: f64 = 1e-6;
pub const DEFAULT_T: f64 = 0.5;
pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_OUT_DIR: &str = "ptlab-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Poisson,
    Stokes,
    Nse,
}

impl Problem {
    pub fn name(self) -> &'static str {
        match self {
            Problem::Poisson => "poisson",
            Problem::Stokes => "stokes",
            Problem::Nse => "nse",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedForcing {
    /// `cos(pi x/L) cos(pi y/L)`, or `(cos(pi y/L), cos(pi x/L))` for vector
    /// problems.
    ZeroMeanTrig,
    /// `1`, or `(1, 0)`.
    Constant,
    Zero,
}

/// One Fourier mode `cos_amp cos(pi k.x/L) + sin_amp sin(pi k.x/L)` added to
/// velocity component `component` (1 or 2; scalar problems use 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForcingMode {
    pub k: [i64; 2],
    #[serde(default, rename = "cos")]
    pub cos_amp: f64,
    #[serde(default, rename = "sin")]
    pub sin_amp: f64,
    #[serde(default = "first_component")]
    pub component: u8,
}

fn first_component() -> u8 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomForcing {
    pub custom: Vec<ForcingMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ForcingSpec {
    Named(NamedForcing),
    Custom(CustomForcing),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialData {
    TaylorGreen,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NseSpec {
    #[serde(default = "default_u0")]
    pub u0: InitialData,
    #[serde(default = "default_t", rename = "T")]
    pub t_final: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
}

impl Default for NseSpec {
    fn default() -> Self {
        Self {
            u0: default_u0(),
            t_final: DEFAULT_T,
            dt: DEFAULT_DT,
        }
    }
}

fn default_u0() -> InitialData {
    InitialData::TaylorGreen
}

fn default_t() -> f64 {
    DEFAULT_T
}

fn default_dt() -> f64 {
    DEFAULT_DT
}

fn default_eta() -> f64 {
    DEFAULT_ETA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Problem,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "N")]
    pub n: usize,
    /// Strictly descending.
    pub radii: Vec<f64>,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forcing: Option<ForcingSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nse: Option<NseSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| LabError::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            LabError::Config(msg) => LabError::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable in TOML")
    }

    pub fn grid(&self) -> Result<GridSpec> {
        build_grid(self.half_width, self.n)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        let limit = grid.obstacle_limit();
        for (i, &r) in self.radii.iter().enumerate() {
            if !(r > 0.0 && r < limit) {
                return Err(LabError::Config(format!(
                    "radius {r} must lie in (0, {limit}) for L = {}",
                    self.half_width
                )));
            }
            if i > 0 && !(r < self.radii[i - 1]) {
                return Err(LabError::Config("radii must be strictly descending".into()));
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(LabError::Config(format!("eta must be positive, got {}", self.eta)));
        }
        if let Some(ForcingSpec::Custom(c)) = &self.forcing {
            for m in &c.custom {
                let max_component = if self.problem == Problem::Poisson { 1 } else { 2 };
                if m.component == 0 || m.component > max_component {
                    return Err(LabError::Config(format!(
                        "forcing component {} is out of range for {}",
                        m.component,
                        self.problem.name()
                    )));
                }
                if !(m.cos_amp.is_finite() && m.sin_amp.is_finite()) {
                    return Err(LabError::Config("forcing amplitudes must be finite".into()));
                }
            }
        }
        match (self.problem, &self.nse) {
            (Problem::Nse, spec) => {
                let spec = spec.clone().unwrap_or_default();
                if !(spec.dt > 0.0 && spec.t_final >= 0.0 && (spec.t_final == 0.0 || spec.dt <= spec.t_final)) {
                    return Err(LabError::Config(format!(
                        "nse needs dt > 0, T >= 0 and dt <= T, got dt = {}, T = {}",
                        spec.dt, spec.t_final
                    )));
                }
                if spec.u0 == InitialData::TaylorGreen {
                    taylor_green(0.0, &grid)?;
                }
            }
            (_, Some(_)) => {
                return Err(LabError::Config(format!(
                    "[nse] table is only valid for problem = \"nse\", not \"{}\"",
                    self.problem.name()
                )))
            }
            _ => {}
        }
        Ok(())
    }

    pub fn nse_spec(&self) -> NseSpec {
        self.nse.clone().unwrap_or_default()
    }

    pub fn forcing_spec(&self) -> ForcingSpec {
        self.forcing.clone().unwrap_or(ForcingSpec::Named(match self.problem {
            Problem::Nse => NamedForcing::Zero,
            _ => NamedForcing::ZeroMeanTrig,
        }))
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT_DIR))
    }
}

fn custom_component(grid: &GridSpec, modes: &[ForcingMode], component: u8) -> ScalarField {
    let w = std::f64::consts::PI / grid.half_width();
    ScalarField::from_fn(*grid, |x, y| {
        modes
            .iter()
            .filter(|m| m.component == component)
            .map(|m| {
                let phase = w * (m.k[0] as f64 * x + m.k[1] as f64 * y);
                m.cos_amp * phase.cos() + m.sin_amp * phase.sin()
            })
            .sum()
    })
}

pub fn scalar_forcing(spec: &ForcingSpec, grid: &GridSpec) -> ScalarField {
    let w = std::f64::consts::PI / grid.half_width();
    match spec {
        ForcingSpec::Named(NamedForcing::ZeroMeanTrig) => {
            ScalarField::from_fn(*grid, |x, y| (w * x).cos() * (w * y).cos())
        }
        ForcingSpec::Named(NamedForcing::Constant) => ScalarField::constant(*grid, 1.0),
        ForcingSpec::Named(NamedForcing::Zero) => ScalarField::zeros(*grid),
        ForcingSpec::Custom(c) => custom_component(grid, &c.custom, 1),
    }
}

pub fn vector_forcing(spec: &ForcingSpec, grid: &GridSpec) -> VectorField {
    let w = std::f64::consts::PI / grid.half_width();
    match spec {
        ForcingSpec::Named(NamedForcing::ZeroMeanTrig) => {
            let empty = crate::grid::ObstacleMask::empty(grid);
            let f = VectorField::from_fn(*grid, |_, y| (w * y).cos(), |x, _| (w * x).cos());
            let m = [box_mean(&f.u1, &empty), box_mean(&f.u2, &empty)];
            f.shifted([-m[0], -m[1]])
        }
        ForcingSpec::Named(NamedForcing::Constant) => VectorField::from_fn(*grid, |_, _| 1.0, |_, _| 0.0),
        ForcingSpec::Named(NamedForcing::Zero) => VectorField::zeros(*grid),
        ForcingSpec::Custom(c) => VectorField {
            u1: custom_component(grid, &c.custom, 1),
            u2: custom_component(grid, &c.custom, 2),
        },
    }
}

pub fn initial_velocity(u0: InitialData, grid: &GridSpec) -> Result<VectorField> {
    match u0 {
        InitialData::TaylorGreen => taylor_green(0.0, grid),
        InitialData::Zero => Ok(VectorField::zeros(*grid)),
    }
}
