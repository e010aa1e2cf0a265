//! Strict, sectioned run configuration. Unknown keys are rejected so typos
//! in physics parameters cannot pass silently; every numeric field is
//! validated finite with a message naming the offending field.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analytic::{ForceFreeParams, ForcedParams};
use crate::error::{Error, Result};
use crate::fields::Grid;
use crate::solver::{
    AnalyticFamily, BoundaryPolicy, DiffusionSign, FlowField, SolverConfig,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub grid: GridSection,
    pub params: ParamsSection,
    pub solver: SolverSection,
    pub output: OutputSection,
    #[serde(default)]
    pub geometry: GeometrySection,
    #[serde(default)]
    pub sweep: SweepSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    ForceFree,
    Forced,
}

/// The `[params]` section, discriminated by the mandatory `model` key.
/// Family-specific keys are optional at parse time and cross-checked in
/// [`RunConfigFile::validate`]: a key belonging to the other family is a
/// config error, not an ignored field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsSection {
    pub model: ModelKind,
    pub eta: f64,
    pub v0: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_sep: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionSignKey {
    Standard,
    Reversed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKey {
    DirichletAnalytic,
    DirichletZero,
    PeriodicXDirichletY,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKey {
    None,
    VerticalProfile,
    HorizontalConstant,
}

fn default_diffusion_sign() -> DiffusionSignKey {
    DiffusionSignKey::Standard
}

fn default_boundary() -> BoundaryKey {
    BoundaryKey::DirichletAnalytic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_every: usize,
    #[serde(default = "default_diffusion_sign")]
    pub diffusion_sign: DiffusionSignKey,
    #[serde(default = "default_boundary")]
    pub boundary: BoundaryKey,
    /// Flow override. When absent the model's natural flow is used
    /// (force_free → vertical_profile, forced → horizontal_constant), with
    /// amplitude `params.v0` and diffusivity `params.eta` — a single source
    /// of truth for the physics.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow: Option<FlowKey>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub directory: String,
    /// Write full field snapshots every this many recorded diagnostics
    /// points; 0 disables snapshot files.
    #[serde(default)]
    pub snapshot_cadence: usize,
    #[serde(default = "default_formats")]
    pub formats: Vec<OutputFormat>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
}

fn default_formats() -> Vec<OutputFormat> {
    vec![OutputFormat::Csv, OutputFormat::Json]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GeometrySection {
    pub samples: usize,
    pub y_low: f64,
    pub y_high: f64,
    pub fd_step: f64,
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for GeometrySection {
    fn default() -> Self {
        Self {
            samples: 10_000,
            y_low: 0.3,
            y_high: 10.0,
            fd_step: 1e-3,
            tolerance: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSection {
    pub etas: Vec<f64>,
    /// Per-row pass tolerance on |gamma_est − gamma_reference| relative to
    /// the reference rate.
    pub rel_tol: f64,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { etas: Vec::new(), rel_tol: 0.02 }
    }
}

impl RunConfigFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: RunConfigFile =
            toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        for (name, v) in [
            ("grid.x_min", g.x_min),
            ("grid.x_max", g.x_max),
            ("grid.y_min", g.y_min),
            ("grid.y_max", g.y_max),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite, got {v}")));
            }
        }
        if !(g.y_min > 0.0) {
            return Err(Error::Config(format!(
                "grid.y_min must be > 0, got {}",
                g.y_min
            )));
        }
        self.build_grid()?;

        let p = &self.params;
        for (name, v) in [("params.eta", Some(p.eta)), ("params.v0", Some(p.v0))] {
            if let Some(v) = v {
                if !v.is_finite() {
                    return Err(Error::Config(format!("{name} must be finite, got {v}")));
                }
            }
        }
        if p.eta < 0.0 {
            return Err(Error::Config(format!("params.eta must be >= 0, got {}", p.eta)));
        }
        match p.model {
            ModelKind::ForceFree => {
                for (name, v) in [("a0", p.a0), ("k_sep", p.k_sep), ("lambda", p.lambda)] {
                    match v {
                        None => {
                            return Err(Error::Config(format!(
                                "params.{name} is required for model = \"force_free\""
                            )))
                        }
                        Some(v) if !v.is_finite() => {
                            return Err(Error::Config(format!(
                                "params.{name} must be finite, got {v}"
                            )))
                        }
                        _ => {}
                    }
                }
                if p.gamma.is_some() {
                    return Err(Error::Config(
                        "params.gamma does not apply to model = \"force_free\"".into(),
                    ));
                }
            }
            ModelKind::Forced => {
                match p.gamma {
                    None => {
                        return Err(Error::Config(
                            "params.gamma is required for model = \"forced\"".into(),
                        ))
                    }
                    Some(v) if !v.is_finite() => {
                        return Err(Error::Config(format!(
                            "params.gamma must be finite, got {v}"
                        )))
                    }
                    _ => {}
                }
                for (name, v) in [("a0", p.a0), ("k_sep", p.k_sep), ("lambda", p.lambda)] {
                    if v.is_some() {
                        return Err(Error::Config(format!(
                            "params.{name} does not apply to model = \"forced\""
                        )));
                    }
                }
            }
        }

        let s = &self.solver;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::Config(format!("solver.dt must be > 0, got {}", s.dt)));
        }
        if !(s.t_end >= s.dt && s.t_end.is_finite()) {
            return Err(Error::Config(format!(
                "solver.t_end must be >= solver.dt, got {}",
                s.t_end
            )));
        }
        if s.snapshot_every == 0 {
            return Err(Error::Config("solver.snapshot_every must be >= 1".into()));
        }

        let geo = &self.geometry;
        if geo.samples == 0 {
            return Err(Error::Config("geometry.samples must be >= 1".into()));
        }
        if !(geo.y_low > 0.0 && geo.y_low < geo.y_high) {
            return Err(Error::Config(format!(
                "geometry sampling range needs 0 < y_low < y_high, got [{}, {}]",
                geo.y_low, geo.y_high
            )));
        }
        if !(geo.fd_step > 0.0) {
            return Err(Error::Config(format!(
                "geometry.fd_step must be > 0, got {}",
                geo.fd_step
            )));
        }
        if !(geo.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "geometry.tolerance must be > 0, got {}",
                geo.tolerance
            )));
        }

        if self.sweep.etas.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::Config("sweep.etas must all be >= 0 and finite".into()));
        }
        if !(self.sweep.rel_tol > 0.0) {
            return Err(Error::Config(format!(
                "sweep.rel_tol must be > 0, got {}",
                self.sweep.rel_tol
            )));
        }
        Ok(())
    }

    pub fn build_grid(&self) -> Result<Grid> {
        let g = &self.grid;
        Grid::new(g.x_min, g.x_max, g.y_min, g.y_max, g.nx, g.ny)
            .map_err(|e| Error::Config(e.to_string()))
    }

    pub fn force_free_params(&self) -> Result<ForceFreeParams> {
        let p = &self.params;
        if p.model != ModelKind::ForceFree {
            return Err(Error::Config("this command requires model = \"force_free\"".into()));
        }
        Ok(ForceFreeParams {
            a0: p.a0.expect("validated"),
            k_sep: p.k_sep.expect("validated"),
            lambda: p.lambda.expect("validated"),
            eta: p.eta,
            v0: p.v0,
        })
    }

    pub fn analytic_family(&self) -> Result<AnalyticFamily> {
        let p = &self.params;
        Ok(match p.model {
            ModelKind::ForceFree => AnalyticFamily::ForceFree(self.force_free_params()?),
            ModelKind::Forced => AnalyticFamily::Forced(ForcedParams {
                gamma: p.gamma.expect("validated"),
                v0: p.v0,
                eta: p.eta,
            }),
        })
    }

    pub fn flow(&self) -> Result<FlowField> {
        let family = self.analytic_family()?;
        Ok(match self.solver.flow {
            None => family.natural_flow(),
            Some(FlowKey::None) => FlowField::quiescent(),
            Some(FlowKey::VerticalProfile) => FlowField::VerticalProfile { v0: self.params.v0 },
            Some(FlowKey::HorizontalConstant) => {
                FlowField::HorizontalConstant { v0: self.params.v0 }
            }
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig> {
        let grid = self.build_grid()?;
        let family = self.analytic_family()?;
        let boundary = match self.solver.boundary {
            BoundaryKey::DirichletAnalytic => BoundaryPolicy::DirichletAnalytic(family),
            BoundaryKey::DirichletZero => BoundaryPolicy::DirichletZero,
            BoundaryKey::PeriodicXDirichletY => BoundaryPolicy::PeriodicXDirichletY,
        };
        Ok(SolverConfig {
            grid,
            dt: self.solver.dt,
            t_end: self.solver.t_end,
            eta: self.params.eta,
            flow: self.flow()?,
            diffusion_sign: match self.solver.diffusion_sign {
                DiffusionSignKey::Standard => DiffusionSign::Standard,
                DiffusionSignKey::Reversed => DiffusionSign::Reversed,
            },
            boundary,
            snapshot_every: self.solver.snapshot_every,
            store_snapshots: self.output.snapshot_cadence > 0,
        })
    }
}
