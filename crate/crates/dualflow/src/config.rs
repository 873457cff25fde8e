//! Run configuration.
//!
//! ```json
//! {
//!   "problem": {
//!     "grid": {"cells": [256], "extent": [1.0]},
//!     "lagrangian": {"kind": "tv", "weights": null, "spatial_weight": null},
//!     "bc": {"kind": "neumann"},
//!     "initial": "4*step(0.5 - x)",
//!     "tau": 0.001953125,
//!     "horizon": 1.5
//!   },
//!   "solver": {"tolerance": 1e-7, "max_iterations": 20000},
//!   "certify": {"tolerance": 1e-6},
//!   "outputs": {"directory": "out", "state_every": 16, "store_flux": false}
//! }
//! ```
//!
//! `grid` takes either `spacing` (cell widths) or `extent` (box lengths,
//! default 1 per axis). A field source (`initial`, `spatial_weight`, the
//! Dirichlet `datum`) is a number, an expression in `x, y`, an explicit array,
//! or `{"csv": "path"}`. Cell fields are sampled at cell centers and the
//! Dirichlet datum at boundary-face centers. Relative paths, including the
//! output directory, are resolved against the directory holding the
//! configuration file. `tau` and `schedule` are mutually exclusive; with
//! neither, the horizon is split into 256 equal steps.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use dualflow_core::grid::DEFAULT_CELL_CAP;
use dualflow_core::{
    BoundaryCondition, FlowProblem, GridSpec, LagrangianSpec, ScalarField, SolverOptions, StepPolicy, MAX_DIM,
};
use serde::Deserialize;

use crate::expr::Expr;
use crate::fields::read_values;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub certify: CertifyConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub grid: GridConfig,
    pub lagrangian: LagrangianConfig,
    #[serde(default)]
    pub bc: BcConfig,
    pub initial: FieldSource,
    pub tau: Option<f64>,
    pub schedule: Option<Vec<f64>>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub cells: Vec<usize>,
    pub spacing: Option<Vec<f64>>,
    pub extent: Option<Vec<f64>>,
    pub max_cells: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LagrangianConfig {
    pub kind: String,
    pub weights: Option<Vec<f64>>,
    pub spatial_weight: Option<FieldSource>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum BcConfig {
    #[default]
    Neumann,
    Dirichlet {
        datum: FieldSource,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum FieldSource {
    Constant(f64),
    Expression(String),
    Values(Vec<f64>),
    Csv { csv: String },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iterations: Option<usize>,
    pub tolerance: Option<f64>,
    pub primal_step: Option<f64>,
    pub dual_step: Option<f64>,
    pub precondition: Option<bool>,
    pub over_relaxation: Option<f64>,
    pub accelerate: Option<bool>,
    pub check_every: Option<usize>,
    pub restart_factor: Option<f64>,
    pub restart_period: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertifyConfig {
    #[serde(default = "default_certificate_tolerance")]
    pub tolerance: f64,
}

fn default_certificate_tolerance() -> f64 {
    dualflow_core::certify::DEFAULT_TOLERANCE
}

impl Default for CertifyConfig {
    fn default() -> Self {
        CertifyConfig {
            tolerance: default_certificate_tolerance(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_directory")]
    pub directory: String,
    #[serde(default = "default_state_every")]
    pub state_every: usize,
    #[serde(default)]
    pub store_flux: bool,
}

fn default_directory() -> String {
    "output".to_string()
}

fn default_state_every() -> usize {
    1
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            directory: default_directory(),
            state_every: default_state_every(),
            store_flux: false,
        }
    }
}

/// Parses JSON text, reporting the failing field path and position.
pub fn parse_json<T: for<'de> Deserialize<'de>>(text: &str, origin: &Path) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path.is_empty() || path == "." {
            anyhow!("{}: {inner}", origin.display())
        } else {
            anyhow!("{}: field `{path}`: {inner}", origin.display())
        }
    })
}

pub fn load<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_json(&text, path)
}

/// Everything a run needs, validated.
#[derive(Debug, Clone)]
pub struct Setup {
    pub flow: FlowProblem,
    pub solver: SolverOptions,
    pub certificate_tolerance: f64,
    pub output_directory: PathBuf,
    pub state_every: usize,
    pub store_flux: bool,
}

fn field_error(field: &str, message: impl std::fmt::Display) -> anyhow::Error {
    anyhow!("field `{field}`: {message}")
}

impl GridConfig {
    pub fn build(&self) -> Result<GridSpec> {
        let f = "problem.grid";
        let dim = self.cells.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(field_error(&format!("{f}.cells"), format!("expected 1 or 2 axes, found {dim}")));
        }
        let cap = self.max_cells.unwrap_or(DEFAULT_CELL_CAP);
        let spacing = match (&self.spacing, &self.extent) {
            (Some(_), Some(_)) => return Err(field_error(f, "give either `spacing` or `extent`, not both")),
            (Some(h), None) => h.clone(),
            (None, Some(e)) => {
                if e.len() != dim {
                    return Err(field_error(&format!("{f}.extent"), format!("expected {dim} entries, found {}", e.len())));
                }
                e.iter().zip(&self.cells).map(|(l, &n)| l / n as f64).collect()
            }
            (None, None) => self.cells.iter().map(|&n| 1.0 / n as f64).collect(),
        };
        if spacing.len() != dim {
            return Err(field_error(&format!("{f}.spacing"), format!("expected {dim} entries, found {}", spacing.len())));
        }
        GridSpec::with_cap(&self.cells, &spacing, cap).map_err(|e| field_error(f, e))
    }
}

impl LagrangianConfig {
    /// Builds the integrand; `grid` is needed only for a spatial weight.
    pub fn build(&self, field: &str, dim: usize, grid: Option<&GridSpec>, base: &Path) -> Result<LagrangianSpec> {
        let kind = self.kind.as_str();
        if self.weights.is_some() && kind != "anisotropic_tv" {
            return Err(field_error(&format!("{field}.weights"), "only anisotropic_tv takes weights"));
        }
        let spec = match kind {
            "tv" => LagrangianSpec::tv(),
            "area" => LagrangianSpec::area(),
            "plasticity" => LagrangianSpec::plasticity(),
            "anisotropic_tv" => {
                let w = self
                    .weights
                    .as_ref()
                    .ok_or_else(|| field_error(&format!("{field}.weights"), "anisotropic_tv needs one weight per axis"))?;
                if w.len() != dim {
                    return Err(field_error(&format!("{field}.weights"), format!("expected {dim} entries, found {}", w.len())));
                }
                LagrangianSpec::anisotropic_tv(w).map_err(|e| field_error(&format!("{field}.weights"), e))?
            }
            "radial_custom" => return Err(field_error(&format!("{field}.kind"), "radial_custom cannot be loaded from a file")),
            other => {
                return Err(field_error(
                    &format!("{field}.kind"),
                    format!("unknown kind '{other}' (expected tv, anisotropic_tv, area or plasticity)"),
                ))
            }
        };
        match (&self.spatial_weight, grid) {
            (None, _) => Ok(spec),
            (Some(src), Some(grid)) => {
                let wf = format!("{field}.spatial_weight");
                let w = src.cell_values(&wf, grid, base)?;
                spec.with_spatial_weight(w).map_err(|e| field_error(&wf, e))
            }
            (Some(_), None) => Err(field_error(&format!("{field}.spatial_weight"), "not supported here")),
        }
    }
}

impl FieldSource {
    fn sample(&self, field: &str, points: &[[f64; MAX_DIM]], dim: usize, base: &Path) -> Result<Vec<f64>> {
        let values = match self {
            FieldSource::Constant(c) => vec![*c; points.len()],
            FieldSource::Expression(text) => {
                let e = Expr::parse(text).map_err(|err| field_error(field, format!("expression '{text}': {err}")))?;
                if dim < 2 && e.uses_y() {
                    return Err(field_error(field, "expression uses y on a 1D grid"));
                }
                points.iter().map(|p| e.eval(p[0], p[1])).collect()
            }
            FieldSource::Values(v) => {
                if v.len() != points.len() {
                    return Err(field_error(field, format!("expected {} values, found {}", points.len(), v.len())));
                }
                v.clone()
            }
            FieldSource::Csv { csv } => {
                let path = base.join(csv);
                if !path.exists() {
                    return Err(field_error(field, format!("file {} does not exist", path.display())));
                }
                let v = read_values(&path).map_err(|e| field_error(field, format!("{e:#}")))?;
                if v.len() != points.len() {
                    return Err(field_error(
                        field,
                        format!("{}: expected {} values, found {}", path.display(), points.len(), v.len()),
                    ));
                }
                v
            }
        };
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(field_error(field, format!("value {i} is not finite")));
        }
        Ok(values)
    }

    pub fn cell_values(&self, field: &str, grid: &GridSpec, base: &Path) -> Result<Vec<f64>> {
        let points: Vec<[f64; MAX_DIM]> = (0..grid.cell_count()).map(|c| grid.cell_center(c)).collect();
        self.sample(field, &points, grid.dim(), base)
    }

    pub fn scalar(&self, field: &str, grid: GridSpec, base: &Path) -> Result<ScalarField> {
        let values = self.cell_values(field, &grid, base)?;
        ScalarField::new(grid, values).map_err(|e| field_error(field, e))
    }

    pub fn boundary_values(&self, field: &str, grid: &GridSpec, base: &Path) -> Result<Vec<f64>> {
        self.sample(field, &grid.boundary_face_centers(), grid.dim(), base)
    }
}

impl SolverConfig {
    pub fn build(&self) -> Result<SolverOptions> {
        let d = SolverOptions::default();
        let opts = SolverOptions {
            max_iterations: self.max_iterations.unwrap_or(d.max_iterations),
            tolerance: self.tolerance.unwrap_or(d.tolerance),
            primal_step: self.primal_step.or(d.primal_step),
            dual_step: self.dual_step.or(d.dual_step),
            precondition: self.precondition.unwrap_or(d.precondition),
            over_relaxation: self.over_relaxation.unwrap_or(d.over_relaxation),
            accelerate: self.accelerate.unwrap_or(d.accelerate),
            check_every: self.check_every.unwrap_or(d.check_every),
            restart_factor: self.restart_factor.unwrap_or(d.restart_factor),
            restart_period: self.restart_period.unwrap_or(d.restart_period),
        };
        if opts.max_iterations == 0 {
            return Err(field_error("solver.max_iterations", "must be at least 1"));
        }
        Ok(opts)
    }
}

fn positive(field: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(field_error(field, format!("must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    pub fn grid(&self) -> Result<GridSpec> {
        self.problem.grid.build()
    }

    pub fn boundary(&self, grid: &GridSpec, base: &Path) -> Result<BoundaryCondition> {
        match &self.problem.bc {
            BcConfig::Neumann => Ok(BoundaryCondition::Neumann),
            BcConfig::Dirichlet { datum } => {
                Ok(BoundaryCondition::Dirichlet(datum.boundary_values("problem.bc.datum", grid, base)?))
            }
        }
    }

    pub fn policy(&self) -> Result<StepPolicy> {
        let p = &self.problem;
        positive("problem.horizon", p.horizon)?;
        match (p.tau, &p.schedule) {
            (Some(_), Some(_)) => Err(field_error("problem", "give either `tau` or `schedule`, not both")),
            (Some(tau), None) => Ok(StepPolicy::Fixed(positive("problem.tau", tau)?)),
            (None, Some(s)) => {
                if s.is_empty() {
                    return Err(field_error("problem.schedule", "must not be empty"));
                }
                for (i, &t) in s.iter().enumerate() {
                    positive(&format!("problem.schedule[{i}]"), t)?;
                }
                let policy = StepPolicy::Schedule(s.clone());
                policy.steps(p.horizon).map_err(|e| field_error("problem.schedule", e))?;
                Ok(policy)
            }
            (None, None) => Ok(StepPolicy::default_for(p.horizon)),
        }
    }

    /// Validates the configuration; `base` resolves relative paths.
    pub fn setup(&self, base: &Path) -> Result<Setup> {
        let grid = self.grid()?;
        let lagrangian = self.problem.lagrangian.build("problem.lagrangian", grid.dim(), Some(&grid), base)?;
        let bc = self.boundary(&grid, base)?;
        let u0 = self.problem.initial.scalar("problem.initial", grid, base)?;
        let policy = self.policy()?;
        let solver = self.solver.build()?;
        solver.step_sizes(&grid).map_err(|e| field_error("solver", e))?;
        let certificate_tolerance = positive("certify.tolerance", self.certify.tolerance)?;
        if self.outputs.state_every == 0 {
            bail!("field `outputs.state_every`: must be at least 1");
        }
        let flow = FlowProblem::new(lagrangian, bc, u0, self.problem.horizon, policy)
            .map_err(|e| field_error("problem", e))?
            .with_flux_storage(self.outputs.store_flux)
            .with_certificate_tolerance(certificate_tolerance)
            .map_err(|e| field_error("certify.tolerance", e))?;
        Ok(Setup {
            flow,
            solver,
            certificate_tolerance,
            output_directory: base.join(&self.outputs.directory),
            state_every: self.outputs.state_every,
            store_flux: self.outputs.store_flux,
        })
    }
}

/// Directory used to resolve paths named in the file at `path`.
pub fn base_dir(path: &Path) -> PathBuf {
    path.parent().map(Path::to_path_buf).unwrap_or_default()
}
