//! Versioned JSON scenario files.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "name": "clamped-plate",
//!   "chart": { "kind": "plate", "domain": { "u": [0.0, 1.0], "v": [0.0, 1.0] } },
//!   "grid": { "n_u": 17, "n_v": 17 },
//!   "material": { "mu": 1.0, "lambda": 1.0, "mu_c": 1.0, "l_c": 0.1,
//!                 "b1": 1.0, "b2": 1.0, "b3": 1.0, "h": 0.1 },
//!   "variant": "harmonic",
//!   "boundary": { "u_min": "clamped", "u_max": "clamped", "v_min": "free",
//!                 "v_max": { "traction": { "force": [0, 0, 1e-3], "couple": [0, 0, 0] } } },
//!   "loads": { "kind": "uniform", "force": [0.0, 0.0, 1e-3], "couple": [0.0, 0.0, 0.0] },
//!   "solver": { "tol": null, "max_iter": 20000, "memory": 20, "threads": null, "residual_region": null }
//! }
//! ```
//!
//! Unknown keys are rejected everywhere. Relative file paths (sampled charts,
//! load tables) are resolved against the directory of the scenario file.

use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{MaterialConstants, ShearVariant};
use crate::geometry::{GeometryError, ParameterDomain, SurfaceChart};
use crate::io::{read_loads, read_surface, IoError};
use crate::kinematics::{Grid, GridGeometry, KinematicsError};
use crate::solver::{BoundaryConditions, EdgeConditions, LoadSpec, ShellProblem, SolveError, SolveOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("{source_name}, line {line}, column {column}: {message}")]
    Parse { source_name: String, line: usize, column: usize, message: String },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChartSpec {
    Plate { domain: ParameterDomain },
    Cylinder { radius: f64, domain: ParameterDomain },
    SphereCap { radius: f64, domain: ParameterDomain },
    /// CSV lattice with columns `u,v,x,y,z`
    Sampled { path: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_u: usize,
    pub n_v: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LoadSpecFile {
    None,
    Uniform { force: [f64; 3], couple: [f64; 3] },
    /// `f = pressure n0`
    NormalPressure { pressure: f64 },
    /// CSV table with columns `idx,fx,fy,fz,cx,cy,cz`
    Table { path: PathBuf },
}

/// Settings of the `koiter-compare` amplitude study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct KoiterSpec {
    pub amplitudes: Vec<f64>,
    pub points_per_direction: usize,
}

impl Default for KoiterSpec {
    fn default() -> Self {
        Self { amplitudes: crate::koiter::STUDY_AMPLITUDES.to_vec(), points_per_direction: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub schema_version: u32,
    pub name: String,
    pub chart: ChartSpec,
    pub grid: GridSpec,
    pub material: MaterialConstants,
    #[serde(default)]
    pub variant: ShearVariant,
    pub boundary: EdgeConditions,
    #[serde(default = "no_loads")]
    pub loads: LoadSpecFile,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub koiter: KoiterSpec,
}

fn no_loads() -> LoadSpecFile {
    LoadSpecFile::None
}

/// Everything needed to run a scenario.
#[derive(Debug, Clone)]
pub struct BuiltScenario {
    pub chart: SurfaceChart,
    pub problem: ShellProblem,
}

impl Scenario {
    /// Parse and validate JSON text.
    pub fn from_json(text: &str, source_name: &str) -> Result<Self, ScenarioError> {
        let s: Scenario = serde_json::from_str(text).map_err(|e| ScenarioError::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.validate()?;
        Ok(s)
    }

    /// Read a scenario file; relative paths inside it become relative to its directory.
    pub fn load(path: &Path) -> Result<Self, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| IoError::File { path: path.display().to_string(), source })?;
        let mut s = Self::from_json(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new("."));
        s.resolve_paths(base);
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let ChartSpec::Sampled { path } = &mut self.chart {
            fix(path);
        }
        if let LoadSpecFile::Table { path } = &mut self.loads {
            fix(path);
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |m: String| Err(ScenarioError::Invalid(m));
        if self.schema_version != SCHEMA_VERSION {
            return invalid(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.grid.n_u < 3 || self.grid.n_v < 3 {
            return invalid(format!("grid {} x {} is too small (need at least 3 x 3)", self.grid.n_u, self.grid.n_v));
        }
        self.material.validate().map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        match &self.chart {
            ChartSpec::Plate { domain } => check_domain(domain)?,
            ChartSpec::Cylinder { radius, domain } | ChartSpec::SphereCap { radius, domain } => {
                check_domain(domain)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return invalid(format!("radius must be positive, got {radius}"));
                }
            }
            ChartSpec::Sampled { .. } => {}
        }
        match &self.loads {
            LoadSpecFile::Uniform { force, couple } if force.iter().chain(couple).any(|x| !x.is_finite()) => {
                return invalid("loads must be finite".into())
            }
            LoadSpecFile::NormalPressure { pressure } if !pressure.is_finite() => {
                return invalid("pressure must be finite".into())
            }
            _ => {}
        }
        let o = &self.solver;
        if o.tol.is_some_and(|t| !(t.is_finite() && t > 0.0)) {
            return invalid("solver.tol must be positive".into());
        }
        if o.memory == 0 || o.threads == Some(0) {
            return invalid("solver.memory and solver.threads must be at least 1".into());
        }
        if self.koiter.amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) || self.koiter.points_per_direction == 0 {
            return invalid("koiter amplitudes must be non-negative and points_per_direction positive".into());
        }
        Ok(())
    }

    pub fn chart(&self) -> Result<SurfaceChart, ScenarioError> {
        Ok(match &self.chart {
            ChartSpec::Plate { domain } => SurfaceChart::plate(*domain),
            ChartSpec::Cylinder { radius, domain } => SurfaceChart::cylinder(*radius, *domain)?,
            ChartSpec::SphereCap { radius, domain } => SurfaceChart::sphere_cap(*radius, *domain)?,
            ChartSpec::Sampled { path } => {
                let surface = read_surface(crate::io::open(path)?, &path.display().to_string())?;
                SurfaceChart::Sampled(surface)
            }
        })
    }

    /// Grid over the chart domain. A sampled chart must use its own lattice.
    pub fn grid_geometry(&self, chart: &SurfaceChart) -> Result<GridGeometry, ScenarioError> {
        use crate::geometry::Parametrization;
        if let SurfaceChart::Sampled(s) = chart {
            if (s.n_u, s.n_v) != (self.grid.n_u, self.grid.n_v) {
                return Err(ScenarioError::Invalid(format!(
                    "sampled surface is {} x {} but the grid is {} x {}",
                    s.n_u, s.n_v, self.grid.n_u, self.grid.n_v
                )));
            }
        }
        let grid = Grid::new(self.grid.n_u, self.grid.n_v, chart.domain())?;
        Ok(GridGeometry::new(chart, grid)?)
    }

    pub fn load_spec(&self, geom: &GridGeometry) -> Result<LoadSpec, ScenarioError> {
        let n = geom.grid.len();
        Ok(match &self.loads {
            LoadSpecFile::None => LoadSpec::zero(n),
            LoadSpecFile::Uniform { force, couple } => LoadSpec::uniform(n, Vector3::from(*force), Vector3::from(*couple)),
            LoadSpecFile::NormalPressure { pressure } => LoadSpec::normal_pressure(geom, *pressure),
            LoadSpecFile::Table { path } => read_loads(crate::io::open(path)?, n, &path.display().to_string())?,
        })
    }

    /// Build the chart and the boundary-value problem.
    pub fn build(&self) -> Result<BuiltScenario, ScenarioError> {
        let chart = self.chart()?;
        let geom = self.grid_geometry(&chart)?;
        let loads = self.load_spec(&geom)?;
        let bcs = BoundaryConditions::from_edges(&geom, &self.boundary);
        let problem = ShellProblem::new(geom, self.material, self.variant, bcs, loads)?;
        Ok(BuiltScenario { chart, problem })
    }

    /// The same scenario on an `n x n` grid.
    pub fn with_grid(&self, n_u: usize, n_v: usize) -> Self {
        Self { grid: GridSpec { n_u, n_v }, ..self.clone() }
    }
}

fn check_domain(d: &ParameterDomain) -> Result<(), ScenarioError> {
    ParameterDomain::new(d.u, d.v).map(|_| ()).map_err(|e| ScenarioError::Invalid(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::EdgeCondition;

    const PLATE: &str = r#"{
  "schema_version": 1,
  "name": "plate",
  "chart": { "kind": "plate", "domain": { "u": [0.0, 1.0], "v": [0.0, 1.0] } },
  "grid": { "n_u": 9, "n_v": 9 },
  "material": { "mu": 1.0, "lambda": 1.0, "mu_c": 1.0, "l_c": 0.1, "b1": 1.0, "b2": 1.0, "b3": 1.0, "h": 0.1 },
  "boundary": { "u_min": "clamped", "u_max": "free", "v_min": "clamped",
                "v_max": { "traction": { "force": [0.0, 0.0, 0.001], "couple": [0.0, 0.0, 0.0] } } },
  "loads": { "kind": "uniform", "force": [0.0, 0.0, 0.001], "couple": [0.0, 0.0, 0.0] }
}"#;

    #[test]
    fn parses_with_defaults_and_builds() {
        let s = Scenario::from_json(PLATE, "plate.json").unwrap();
        assert_eq!(s.variant, ShearVariant::Harmonic);
        assert_eq!(s.solver, SolveOptions::default());
        assert_eq!(s.boundary.u_min, EdgeCondition::Clamped);
        let b = s.build().unwrap();
        assert_eq!(b.problem.geom.grid.len(), 81);
    }

    #[test]
    fn round_trip_is_identical() {
        let s = Scenario::from_json(PLATE, "plate.json").unwrap();
        let again = Scenario::from_json(&s.to_json(), "again").unwrap();
        assert_eq!(s, again);
        assert_eq!(s.to_json(), again.to_json());
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let bad = PLATE.replace("\"name\": \"plate\",", "\"name\": \"plate\",\n  \"colour\": 3,");
        match Scenario::from_json(&bad, "bad.json") {
            Err(ScenarioError::Parse { line, message, .. }) => {
                assert_eq!(line, 4);
                assert!(message.contains("colour"));
            }
            other => panic!("{other:?}"),
        }
        let bad_material = PLATE.replace("\"h\": 0.1", "\"h\": 0.1, \"nu\": 0.3");
        assert!(matches!(Scenario::from_json(&bad_material, "m"), Err(ScenarioError::Parse { .. })));
        let bad_chart = PLATE.replace("\"kind\": \"plate\",", "\"kind\": \"plate\", \"radius\": 2.0,");
        assert!(matches!(Scenario::from_json(&bad_chart, "c"), Err(ScenarioError::Parse { .. })));
    }

    #[test]
    fn semantic_errors_are_reported() {
        let v2 = PLATE.replace("\"schema_version\": 1", "\"schema_version\": 2");
        assert!(matches!(Scenario::from_json(&v2, "v"), Err(ScenarioError::Invalid(_))));
        let small = PLATE.replace("\"n_u\": 9", "\"n_u\": 2");
        assert!(matches!(Scenario::from_json(&small, "g"), Err(ScenarioError::Invalid(_))));
        let neg = PLATE.replace("\"mu\": 1.0", "\"mu\": -1.0");
        assert!(matches!(Scenario::from_json(&neg, "m"), Err(ScenarioError::Invalid(_))));
        let dom = PLATE.replace("\"u\": [0.0, 1.0]", "\"u\": [1.0, 1.0]");
        assert!(matches!(Scenario::from_json(&dom, "d"), Err(ScenarioError::Invalid(_))));
    }

    #[test]
    fn relative_table_paths_follow_the_scenario_file() {
        let dir = tempfile::tempdir().unwrap();
        let json = PLATE.replace(
            "{ \"kind\": \"uniform\", \"force\": [0.0, 0.0, 0.001], \"couple\": [0.0, 0.0, 0.0] }",
            "{ \"kind\": \"table\", \"path\": \"loads.csv\" }",
        );
        std::fs::write(dir.path().join("s.json"), json).unwrap();
        let mut loads = LoadSpec::zero(81);
        loads.force[40] = Vector3::new(0.0, 0.0, 2.0);
        crate::io::write_loads(std::fs::File::create(dir.path().join("loads.csv")).unwrap(), &loads).unwrap();
        let s = Scenario::load(&dir.path().join("s.json")).unwrap();
        assert_eq!(s.build().unwrap().problem.loads, loads);
    }
}
