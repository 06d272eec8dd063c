//! Fixtures shared by the benchmarks in `benches/`.

use nalgebra::{UnitQuaternion, Vector3};

use cosserat_shell::solver::{BoundaryConditions, EdgeCondition, EdgeConditions, LoadSpec, ShellProblem};
use cosserat_shell::{Grid, GridGeometry, MaterialConstants, MidsurfaceConfiguration, ParameterDomain, ShearVariant, SurfaceChart};

fn unit_domain() -> ParameterDomain {
    ParameterDomain::new((0.0, 1.0), (0.0, 1.0)).expect("unit domain")
}

fn problem(chart: &SurfaceChart, n: usize, edges: EdgeConditions, force: Vector3<f64>) -> ShellProblem {
    let geom = GridGeometry::new(chart, Grid::new(n, n, unit_domain()).expect("grid")).expect("geometry");
    let bcs = BoundaryConditions::from_edges(&geom, &edges);
    let loads = LoadSpec::uniform(geom.grid.len(), force, Vector3::zeros());
    ShellProblem::new(geom, MaterialConstants::default(), ShearVariant::Harmonic, bcs, loads).expect("problem")
}

/// Unloaded cylinder with free edges and a smooth finite deformation.
pub fn deformed_cylinder(n: usize) -> (ShellProblem, MidsurfaceConfiguration) {
    let chart = SurfaceChart::cylinder(1.0, unit_domain()).expect("cylinder");
    let p = problem(&chart, n, EdgeConditions::all(EdgeCondition::Free), Vector3::zeros());
    let mut c = MidsurfaceConfiguration::reference(&p.geom);
    for k in 0..p.geom.grid.len() {
        let (u, v) = p.geom.grid.coords(k);
        c.positions[k] += Vector3::new(0.05 * (3.0 * v).sin(), 0.02 * u * v, 0.04 * (2.0 * u).cos());
        c.rotations[k] = UnitQuaternion::from_scaled_axis(Vector3::new(0.1 * v, -0.05 * u, 0.02));
    }
    (p, c)
}

/// Clamped unit plate under a uniform transverse load.
pub fn loaded_plate(n: usize) -> ShellProblem {
    let chart = SurfaceChart::plate(unit_domain());
    problem(&chart, n, EdgeConditions::all(EdgeCondition::Clamped), Vector3::new(0.0, 0.0, 1e-3))
}
