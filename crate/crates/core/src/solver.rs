//! Total energy, its gradient, L-BFGS minimization over `(R^3 x SO(3))^N`
//! and the local equilibrium residuals.
//!
//! Rotations are perturbed on the right, `Q -> Q exp(xi)`, so rotational
//! gradients are left-trivialized body-frame vectors. Loads are dead: the
//! external work is `int f.m + c.log(Q_e) da` plus nodal edge resultants on
//! Neumann boundary nodes. The couple potential uses the rotation-vector
//! chart and is only meaningful for rotations below `pi`.

use nalgebra::{Matrix3, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::{stress_resultants, w_shell_breakdown, ConstitutiveError, EnergyBreakdown, MaterialConstants, ShearVariant};
use crate::kinematics::{
    curvature_from_rotation, partial_derivatives, strain_from_differences, strain_from_gradient, GridGeometry, KinematicsError,
    MidsurfaceConfiguration,
};
use crate::tensor::{left_jacobian_inv, right_jacobian_inv, vee, Rotation};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("solver stopped without convergence: {}", .0.report.status)]
    NonConvergence(Box<Solution>),
    #[error("invalid problem: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
    #[error(transparent)]
    Constitutive(#[from] ConstitutiveError),
}

/// Boundary condition of one edge of the parameter rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum EdgeCondition {
    /// `m = y0`, `Q_e = 1`
    Clamped,
    /// zero edge force and couple
    Free,
    /// `m = y0 + displacement`, `Q_e = exp(rotation)`
    Prescribed { displacement: [f64; 3], rotation: [f64; 3] },
    /// dead edge force and couple per unit length
    Traction { force: [f64; 3], couple: [f64; 3] },
}

impl EdgeCondition {
    fn is_dirichlet(&self) -> bool {
        matches!(self, Self::Clamped | Self::Prescribed { .. })
    }
}

/// Conditions on the edges `u = u0`, `u = u1`, `v = v0`, `v = v1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeConditions {
    pub u_min: EdgeCondition,
    pub u_max: EdgeCondition,
    pub v_min: EdgeCondition,
    pub v_max: EdgeCondition,
}

impl EdgeConditions {
    pub fn all(c: EdgeCondition) -> Self {
        Self { u_min: c, u_max: c, v_min: c, v_max: c }
    }

    fn list(&self) -> [EdgeCondition; 4] {
        [self.u_min, self.u_max, self.v_min, self.v_max]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NodeCondition {
    Interior,
    Dirichlet { position: Vector3<f64>, rotation: UnitQuaternion<f64> },
    /// Edge tractions lumped to the node (force and couple, not per length).
    Neumann { force: Vector3<f64>, couple: Vector3<f64> },
}

/// One condition per grid node; boundary nodes are either Dirichlet or Neumann.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub nodes: Vec<NodeCondition>,
}

impl BoundaryConditions {
    /// Resolve edge conditions on the grid. At corners a Dirichlet edge wins;
    /// between two Dirichlet edges the first in `u_min, u_max, v_min, v_max`
    /// order wins; Neumann corners collect the tractions of both edges.
    pub fn from_edges(geom: &GridGeometry, edges: &EdgeConditions) -> Self {
        let grid = &geom.grid;
        let (du, dv) = grid.spacing();
        let list = edges.list();
        let mut nodes = vec![NodeCondition::Interior; grid.len()];
        for (k, node) in nodes.iter_mut().enumerate() {
            if !grid.is_boundary(k) {
                continue;
            }
            let (i, j) = grid.ij(k);
            let on = [i == 0, i == grid.n_u - 1, j == 0, j == grid.n_v - 1];
            if let Some(e) = (0..4).find(|&e| on[e] && list[e].is_dirichlet()) {
                let y0 = geom.positions[k];
                *node = match list[e] {
                    EdgeCondition::Prescribed { displacement, rotation } => NodeCondition::Dirichlet {
                        position: y0 + Vector3::from(displacement),
                        rotation: UnitQuaternion::from_scaled_axis(Vector3::from(rotation)),
                    },
                    _ => NodeCondition::Dirichlet { position: y0, rotation: UnitQuaternion::identity() },
                };
                continue;
            }
            let mut force = Vector3::zeros();
            let mut couple = Vector3::zeros();
            for e in (0..4).filter(|&e| on[e]) {
                // edges u = const run along v and vice versa
                let (along, step, pos, n) = if e < 2 { (1, dv, j, grid.n_v) } else { (0, du, i, grid.n_u) };
                let end = if pos == 0 || pos == n - 1 { 0.5 } else { 1.0 };
                let length = geom.frames[k].tangents[along].norm() * step * end;
                if let EdgeCondition::Traction { force: f, couple: c } = list[e] {
                    force += Vector3::from(f) * length;
                    couple += Vector3::from(c) * length;
                }
            }
            *node = NodeCondition::Neumann { force, couple };
        }
        Self { nodes }
    }

    pub fn validate(&self, geom: &GridGeometry) -> Result<(), SolveError> {
        if self.nodes.len() != geom.grid.len() {
            return Err(SolveError::InvalidInput(format!(
                "{} node conditions for {} grid nodes",
                self.nodes.len(),
                geom.grid.len()
            )));
        }
        for (k, c) in self.nodes.iter().enumerate() {
            let boundary = geom.grid.is_boundary(k);
            let ok = match c {
                NodeCondition::Interior => !boundary,
                NodeCondition::Dirichlet { position, rotation } => {
                    boundary && position.iter().all(|x| x.is_finite()) && rotation.coords.iter().all(|x| x.is_finite())
                }
                NodeCondition::Neumann { force, couple } => {
                    boundary && force.iter().chain(couple.iter()).all(|x| x.is_finite())
                }
            };
            if !ok {
                return Err(SolveError::InvalidInput(format!("node {k} has an inadmissible condition {c:?}")));
            }
        }
        Ok(())
    }

    pub fn is_fixed(&self, k: usize) -> bool {
        matches!(self.nodes[k], NodeCondition::Dirichlet { .. })
    }

    pub fn has_dirichlet(&self) -> bool {
        (0..self.nodes.len()).any(|k| self.is_fixed(k))
    }

    /// Overwrite Dirichlet nodes of a configuration with their prescribed values.
    pub fn project(&self, config: &mut MidsurfaceConfiguration) {
        for (k, c) in self.nodes.iter().enumerate() {
            if let NodeCondition::Dirichlet { position, rotation } = c {
                config.positions[k] = *position;
                config.rotations[k] = *rotation;
            }
        }
    }
}

/// Dead body force and couple per unit area at every node.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSpec {
    pub force: Vec<Vector3<f64>>,
    pub couple: Vec<Vector3<f64>>,
}

impl LoadSpec {
    pub fn zero(n: usize) -> Self {
        Self { force: vec![Vector3::zeros(); n], couple: vec![Vector3::zeros(); n] }
    }

    pub fn uniform(n: usize, force: Vector3<f64>, couple: Vector3<f64>) -> Self {
        Self { force: vec![force; n], couple: vec![couple; n] }
    }

    /// `f = p n0` with the reference normal.
    pub fn normal_pressure(geom: &GridGeometry, p: f64) -> Self {
        Self { force: geom.frames.iter().map(|f| f.normal * p).collect(), couple: vec![Vector3::zeros(); geom.grid.len()] }
    }

    pub fn validate(&self, n: usize) -> Result<(), SolveError> {
        if self.force.len() != n || self.couple.len() != n {
            return Err(SolveError::InvalidInput(format!("load table needs {n} rows")));
        }
        if self.force.iter().chain(&self.couple).any(|v| v.iter().any(|x| !x.is_finite())) {
            return Err(SolveError::InvalidInput("loads must be finite".into()));
        }
        Ok(())
    }
}

/// A complete boundary-value problem on a grid.
#[derive(Debug, Clone)]
pub struct ShellProblem {
    pub geom: GridGeometry,
    pub material: MaterialConstants,
    pub variant: ShearVariant,
    pub bcs: BoundaryConditions,
    pub loads: LoadSpec,
}

impl ShellProblem {
    pub fn new(
        geom: GridGeometry,
        material: MaterialConstants,
        variant: ShearVariant,
        bcs: BoundaryConditions,
        loads: LoadSpec,
    ) -> Result<Self, SolveError> {
        material.validate()?;
        bcs.validate(&geom)?;
        loads.validate(geom.grid.len())?;
        Ok(Self { geom, material, variant, bcs, loads })
    }

    /// Net external force and moment about the origin.
    pub fn net_load(&self) -> (Vector3<f64>, Vector3<f64>) {
        let mut f = Vector3::zeros();
        let mut c = Vector3::zeros();
        for k in 0..self.geom.grid.len() {
            let (x, w) = (self.geom.positions[k], self.geom.weights[k]);
            f += self.loads.force[k] * w;
            c += (x.cross(&self.loads.force[k]) + self.loads.couple[k]) * w;
            if let NodeCondition::Neumann { force, couple } = self.bcs.nodes[k] {
                f += force;
                c += x.cross(&force) + couple;
            }
        }
        (f, c)
    }

    /// Problems without Dirichlet nodes need self-equilibrated loads.
    pub fn ill_posed(&self) -> Option<String> {
        if self.bcs.has_dirichlet() {
            return None;
        }
        let (f, c) = self.net_load();
        let scale = self.geom.total_area()
            * self.loads.force.iter().chain(&self.loads.couple).map(|v| v.norm()).fold(0.0, f64::max)
            + self
                .bcs
                .nodes
                .iter()
                .map(|n| match n {
                    NodeCondition::Neumann { force, couple } => force.norm() + couple.norm(),
                    _ => 0.0,
                })
                .sum::<f64>();
        if f.norm() > 1e-12 * scale.max(1e-300) || c.norm() > 1e-10 * scale.max(1e-300) {
            Some(format!(
                "no Dirichlet boundary and loads are not self-equilibrated (net force {:.3e}, net moment {:.3e})",
                f.norm(),
                c.norm()
            ))
        } else {
            None
        }
    }
}

fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let (mut s, mut c) = (0.0f64, 0.0f64);
    for x in it {
        let t = s + x;
        c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
        s = t;
    }
    s + c
}

/// Forward/backward choices in `(u, v)`; the nodal energy is the mean over the
/// four one-sided difference quadrants, which keeps the discrete
/// Euler-Lagrange stencil compact (no decoupled odd-even modes).
const QUADRANTS: [[bool; 2]; 4] = [[true, true], [false, true], [true, false], [false, false]];

/// Per-node data computed in one parallel pass.
struct NodeTerms {
    energy: EnergyBreakdown,
    external: f64,
    /// `(node, dI/dm)` contributions, two per direction and quadrant
    dm: [(usize, Vector3<f64>); 16],
    /// `(node, dI/dxi)` contributions from the curvature stencils
    dxi: [(usize, Vector3<f64>); 16],
    dxi_self: Vector3<f64>,
    dm_self: Vector3<f64>,
}

/// Energy, its breakdown and the gradient of a configuration.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub energy: f64,
    pub breakdown: EnergyBreakdown,
    pub external_work: f64,
    pub grad_m: Vec<Vector3<f64>>,
    pub grad_xi: Vec<Vector3<f64>>,
}

fn evaluate(problem: &ShellProblem, config: &MidsurfaceConfiguration, with_gradient: bool) -> Result<Evaluation, SolveError> {
    let geom = &problem.geom;
    let grid = &geom.grid;
    if config.grid != *grid {
        return Err(KinematicsError::SizeMismatch { expected: grid.len(), found: config.grid.len() }.into());
    }
    let q = config.rotation_matrices();
    let (mat, variant) = (&problem.material, problem.variant);
    let terms = (0..grid.len())
        .into_par_iter()
        .map(|k| -> Result<NodeTerms, SolveError> {
            let frame = &geom.frames[k];
            let w = geom.weights[k];
            let qk = &q[k];
            let theta = Rotation::from_quaternion(&config.rotations[k]).log();
            let (f, c) = (problem.loads.force[k], problem.loads.couple[k]);
            let u = config.positions[k] - geom.positions[k];
            let mut external = w * (f.dot(&u) + c.dot(&theta));
            let mut dm_self = -f * w;
            let mut dxi_self = -(right_jacobian_inv(&theta).transpose() * c) * w;
            if let NodeCondition::Neumann { force, couple } = problem.bcs.nodes[k] {
                external += force.dot(&u) + couple.dot(&theta);
                dm_self -= force;
                dxi_self -= right_jacobian_inv(&theta).transpose() * couple;
            }
            let mut out = NodeTerms {
                energy: EnergyBreakdown::default(),
                external,
                dm: [(k, Vector3::zeros()); 16],
                dxi: [(k, Vector3::zeros()); 16],
                dxi_self,
                dm_self,
            };
            let wq = 0.25 * w;
            for (s, forward) in QUADRANTS.iter().enumerate() {
                let st = [grid.one_sided_stencil(k, 0, forward[0]), grid.one_sided_stencil(k, 1, forward[1])];
                let diff = |a: usize, x: &[Vector3<f64>]| st[a].iter().fold(Vector3::zeros(), |acc, &(j, d)| acc + x[j] * d);
                let dm = [diff(0, &config.positions), diff(1, &config.positions)];
                let dy0 = [diff(0, &geom.positions), diff(1, &geom.positions)];
                let dq = [0, 1].map(|a| st[a].iter().fold(Matrix3::zeros(), |acc, &(j, d)| acc + q[j] * d));
                let e = strain_from_differences(frame, qk, &dm, &dy0);
                let kc = curvature_from_rotation(frame, qk, &dq);
                out.energy += w_shell_breakdown(&e, &kc, frame, mat, variant)? * wq;
                if !with_gradient {
                    continue;
                }
                let r = stress_resultants(&e, &kc, frame, mat, variant)?;
                let (nc, mc) = (r.n.contravariant(frame), r.m.contravariant(frame));
                for a in 0..2 {
                    let t = (0..3).fold(Vector3::zeros(), |acc, i| acc + frame.basis(i) * nc[(i, a)]);
                    let mu = (0..3).fold(Vector3::zeros(), |acc, i| acc + frame.basis(i) * mc[(i, a)]);
                    out.dxi_self += t.cross(&qk.tr_mul(&dm[a])) * wq;
                    let ma = qk.tr_mul(&dq[a]);
                    out.dxi_self -= ((Matrix3::identity() * ma.trace() - ma.transpose()) * mu) * (0.5 * wq);
                    let spatial = qk * t;
                    for (p, &(j, d)) in st[a].iter().enumerate() {
                        let slot = 4 * s + 2 * a + p;
                        out.dm[slot] = (j, spatial * (wq * d));
                        let am = qk.tr_mul(&q[j]);
                        out.dxi[slot] = (j, ((Matrix3::identity() * am.trace() - am) * mu) * (0.5 * wq * d));
                    }
                }
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut breakdown = EnergyBreakdown::default();
    for t in &terms {
        breakdown += t.energy;
    }
    let internal = neumaier_sum(terms.iter().map(|t| t.energy.total));
    let external = neumaier_sum(terms.iter().map(|t| t.external));
    breakdown.total = internal;
    let mut grad_m = vec![Vector3::zeros(); grid.len()];
    let mut grad_xi = vec![Vector3::zeros(); grid.len()];
    if with_gradient {
        for (k, t) in terms.iter().enumerate() {
            grad_m[k] += t.dm_self;
            grad_xi[k] += t.dxi_self;
            for &(j, g) in &t.dm {
                grad_m[j] += g;
            }
            for &(j, g) in &t.dxi {
                grad_xi[j] += g;
            }
        }
        for k in 0..grid.len() {
            if problem.bcs.is_fixed(k) {
                grad_m[k] = Vector3::zeros();
                grad_xi[k] = Vector3::zeros();
            }
        }
    }
    Ok(Evaluation { energy: internal - external, breakdown, external_work: external, grad_m, grad_xi })
}

/// `int W_shell da - external work` by nodal trapezoidal quadrature.
pub fn total_energy(problem: &ShellProblem, config: &MidsurfaceConfiguration) -> Result<f64, SolveError> {
    Ok(evaluate(problem, config, false)?.energy)
}

/// Energy with its breakdown (no gradient).
pub fn energy_report(problem: &ShellProblem, config: &MidsurfaceConfiguration) -> Result<Evaluation, SolveError> {
    evaluate(problem, config, false)
}

/// Energy and gradient; Dirichlet nodes have zero gradient.
pub fn energy_gradient(problem: &ShellProblem, config: &MidsurfaceConfiguration) -> Result<Evaluation, SolveError> {
    evaluate(problem, config, true)
}

/// Apply `m += t * dm`, `Q <- Q exp(t * dxi)`.
pub fn retract(config: &MidsurfaceConfiguration, dm: &[Vector3<f64>], dxi: &[Vector3<f64>], t: f64) -> MidsurfaceConfiguration {
    let mut out = config.clone();
    for k in 0..out.positions.len() {
        out.positions[k] += dm[k] * t;
        let mut q = out.rotations[k] * UnitQuaternion::from_scaled_axis(dxi[k] * t);
        q.renormalize_fast();
        out.rotations[k] = q;
    }
    out
}

/// Force and moment residuals of the local equilibrium equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResidual {
    pub force: Vector3<f64>,
    pub moment: Vector3<f64>,
}

/// `r_f = Div_s N + f`, `r_m = Div_s M + axl(N F^T - F N^T) + Jl^-T(theta) c` at every
/// node, with `Div_s T = T,a a^a` by the grid difference operator. The couple
/// enters through `Jl^-T` because it is the gradient of the dead-couple potential.
pub fn equilibrium_residual(problem: &ShellProblem, config: &MidsurfaceConfiguration) -> Result<Vec<NodeResidual>, SolveError> {
    let geom = &problem.geom;
    let grid = &geom.grid;
    let q = config.rotation_matrices();
    let dm = partial_derivatives(grid, &config.positions)?;
    let dq = partial_derivatives(grid, &q)?;
    let fields = (0..grid.len())
        .into_par_iter()
        .map(|k| -> Result<(Matrix3<f64>, Matrix3<f64>, Matrix3<f64>), SolveError> {
            let frame = &geom.frames[k];
            let e = strain_from_gradient(frame, &q[k], &dm[k]);
            let kc = curvature_from_rotation(frame, &q[k], &dq[k]);
            let r = stress_resultants(&e, &kc, frame, &problem.material, problem.variant)?;
            let (n, m) = r.unrotated(frame, &q[k]);
            let fs = dm[k][0] * frame.cotangents[0].transpose() + dm[k][1] * frame.cotangents[1].transpose();
            Ok((n, m, fs))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let n: Vec<_> = fields.iter().map(|f| f.0).collect();
    let m: Vec<_> = fields.iter().map(|f| f.1).collect();
    let dn = partial_derivatives(grid, &n)?;
    let dmm = partial_derivatives(grid, &m)?;
    Ok((0..grid.len())
        .map(|k| {
            let c = &geom.frames[k].cotangents;
            let div_n = dn[k][0] * c[0] + dn[k][1] * c[1];
            let div_m = dmm[k][0] * c[0] + dmm[k][1] * c[1];
            let (nk, fs) = (fields[k].0, fields[k].2);
            let theta = Rotation::from_quaternion(&config.rotations[k]).log();
            let couple = left_jacobian_inv(&theta).transpose() * problem.loads.couple[k];
            NodeResidual {
                force: div_n + problem.loads.force[k],
                moment: div_m + vee(&(nk * fs.transpose() - fs * nk.transpose())) + couple,
            }
        })
        .collect())
}

/// Rectangle `[s0, s1] x [t0, t1]` in normalized parameter coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResidualRegion {
    pub s: (f64, f64),
    pub t: (f64, f64),
}

/// Largest residual norms over nodes at least `min_distance` steps from the
/// boundary and, if given, inside `region`.
pub fn max_residuals(
    problem: &ShellProblem,
    residuals: &[NodeResidual],
    min_distance: usize,
    region: Option<ResidualRegion>,
) -> (f64, f64) {
    let grid = &problem.geom.grid;
    let eps = 1e-12;
    let mut out = (0.0f64, 0.0f64);
    for (k, r) in residuals.iter().enumerate() {
        if grid.boundary_distance(k) < min_distance {
            continue;
        }
        if let Some(reg) = region {
            let (i, j) = grid.ij(k);
            let s = i as f64 / (grid.n_u - 1) as f64;
            let t = j as f64 / (grid.n_v - 1) as f64;
            if s < reg.s.0 - eps || s > reg.s.1 + eps || t < reg.t.0 - eps || t > reg.t.1 + eps {
                continue;
            }
        }
        out.0 = out.0.max(r.force.norm());
        out.1 = out.1.max(r.moment.norm());
    }
    out
}

/// Residuals are reported on nodes at least this many steps inside.
pub const RESIDUAL_MIN_DISTANCE: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolveOptions {
    /// absolute tolerance on the Euclidean norm of the free gradient;
    /// `None` means `1e-8 h mu area`
    pub tol: Option<f64>,
    pub max_iter: usize,
    /// number of L-BFGS correction pairs
    pub memory: usize,
    /// worker threads for assembly; `None` uses the global pool
    pub threads: Option<usize>,
    pub residual_region: Option<ResidualRegion>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: None, max_iter: 20_000, memory: 20, threads: None, residual_region: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub converged: bool,
    pub status: String,
    pub iterations: usize,
    pub energy_evaluations: usize,
    pub final_energy: f64,
    pub tolerance: f64,
    pub gradient_norm: f64,
    pub gradient_norm_history: Vec<f64>,
    pub energy_history: Vec<f64>,
    pub max_force_residual: f64,
    pub max_moment_residual: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub config: MidsurfaceConfiguration,
    pub report: SolveReport,
}

type Flat = Vec<f64>;

fn flatten(e: &Evaluation) -> Flat {
    let mut g = Vec::with_capacity(6 * e.grad_m.len());
    for k in 0..e.grad_m.len() {
        g.extend_from_slice(e.grad_m[k].as_slice());
        g.extend_from_slice(e.grad_xi[k].as_slice());
    }
    g
}

fn split(d: &[f64]) -> (Vec<Vector3<f64>>, Vec<Vector3<f64>>) {
    let n = d.len() / 6;
    let dm = (0..n).map(|k| Vector3::new(d[6 * k], d[6 * k + 1], d[6 * k + 2])).collect();
    let dx = (0..n).map(|k| Vector3::new(d[6 * k + 3], d[6 * k + 4], d[6 * k + 5])).collect();
    (dm, dx)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Inverse of a nodal estimate of the Hessian diagonal.
fn preconditioner(problem: &ShellProblem) -> Flat {
    let geom = &problem.geom;
    let mat = &problem.material;
    let (du, dv) = geom.grid.spacing();
    let coef = mat.shear_coefficient(problem.variant);
    let h = mat.h;
    let membrane = h * (mat.mu + coef).max(1e-300);
    let bending = h * mat.mu * mat.l_c * mat.l_c * (mat.b1 + mat.b2 + mat.b3) + h.powi(3) / 12.0 * 2.0 * (mat.mu + mat.mu_c);
    let mut p = Vec::with_capacity(6 * geom.grid.len());
    for (k, f) in geom.frames.iter().enumerate() {
        let w = geom.weights[k];
        let lap = f.cotangents[0].norm_squared() / (du * du) + f.cotangents[1].norm_squared() / (dv * dv);
        let hm = w * membrane * lap;
        let hx = w * (2.0 * membrane + bending * lap);
        p.extend_from_slice(&[1.0 / hm, 1.0 / hm, 1.0 / hm, 1.0 / hx, 1.0 / hx, 1.0 / hx]);
    }
    p
}

/// Default tolerance `1e-8 h mu area`.
pub fn default_tolerance(problem: &ShellProblem) -> f64 {
    1e-8 * problem.material.h * problem.material.mu * problem.geom.total_area()
}

/// Minimize the total energy by L-BFGS with Armijo backtracking on the
/// product manifold, starting from `initial` (or the reference configuration).
pub fn solve(
    problem: &ShellProblem,
    initial: Option<MidsurfaceConfiguration>,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    match options.threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| SolveError::InvalidInput(format!("thread pool: {e}")))?;
            pool.install(|| solve_inner(problem, initial, options))
        }
        None => solve_inner(problem, initial, options),
    }
}

fn solve_inner(
    problem: &ShellProblem,
    initial: Option<MidsurfaceConfiguration>,
    options: &SolveOptions,
) -> Result<Solution, SolveError> {
    let mut x = initial.unwrap_or_else(|| MidsurfaceConfiguration::reference(&problem.geom));
    if x.grid != problem.geom.grid {
        return Err(SolveError::InvalidInput("initial configuration does not match the grid".into()));
    }
    problem.bcs.project(&mut x);
    let tol = options.tol.unwrap_or_else(|| default_tolerance(problem));
    let mut warnings = Vec::new();
    for (k, f) in problem.geom.frames.iter().enumerate() {
        if !crate::constitutive::thin_enough(f, problem.material.h) {
            warnings.push(format!("thickness exceeds 0.1 / max principal curvature at node {k}"));
            break;
        }
    }
    let mut ev = energy_gradient(problem, &x)?;
    let mut evals = 1;
    let mut g = flatten(&ev);
    let mut gnorm = dot(&g, &g).sqrt();
    let mut report = SolveReport {
        converged: false,
        status: String::new(),
        iterations: 0,
        energy_evaluations: 0,
        final_energy: ev.energy,
        tolerance: tol,
        gradient_norm: gnorm,
        gradient_norm_history: vec![gnorm],
        energy_history: vec![ev.energy],
        max_force_residual: 0.0,
        max_moment_residual: 0.0,
        warnings,
    };
    if let Some(msg) = problem.ill_posed() {
        report.warnings.push(format!("ill-posed: {msg}"));
        report.status = "ill-posed problem, not minimized".into();
        finish(problem, &x, &mut report, evals, options)?;
        return Err(SolveError::NonConvergence(Box::new(Solution { config: x, report })));
    }

    let p = preconditioner(problem);
    let mut mem: std::collections::VecDeque<(Flat, Flat, f64)> = std::collections::VecDeque::new();
    let mut iter = 0;
    let mut stalled = 0;
    let status = loop {
        if gnorm <= tol {
            report.converged = true;
            break "converged".to_string();
        }
        if iter >= options.max_iter {
            break format!("iteration limit {} reached", options.max_iter);
        }
        let mut d = direction(&g, &p, &mem);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            mem.clear();
            d = g.iter().zip(&p).map(|(gi, pi)| -gi * pi).collect();
            slope = dot(&g, &d);
        }
        // keep single-step rotation increments moderate
        let max_rot = (0..d.len() / 6)
            .map(|k| (d[6 * k + 3].powi(2) + d[6 * k + 4].powi(2) + d[6 * k + 5].powi(2)).sqrt())
            .fold(0.0, f64::max);
        let mut t = if max_rot > 0.5 { 0.5 / max_rot } else { 1.0 };
        let (dm, dx) = split(&d);
        let mut accepted = None;
        for _ in 0..60 {
            let trial = retract(&x, &dm, &dx, t);
            let e = energy_gradient(problem, &trial)?;
            evals += 1;
            if e.energy <= ev.energy + 1e-4 * t * slope {
                accepted = Some((trial, e));
                break;
            }
            t *= 0.5;
        }
        let Some((xn, en)) = accepted else {
            if !mem.is_empty() {
                mem.clear();
                continue;
            }
            break "line search failed to decrease the energy".to_string();
        };
        let gn = flatten(&en);
        let s: Flat = d.iter().map(|di| di * t).collect();
        let y: Flat = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&s, &s).sqrt() * dot(&y, &y).sqrt() {
            if mem.len() == options.memory.max(1) {
                mem.pop_front();
            }
            mem.push_back((s, y, 1.0 / sy));
        }
        // round-off plateau: the energy no longer changes
        stalled = if en.energy < ev.energy { 0 } else { stalled + 1 };
        x = xn;
        ev = en;
        g = gn;
        gnorm = dot(&g, &g).sqrt();
        iter += 1;
        report.gradient_norm_history.push(gnorm);
        report.energy_history.push(ev.energy);
        if stalled >= 50 {
            break "stagnated at the round-off level of the energy".to_string();
        }
    };
    report.iterations = iter;
    report.status = status;
    report.final_energy = ev.energy;
    report.gradient_norm = gnorm;
    finish(problem, &x, &mut report, evals, options)?;
    let solution = Solution { config: x, report };
    if solution.report.converged {
        Ok(solution)
    } else {
        Err(SolveError::NonConvergence(Box::new(solution)))
    }
}

fn finish(
    problem: &ShellProblem,
    x: &MidsurfaceConfiguration,
    report: &mut SolveReport,
    evals: usize,
    options: &SolveOptions,
) -> Result<(), SolveError> {
    let res = equilibrium_residual(problem, x)?;
    let (f, m) = max_residuals(problem, &res, RESIDUAL_MIN_DISTANCE, options.residual_region);
    report.max_force_residual = f;
    report.max_moment_residual = m;
    report.energy_evaluations = evals;
    Ok(())
}

/// L-BFGS two-loop recursion with `H0 = gamma P`.
fn direction(g: &[f64], p: &[f64], mem: &std::collections::VecDeque<(Flat, Flat, f64)>) -> Flat {
    let mut q: Flat = g.to_vec();
    let mut alphas = Vec::with_capacity(mem.len());
    for (s, y, rho) in mem.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let gamma = match mem.back() {
        Some((s, y, _)) => {
            let py: f64 = y.iter().zip(p).map(|(yi, pi)| yi * yi * pi).sum();
            dot(s, y) / py
        }
        None => 1.0,
    };
    let mut r: Flat = q.iter().zip(p).map(|(qi, pi)| qi * pi * gamma).collect();
    for ((s, y, rho), a) in mem.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &r);
        for (ri, si) in r.iter_mut().zip(s) {
            *ri += (a - b) * si;
        }
    }
    r.iter_mut().for_each(|x| *x = -*x);
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{ParameterDomain, Parametrization, SurfaceChart};
    use crate::kinematics::Grid;
    use crate::sampling::{random_rotation, random_vector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn problem(chart: &SurfaceChart, n: usize, edges: EdgeConditions, mat: MaterialConstants) -> ShellProblem {
        let d = chart.domain();
        let geom = GridGeometry::new(chart, Grid::new(n, n, d).unwrap()).unwrap();
        let bcs = BoundaryConditions::from_edges(&geom, &edges);
        let loads = LoadSpec::zero(geom.grid.len());
        ShellProblem::new(geom, mat, ShearVariant::Harmonic, bcs, loads).unwrap()
    }

    fn cylinder() -> SurfaceChart {
        let c = SurfaceChart::cylinder(1.5, ParameterDomain::new((0.0, 1.0), (0.0, 1.0)).unwrap()).unwrap();
        assert!(c.domain().contains(0.5, 0.5));
        c
    }

    fn perturbed(p: &ShellProblem, seed: u64, amp: f64) -> MidsurfaceConfiguration {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut c = MidsurfaceConfiguration::reference(&p.geom);
        for k in 0..c.positions.len() {
            c.positions[k] += random_vector(&mut rng, amp);
            c.rotations[k] = UnitQuaternion::from_scaled_axis(random_vector(&mut rng, 3.0 * amp));
        }
        c
    }

    #[test]
    fn reference_and_rigid_motion_have_zero_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = problem(&cylinder(), 9, EdgeConditions::all(EdgeCondition::Free), MaterialConstants::default());
        let r = MidsurfaceConfiguration::reference(&p.geom);
        let ev = energy_gradient(&p, &r).unwrap();
        assert!(ev.energy.abs() < 1e-20);
        assert!(flatten(&ev).iter().all(|g| g.abs() < 1e-14));
        let moved = r.rigid_motion(&random_rotation(&mut rng), &random_vector(&mut rng, 2.0));
        assert!(total_energy(&p, &moved).unwrap().abs() < 1e-20);
    }

    #[test]
    fn uniform_stretch_matches_closed_form() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let mat = MaterialConstants { mu: 1.0, lambda: 1.0, h: 0.1, ..Default::default() };
        let p = problem(&chart, 9, EdgeConditions::all(EdgeCondition::Free), mat);
        let mut c = MidsurfaceConfiguration::reference(&p.geom);
        let s = 1.01;
        c.positions.iter_mut().for_each(|m| *m *= s);
        let e = s - 1.0;
        // E = e a: mu |E|^2 + mu lambda / (lambda + 2 mu) (tr E)^2 on a unit square
        let per_area = mat.h * (mat.mu * 2.0 * e * e + mat.lambda * mat.mu / (mat.lambda + 2.0 * mat.mu) * 4.0 * e * e);
        let got = total_energy(&p, &c).unwrap();
        assert!((got - per_area).abs() <= 1e-8 * per_area, "{got} {per_area}");
    }

    #[test]
    fn gradient_matches_directional_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mat = MaterialConstants { mu: 1.0, lambda: 0.5, mu_c: 0.7, l_c: 0.3, h: 0.2, ..Default::default() };
        let edges = EdgeConditions { u_min: EdgeCondition::Clamped, ..EdgeConditions::all(EdgeCondition::Free) };
        let mut p = problem(&cylinder(), 7, edges, mat);
        p.loads = LoadSpec::uniform(p.geom.grid.len(), Vector3::new(0.1, -0.2, 0.3), Vector3::new(0.05, 0.02, -0.04));
        let c = perturbed(&p, 3, 0.05);
        let mut c = c;
        p.bcs.project(&mut c);
        let ev = energy_gradient(&p, &c).unwrap();
        let g = flatten(&ev);
        for _ in 0..20 {
            let mut d: Flat = (0..g.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
            for k in 0..p.geom.grid.len() {
                if p.bcs.is_fixed(k) {
                    d[6 * k..6 * k + 6].iter_mut().for_each(|x| *x = 0.0);
                }
            }
            let (dm, dx) = split(&d);
            let h = 1e-6;
            let fp = total_energy(&p, &retract(&c, &dm, &dx, h)).unwrap();
            let fm = total_energy(&p, &retract(&c, &dm, &dx, -h)).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an = dot(&g, &d);
            assert!((fd - an).abs() <= 1e-6 * an.abs().max(1e-12), "{fd} {an}");
        }
    }

    #[test]
    fn clamped_plate_without_load_stays_put() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let p = problem(&chart, 9, EdgeConditions::all(EdgeCondition::Clamped), MaterialConstants::default());
        let s = solve(&p, None, &SolveOptions::default()).unwrap();
        assert!(s.report.iterations <= 2);
        assert_eq!(s.report.final_energy, 0.0);
        assert_eq!(s.config, MidsurfaceConfiguration::reference(&p.geom));
    }

    #[test]
    fn loaded_plate_converges_monotonically() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let mut p = problem(&chart, 9, EdgeConditions::all(EdgeCondition::Clamped), MaterialConstants::default());
        p.loads = LoadSpec::uniform(p.geom.grid.len(), Vector3::new(0.0, 0.0, 1e-3), Vector3::zeros());
        let s = solve(&p, None, &SolveOptions { tol: Some(1e-11), ..Default::default() }).unwrap();
        assert!(s.report.converged);
        assert!(s.report.energy_history.windows(2).all(|w| w[1] <= w[0]));
        assert!(s.report.final_energy < 0.0);
        let ev = energy_gradient(&p, &s.config).unwrap();
        assert!(dot(&flatten(&ev), &flatten(&ev)).sqrt() <= 1e-11);
    }

    #[test]
    fn minimizers_carry_no_odd_even_mode() {
        // second differences at spacing h and 2h agree for smooth fields; a
        // checkerboard component would make their gap grow under refinement
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let gap = |n: usize| {
            let mut p = problem(&chart, n, EdgeConditions::all(EdgeCondition::Clamped), MaterialConstants::default());
            p.loads = LoadSpec::uniform(p.geom.grid.len(), Vector3::new(0.0, 0.0, 1e-2), Vector3::zeros());
            let s = solve(&p, None, &SolveOptions { tol: Some(1e-10), ..Default::default() }).unwrap();
            let g = p.geom.grid;
            let th: Vec<_> = s.config.rotations.iter().map(|q| Rotation::from_quaternion(q).log()).collect();
            let h = 1.0 / (n - 1) as f64;
            let mut worst: f64 = 0.0;
            for i in 2..n - 2 {
                for j in 2..n - 2 {
                    let at = |di: isize| th[g.index((i as isize + di) as usize, j)];
                    let d1 = at(1) - at(0) * 2.0 + at(-1);
                    let d2 = (at(2) - at(0) * 2.0 + at(-2)) / 4.0;
                    worst = worst.max((d1 - d2).norm() / (h * h));
                }
            }
            worst
        };
        let (a, b) = (gap(17), gap(33));
        assert!(b < 0.6 * a, "{a} {b}");
    }

    #[test]
    fn solver_is_deterministic_across_thread_counts() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let mut p = problem(&chart, 9, EdgeConditions::all(EdgeCondition::Clamped), MaterialConstants::default());
        p.loads = LoadSpec::uniform(p.geom.grid.len(), Vector3::new(1e-3, 0.0, 1e-3), Vector3::zeros());
        let opts = |n| SolveOptions { tol: Some(1e-10), threads: Some(n), ..Default::default() };
        let a = solve(&p, None, &opts(1)).unwrap();
        let b = solve(&p, None, &opts(1)).unwrap();
        let c = solve(&p, None, &opts(4)).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.report, c.report);
        assert_eq!(a.config, c.config);
    }

    #[test]
    fn ill_posed_problem_is_reported() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let mut p = problem(&chart, 5, EdgeConditions::all(EdgeCondition::Free), MaterialConstants::default());
        p.loads = LoadSpec::uniform(p.geom.grid.len(), Vector3::new(0.0, 0.0, 1.0), Vector3::zeros());
        match solve(&p, None, &SolveOptions::default()) {
            Err(SolveError::NonConvergence(s)) => {
                assert!(s.report.warnings.iter().any(|w| w.starts_with("ill-posed")));
                assert_eq!(s.report.iterations, 0);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn boundary_partition_is_exclusive() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let edges = EdgeConditions {
            u_min: EdgeCondition::Clamped,
            u_max: EdgeCondition::Traction { force: [1.0, 0.0, 0.0], couple: [0.0; 3] },
            v_min: EdgeCondition::Free,
            v_max: EdgeCondition::Prescribed { displacement: [0.0, 0.0, 0.1], rotation: [0.0; 3] },
        };
        let p = problem(&chart, 5, edges, MaterialConstants::default());
        let g = &p.geom.grid;
        assert!(p.bcs.is_fixed(g.index(0, 4)));
        match p.bcs.nodes[g.index(4, 4)] {
            NodeCondition::Dirichlet { position, .. } => assert!((position.z - 0.1).abs() < 1e-15),
            other => panic!("{other:?}"),
        }
        // traction 1 over an edge of unit length: nodal shares sum to 1
        let total: f64 = (0..g.len())
            .filter_map(|k| match p.bcs.nodes[k] {
                NodeCondition::Neumann { force, .. } => Some(force.x),
                _ => None,
            })
            .sum();
        // the corner (4, 4) belongs to the prescribed edge
        assert!((total - 0.875).abs() < 1e-14, "{total}");
    }

    #[test]
    fn manufactured_residual_converges() {
        // smooth configuration on a flat chart; the residual at the centre
        // approaches the pointwise value at second order
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        let mat = MaterialConstants { lambda: 0.6, mu_c: 0.8, l_c: 0.4, h: 0.2, ..Default::default() };
        let field = crate::sampling::TwoAxisRotationField::default();
        let config_for = |p: &ShellProblem| {
            let mut c = MidsurfaceConfiguration::reference(&p.geom);
            for k in 0..c.positions.len() {
                let (u, v) = p.geom.grid.coords(k);
                c.positions[k] += Vector3::new(0.05 * (2.0 * v).sin(), 0.03 * u * u, 0.1 * (u + v).cos());
                c.rotations[k] = Rotation::exp(&(field.rotation(u, v).log() * 0.2)).to_quaternion();
            }
            c
        };
        let centre = |n: usize| {
            let p = problem(&chart, n, EdgeConditions::all(EdgeCondition::Clamped), mat);
            let r = equilibrium_residual(&p, &config_for(&p)).unwrap();
            let k = p.geom.grid.index(n / 2, n / 2);
            r[k]
        };
        let (a, b, c) = (centre(17), centre(33), centre(65));
        let e1 = (a.force - c.force).norm() + (a.moment - c.moment).norm();
        let e2 = (b.force - c.force).norm() + (b.moment - c.moment).norm();
        // Richardson: e(h) - e(h/4) ~ C h^2 (1 - 1/16), e(h/2) - e(h/4) ~ C h^2 (1/4 - 1/16)
        let ratio = e1 / e2;
        assert!((ratio - 5.0).abs() < 0.5, "{ratio}");
    }
}
