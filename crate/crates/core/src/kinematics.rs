//! Discrete midsurface configurations and the strain measures built on them.
//!
//! Fields live on a uniform rectangular lattice over the parameter domain.
//! Partial derivatives use second-order central differences in the interior
//! and second-order one-sided differences on the boundary. The reference
//! frames used by the discretization are built from the same difference
//! operator applied to the chart values, so the reference configuration and
//! rigid motions are strain-free to round-off on curved charts as well.

use std::ops::{Add, Mul};

use nalgebra::{Matrix2, Matrix3, Matrix3x2, UnitQuaternion, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::MaterialConstants;
use crate::geometry::{GeometryError, ParameterDomain, Parametrization, SurfaceFrame};
use crate::tensor::{vee, PlanarTensor, Rotation, ShellTensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KinematicsError {
    #[error("grid needs at least 3 nodes per direction, got {n_u} x {n_v}")]
    GridTooSmall { n_u: usize, n_v: usize },
    #[error("field has {found} entries but the grid has {expected} nodes")]
    SizeMismatch { expected: usize, found: usize },
    #[error("deformed surface is degenerate at node {node}")]
    DegenerateDeformedSurface { node: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Uniform lattice of `n_u x n_v` nodes; node `(i, j)` has index `j * n_u + i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n_u: usize,
    pub n_v: usize,
    pub domain: ParameterDomain,
}

impl Grid {
    pub fn new(n_u: usize, n_v: usize, domain: ParameterDomain) -> Result<Self, KinematicsError> {
        if n_u < 3 || n_v < 3 {
            return Err(KinematicsError::GridTooSmall { n_u, n_v });
        }
        Ok(Self { n_u, n_v, domain })
    }

    pub fn len(&self) -> usize {
        self.n_u * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n_u + i
    }

    pub fn ij(&self, k: usize) -> (usize, usize) {
        (k % self.n_u, k / self.n_u)
    }

    pub fn spacing(&self) -> (f64, f64) {
        (
            (self.domain.u.1 - self.domain.u.0) / (self.n_u - 1) as f64,
            (self.domain.v.1 - self.domain.v.0) / (self.n_v - 1) as f64,
        )
    }

    pub fn coords(&self, k: usize) -> (f64, f64) {
        let (i, j) = self.ij(k);
        self.domain.lerp(i as f64 / (self.n_u - 1) as f64, j as f64 / (self.n_v - 1) as f64)
    }

    pub fn is_boundary(&self, k: usize) -> bool {
        self.boundary_distance(k) == 0
    }

    /// Number of lattice steps to the nearest edge.
    pub fn boundary_distance(&self, k: usize) -> usize {
        let (i, j) = self.ij(k);
        i.min(self.n_u - 1 - i).min(j).min(self.n_v - 1 - j)
    }

    /// Difference weights for the partial derivative in direction `dir` at node `k`.
    pub fn stencil(&self, k: usize, dir: usize) -> [(usize, f64); 3] {
        let (i, j) = self.ij(k);
        let (n, pos, h) = if dir == 0 { (self.n_u, i, self.spacing().0) } else { (self.n_v, j, self.spacing().1) };
        let node = |p: usize| if dir == 0 { self.index(p, j) } else { self.index(i, p) };
        let c = 0.5 / h;
        if pos == 0 {
            [(node(0), -3.0 * c), (node(1), 4.0 * c), (node(2), -c)]
        } else if pos == n - 1 {
            [(node(n - 1), 3.0 * c), (node(n - 2), -4.0 * c), (node(n - 3), c)]
        } else {
            [(node(pos - 1), -c), (node(pos + 1), c), (node(pos), 0.0)]
        }
    }

    /// Two-point forward (`forward = true`) or backward difference in direction
    /// `dir` at node `k`; falls back to the other side on the last or first node.
    pub fn one_sided_stencil(&self, k: usize, dir: usize, forward: bool) -> [(usize, f64); 2] {
        let (i, j) = self.ij(k);
        let (n, pos, h) = if dir == 0 { (self.n_u, i, self.spacing().0) } else { (self.n_v, j, self.spacing().1) };
        let node = |p: usize| if dir == 0 { self.index(p, j) } else { self.index(i, p) };
        let forward = (forward && pos + 1 < n) || pos == 0;
        if forward {
            [(node(pos), -1.0 / h), (node(pos + 1), 1.0 / h)]
        } else {
            [(node(pos - 1), -1.0 / h), (node(pos), 1.0 / h)]
        }
    }

    /// Trapezoidal quadrature weight in parameter space.
    pub fn quadrature_weight(&self, k: usize) -> f64 {
        let (i, j) = self.ij(k);
        let (du, dv) = self.spacing();
        let wu = if i == 0 || i == self.n_u - 1 { 0.5 } else { 1.0 };
        let wv = if j == 0 || j == self.n_v - 1 { 0.5 } else { 1.0 };
        du * dv * wu * wv
    }
}

/// `(d/du, d/dv)` of a nodal field.
pub fn partial_derivatives<T>(grid: &Grid, values: &[T]) -> Result<Vec<[T; 2]>, KinematicsError>
where
    T: Copy + Send + Sync + Add<Output = T> + Mul<f64, Output = T>,
{
    if values.len() != grid.len() {
        return Err(KinematicsError::SizeMismatch { expected: grid.len(), found: values.len() });
    }
    Ok((0..grid.len())
        .into_par_iter()
        .map(|k| {
            let d = |dir: usize| {
                let [(i0, w0), (i1, w1), (i2, w2)] = grid.stencil(k, dir);
                values[i0] * w0 + values[i1] * w1 + values[i2] * w2
            };
            [d(0), d(1)]
        })
        .collect())
}

/// `Grad_s f = f,a (x) a^a` as Cartesian matrices.
pub fn surface_gradient(geom: &GridGeometry, values: &[Vector3<f64>]) -> Result<Vec<Matrix3<f64>>, KinematicsError> {
    let d = partial_derivatives(&geom.grid, values)?;
    Ok(d.iter()
        .zip(&geom.frames)
        .map(|(d, f)| d[0] * f.cotangents[0].transpose() + d[1] * f.cotangents[1].transpose())
        .collect())
}

/// Reference data of a chart sampled on a grid.
#[derive(Debug, Clone)]
pub struct GridGeometry {
    pub grid: Grid,
    pub frames: Vec<SurfaceFrame>,
    pub positions: Vec<Vector3<f64>>,
    /// Columns are the reference directors `d_i^0 = Q0 e_i`.
    pub directors: Vec<Matrix3<f64>>,
    /// Quadrature weight times area density.
    pub weights: Vec<f64>,
}

impl GridGeometry {
    pub fn new<P: Parametrization + ?Sized>(chart: &P, grid: Grid) -> Result<Self, KinematicsError> {
        let domain = chart.domain();
        if domain != grid.domain {
            return Err(GeometryError::InvalidChart("grid domain differs from chart domain".into()).into());
        }
        let positions = (0..grid.len())
            .map(|k| {
                let (u, v) = grid.coords(k);
                chart.position(u, v)
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_positions(grid, positions)
    }

    /// Discrete frames from lattice positions: tangents and normal derivatives
    /// use the grid difference operator.
    pub fn from_positions(grid: Grid, positions: Vec<Vector3<f64>>) -> Result<Self, KinematicsError> {
        let tangents = partial_derivatives(&grid, &positions)?;
        let normals = tangents
            .iter()
            .enumerate()
            .map(|(k, t)| {
                let c = t[0].cross(&t[1]);
                let cn = c.norm();
                if cn < crate::geometry::DEGENERACY_TOL * t[0].norm() * t[1].norm() || cn == 0.0 {
                    let (u, v) = grid.coords(k);
                    Err(KinematicsError::Geometry(GeometryError::DegenerateChart { u, v }))
                } else {
                    Ok(c / cn)
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dn = partial_derivatives(&grid, &normals)?;
        let frames = (0..grid.len())
            .map(|k| {
                let t = &tangents[k];
                let b = Matrix2::from_fn(|a, c| -t[a].dot(&dn[k][c]));
                SurfaceFrame::new(positions[k], *t, b).map_err(|_| {
                    let (u, v) = grid.coords(k);
                    KinematicsError::Geometry(GeometryError::DegenerateChart { u, v })
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let directors = frames.iter().map(reference_directors).collect();
        let weights = (0..grid.len()).map(|k| grid.quadrature_weight(k) * frames[k].area).collect();
        Ok(Self { grid, frames, positions, directors, weights })
    }

    pub fn total_area(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// `Q0 = polar([a_1 a_2 n0])`; its third column is `n0`.
pub fn reference_directors(frame: &SurfaceFrame) -> Matrix3<f64> {
    let a = frame.metric;
    let s = a.determinant().sqrt();
    let t = (a.trace() + 2.0 * s).sqrt();
    let sqrt_a = (a + Matrix2::identity() * s) / t;
    let inv = sqrt_a.try_inverse().expect("metric is positive definite");
    let f = Matrix3::from_columns(&[frame.tangents[0], frame.tangents[1], frame.normal]);
    let mut u = Matrix3::identity();
    u.fixed_view_mut::<2, 2>(0, 0).copy_from(&inv);
    f * u
}

/// Deformed midsurface and microrotation on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MidsurfaceConfiguration {
    pub grid: Grid,
    pub positions: Vec<Vector3<f64>>,
    pub rotations: Vec<UnitQuaternion<f64>>,
}

impl MidsurfaceConfiguration {
    pub fn new(
        grid: Grid,
        positions: Vec<Vector3<f64>>,
        rotations: Vec<UnitQuaternion<f64>>,
    ) -> Result<Self, KinematicsError> {
        for len in [positions.len(), rotations.len()] {
            if len != grid.len() {
                return Err(KinematicsError::SizeMismatch { expected: grid.len(), found: len });
            }
        }
        Ok(Self { grid, positions, rotations })
    }

    /// `m = y0`, `Q_e = 1`.
    pub fn reference(geom: &GridGeometry) -> Self {
        Self {
            grid: geom.grid,
            positions: geom.positions.clone(),
            rotations: vec![UnitQuaternion::identity(); geom.grid.len()],
        }
    }

    pub fn rotation_matrices(&self) -> Vec<Matrix3<f64>> {
        self.rotations.iter().map(|q| q.to_rotation_matrix().into_inner()).collect()
    }

    /// Deformed directors `d_i = Q_e d_i^0` as matrix columns.
    pub fn directors(&self, geom: &GridGeometry) -> Vec<Matrix3<f64>> {
        self.rotation_matrices().iter().zip(&geom.directors).map(|(q, d0)| q * d0).collect()
    }

    /// Superpose the rigid motion `x -> R x + t`.
    pub fn rigid_motion(&self, r: &Rotation, t: &Vector3<f64>) -> Self {
        let rq = r.to_quaternion();
        Self {
            grid: self.grid,
            positions: self.positions.iter().map(|m| r.apply(m) + t).collect(),
            rotations: self.rotations.iter().map(|q| rq * q).collect(),
        }
    }
}

/// Shell strain and bending-curvature tensors at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellStrains {
    pub e: ShellTensor,
    pub k: ShellTensor,
}

/// Change of metric and change of curvature at one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoiterStrains {
    pub eps: PlanarTensor,
    pub rho: PlanarTensor,
}

/// `E = Q^T Grad_s m - a` from the partial derivatives of `m`.
pub fn strain_from_gradient(frame: &SurfaceFrame, q: &Matrix3<f64>, dm: &[Vector3<f64>; 2]) -> ShellTensor {
    let y = [q.tr_mul(&dm[0]), q.tr_mul(&dm[1])];
    let cov = Matrix3x2::from_fn(|i, a| {
        let ai = frame.basis(i);
        ai.dot(&y[a]) - if i < 2 { frame.metric[(i, a)] } else { 0.0 }
    });
    ShellTensor::new(frame, cov)
}

/// `E = Q^T D m - D y0` on the frame basis, for difference quotients `D m`, `D y0`
/// of the deformed and reference positions taken with the same stencil.
/// Vanishes exactly on rigid motions whatever the stencil.
pub fn strain_from_differences(
    frame: &SurfaceFrame,
    q: &Matrix3<f64>,
    dm: &[Vector3<f64>; 2],
    dy0: &[Vector3<f64>; 2],
) -> ShellTensor {
    let y = [q.tr_mul(&dm[0]) - dy0[0], q.tr_mul(&dm[1]) - dy0[1]];
    ShellTensor::new(frame, Matrix3x2::from_fn(|i, a| frame.basis(i).dot(&y[a])))
}

/// `K = axl(Q^T Q,a) (x) a^a`; the skew part of `Q^T Q,a` is used so that
/// difference quotients of rotation fields are admissible.
pub fn curvature_from_rotation(frame: &SurfaceFrame, q: &Matrix3<f64>, dq: &[Matrix3<f64>; 2]) -> ShellTensor {
    let k = [vee(&q.tr_mul(&dq[0])), vee(&q.tr_mul(&dq[1]))];
    ShellTensor::new(frame, Matrix3x2::from_fn(|i, a| frame.basis(i).dot(&k[a])))
}

/// `K = 1/2 [Q^T (d_i x Grad_s d_i) - d_i^0 x Grad_s d_i^0]` from director fields.
pub fn curvature_from_directors(
    frame: &SurfaceFrame,
    q: &Matrix3<f64>,
    d: &Matrix3<f64>,
    dd: &[Matrix3<f64>; 2],
    d0: &Matrix3<f64>,
    dd0: &[Matrix3<f64>; 2],
) -> ShellTensor {
    let k = [0, 1].map(|a| {
        let mut deformed = Vector3::zeros();
        let mut reference = Vector3::zeros();
        for i in 0..3 {
            deformed += d.column(i).cross(&dd[a].column(i));
            reference += d0.column(i).cross(&dd0[a].column(i));
        }
        (q.tr_mul(&deformed) - reference) * 0.5
    });
    ShellTensor::new(frame, Matrix3x2::from_fn(|i, a| frame.basis(i).dot(&k[a])))
}

/// Koiter strains from `m,a` and the derivatives of the deformed normal.
pub fn koiter_from_gradients(frame: &SurfaceFrame, dm: &[Vector3<f64>; 2], dn: &[Vector3<f64>; 2]) -> KoiterStrains {
    let eps = Matrix2::from_fn(|a, b| 0.5 * (dm[a].dot(&dm[b]) - frame.metric[(a, b)]));
    let rho = Matrix2::from_fn(|a, b| -dm[a].dot(&dn[b]));
    KoiterStrains {
        eps: PlanarTensor::new(frame, eps).sym(),
        rho: PlanarTensor::new(frame, (rho + rho.transpose()) * 0.5 - frame.curvature),
    }
}

fn check_config(geom: &GridGeometry, config: &MidsurfaceConfiguration) -> Result<(), KinematicsError> {
    if config.grid != geom.grid {
        return Err(KinematicsError::SizeMismatch { expected: geom.grid.len(), found: config.grid.len() });
    }
    Ok(())
}

/// `E` and `K` at every node.
pub fn shell_strains(geom: &GridGeometry, config: &MidsurfaceConfiguration) -> Result<Vec<ShellStrains>, KinematicsError> {
    check_config(geom, config)?;
    let q = config.rotation_matrices();
    let dm = partial_derivatives(&geom.grid, &config.positions)?;
    let dq = partial_derivatives(&geom.grid, &q)?;
    Ok((0..geom.grid.len())
        .into_par_iter()
        .map(|k| {
            let f = &geom.frames[k];
            ShellStrains { e: strain_from_gradient(f, &q[k], &dm[k]), k: curvature_from_rotation(f, &q[k], &dq[k]) }
        })
        .collect())
}

pub fn shell_strain(geom: &GridGeometry, config: &MidsurfaceConfiguration) -> Result<Vec<ShellTensor>, KinematicsError> {
    Ok(shell_strains(geom, config)?.into_iter().map(|s| s.e).collect())
}

pub fn bending_curvature(geom: &GridGeometry, config: &MidsurfaceConfiguration) -> Result<Vec<ShellTensor>, KinematicsError> {
    Ok(shell_strains(geom, config)?.into_iter().map(|s| s.k).collect())
}

/// Bending curvature through the director fields instead of the rotation field.
pub fn bending_curvature_directors(
    geom: &GridGeometry,
    config: &MidsurfaceConfiguration,
) -> Result<Vec<ShellTensor>, KinematicsError> {
    check_config(geom, config)?;
    let q = config.rotation_matrices();
    let d = config.directors(geom);
    let dd = partial_derivatives(&geom.grid, &d)?;
    let dd0 = partial_derivatives(&geom.grid, &geom.directors)?;
    Ok((0..geom.grid.len())
        .into_par_iter()
        .map(|k| curvature_from_directors(&geom.frames[k], &q[k], &d[k], &dd[k], &geom.directors[k], &dd0[k]))
        .collect())
}

/// Unit normals of the deformed surface.
pub fn deformed_normals(geom: &GridGeometry, positions: &[Vector3<f64>]) -> Result<Vec<Vector3<f64>>, KinematicsError> {
    let dm = partial_derivatives(&geom.grid, positions)?;
    dm.iter()
        .enumerate()
        .map(|(node, d)| {
            let c = d[0].cross(&d[1]);
            let cn = c.norm();
            if cn <= crate::geometry::DEGENERACY_TOL * d[0].norm() * d[1].norm() || cn == 0.0 {
                Err(KinematicsError::DegenerateDeformedSurface { node })
            } else {
                Ok(c / cn)
            }
        })
        .collect()
}

pub fn koiter_strains(geom: &GridGeometry, config: &MidsurfaceConfiguration) -> Result<Vec<KoiterStrains>, KinematicsError> {
    check_config(geom, config)?;
    let dm = partial_derivatives(&geom.grid, &config.positions)?;
    let n = deformed_normals(geom, &config.positions)?;
    let dn = partial_derivatives(&geom.grid, &n)?;
    Ok((0..geom.grid.len()).map(|k| koiter_from_gradients(&geom.frames[k], &dm[k], &dn[k])).collect())
}

/// Through-thickness expansion vectors `(alpha, beta)` at a node.
pub fn expansion_vectors(
    strains: &ShellStrains,
    frame: &SurfaceFrame,
    q: &Rotation,
    mat: &MaterialConstants,
) -> (Vector3<f64>, Vector3<f64>) {
    let (mu, lambda, mu_c) = (mat.mu, mat.lambda, mat.mu_c);
    let a = lambda / (lambda + 2.0 * mu);
    let s = (mu - mu_c) / (mu + mu_c);
    let d3 = q.apply(&frame.normal);
    let e = &strains.e;
    let b = PlanarTensor::curvature(frame);
    let alpha = d3 * (1.0 - a * e.trace(frame)) - q.apply(&e.transversal().to_cartesian(frame)) * s;
    let z = e.right_mul(&b, frame) + crate::tensor::alternator_apply(frame, &strains.k);
    let beta = d3 * (-a * z.trace(frame)) - q.apply(&e.transversal().right_mul(&b, frame).to_cartesian(frame)) * s;
    (alpha, beta)
}

/// Rotation taking the reference triad to a deformed triad whose third
/// vector is the deformed normal: `n (x) n0` plus the closest rotation
/// between the tangent planes, the polar factor of `Grad_s m` there.
pub fn kirchhoff_love_rotation(frame: &SurfaceFrame, dm: &[Vector3<f64>; 2]) -> Option<Matrix3<f64>> {
    let c = dm[0].cross(&dm[1]);
    let cn = c.norm();
    if cn == 0.0 {
        return None;
    }
    let n = c / cn;
    let e1 = frame.tangents[0].normalize();
    let e2 = frame.normal.cross(&e1);
    let t1 = dm[0].normalize();
    let t2 = n.cross(&t1);
    let f = dm[0] * frame.cotangents[0].transpose() + dm[1] * frame.cotangents[1].transpose();
    let (fe1, fe2) = (f * e1, f * e2);
    let theta = (t2.dot(&fe1) - t1.dot(&fe2)).atan2(t1.dot(&fe1) + t2.dot(&fe2));
    let (s, co) = theta.sin_cos();
    let r1 = t1 * co + t2 * s;
    let r2 = t2 * co - t1 * s;
    Some(r1 * e1.transpose() + r2 * e2.transpose() + n * frame.normal.transpose())
}

/// Configuration with the given positions and Kirchhoff-Love rotations
/// built from the grid difference of the positions.
pub fn kl_configuration(geom: &GridGeometry, positions: Vec<Vector3<f64>>) -> Result<MidsurfaceConfiguration, KinematicsError> {
    let dm = partial_derivatives(&geom.grid, &positions)?;
    let rotations = (0..geom.grid.len())
        .map(|k| {
            kirchhoff_love_rotation(&geom.frames[k], &dm[k])
                .map(|r| UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(r)))
                .ok_or(KinematicsError::DegenerateDeformedSurface { node: k })
        })
        .collect::<Result<Vec<_>, _>>()?;
    MidsurfaceConfiguration::new(geom.grid, positions, rotations)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::apply_c3d;
    use crate::geometry::SurfaceChart;
    use crate::sampling::{random_frame, random_rotation, random_shell, random_vector, TwoAxisRotationField};
    use crate::tensor::FrameTensor;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plate(n: usize) -> GridGeometry {
        let d = ParameterDomain::unit();
        GridGeometry::new(&SurfaceChart::plate(d), Grid::new(n, n, d).unwrap()).unwrap()
    }

    fn cylinder(n: usize) -> GridGeometry {
        let d = ParameterDomain::new((0.0, 1.2), (0.0, 1.0)).unwrap();
        GridGeometry::new(&SurfaceChart::cylinder(2.0, d).unwrap(), Grid::new(n, n, d).unwrap()).unwrap()
    }

    fn sphere(n: usize) -> GridGeometry {
        let d = ParameterDomain::new((-0.6, 0.6), (1.0, 2.0)).unwrap();
        GridGeometry::new(&SurfaceChart::sphere_cap(1.0, d).unwrap(), Grid::new(n, n, d).unwrap()).unwrap()
    }

    #[test]
    fn grid_too_small() {
        assert!(matches!(Grid::new(2, 5, ParameterDomain::unit()), Err(KinematicsError::GridTooSmall { .. })));
    }

    #[test]
    fn gradient_of_constant_and_affine_fields() {
        let g = plate(7);
        let c = vec![Vector3::new(1.0, 2.0, 3.0); g.grid.len()];
        assert!(surface_gradient(&g, &c).unwrap().iter().all(|m| m.norm() < 1e-12));
        let lin: Vec<_> = (0..g.grid.len()).map(|k| Vector3::x() * g.grid.coords(k).0).collect();
        let expected = Vector3::x() * g.frames[0].cotangents[0].transpose();
        for m in surface_gradient(&g, &lin).unwrap() {
            assert!((m - expected).norm() < 1e-10);
        }
    }

    #[test]
    fn gradient_of_chart_is_second_order() {
        let d = ParameterDomain::new((0.0, 1.2), (0.0, 1.0)).unwrap();
        let chart = SurfaceChart::cylinder(2.0, d).unwrap();
        let err = |n: usize| {
            let g = cylinder(n);
            let grad = surface_gradient(&g, &g.positions).unwrap();
            let dm = partial_derivatives(&g.grid, &g.positions).unwrap();
            let mut worst: f64 = 0.0;
            for k in (0..g.grid.len()).filter(|&k| !g.grid.is_boundary(k)) {
                let (u, v) = g.grid.coords(k);
                let exact = crate::geometry::evaluate_frame(&chart, u, v).unwrap();
                let a = exact.tangents[0] * exact.cotangents[0].transpose()
                    + exact.tangents[1] * exact.cotangents[1].transpose();
                assert!((grad[k] - a).norm() < 1e-12);
                worst = worst.max((dm[k][0] - exact.tangents[0]).norm()).max((dm[k][1] - exact.tangents[1]).norm());
            }
            worst
        };
        let (e1, e2) = (err(17), err(33));
        assert!(e1 < 1e-2);
        assert!((e1 / e2).log2() > 1.8);
    }

    #[test]
    fn reference_directors_are_orthonormal_with_normal_third() {
        let g = sphere(9);
        for (d, f) in g.directors.iter().zip(&g.frames) {
            assert!((d.transpose() * d - Matrix3::identity()).norm() < 1e-13);
            assert!(d.determinant() > 0.0);
            assert!((d.column(2) - f.normal).norm() < 1e-14);
        }
    }

    #[test]
    fn reference_and_rigid_motion_are_strain_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for g in [plate(9), cylinder(9), sphere(9)] {
            let r0 = MidsurfaceConfiguration::reference(&g);
            for s in shell_strains(&g, &r0).unwrap() {
                assert!(s.e.cov().norm() < 1e-13 && s.k.cov().norm() < 1e-13);
            }
            let rig = r0.rigid_motion(&random_rotation(&mut rng), &random_vector(&mut rng, 3.0));
            for s in shell_strains(&g, &rig).unwrap() {
                assert!(s.e.cov().norm() < 1e-12 && s.k.cov().norm() < 1e-12);
            }
            for ks in koiter_strains(&g, &r0).unwrap() {
                assert!(ks.eps.cov().norm() < 1e-13 && ks.rho.cov().norm() < 1e-12);
            }
        }
    }

    #[test]
    fn uniform_stretch() {
        let g = plate(5);
        let s = 1.07;
        let mut c = MidsurfaceConfiguration::reference(&g);
        c.positions.iter_mut().for_each(|m| *m *= s);
        for st in shell_strains(&g, &c).unwrap() {
            let expected = PlanarTensor::identity(&g.frames[0]).to_shell() * (s - 1.0);
            assert!((st.e.cov() - expected.cov()).norm() < 1e-12);
        }
        for ks in koiter_strains(&g, &c).unwrap() {
            assert!((ks.eps.cov() - Matrix2::identity() * (0.5 * (s * s - 1.0))).norm() < 1e-12);
            assert!(ks.rho.cov().norm() < 1e-12);
        }
    }

    #[test]
    fn rotation_about_normal_gives_unit_curvature() {
        let g = plate(9);
        let mut c = MidsurfaceConfiguration::reference(&g);
        for k in 0..g.grid.len() {
            let u = g.grid.coords(k).0;
            c.rotations[k] = UnitQuaternion::from_scaled_axis(Vector3::z() * u);
        }
        let kc = bending_curvature(&g, &c).unwrap();
        let kd = bending_curvature_directors(&g, &c).unwrap();
        for k in 0..g.grid.len() {
            if g.grid.is_boundary(k) {
                continue;
            }
            let mut expected = Matrix3x2::zeros();
            expected[(2, 0)] = 1.0;
            // central difference of a rotation by +-h gives sin(h)/h
            let h = g.grid.spacing().0;
            assert!((kc[k].cov() - expected * (h.sin() / h)).norm() < 1e-12);
            assert!((kd[k].cov() - kc[k].cov()).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_rotation_has_no_curvature() {
        let g = sphere(7);
        let mut c = MidsurfaceConfiguration::reference(&g);
        let q = UnitQuaternion::from_scaled_axis(Vector3::new(0.3, -0.2, 0.9));
        c.rotations.iter_mut().for_each(|r| *r = q);
        for k in bending_curvature(&g, &c).unwrap() {
            assert!(k.cov().norm() < 1e-12);
        }
    }

    #[test]
    fn curvature_paths_converge_to_each_other() {
        let field = TwoAxisRotationField::default();
        let err = |n: usize| {
            let g = sphere(n);
            let mut c = MidsurfaceConfiguration::reference(&g);
            for k in 0..g.grid.len() {
                let (u, v) = g.grid.coords(k);
                c.rotations[k] = field.rotation(u, v).to_quaternion();
            }
            let a = bending_curvature(&g, &c).unwrap();
            let b = bending_curvature_directors(&g, &c).unwrap();
            a.iter().zip(&b).map(|(x, y)| (x.cov() - y.cov()).norm()).fold(0.0, f64::max)
        };
        let (e1, e2) = (err(17), err(33));
        assert!((e1 / e2).log2() > 1.8, "{e1} {e2}");
    }

    #[test]
    fn bent_plate_curvature() {
        let g = plate(65);
        let r = 2.0;
        let pos: Vec<_> = (0..g.grid.len())
            .map(|k| {
                let (u, v) = g.grid.coords(k);
                Vector3::new(r * (u / r).sin(), v, r * (1.0 - (u / r).cos()))
            })
            .collect();
        let c = kl_configuration(&g, pos).unwrap();
        let ks = koiter_strains(&g, &c).unwrap();
        let mid = g.grid.index(32, 32);
        assert!(ks[mid].eps.cov().norm() < 1e-3);
        let rho = ks[mid].rho.cov();
        let eig = rho.symmetric_eigenvalues();
        let big = if eig[0].abs() > eig[1].abs() { eig[0] } else { eig[1] };
        assert!((big.abs() - 1.0 / r).abs() < 1e-3);
        for s in shell_strains(&g, &c).unwrap() {
            assert!(s.e.cov().row(2).norm() < 1e-13);
        }
    }

    #[test]
    fn expansion_vectors_solve_the_thickness_equations() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let mat = MaterialConstants { mu: 1.3, lambda: 0.7, mu_c: 0.4, ..MaterialConstants::default() };
        for _ in 0..100 {
            let f = random_frame(&mut rng);
            let q = random_rotation(&mut rng);
            let s = ShellStrains { e: random_shell(&mut rng, &f), k: random_shell(&mut rng, &f) };
            let (alpha, beta) = expansion_vectors(&s, &f, &q, &mat);
            let w = q.matrix().tr_mul(&alpha) - f.normal;
            let t1 = s.e.embed() + FrameTensor::dyad(&f, &w, &f.normal);
            let r1 = apply_c3d(&t1, &f, &mat).apply(&f.normal, &f);
            assert!(r1.norm() < 1e-10 * (1.0 + s.e.cov().norm()), "{r1}");
            let z = s.e.right_mul(&PlanarTensor::curvature(&f), &f) + crate::tensor::alternator_apply(&f, &s.k);
            let t2 = z.embed() + FrameTensor::dyad(&f, &q.matrix().tr_mul(&beta), &f.normal);
            let r2 = apply_c3d(&t2, &f, &mat).apply(&f.normal, &f);
            assert!(r2.norm() < 1e-10 * (1.0 + z.cov().norm()), "{r2}");
        }
        let f = random_frame(&mut rng);
        let zero = ShellStrains { e: ShellTensor::zeros(&f), k: ShellTensor::zeros(&f) };
        let q = random_rotation(&mut rng);
        let (alpha, beta) = expansion_vectors(&zero, &f, &q, &mat);
        assert!((alpha - q.apply(&f.normal)).norm() < 1e-15 && beta.norm() < 1e-15);
    }

    #[test]
    fn frame_indifference_nodewise() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let g = cylinder(11);
        let field = TwoAxisRotationField::default();
        let mut c = MidsurfaceConfiguration::reference(&g);
        for k in 0..g.grid.len() {
            let (u, v) = g.grid.coords(k);
            c.positions[k] += Vector3::new((3.0 * u).sin(), u * v, (2.0 * v).cos()) * 0.1;
            c.rotations[k] = field.rotation(u, v).to_quaternion();
        }
        let base = shell_strains(&g, &c).unwrap();
        for _ in 0..5 {
            let moved = c.rigid_motion(&random_rotation(&mut rng), &random_vector(&mut rng, 10.0));
            for (a, b) in base.iter().zip(shell_strains(&g, &moved).unwrap()) {
                assert!((a.e.cov() - b.e.cov()).norm() < 1e-12);
                assert!((a.k.cov() - b.k.cov()).norm() < 1e-12);
            }
        }
    }
}
