//! Reference midsurface charts and their differential geometry.
//!
//! A chart maps the parameter rectangle `[u0,u1]x[v0,v1]` into space. At each
//! parameter point a [`SurfaceFrame`] collects the covariant and contravariant
//! tangent bases, the unit normal `n0 = (y0,1 x y0,2)/|...|`, both fundamental
//! forms, mean and Gauss curvature, the alternator and the cofactor of `b`.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use nalgebra::{Matrix2, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative threshold below which `|y0,1 x y0,2|` counts as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;
/// Absolute threshold on the shifter determinant.
pub const SHIFTER_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("chart is not an immersion at (u, v) = ({u}, {v})")]
    DegenerateChart { u: f64, v: f64 },
    #[error("shifter is singular: b_det = {b_det}")]
    SingularShifter { b_det: f64 },
    #[error("point (u, v) = ({u}, {v}) lies outside the parameter domain")]
    PointOutsideDomain { u: f64, v: f64 },
    #[error("point (u, v) = ({u}, {v}) is not a node of the sampled lattice")]
    NotALatticeNode { u: f64, v: f64 },
    #[error("invalid chart: {0}")]
    InvalidChart(String),
}

/// Identifier of the frame a tensor lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrameId(pub u64);

/// Closed parameter rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    pub u: (f64, f64),
    pub v: (f64, f64),
}

impl ParameterDomain {
    pub fn new(u: (f64, f64), v: (f64, f64)) -> Result<Self, GeometryError> {
        let ok = |r: (f64, f64)| r.0.is_finite() && r.1.is_finite() && r.1 > r.0;
        if !ok(u) || !ok(v) {
            return Err(GeometryError::InvalidChart(format!(
                "parameter ranges must be finite and increasing, got u = {u:?}, v = {v:?}"
            )));
        }
        Ok(Self { u, v })
    }

    pub fn unit() -> Self {
        Self { u: (0.0, 1.0), v: (0.0, 1.0) }
    }

    pub fn contains(&self, u: f64, v: f64) -> bool {
        let slack_u = 1e-12 * (self.u.1 - self.u.0).max(1.0);
        let slack_v = 1e-12 * (self.v.1 - self.v.0).max(1.0);
        u >= self.u.0 - slack_u
            && u <= self.u.1 + slack_u
            && v >= self.v.0 - slack_v
            && v <= self.v.1 + slack_v
    }

    /// Map a point of the unit square onto the rectangle.
    pub fn lerp(&self, s: f64, t: f64) -> (f64, f64) {
        (
            self.u.0 + s * (self.u.1 - self.u.0),
            self.v.0 + t * (self.v.1 - self.v.0),
        )
    }
}

/// Position and partial derivatives of a chart up to second order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartJet {
    pub position: Vector3<f64>,
    /// `y0,alpha`
    pub d1: [Vector3<f64>; 2],
    /// `y0,alpha beta` (symmetric)
    pub d2: [[Vector3<f64>; 2]; 2],
}

/// Anything that can be evaluated as a surface chart.
pub trait Parametrization {
    fn domain(&self) -> ParameterDomain;
    fn jet(&self, u: f64, v: f64) -> Result<ChartJet, GeometryError>;

    fn position(&self, u: f64, v: f64) -> Result<Vector3<f64>, GeometryError> {
        Ok(self.jet(u, v)?.position)
    }
}

/// Built-in charts plus user-sampled lattices.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceChart {
    /// `y0 = (u, v, 0)`
    Plate { domain: ParameterDomain },
    /// `y0 = (R cos u, R sin u, v)`
    Cylinder { radius: f64, domain: ParameterDomain },
    /// `y0 = R (sin v cos u, sin v sin u, cos v)`, longitude `u`, colatitude `v`
    SphereCap { radius: f64, domain: ParameterDomain },
    Sampled(SampledSurface),
}

impl SurfaceChart {
    pub fn plate(domain: ParameterDomain) -> Self {
        SurfaceChart::Plate { domain }
    }

    pub fn cylinder(radius: f64, domain: ParameterDomain) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidChart(format!("cylinder radius must be positive, got {radius}")));
        }
        Ok(SurfaceChart::Cylinder { radius, domain })
    }

    pub fn sphere_cap(radius: f64, domain: ParameterDomain) -> Result<Self, GeometryError> {
        if !(radius.is_finite() && radius > 0.0) {
            return Err(GeometryError::InvalidChart(format!("sphere radius must be positive, got {radius}")));
        }
        Ok(SurfaceChart::SphereCap { radius, domain })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            SurfaceChart::Plate { .. } => "plate",
            SurfaceChart::Cylinder { .. } => "cylinder",
            SurfaceChart::SphereCap { .. } => "sphere-cap",
            SurfaceChart::Sampled(_) => "user-sampled-grid",
        }
    }
}

impl Parametrization for SurfaceChart {
    fn domain(&self) -> ParameterDomain {
        match self {
            SurfaceChart::Plate { domain }
            | SurfaceChart::Cylinder { domain, .. }
            | SurfaceChart::SphereCap { domain, .. } => *domain,
            SurfaceChart::Sampled(s) => s.domain(),
        }
    }

    fn jet(&self, u: f64, v: f64) -> Result<ChartJet, GeometryError> {
        if !self.domain().contains(u, v) {
            return Err(GeometryError::PointOutsideDomain { u, v });
        }
        let z = Vector3::zeros();
        Ok(match self {
            SurfaceChart::Plate { .. } => ChartJet {
                position: Vector3::new(u, v, 0.0),
                d1: [Vector3::x(), Vector3::y()],
                d2: [[z, z], [z, z]],
            },
            SurfaceChart::Cylinder { radius: r, .. } => {
                let (s, c) = u.sin_cos();
                ChartJet {
                    position: Vector3::new(r * c, r * s, v),
                    d1: [Vector3::new(-r * s, r * c, 0.0), Vector3::z()],
                    d2: [[Vector3::new(-r * c, -r * s, 0.0), z], [z, z]],
                }
            }
            SurfaceChart::SphereCap { radius: r, .. } => {
                let (su, cu) = u.sin_cos();
                let (sv, cv) = v.sin_cos();
                let p = Vector3::new(sv * cu, sv * su, cv) * *r;
                let pu = Vector3::new(-sv * su, sv * cu, 0.0) * *r;
                let pv = Vector3::new(cv * cu, cv * su, -sv) * *r;
                let puu = Vector3::new(-sv * cu, -sv * su, 0.0) * *r;
                let puv = Vector3::new(-cv * su, cv * cu, 0.0) * *r;
                let pvv = -p;
                ChartJet { position: p, d1: [pu, pv], d2: [[puu, puv], [puv, pvv]] }
            }
            SurfaceChart::Sampled(s) => s.jet(u, v)?,
        })
    }
}

/// A chart known only through its values on a uniform rectangular lattice.
///
/// Derivatives use fourth-order central differences where the stencil fits,
/// second-order central differences one node in from the edge, and
/// second-order one-sided differences on the edge itself. Evaluation is only
/// defined at lattice nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledSurface {
    pub n_u: usize,
    pub n_v: usize,
    pub domain: ParameterDomain,
    /// Node `(i, j)` is stored at `j * n_u + i`.
    pub points: Vec<Vector3<f64>>,
}

impl SampledSurface {
    pub fn new(
        n_u: usize,
        n_v: usize,
        domain: ParameterDomain,
        points: Vec<Vector3<f64>>,
    ) -> Result<Self, GeometryError> {
        if n_u < 4 || n_v < 4 {
            return Err(GeometryError::InvalidChart(format!(
                "sampled lattice needs at least 4 nodes per direction, got {n_u} x {n_v}"
            )));
        }
        if points.len() != n_u * n_v {
            return Err(GeometryError::InvalidChart(format!(
                "expected {} lattice points, got {}",
                n_u * n_v,
                points.len()
            )));
        }
        if points.iter().any(|p| !p.iter().all(|x| x.is_finite())) {
            return Err(GeometryError::InvalidChart("non-finite lattice point".into()));
        }
        Ok(Self { n_u, n_v, domain, points })
    }

    /// Sample any chart on a lattice (used to compare against analytic charts).
    pub fn from_chart<P: Parametrization>(
        chart: &P,
        n_u: usize,
        n_v: usize,
    ) -> Result<Self, GeometryError> {
        let domain = chart.domain();
        let mut points = Vec::with_capacity(n_u * n_v);
        for j in 0..n_v {
            for i in 0..n_u {
                let (u, v) = domain.lerp(i as f64 / (n_u - 1) as f64, j as f64 / (n_v - 1) as f64);
                points.push(chart.position(u, v)?);
            }
        }
        Self::new(n_u, n_v, domain, points)
    }

    pub fn domain(&self) -> ParameterDomain {
        self.domain
    }

    fn spacing(&self) -> (f64, f64) {
        (
            (self.domain.u.1 - self.domain.u.0) / (self.n_u - 1) as f64,
            (self.domain.v.1 - self.domain.v.0) / (self.n_v - 1) as f64,
        )
    }

    fn at(&self, i: usize, j: usize) -> Vector3<f64> {
        self.points[j * self.n_u + i]
    }

    fn node_of(&self, u: f64, v: f64) -> Result<(usize, usize), GeometryError> {
        let (du, dv) = self.spacing();
        let fi = (u - self.domain.u.0) / du;
        let fj = (v - self.domain.v.0) / dv;
        let (i, j) = (fi.round(), fj.round());
        if (fi - i).abs() > 1e-8 || (fj - j).abs() > 1e-8 {
            return Err(GeometryError::NotALatticeNode { u, v });
        }
        Ok((i as usize, j as usize))
    }

    fn jet(&self, u: f64, v: f64) -> Result<ChartJet, GeometryError> {
        let (i, j) = self.node_of(u, v)?;
        let (du, dv) = self.spacing();
        let along_u = |j: usize| move |k: usize| self.at(k, j);
        let along_v = |i: usize| move |k: usize| self.at(i, k);

        let pu = first_derivative(along_u(j), i, self.n_u, du);
        let pv = first_derivative(along_v(i), j, self.n_v, dv);
        let puu = second_derivative(along_u(j), i, self.n_u, du);
        let pvv = second_derivative(along_v(i), j, self.n_v, dv);
        let puv = first_derivative(|k| first_derivative(along_v(k), j, self.n_v, dv), i, self.n_u, du);
        Ok(ChartJet { position: self.at(i, j), d1: [pu, pv], d2: [[puu, puv], [puv, pvv]] })
    }
}

fn first_derivative<F: Fn(usize) -> Vector3<f64>>(f: F, i: usize, n: usize, h: f64) -> Vector3<f64> {
    if i >= 2 && i + 2 < n {
        (f(i - 2) - f(i - 1) * 8.0 + f(i + 1) * 8.0 - f(i + 2)) / (12.0 * h)
    } else if i >= 1 && i + 1 < n {
        (f(i + 1) - f(i - 1)) / (2.0 * h)
    } else if i == 0 {
        (f(0) * -3.0 + f(1) * 4.0 - f(2)) / (2.0 * h)
    } else {
        (f(n - 1) * 3.0 - f(n - 2) * 4.0 + f(n - 3)) / (2.0 * h)
    }
}

fn second_derivative<F: Fn(usize) -> Vector3<f64>>(f: F, i: usize, n: usize, h: f64) -> Vector3<f64> {
    if i >= 2 && i + 2 < n {
        (-f(i - 2) + f(i - 1) * 16.0 - f(i) * 30.0 + f(i + 1) * 16.0 - f(i + 2)) / (12.0 * h * h)
    } else if i >= 1 && i + 1 < n {
        (f(i - 1) - f(i) * 2.0 + f(i + 1)) / (h * h)
    } else if i == 0 {
        (f(0) * 2.0 - f(1) * 5.0 + f(2) * 4.0 - f(3)) / (h * h)
    } else {
        (f(n - 1) * 2.0 - f(n - 2) * 5.0 + f(n - 3) * 4.0 - f(n - 4)) / (h * h)
    }
}

/// First and second fundamental form data at one midsurface point.
///
/// Matrices hold components in the frame basis: `metric[(a, b)] = a_ab`,
/// `curvature[(a, b)] = b_ab`, `curvature_mixed[(a, b)] = b^a_b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceFrame {
    id: FrameId,
    pub position: Vector3<f64>,
    /// covariant basis `a_1, a_2`
    pub tangents: [Vector3<f64>; 2],
    /// contravariant basis `a^1, a^2`
    pub cotangents: [Vector3<f64>; 2],
    pub normal: Vector3<f64>,
    pub metric: Matrix2<f64>,
    pub metric_inv: Matrix2<f64>,
    /// area density `sqrt(det a_ab)`
    pub area: f64,
    pub curvature: Matrix2<f64>,
    pub curvature_mixed: Matrix2<f64>,
    pub mean_curvature: f64,
    pub gauss_curvature: f64,
    /// `c_ab = a * eps_ab` with `eps_12 = 1`
    pub alternator: Matrix2<f64>,
    /// `b*_ab = -b_ab + 2H a_ab`
    pub cofactor: Matrix2<f64>,
}

impl SurfaceFrame {
    /// Build a frame from a point, two tangent vectors and the covariant
    /// components of the second fundamental form (symmetrized on entry).
    pub fn new(
        position: Vector3<f64>,
        tangents: [Vector3<f64>; 2],
        curvature: Matrix2<f64>,
    ) -> Result<Self, GeometryError> {
        let [a1, a2] = tangents;
        let cross = a1.cross(&a2);
        let cn = cross.norm();
        if !(cn >= DEGENERACY_TOL * a1.norm() * a2.norm()) || cn == 0.0 {
            return Err(GeometryError::DegenerateChart { u: f64::NAN, v: f64::NAN });
        }
        let normal = cross / cn;
        let metric = Matrix2::new(a1.dot(&a1), a1.dot(&a2), a2.dot(&a1), a2.dot(&a2));
        let det = metric.determinant();
        let metric_inv = Matrix2::new(metric[(1, 1)], -metric[(0, 1)], -metric[(1, 0)], metric[(0, 0)]) / det;
        let cotangents = [
            a1 * metric_inv[(0, 0)] + a2 * metric_inv[(0, 1)],
            a1 * metric_inv[(1, 0)] + a2 * metric_inv[(1, 1)],
        ];
        let curvature = (curvature + curvature.transpose()) * 0.5;
        let curvature_mixed = metric_inv * curvature;
        let mean_curvature = 0.5 * curvature_mixed.trace();
        let gauss_curvature = curvature.determinant() / det;
        let area = det.sqrt();
        let alternator = Matrix2::new(0.0, area, -area, 0.0);
        let cofactor = -curvature + metric * (2.0 * mean_curvature);

        let mut hasher = DefaultHasher::new();
        for x in position.iter().chain(a1.iter()).chain(a2.iter()).chain(curvature.iter()) {
            x.to_bits().hash(&mut hasher);
        }
        Ok(Self {
            id: FrameId(hasher.finish()),
            position,
            tangents,
            cotangents,
            normal,
            metric,
            metric_inv,
            area,
            curvature,
            curvature_mixed,
            mean_curvature,
            gauss_curvature,
            alternator,
            cofactor,
        })
    }

    pub fn from_jet(jet: &ChartJet) -> Result<Self, GeometryError> {
        let cross = jet.d1[0].cross(&jet.d1[1]);
        let cn = cross.norm();
        if cn == 0.0 {
            return Err(GeometryError::DegenerateChart { u: f64::NAN, v: f64::NAN });
        }
        let n = cross / cn;
        let b = Matrix2::from_fn(|a, c| n.dot(&jet.d2[a][c]));
        Self::new(jet.position, jet.d1, b)
    }

    /// Orthonormal frame with `a_alpha = e_alpha` and the given curvature.
    pub fn flat() -> Self {
        Self::new(Vector3::zeros(), [Vector3::x(), Vector3::y()], Matrix2::zeros())
            .expect("flat frame is regular")
    }

    pub fn id(&self) -> FrameId {
        self.id
    }

    /// Covariant basis `a_1, a_2, a_3 = n0`.
    pub fn basis(&self, i: usize) -> Vector3<f64> {
        if i < 2 {
            self.tangents[i]
        } else {
            self.normal
        }
    }

    /// Contravariant basis `a^1, a^2, a^3 = n0`.
    pub fn dual_basis(&self, i: usize) -> Vector3<f64> {
        if i < 2 {
            self.cotangents[i]
        } else {
            self.normal
        }
    }

    /// Principal curvatures (eigenvalues of the mixed curvature), ascending.
    pub fn principal_curvatures(&self) -> (f64, f64) {
        let h = self.mean_curvature;
        let disc = (h * h - self.gauss_curvature).max(0.0).sqrt();
        (h - disc, h + disc)
    }

    /// Largest principal curvature magnitude.
    pub fn max_abs_curvature(&self) -> f64 {
        let (k1, k2) = self.principal_curvatures();
        k1.abs().max(k2.abs())
    }
}

/// Evaluate the frame of a chart at a parameter point.
pub fn evaluate_frame<P: Parametrization + ?Sized>(chart: &P, u: f64, v: f64) -> Result<SurfaceFrame, GeometryError> {
    let jet = chart.jet(u, v)?;
    SurfaceFrame::from_jet(&jet).map_err(|e| match e {
        GeometryError::DegenerateChart { .. } => GeometryError::DegenerateChart { u, v },
        other => other,
    })
}

/// Shifter `mu = a - x3 b` in mixed components, with its inverse and determinant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shifter {
    pub x3: f64,
    pub mu: Matrix2<f64>,
    pub mu_inv: Matrix2<f64>,
    pub b_det: f64,
}

pub fn shifter(frame: &SurfaceFrame, x3: f64) -> Result<Shifter, GeometryError> {
    let h = frame.mean_curvature;
    let k = frame.gauss_curvature;
    let b_det = 1.0 - 2.0 * h * x3 + k * x3 * x3;
    if b_det.abs() < SHIFTER_TOL {
        return Err(GeometryError::SingularShifter { b_det });
    }
    let id = Matrix2::identity();
    let mu = id - frame.curvature_mixed * x3;
    let cofactor_mixed = frame.metric_inv * frame.cofactor;
    let mu_inv = (id - cofactor_mixed * x3) / b_det;
    Ok(Shifter { x3, mu, mu_inv, b_det })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn sphere() -> SurfaceChart {
        SurfaceChart::sphere_cap(1.0, ParameterDomain::new((-PI, PI), (0.1, PI - 0.1)).unwrap()).unwrap()
    }

    // Independent oracle: central differences of the chart position only.
    fn fd_frame(chart: &SurfaceChart, u: f64, v: f64) -> (f64, f64) {
        let h = 1e-4;
        let p = |u, v| chart.position(u, v).unwrap();
        let pu = (p(u + h, v) - p(u - h, v)) / (2.0 * h);
        let pv = (p(u, v + h) - p(u, v - h)) / (2.0 * h);
        let puu = (p(u + h, v) - 2.0 * p(u, v) + p(u - h, v)) / (h * h);
        let pvv = (p(u, v + h) - 2.0 * p(u, v) + p(u, v - h)) / (h * h);
        let puv = (p(u + h, v + h) - p(u + h, v - h) - p(u - h, v + h) + p(u - h, v - h)) / (4.0 * h * h);
        let n = pu.cross(&pv).normalize();
        let g = Matrix2::new(pu.dot(&pu), pu.dot(&pv), pv.dot(&pu), pv.dot(&pv));
        let b = Matrix2::new(n.dot(&puu), n.dot(&puv), n.dot(&puv), n.dot(&pvv));
        let m = g.try_inverse().unwrap() * b;
        (0.5 * m.trace(), m.determinant())
    }

    #[test]
    fn plate_is_flat() {
        let f = evaluate_frame(&SurfaceChart::plate(ParameterDomain::unit()), 0.3, 0.7).unwrap();
        assert_eq!(f.curvature, Matrix2::zeros());
        assert_eq!(f.mean_curvature, 0.0);
        assert_eq!(f.gauss_curvature, 0.0);
        assert_eq!(f.metric, Matrix2::identity());
    }

    #[test]
    fn unit_sphere_equator() {
        let f = evaluate_frame(&sphere(), 0.0, FRAC_PI_2).unwrap();
        let (h, k) = fd_frame(&sphere(), 0.0, FRAC_PI_2);
        assert!((f.mean_curvature - 1.0).abs() < 1e-12);
        assert!((f.gauss_curvature - 1.0).abs() < 1e-12);
        assert!((h - 1.0).abs() < 1e-6 && (k - 1.0).abs() < 1e-6);
    }

    #[test]
    fn cylinder_radius_two() {
        let chart = SurfaceChart::cylinder(2.0, ParameterDomain::new((0.0, PI), (0.0, 1.0)).unwrap()).unwrap();
        let f = evaluate_frame(&chart, 0.4, 0.5).unwrap();
        let (h, k) = fd_frame(&chart, 0.4, 0.5);
        assert!(f.gauss_curvature.abs() < 1e-14);
        assert!((f.mean_curvature.abs() - 0.25).abs() < 1e-12);
        assert!((f.mean_curvature - h).abs() < 1e-6 && k.abs() < 1e-6);
        // outward normal with this chart ordering gives negative H
        assert!(f.mean_curvature < 0.0);
    }

    #[test]
    fn frame_identities() {
        let f = evaluate_frame(&sphere(), 0.7, 1.1).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let d = if a == b { 1.0 } else { 0.0 };
                assert!((f.cotangents[b].dot(&f.tangents[a]) - d).abs() < 1e-14);
            }
            assert!(f.normal.dot(&f.tangents[a]).abs() < 1e-14);
        }
        let ch = f.curvature_mixed * f.curvature_mixed - f.curvature_mixed * (2.0 * f.mean_curvature)
            + Matrix2::identity() * f.gauss_curvature;
        assert!(ch.norm() < 1e-13);
        let bb = f.curvature * f.metric_inv * f.cofactor;
        assert!((bb - f.metric * f.gauss_curvature).norm() < 1e-13);
    }

    #[test]
    fn degenerate_chart_detected() {
        let chart = SurfaceChart::sphere_cap(1.0, ParameterDomain::new((0.0, 1.0), (0.0, 1.0)).unwrap()).unwrap();
        assert!(matches!(evaluate_frame(&chart, 0.5, 0.0), Err(GeometryError::DegenerateChart { .. })));
    }

    #[test]
    fn outside_domain_rejected() {
        let chart = SurfaceChart::plate(ParameterDomain::unit());
        assert!(matches!(evaluate_frame(&chart, 1.5, 0.0), Err(GeometryError::PointOutsideDomain { .. })));
    }

    #[test]
    fn shifter_examples() {
        let plate = SurfaceFrame::flat();
        let s = shifter(&plate, 0.1).unwrap();
        assert_eq!(s.mu, Matrix2::identity());
        assert_eq!(s.b_det, 1.0);
        let f = evaluate_frame(&sphere(), 0.2, 1.0).unwrap();
        let s0 = shifter(&f, 0.0).unwrap();
        assert_eq!(s0.b_det, 1.0);
        assert!((s0.mu_inv - Matrix2::identity()).norm() < 1e-15);
        let s = shifter(&f, 0.5).unwrap();
        assert!((s.b_det - 0.25).abs() < 1e-14);
        assert!((s.mu * s.mu_inv - Matrix2::identity()).norm() < 1e-13);
        assert!((s.mu.determinant() - s.b_det).abs() < 1e-13);
        assert!(matches!(shifter(&f, 1.0), Err(GeometryError::SingularShifter { .. })));
    }

    #[test]
    fn sampled_lattice_matches_analytic() {
        let chart = SurfaceChart::cylinder(2.0, ParameterDomain::new((0.0, 1.0), (0.0, 1.0)).unwrap()).unwrap();
        let sampled = SurfaceChart::Sampled(SampledSurface::from_chart(&chart, 41, 41).unwrap());
        for (i, j) in [(0usize, 0usize), (1, 5), (20, 20), (40, 39)] {
            let (u, v) = (i as f64 / 40.0, j as f64 / 40.0);
            let a = evaluate_frame(&chart, u, v).unwrap();
            let s = evaluate_frame(&sampled, u, v).unwrap();
            assert!((a.mean_curvature - s.mean_curvature).abs() < 5e-3);
            assert!((a.normal - s.normal).norm() < 1e-3);
        }
        let interior = evaluate_frame(&sampled, 0.5, 0.5).unwrap();
        assert!((interior.mean_curvature + 0.25).abs() < 1e-6);
        assert!(matches!(evaluate_frame(&sampled, 0.01, 0.5), Err(GeometryError::NotALatticeNode { .. })));
    }

    #[test]
    fn frame_ids_track_content() {
        let a = evaluate_frame(&sphere(), 0.2, 1.0).unwrap();
        let b = evaluate_frame(&sphere(), 0.2, 1.0).unwrap();
        let c = evaluate_frame(&sphere(), 0.3, 1.0).unwrap();
        assert_eq!(a.id(), b.id());
        assert_ne!(a.id(), c.id());
    }
}
