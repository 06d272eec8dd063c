//! Seeded random frames, tensors and rotations for property checks.

use std::f64::consts::PI;

use nalgebra::{Matrix2, Matrix3x2, Vector3};
use rand::Rng;

use crate::geometry::{evaluate_frame, ParameterDomain, Parametrization, SurfaceChart, SurfaceFrame};
use crate::tensor::{PlanarTensor, Rotation, ShellTensor};

pub fn random_vector<R: Rng>(rng: &mut R, scale: f64) -> Vector3<f64> {
    Vector3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale
}

/// Frame with skewed, non-unit tangents and a random symmetric curvature.
pub fn random_frame<R: Rng>(rng: &mut R) -> SurfaceFrame {
    loop {
        let a1 = random_vector(rng, 1.5);
        let a2 = random_vector(rng, 1.5);
        let (n1, n2) = (a1.norm(), a2.norm());
        if n1 < 0.4 || n2 < 0.4 || a1.cross(&a2).norm() < 0.3 * n1 * n2 {
            continue;
        }
        let b12 = rng.gen_range(-1.0..1.0);
        let b = Matrix2::new(rng.gen_range(-1.0..1.0), b12, b12, rng.gen_range(-1.0..1.0));
        if let Ok(f) = SurfaceFrame::new(random_vector(rng, 2.0), [a1, a2], b) {
            return f;
        }
    }
}

/// Built-in charts used by the geometry checks.
pub fn builtin_charts() -> Vec<SurfaceChart> {
    vec![
        SurfaceChart::plate(ParameterDomain::new((-1.0, 2.0), (-0.5, 1.5)).expect("domain")),
        SurfaceChart::cylinder(2.0, ParameterDomain::new((-PI, PI), (-1.0, 1.0)).expect("domain")).expect("chart"),
        SurfaceChart::sphere_cap(1.3, ParameterDomain::new((-PI, PI), (0.2, PI - 0.2)).expect("domain")).expect("chart"),
    ]
}

/// Frame at a uniformly random point of a chart.
pub fn random_chart_frame<R: Rng>(rng: &mut R, chart: &SurfaceChart) -> SurfaceFrame {
    let d = chart.domain();
    let (u, v) = d.lerp(rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0));
    evaluate_frame(chart, u, v).expect("built-in charts are regular inside their domains")
}

pub fn random_planar<R: Rng>(rng: &mut R, frame: &SurfaceFrame) -> PlanarTensor {
    PlanarTensor::new(frame, Matrix2::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
}

pub fn random_symmetric<R: Rng>(rng: &mut R, frame: &SurfaceFrame) -> PlanarTensor {
    random_planar(rng, frame).sym()
}

pub fn random_shell<R: Rng>(rng: &mut R, frame: &SurfaceFrame) -> ShellTensor {
    ShellTensor::new(frame, Matrix3x2::from_fn(|_, _| rng.gen_range(-1.0..1.0)))
}

/// Shell tensor with vanishing transversal part.
pub fn random_planar_shell<R: Rng>(rng: &mut R, frame: &SurfaceFrame) -> ShellTensor {
    random_planar(rng, frame).to_shell()
}

pub fn random_rotation<R: Rng>(rng: &mut R) -> Rotation {
    let axis = loop {
        let v = random_vector(rng, 1.0);
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            break v / n;
        }
    };
    Rotation::exp(&(axis * rng.gen_range(0.0..PI)))
}

/// Smooth analytic rotation field `Q(u, v) = exp(t1 w1) exp(t2 w2)` with
/// `t1 = 0.8 sin(1.3u + 0.4) + 0.5v` and `t2 = 0.6 cos(0.9v) u + 0.3`.
#[derive(Debug, Clone, Copy)]
pub struct TwoAxisRotationField {
    pub w1: Vector3<f64>,
    pub w2: Vector3<f64>,
}

impl Default for TwoAxisRotationField {
    fn default() -> Self {
        Self { w1: Vector3::new(1.0, 2.0, -0.5).normalize(), w2: Vector3::new(-0.3, 0.4, 1.0).normalize() }
    }
}

impl TwoAxisRotationField {
    fn angles(u: f64, v: f64) -> ([f64; 2], [[f64; 2]; 2]) {
        let t1 = 0.8 * (1.3 * u + 0.4).sin() + 0.5 * v;
        let t2 = 0.6 * (0.9 * v).cos() * u + 0.3;
        let d1 = [0.8 * 1.3 * (1.3 * u + 0.4).cos(), 0.5];
        let d2 = [0.6 * (0.9 * v).cos(), -0.6 * 0.9 * (0.9 * v).sin() * u];
        ([t1, t2], [d1, d2])
    }

    pub fn rotation(&self, u: f64, v: f64) -> Rotation {
        let ([t1, t2], _) = Self::angles(u, v);
        Rotation::exp(&(self.w1 * t1)).compose(&Rotation::exp(&(self.w2 * t2)))
    }

    /// Exact `axl(Q^T Q,a)` for `a = 1, 2`.
    pub fn body_curvature(&self, u: f64, v: f64) -> [Vector3<f64>; 2] {
        let ([_, t2], [d1, d2]) = Self::angles(u, v);
        let r2t = Rotation::exp(&(self.w2 * t2)).transpose();
        [0, 1].map(|a| r2t.apply(&self.w1) * d1[a] + self.w2 * d2[a])
    }
}

/// Admissible material with `mu_c > 0` and moderate thickness.
pub fn random_material<R: Rng>(rng: &mut R) -> crate::constitutive::MaterialConstants {
    crate::constitutive::MaterialConstants {
        mu: rng.gen_range(0.5..2.0),
        lambda: rng.gen_range(-0.3..2.0),
        mu_c: rng.gen_range(0.1..2.0),
        l_c: rng.gen_range(0.2..1.0),
        b1: rng.gen_range(0.5..2.0),
        b2: rng.gen_range(0.5..2.0),
        b3: rng.gen_range(0.5..2.0),
        h: rng.gen_range(0.05..0.3),
    }
}
