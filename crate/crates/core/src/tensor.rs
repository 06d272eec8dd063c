//! Mixed surface tensors on a [`SurfaceFrame`] and a small SO(3) toolkit.
//!
//! Components are covariant against the contravariant basis
//! `{a^1, a^2, a^3 = n0}`: a [`ShellTensor`] is `X = X_ia a^i (x) a^a`, a
//! [`PlanarTensor`] is `T = T_ab a^a (x) a^b`, a [`FrameTensor`] is a general
//! `T = T_ij a^i (x) a^j`. Contractions raise indices with `a^ab`. Every
//! value remembers the id of its frame; metric-dependent methods panic when
//! handed a different frame, and the public constitutive entry points report
//! [`TensorError::FrameMismatch`] instead.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use nalgebra::{Matrix2, Matrix3, Matrix3x2, Rotation3, UnitQuaternion, Vector2, Vector3};
use thiserror::Error;

use crate::geometry::{FrameId, SurfaceFrame};

/// Relative tolerance for the skew-symmetry test of [`axl`].
pub const SKEW_TOL: f64 = 1e-10;
/// Tolerance on `R^T R - 1` for [`Rotation::from_matrix`].
pub const ROTATION_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor lives on frame {found:?} but frame {expected:?} was supplied")]
    FrameMismatch { expected: FrameId, found: FrameId },
    #[error("matrix is not skew-symmetric: |W + W^T| = {asymmetry:e}")]
    NotSkew { asymmetry: f64 },
    #[error("matrix is not a rotation: |R^T R - 1| = {orthogonality:e}, det = {det}")]
    NotRotation { orthogonality: f64, det: f64 },
}

#[inline]
fn same(expected: FrameId, found: FrameId) {
    assert!(expected == found, "frame mismatch: expected {expected:?}, found {found:?}");
}

pub(crate) fn check(frame: &SurfaceFrame, found: FrameId) -> Result<(), TensorError> {
    if frame.id() == found {
        Ok(())
    } else {
        Err(TensorError::FrameMismatch { expected: frame.id(), found })
    }
}

/// `diag(a^ab, 1)`
pub(crate) fn metric3_inv(frame: &SurfaceFrame) -> Matrix3<f64> {
    let a = &frame.metric_inv;
    Matrix3::new(a[(0, 0)], a[(0, 1)], 0.0, a[(1, 0)], a[(1, 1)], 0.0, 0.0, 0.0, 1.0)
}

/// `diag(a_ab, 1)`
pub(crate) fn metric3(frame: &SurfaceFrame) -> Matrix3<f64> {
    let a = &frame.metric;
    Matrix3::new(a[(0, 0)], a[(0, 1)], 0.0, a[(1, 0)], a[(1, 1)], 0.0, 0.0, 0.0, 1.0)
}

/// Tangent vector `v = v_a a^a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentVector {
    cov: Vector2<f64>,
    frame: FrameId,
}

impl TangentVector {
    pub fn new(frame: &SurfaceFrame, cov: Vector2<f64>) -> Self {
        Self { cov, frame: frame.id() }
    }

    pub fn zeros(frame: &SurfaceFrame) -> Self {
        Self::new(frame, Vector2::zeros())
    }

    /// Tangential projection of a Cartesian vector.
    pub fn from_cartesian(frame: &SurfaceFrame, v: &Vector3<f64>) -> Self {
        Self::new(frame, Vector2::new(v.dot(&frame.tangents[0]), v.dot(&frame.tangents[1])))
    }

    pub fn cov(&self) -> Vector2<f64> {
        self.cov
    }

    pub fn frame(&self) -> FrameId {
        self.frame
    }

    pub fn to_cartesian(&self, frame: &SurfaceFrame) -> Vector3<f64> {
        same(frame.id(), self.frame);
        frame.cotangents[0] * self.cov[0] + frame.cotangents[1] * self.cov[1]
    }

    pub fn dot(&self, other: &Self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        self.cov.dot(&(frame.metric_inv * other.cov))
    }

    pub fn norm_sq(&self, frame: &SurfaceFrame) -> f64 {
        self.dot(self, frame)
    }

    /// `v T`, i.e. `(vT)_b = v_a a^ag T_gb`.
    pub fn right_mul(&self, t: &PlanarTensor, frame: &SurfaceFrame) -> Self {
        same(frame.id(), self.frame);
        same(self.frame, t.frame);
        Self { cov: t.cov.transpose() * frame.metric_inv * self.cov, frame: self.frame }
    }
}

/// Planar tensor `T = T_ab a^a (x) a^b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlanarTensor {
    cov: Matrix2<f64>,
    frame: FrameId,
}

impl PlanarTensor {
    pub fn new(frame: &SurfaceFrame, cov: Matrix2<f64>) -> Self {
        Self { cov, frame: frame.id() }
    }

    pub fn zeros(frame: &SurfaceFrame) -> Self {
        Self::new(frame, Matrix2::zeros())
    }

    /// The first fundamental tensor `a` (tangential identity).
    pub fn identity(frame: &SurfaceFrame) -> Self {
        Self::new(frame, frame.metric)
    }

    /// The second fundamental tensor `b`.
    pub fn curvature(frame: &SurfaceFrame) -> Self {
        Self::new(frame, frame.curvature)
    }

    /// The alternator `c`.
    pub fn alternator(frame: &SurfaceFrame) -> Self {
        Self::new(frame, frame.alternator)
    }

    /// The cofactor `b* = -b + 2H a`.
    pub fn cofactor(frame: &SurfaceFrame) -> Self {
        Self::new(frame, frame.cofactor)
    }

    /// Components `T_ab = a_a . M a_b` of a Cartesian matrix.
    pub fn from_cartesian(frame: &SurfaceFrame, m: &Matrix3<f64>) -> Self {
        let t = &frame.tangents;
        Self::new(frame, Matrix2::from_fn(|a, b| t[a].dot(&(m * t[b]))))
    }

    pub fn cov(&self) -> Matrix2<f64> {
        self.cov
    }

    pub fn frame(&self) -> FrameId {
        self.frame
    }

    pub fn transpose(&self) -> Self {
        Self { cov: self.cov.transpose(), frame: self.frame }
    }

    pub fn sym(&self) -> Self {
        Self { cov: (self.cov + self.cov.transpose()) * 0.5, frame: self.frame }
    }

    pub fn skew(&self) -> Self {
        Self { cov: (self.cov - self.cov.transpose()) * 0.5, frame: self.frame }
    }

    pub fn trace(&self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        (frame.metric_inv * self.cov).trace()
    }

    /// Surface deviator `T - (tr T)/2 a`.
    pub fn dev_s(&self, frame: &SurfaceFrame) -> Self {
        let tr = self.trace(frame);
        Self { cov: self.cov - frame.metric * (0.5 * tr), frame: self.frame }
    }

    pub fn dot(&self, other: &Self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        let ai = &frame.metric_inv;
        (ai * self.cov * ai).component_mul(&other.cov).sum()
    }

    pub fn norm_sq(&self, frame: &SurfaceFrame) -> f64 {
        self.dot(self, frame)
    }

    /// Tensor product `S T`.
    pub fn mul(&self, other: &Self, frame: &SurfaceFrame) -> Self {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        Self { cov: self.cov * frame.metric_inv * other.cov, frame: self.frame }
    }

    /// `T X` for a shell tensor `X`; only the planar part of `X` contributes.
    pub fn mul_shell(&self, x: &ShellTensor, frame: &SurfaceFrame) -> Self {
        same(frame.id(), self.frame);
        same(self.frame, x.frame);
        Self { cov: self.cov * frame.metric_inv * x.planar_cov(), frame: self.frame }
    }

    pub fn to_cartesian(&self, frame: &SurfaceFrame) -> Matrix3<f64> {
        same(frame.id(), self.frame);
        let c = &frame.cotangents;
        let mut m = Matrix3::zeros();
        for a in 0..2 {
            for b in 0..2 {
                m += c[a] * c[b].transpose() * self.cov[(a, b)];
            }
        }
        m
    }

    /// Embed as a shell tensor with vanishing transversal row.
    pub fn to_shell(&self) -> ShellTensor {
        let mut cov = Matrix3x2::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&self.cov);
        ShellTensor { cov, frame: self.frame }
    }
}

/// Shell tensor `X = X_ia a^i (x) a^a`, `i` in 1..3, `a` in 1..2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellTensor {
    cov: Matrix3x2<f64>,
    frame: FrameId,
}

impl ShellTensor {
    pub fn new(frame: &SurfaceFrame, cov: Matrix3x2<f64>) -> Self {
        Self { cov, frame: frame.id() }
    }

    pub fn zeros(frame: &SurfaceFrame) -> Self {
        Self::new(frame, Matrix3x2::zeros())
    }

    pub fn from_parts(planar: &PlanarTensor, transversal: &TangentVector) -> Self {
        same(planar.frame, transversal.frame);
        let mut cov = Matrix3x2::zeros();
        cov.fixed_view_mut::<2, 2>(0, 0).copy_from(&planar.cov);
        cov[(2, 0)] = transversal.cov[0];
        cov[(2, 1)] = transversal.cov[1];
        Self { cov, frame: planar.frame }
    }

    /// Components `X_ia = a_i . M a_a` of a Cartesian matrix.
    pub fn from_cartesian(frame: &SurfaceFrame, m: &Matrix3<f64>) -> Self {
        Self::new(frame, Matrix3x2::from_fn(|i, a| frame.basis(i).dot(&(m * frame.tangents[a]))))
    }

    pub fn cov(&self) -> Matrix3x2<f64> {
        self.cov
    }

    pub fn frame(&self) -> FrameId {
        self.frame
    }

    pub(crate) fn planar_cov(&self) -> Matrix2<f64> {
        self.cov.fixed_view::<2, 2>(0, 0).into_owned()
    }

    /// Planar part `aX`.
    pub fn planar(&self) -> PlanarTensor {
        PlanarTensor { cov: self.planar_cov(), frame: self.frame }
    }

    /// Transversal part `n0 X`.
    pub fn transversal(&self) -> TangentVector {
        TangentVector { cov: Vector2::new(self.cov[(2, 0)], self.cov[(2, 1)]), frame: self.frame }
    }

    /// Split into planar and transversal parts after checking the frame.
    pub fn decompose(&self, frame: &SurfaceFrame) -> Result<(PlanarTensor, TangentVector), TensorError> {
        check(frame, self.frame)?;
        Ok((self.planar(), self.transversal()))
    }

    pub fn trace(&self, frame: &SurfaceFrame) -> f64 {
        self.planar().trace(frame)
    }

    pub fn dot(&self, other: &Self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        (metric3_inv(frame) * self.cov * frame.metric_inv).component_mul(&other.cov).sum()
    }

    pub fn norm_sq(&self, frame: &SurfaceFrame) -> f64 {
        self.dot(self, frame)
    }

    /// `X T` for a planar tensor `T`.
    pub fn right_mul(&self, t: &PlanarTensor, frame: &SurfaceFrame) -> Self {
        same(frame.id(), self.frame);
        same(self.frame, t.frame);
        Self { cov: self.cov * frame.metric_inv * t.cov, frame: self.frame }
    }

    /// `X^T Y`, a planar tensor.
    pub fn transpose_mul(&self, other: &Self, frame: &SurfaceFrame) -> PlanarTensor {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        PlanarTensor { cov: self.cov.transpose() * metric3_inv(frame) * other.cov, frame: self.frame }
    }

    /// The same tensor as a general 3x3 tensor on the frame.
    pub fn embed(&self) -> FrameTensor {
        let mut cov = Matrix3::zeros();
        cov.fixed_view_mut::<3, 2>(0, 0).copy_from(&self.cov);
        FrameTensor { cov, frame: self.frame }
    }

    pub fn to_cartesian(&self, frame: &SurfaceFrame) -> Matrix3<f64> {
        self.embed().to_cartesian(frame)
    }

    /// Contravariant components `X^ia`.
    pub fn contravariant(&self, frame: &SurfaceFrame) -> Matrix3x2<f64> {
        same(frame.id(), self.frame);
        metric3_inv(frame) * self.cov * frame.metric_inv
    }

    /// Shell tensor with the given contravariant components.
    pub fn from_contravariant(frame: &SurfaceFrame, contra: &Matrix3x2<f64>) -> Self {
        Self::new(frame, metric3(frame) * contra * frame.metric)
    }
}

/// General second-order tensor `T = T_ij a^i (x) a^j` on a frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameTensor {
    cov: Matrix3<f64>,
    frame: FrameId,
}

impl FrameTensor {
    pub fn new(frame: &SurfaceFrame, cov: Matrix3<f64>) -> Self {
        Self { cov, frame: frame.id() }
    }

    pub fn zeros(frame: &SurfaceFrame) -> Self {
        Self::new(frame, Matrix3::zeros())
    }

    /// The identity `1 = a + n0 (x) n0`.
    pub fn identity(frame: &SurfaceFrame) -> Self {
        Self::new(frame, metric3(frame))
    }

    /// `u (x) w` for Cartesian vectors.
    pub fn dyad(frame: &SurfaceFrame, u: &Vector3<f64>, w: &Vector3<f64>) -> Self {
        Self::new(frame, Matrix3::from_fn(|i, j| frame.basis(i).dot(u) * frame.basis(j).dot(w)))
    }

    pub fn from_cartesian(frame: &SurfaceFrame, m: &Matrix3<f64>) -> Self {
        Self::new(frame, Matrix3::from_fn(|i, j| frame.basis(i).dot(&(m * frame.basis(j)))))
    }

    pub fn cov(&self) -> Matrix3<f64> {
        self.cov
    }

    pub fn frame(&self) -> FrameId {
        self.frame
    }

    pub fn transpose(&self) -> Self {
        Self { cov: self.cov.transpose(), frame: self.frame }
    }

    pub fn sym(&self) -> Self {
        Self { cov: (self.cov + self.cov.transpose()) * 0.5, frame: self.frame }
    }

    pub fn skew(&self) -> Self {
        Self { cov: (self.cov - self.cov.transpose()) * 0.5, frame: self.frame }
    }

    pub fn trace(&self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        (metric3_inv(frame) * self.cov).trace()
    }

    /// Three-dimensional deviator `T - (tr T)/3 1`.
    pub fn dev3(&self, frame: &SurfaceFrame) -> Self {
        let tr = self.trace(frame);
        Self { cov: self.cov - metric3(frame) * (tr / 3.0), frame: self.frame }
    }

    pub fn dot(&self, other: &Self, frame: &SurfaceFrame) -> f64 {
        same(frame.id(), self.frame);
        same(self.frame, other.frame);
        let gi = metric3_inv(frame);
        (gi * self.cov * gi).component_mul(&other.cov).sum()
    }

    pub fn norm_sq(&self, frame: &SurfaceFrame) -> f64 {
        self.dot(self, frame)
    }

    /// Contravariant components `T^ij`.
    pub fn contravariant(&self, frame: &SurfaceFrame) -> Matrix3<f64> {
        same(frame.id(), self.frame);
        let gi = metric3_inv(frame);
        gi * self.cov * gi
    }

    pub fn from_contravariant(frame: &SurfaceFrame, contra: &Matrix3<f64>) -> Self {
        let g = metric3(frame);
        Self::new(frame, g * contra * g)
    }

    /// `T v` for a Cartesian vector.
    pub fn apply(&self, v: &Vector3<f64>, frame: &SurfaceFrame) -> Vector3<f64> {
        self.to_cartesian(frame) * v
    }

    pub fn to_cartesian(&self, frame: &SurfaceFrame) -> Matrix3<f64> {
        same(frame.id(), self.frame);
        let mut m = Matrix3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                m += frame.dual_basis(i) * frame.dual_basis(j).transpose() * self.cov[(i, j)];
            }
        }
        m
    }
}

macro_rules! linear_ops {
    ($t:ty) => {
        impl Add for $t {
            type Output = $t;
            fn add(self, rhs: $t) -> $t {
                same(self.frame, rhs.frame);
                Self { cov: self.cov + rhs.cov, frame: self.frame }
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, rhs: $t) -> $t {
                same(self.frame, rhs.frame);
                Self { cov: self.cov - rhs.cov, frame: self.frame }
            }
        }
        impl AddAssign for $t {
            fn add_assign(&mut self, rhs: $t) {
                same(self.frame, rhs.frame);
                self.cov += rhs.cov;
            }
        }
        impl Mul<f64> for $t {
            type Output = $t;
            fn mul(self, s: f64) -> $t {
                Self { cov: self.cov * s, frame: self.frame }
            }
        }
        impl Neg for $t {
            type Output = $t;
            fn neg(self) -> $t {
                Self { cov: -self.cov, frame: self.frame }
            }
        }
    };
}

linear_ops!(TangentVector);
linear_ops!(PlanarTensor);
linear_ops!(ShellTensor);
linear_ops!(FrameTensor);

/// `c X`: rotates the planar part of `X` by a right angle in the tangent plane.
pub fn alternator_apply(frame: &SurfaceFrame, x: &ShellTensor) -> ShellTensor {
    PlanarTensor::alternator(frame).mul_shell(x, frame).to_shell()
}

/// `[v]x`, the skew matrix with `[v]x w = v x w`.
pub fn hat(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0)
}

/// `(W32 - W23, W13 - W31, W21 - W12) / 2`, the axial vector of the skew part.
pub fn vee(w: &Matrix3<f64>) -> Vector3<f64> {
    Vector3::new(w[(2, 1)] - w[(1, 2)], w[(0, 2)] - w[(2, 0)], w[(1, 0)] - w[(0, 1)]) * 0.5
}

/// Axial vector of a skew-symmetric matrix.
pub fn axl(w: &Matrix3<f64>) -> Result<Vector3<f64>, TensorError> {
    let asymmetry = (w + w.transpose()).norm();
    if asymmetry > SKEW_TOL * w.norm() {
        return Err(TensorError::NotSkew { asymmetry });
    }
    Ok(vee(w))
}

/// Proper orthogonal 3x3 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Self(Matrix3::identity())
    }

    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self, TensorError> {
        let orthogonality = (m.transpose() * m - Matrix3::identity()).norm();
        let det = m.determinant();
        if !(orthogonality <= ROTATION_TOL) || det <= 0.0 {
            return Err(TensorError::NotRotation { orthogonality, det });
        }
        Ok(Self(m))
    }

    pub fn from_quaternion(q: &UnitQuaternion<f64>) -> Self {
        Self(q.to_rotation_matrix().into_inner())
    }

    /// Exponential map of a rotation vector.
    pub fn exp(theta: &Vector3<f64>) -> Self {
        Self(Rotation3::new(*theta).into_inner())
    }

    /// Rotation vector with angle in `[0, pi]`.
    pub fn log(&self) -> Vector3<f64> {
        Rotation3::from_matrix_unchecked(self.0).scaled_axis()
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self(self.0 * other.0)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0 * v
    }

    pub fn to_quaternion(&self) -> UnitQuaternion<f64> {
        UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(self.0))
    }

    pub fn orthogonality_defect(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).norm()
    }
}

/// Inverse of the right Jacobian of SO(3): `log(exp(t) exp(x)) = t + Jr^-1(t) x + O(x^2)`.
pub fn right_jacobian_inv(theta: &Vector3<f64>) -> Matrix3<f64> {
    let t = theta.norm();
    let w = hat(theta);
    let coef = if t < 1e-4 {
        1.0 / 12.0 + t * t / 720.0
    } else {
        1.0 / (t * t) - (1.0 + t.cos()) / (2.0 * t * t.sin())
    };
    Matrix3::identity() + w * 0.5 + w * w * coef
}

/// Inverse of the left Jacobian of SO(3): `log(exp(x) exp(t)) = t + Jl^-1(t) x + O(x^2)`.
pub fn left_jacobian_inv(theta: &Vector3<f64>) -> Matrix3<f64> {
    right_jacobian_inv(&-theta)
}
