//! Material constants, quadratic energy forms, shell moduli, the areal
//! strain-energy density and the stress resultants.
//!
//! Every scalar form has a production implementation and one or more
//! independent formula paths (`*_split`, `*_moduli`, `*_3d`, ...) that the
//! test suites compare against each other.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::SurfaceFrame;
use crate::tensor::{alternator_apply, check, metric3_inv, FrameTensor, PlanarTensor, ShellTensor, TensorError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConstitutiveError {
    #[error("invalid material constants: {0}")]
    InvalidMaterial(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

/// Isotropic Cosserat material and shell thickness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConstants {
    pub mu: f64,
    pub lambda: f64,
    pub mu_c: f64,
    pub l_c: f64,
    pub b1: f64,
    pub b2: f64,
    pub b3: f64,
    pub h: f64,
}

impl Default for MaterialConstants {
    fn default() -> Self {
        Self { mu: 1.0, lambda: 1.0, mu_c: 1.0, l_c: 0.1, b1: 1.0, b2: 1.0, b3: 1.0, h: 0.1 }
    }
}

impl MaterialConstants {
    pub fn validate(&self) -> Result<(), ConstitutiveError> {
        let fail = |m: &str| Err(ConstitutiveError::InvalidMaterial(m.into()));
        let all = [self.mu, self.lambda, self.mu_c, self.l_c, self.b1, self.b2, self.b3, self.h];
        if all.iter().any(|x| !x.is_finite()) {
            return fail("constants must be finite");
        }
        if self.mu <= 0.0 {
            return fail("mu must be positive");
        }
        if 3.0 * self.lambda + 2.0 * self.mu <= 0.0 {
            return fail("3 lambda + 2 mu must be positive");
        }
        if self.mu_c < 0.0 {
            return fail("mu_c must be non-negative");
        }
        if self.b1 <= 0.0 || self.b2 <= 0.0 || self.b3 <= 0.0 {
            return fail("b1, b2, b3 must be positive");
        }
        if self.l_c <= 0.0 {
            return fail("l_c must be positive");
        }
        if self.h <= 0.0 {
            return fail("h must be positive");
        }
        Ok(())
    }

    /// Bulk modulus `(3 lambda + 2 mu) / 3`.
    pub fn kappa(&self) -> f64 {
        (3.0 * self.lambda + 2.0 * self.mu) / 3.0
    }

    /// `W_coss` is only positive semi-definite when `mu_c = 0`.
    pub fn is_semi_definite(&self) -> bool {
        self.mu_c == 0.0
    }

    pub fn shear_coefficient(&self, variant: ShearVariant) -> f64 {
        match variant {
            ShearVariant::Harmonic => 2.0 * self.mu * self.mu_c / (self.mu + self.mu_c),
            ShearVariant::Arithmetic => 0.5 * (self.mu + self.mu_c),
        }
    }

    /// `lambda mu / (lambda + 2 mu)`
    fn plane_stress_lambda(&self) -> f64 {
        self.lambda * self.mu / (self.lambda + 2.0 * self.mu)
    }

    fn curvature_scale(&self) -> f64 {
        self.mu * self.l_c * self.l_c
    }
}

/// Transverse shear coefficient of the shell energy: `2 mu mu_c / (mu + mu_c)`
/// (harmonic mean) or `(mu + mu_c) / 2` (arithmetic mean).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShearVariant {
    #[default]
    Harmonic,
    Arithmetic,
}

impl std::str::FromStr for ShearVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "harmonic" => Ok(Self::Harmonic),
            "arithmetic" => Ok(Self::Arithmetic),
            other => Err(format!("unknown variant '{other}', expected harmonic or arithmetic")),
        }
    }
}

fn same_frame(frame: &SurfaceFrame, xs: &[&ShellTensor]) -> Result<(), ConstitutiveError> {
    for x in xs {
        check(frame, x.frame())?;
    }
    Ok(())
}

/// `W_mp(X) = mu |sym X|^2 + mu_c |skew X|^2 + lambda/2 (tr X)^2` on the 3x3 embedding.
pub fn w_micropolar(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x])?;
    let t = x.embed();
    let tr = t.trace(frame);
    Ok(mat.mu * t.sym().norm_sq(frame) + mat.mu_c * t.skew().norm_sq(frame) + 0.5 * mat.lambda * tr * tr)
}

/// `mu sym X : sym Y + mu_c skew X : skew Y + lambda mu / (lambda + 2 mu) tr X tr Y`.
pub fn w_mixt(x: &ShellTensor, y: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x, y])?;
    let (s, t) = (x.embed(), y.embed());
    Ok(mat.mu * s.sym().dot(&t.sym(), frame)
        + mat.mu_c * s.skew().dot(&t.skew(), frame)
        + mat.plane_stress_lambda() * x.trace(frame) * y.trace(frame))
}

/// The same bilinear form through three-dimensional deviators.
pub fn w_mixt_deviatoric(
    x: &ShellTensor,
    y: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x, y])?;
    let (s, t) = (x.embed(), y.embed());
    let (mu, la) = (mat.mu, mat.lambda);
    Ok(mu * s.sym().dev3(frame).dot(&t.sym().dev3(frame), frame)
        + mat.mu_c * s.skew().dot(&t.skew(), frame)
        + 2.0 * mu * (2.0 * la + mu) / (3.0 * (la + 2.0 * mu)) * x.trace(frame) * y.trace(frame))
}

/// Quadratic `W_mixt(X)` as `W_mp(X) - lambda^2 / (2 (lambda + 2 mu)) (tr X)^2`.
pub fn w_mixt_from_micropolar(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    let mp = w_micropolar(x, frame, mat)?;
    let tr = x.trace(frame);
    Ok(mp - mat.lambda * mat.lambda / (2.0 * (mat.lambda + 2.0 * mat.mu)) * tr * tr)
}

/// Production bilinear `W_coss(X, Y)` with the given transverse shear coefficient.
fn coss_bilinear(x: &ShellTensor, y: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants, coef: f64) -> f64 {
    let (p, q) = (x.planar(), y.planar());
    let (mu, la) = (mat.mu, mat.lambda);
    mu * p.sym().dev_s(frame).dot(&q.sym().dev_s(frame), frame)
        + mat.mu_c * p.skew().dot(&q.skew(), frame)
        + mu * (3.0 * la + 2.0 * mu) / (2.0 * (la + 2.0 * mu)) * p.trace(frame) * q.trace(frame)
        + coef * x.transversal().dot(&y.transversal(), frame)
}

fn curv_quadratic(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> f64 {
    let p = x.planar();
    let tr = p.trace(frame);
    mat.curvature_scale()
        * (mat.b1 * p.sym().dev_s(frame).norm_sq(frame)
            + mat.b2 * p.skew().norm_sq(frame)
            + (mat.b3 + mat.b1 / 6.0) * tr * tr
            + 0.5 * (mat.b1 + mat.b2) * x.transversal().norm_sq(frame))
}

/// `W_coss(X, Y)` through the surface deviator (production path).
pub fn w_coss(x: &ShellTensor, y: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x, y])?;
    Ok(coss_bilinear(x, y, frame, mat, mat.shear_coefficient(ShearVariant::Harmonic)))
}

/// `W_coss(X, Y)` as `W_mixt(X, Y) - (mu - mu_c)^2 / (2 (mu + mu_c)) (n0 X).(n0 Y)`.
pub fn w_coss_reduced(
    x: &ShellTensor,
    y: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
) -> Result<f64, ConstitutiveError> {
    let d = mat.mu - mat.mu_c;
    Ok(w_mixt(x, y, frame, mat)? - d * d / (2.0 * (mat.mu + mat.mu_c)) * x.transversal().dot(&y.transversal(), frame))
}

/// `W_coss(X, Y)` split into planar sym/skew/trace parts plus transverse shear.
pub fn w_coss_split(
    x: &ShellTensor,
    y: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x, y])?;
    let (p, q) = (x.planar(), y.planar());
    Ok(mat.mu * p.sym().dot(&q.sym(), frame)
        + mat.mu_c * p.skew().dot(&q.skew(), frame)
        + mat.plane_stress_lambda() * p.trace(frame) * q.trace(frame)
        + mat.shear_coefficient(ShearVariant::Harmonic) * x.transversal().dot(&y.transversal(), frame))
}

/// `W_coss(X, Y) = 1/2 C_S^abgd X_ab Y_gd + coef (n0 X).(n0 Y)` from moduli components.
pub fn w_coss_moduli(
    x: &ShellTensor,
    y: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x, y])?;
    let moduli = ShellModuli::new(frame, mat);
    Ok(0.5 * ShellModuli::contract(&moduli.c, &x.planar(), &y.planar())
        + mat.shear_coefficient(ShearVariant::Harmonic) * x.transversal().dot(&y.transversal(), frame))
}

/// `W_curv(X)` through the surface deviator (production path).
pub fn w_curv(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x])?;
    Ok(curv_quadratic(x, frame, mat))
}

/// `W_curv(X)` with sym/skew/trace coefficients `b1, b2, b3 - b1/3`.
pub fn w_curv_split(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x])?;
    let p = x.planar();
    let tr = p.trace(frame);
    Ok(mat.curvature_scale()
        * (mat.b1 * p.sym().norm_sq(frame)
            + mat.b2 * p.skew().norm_sq(frame)
            + (mat.b3 - mat.b1 / 3.0) * tr * tr
            + 0.5 * (mat.b1 + mat.b2) * x.transversal().norm_sq(frame)))
}

/// `W_curv(X) = 1/2 G_S^abgd X_ab X_gd + mu L_c^2 (b1 + b2)/2 |n0 X|^2`.
pub fn w_curv_moduli(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x])?;
    let moduli = ShellModuli::new(frame, mat);
    let p = x.planar();
    Ok(0.5 * ShellModuli::contract(&moduli.g, &p, &p)
        + mat.curvature_scale() * 0.5 * (mat.b1 + mat.b2) * x.transversal().norm_sq(frame))
}

/// The three-dimensional curvature energy of the embedded tensor:
/// `mu L_c^2 (b1 |dev3 sym X|^2 + b2 |skew X|^2 + b3 (tr X)^2)`.
pub fn w_curv_3d(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[x])?;
    let t = x.embed();
    let tr = t.trace(frame);
    Ok(mat.curvature_scale()
        * (mat.b1 * t.sym().dev3(frame).norm_sq(frame) + mat.b2 * t.skew().norm_sq(frame) + mat.b3 * tr * tr))
}

/// `L_n0(X) = X - lambda/(lambda + 2 mu) (tr X) n0 (x) n0 - (mu - mu_c)/(mu + mu_c) (n0 X) (x) n0`.
pub fn l_n0(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> Result<FrameTensor, ConstitutiveError> {
    same_frame(frame, &[x])?;
    let mut cov = x.embed().cov();
    let s = (mat.mu - mat.mu_c) / (mat.mu + mat.mu_c);
    cov[(2, 2)] -= mat.lambda / (mat.lambda + 2.0 * mat.mu) * x.trace(frame);
    cov[(0, 2)] -= s * x.cov()[(2, 0)];
    cov[(1, 2)] -= s * x.cov()[(2, 1)];
    Ok(FrameTensor::new(frame, cov))
}

/// `C : T = 2 mu sym T + 2 mu_c skew T + lambda (tr T) 1`.
pub fn apply_c3d(t: &FrameTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> FrameTensor {
    t.sym() * (2.0 * mat.mu) + t.skew() * (2.0 * mat.mu_c) + FrameTensor::identity(frame) * (mat.lambda * t.trace(frame))
}

/// `G : T = 2 mu L_c^2 (b1 dev3 sym T + b2 skew T + b3 (tr T) 1)`.
pub fn apply_g3d(t: &FrameTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> FrameTensor {
    let s = 2.0 * mat.curvature_scale();
    (t.sym().dev3(frame) * mat.b1 + t.skew() * mat.b2 + FrameTensor::identity(frame) * (mat.b3 * t.trace(frame))) * s
}

/// Generic isotropic 4-tensor `p (gg + gg) + q (gg - gg) + r g g` applied by index sums.
fn apply_isotropic_indexed(t: &FrameTensor, frame: &SurfaceFrame, p: f64, q: f64, r: f64) -> FrameTensor {
    let g = metric3_inv(frame);
    let tc = t.cov();
    let mut out = nalgebra::Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut s = 0.0;
            for k in 0..3 {
                for l in 0..3 {
                    let c = p * (g[(i, k)] * g[(j, l)] + g[(i, l)] * g[(j, k)])
                        + q * (g[(i, k)] * g[(j, l)] - g[(i, l)] * g[(j, k)])
                        + r * g[(i, j)] * g[(k, l)];
                    s += c * tc[(k, l)];
                }
            }
            out[(i, j)] = s;
        }
    }
    FrameTensor::from_contravariant(frame, &out)
}

/// `C : T` from the index form `C^ijkl = mu (..+..) + mu_c (..-..) + lambda g^ij g^kl`.
pub fn apply_c3d_indexed(t: &FrameTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> FrameTensor {
    apply_isotropic_indexed(t, frame, mat.mu, mat.mu_c, mat.lambda)
}

/// `G : T` from the index form with trace coefficient `2 (b3 - b1/3)`.
pub fn apply_g3d_indexed(t: &FrameTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> FrameTensor {
    let s = mat.curvature_scale();
    apply_isotropic_indexed(t, frame, s * mat.b1, s * mat.b2, s * 2.0 * (mat.b3 - mat.b1 / 3.0))
}

pub type Moduli4 = [[[[f64; 2]; 2]; 2]; 2];

/// Contravariant components of the planar shell moduli `C_S` and `G_S`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShellModuli {
    pub c: Moduli4,
    pub g: Moduli4,
    frame: crate::geometry::FrameId,
}

impl ShellModuli {
    /// `C_S^abgd = mu (a^ag a^bd + a^ad a^bg) + mu_c (a^ag a^bd - a^ad a^bg) + 2 lambda mu/(lambda + 2 mu) a^ab a^gd`,
    /// `G_S^abgd = mu L_c^2 (b1 (..+..) + b2 (..-..) + 2 (b3 - b1/3) a^ab a^gd)`.
    pub fn new(frame: &SurfaceFrame, mat: &MaterialConstants) -> Self {
        let a = &frame.metric_inv;
        let iso = |p: f64, q: f64, r: f64| {
            let mut m = [[[[0.0; 2]; 2]; 2]; 2];
            for (al, m1) in m.iter_mut().enumerate() {
                for (be, m2) in m1.iter_mut().enumerate() {
                    for (ga, m3) in m2.iter_mut().enumerate() {
                        for (de, v) in m3.iter_mut().enumerate() {
                            let plus = a[(al, ga)] * a[(be, de)] + a[(al, de)] * a[(be, ga)];
                            let minus = a[(al, ga)] * a[(be, de)] - a[(al, de)] * a[(be, ga)];
                            *v = p * plus + q * minus + r * a[(al, be)] * a[(ga, de)];
                        }
                    }
                }
            }
            m
        };
        let s = mat.curvature_scale();
        Self {
            c: iso(mat.mu, mat.mu_c, 2.0 * mat.plane_stress_lambda()),
            g: iso(s * mat.b1, s * mat.b2, s * 2.0 * (mat.b3 - mat.b1 / 3.0)),
            frame: frame.id(),
        }
    }

    /// `M^abgd X_ab Y_gd`
    pub fn contract(m: &Moduli4, x: &PlanarTensor, y: &PlanarTensor) -> f64 {
        let (xc, yc) = (x.cov(), y.cov());
        let mut s = 0.0;
        for al in 0..2 {
            for be in 0..2 {
                for ga in 0..2 {
                    for de in 0..2 {
                        s += m[al][be][ga][de] * xc[(al, be)] * yc[(ga, de)];
                    }
                }
            }
        }
        s
    }

    fn apply(m: &Moduli4, t: &PlanarTensor, frame: &SurfaceFrame) -> PlanarTensor {
        let tc = t.cov();
        let contra = Matrix2::from_fn(|al, be| {
            let mut s = 0.0;
            for ga in 0..2 {
                for de in 0..2 {
                    s += m[al][be][ga][de] * tc[(ga, de)];
                }
            }
            s
        });
        PlanarTensor::new(frame, frame.metric * contra * frame.metric)
    }

    /// `C_S : T` by index contraction.
    pub fn apply_c(&self, t: &PlanarTensor, frame: &SurfaceFrame) -> PlanarTensor {
        assert_eq!(self.frame, frame.id(), "moduli evaluated on another frame");
        Self::apply(&self.c, t, frame)
    }

    /// `G_S : T` by index contraction.
    pub fn apply_g(&self, t: &PlanarTensor, frame: &SurfaceFrame) -> PlanarTensor {
        assert_eq!(self.frame, frame.id(), "moduli evaluated on another frame");
        Self::apply(&self.g, t, frame)
    }

    /// Largest `|M^abgd - M^gdab|` over both tensors.
    pub fn major_symmetry_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for m in [&self.c, &self.g] {
            for al in 0..2 {
                for be in 0..2 {
                    for ga in 0..2 {
                        for de in 0..2 {
                            d = d.max((m[al][be][ga][de] - m[ga][de][al][be]).abs());
                        }
                    }
                }
            }
        }
        d
    }
}

/// `C_S : T = 2 mu dev_s sym T + 2 mu_c skew T + mu (3 lambda + 2 mu)/(lambda + 2 mu) (tr T) a`.
pub fn apply_cs(t: &PlanarTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> PlanarTensor {
    let (mu, la) = (mat.mu, mat.lambda);
    t.sym().dev_s(frame) * (2.0 * mu)
        + t.skew() * (2.0 * mat.mu_c)
        + PlanarTensor::identity(frame) * (mu * (3.0 * la + 2.0 * mu) / (la + 2.0 * mu) * t.trace(frame))
}

/// `C_S : T = 2 mu sym T + 2 mu_c skew T + 2 lambda mu/(lambda + 2 mu) (tr T) a`.
pub fn apply_cs_split(t: &PlanarTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> PlanarTensor {
    t.sym() * (2.0 * mat.mu)
        + t.skew() * (2.0 * mat.mu_c)
        + PlanarTensor::identity(frame) * (2.0 * mat.plane_stress_lambda() * t.trace(frame))
}

/// `G_S : T = 2 mu L_c^2 (b1 dev_s sym T + b2 skew T + (b3 + b1/6) (tr T) a)`.
pub fn apply_gs(t: &PlanarTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> PlanarTensor {
    (t.sym().dev_s(frame) * mat.b1
        + t.skew() * mat.b2
        + PlanarTensor::identity(frame) * ((mat.b3 + mat.b1 / 6.0) * t.trace(frame)))
        * (2.0 * mat.curvature_scale())
}

/// `G_S : T = 2 mu L_c^2 (b1 sym T + b2 skew T + (b3 - b1/3) (tr T) a)`.
pub fn apply_gs_split(t: &PlanarTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> PlanarTensor {
    (t.sym() * mat.b1 + t.skew() * mat.b2 + PlanarTensor::identity(frame) * ((mat.b3 - mat.b1 / 3.0) * t.trace(frame)))
        * (2.0 * mat.curvature_scale())
}

/// Derivative of the quadratic `W_coss` with shear coefficient `coef`.
fn coss_derivative(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants, coef: f64) -> ShellTensor {
    ShellTensor::from_parts(&apply_cs(&x.planar(), frame, mat), &(x.transversal() * (2.0 * coef)))
}

/// Derivative of the quadratic `W_curv`.
fn curv_derivative(x: &ShellTensor, frame: &SurfaceFrame, mat: &MaterialConstants) -> ShellTensor {
    let t = x.transversal() * (mat.curvature_scale() * (mat.b1 + mat.b2));
    ShellTensor::from_parts(&apply_gs(&x.planar(), frame, mat), &t)
}

/// Thickness weights `(h - K h^3/12, h^3/12)`.
pub fn thickness_weights(frame: &SurfaceFrame, h: f64) -> (f64, f64) {
    let h3 = h * h * h / 12.0;
    (h - frame.gauss_curvature * h3, h3)
}

/// The areal energy split into reporting groups.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// `(h - K h^3/12) [W_coss(E) + W_curv(K)]`
    pub leading: f64,
    /// the bracket multiplied by `h^3/12`
    pub higher_order: f64,
    /// all `W_curv` contributions
    pub curvature: f64,
    /// all transverse-shear contributions
    pub transverse_shear: f64,
    pub total: f64,
}

impl std::ops::AddAssign for EnergyBreakdown {
    fn add_assign(&mut self, o: Self) {
        self.leading += o.leading;
        self.higher_order += o.higher_order;
        self.curvature += o.curvature;
        self.transverse_shear += o.transverse_shear;
        self.total += o.total;
    }
}

impl std::ops::Mul<f64> for EnergyBreakdown {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self {
            leading: self.leading * s,
            higher_order: self.higher_order * s,
            curvature: self.curvature * s,
            transverse_shear: self.transverse_shear * s,
            total: self.total * s,
        }
    }
}

/// Switches for the validation fault-injection fixture.
#[doc(hidden)]
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Faults {
    /// flip the sign of the `-2 W_coss(E, c K b*)` coupling term
    pub flip_coupling_sign: bool,
}

#[doc(hidden)]
pub fn w_shell_breakdown_with(
    e: &ShellTensor,
    k: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
    variant: ShearVariant,
    faults: Faults,
) -> Result<EnergyBreakdown, ConstitutiveError> {
    same_frame(frame, &[e, k])?;
    let coef = mat.shear_coefficient(variant);
    let (w1, w3) = thickness_weights(frame, mat.h);
    let b = PlanarTensor::curvature(frame);
    let bs = PlanarTensor::cofactor(frame);
    let ck = alternator_apply(frame, k);
    let z = e.right_mul(&b, frame) + ck;
    let kb = k.right_mul(&b, frame);
    let coupling = coss_bilinear(e, &ck.right_mul(&bs, frame), frame, mat, coef);
    let sign = if faults.flip_coupling_sign { 2.0 } else { -2.0 };
    let curv0 = curv_quadratic(k, frame, mat);
    let curv1 = curv_quadratic(&kb, frame, mat);
    let leading = w1 * (coss_bilinear(e, e, frame, mat, coef) + curv0);
    let higher_order = w3 * (coss_bilinear(&z, &z, frame, mat, coef) + sign * coupling + curv1);
    let v = e.transversal();
    Ok(EnergyBreakdown {
        leading,
        higher_order,
        curvature: w1 * curv0 + w3 * curv1,
        transverse_shear: coef * (w1 * v.norm_sq(frame) + w3 * v.right_mul(&b, frame).norm_sq(frame)),
        total: leading + higher_order,
    })
}

/// Areal strain-energy density and its breakdown.
pub fn w_shell_breakdown(
    e: &ShellTensor,
    k: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
    variant: ShearVariant,
) -> Result<EnergyBreakdown, ConstitutiveError> {
    w_shell_breakdown_with(e, k, frame, mat, variant, Faults::default())
}

/// Areal strain-energy density
/// `(h - K h^3/12)[W_coss(E) + W_curv(K)] + h^3/12 [W_coss(Eb + cK) - 2 W_coss(E, cKb*) + W_curv(Kb)]`.
pub fn w_shell(
    e: &ShellTensor,
    k: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
    variant: ShearVariant,
) -> Result<f64, ConstitutiveError> {
    Ok(w_shell_breakdown(e, k, frame, mat, variant)?.total)
}

/// The same density written with planar `W_mixt` terms and explicit
/// transverse-shear norms `|n0 E|^2`, `|n0 E b|^2`.
pub fn w_shell_split(
    e: &ShellTensor,
    k: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
    variant: ShearVariant,
) -> Result<f64, ConstitutiveError> {
    same_frame(frame, &[e, k])?;
    let coef = mat.shear_coefficient(variant);
    let (w1, w3) = thickness_weights(frame, mat.h);
    let b = PlanarTensor::curvature(frame);
    let bs = PlanarTensor::cofactor(frame);
    let ae = e.planar().to_shell();
    let ck = alternator_apply(frame, k);
    let aeb_ck = ae.right_mul(&b, frame) + ck;
    let v = e.transversal();
    let mixt = |x: &ShellTensor, y: &ShellTensor| w_mixt(x, y, frame, mat);
    let first = mixt(&ae, &ae)? + coef * v.norm_sq(frame) + w_curv_split(k, frame, mat)?;
    let second = mixt(&aeb_ck, &aeb_ck)? + coef * v.right_mul(&b, frame).norm_sq(frame)
        - 2.0 * mixt(&ae, &ck.right_mul(&bs, frame))?
        + w_curv_split(&k.right_mul(&b, frame), frame, mat)?;
    Ok(w1 * first + w3 * second)
}

/// Rotated resultants `Q_e^T N` and `Q_e^T M` as shell tensors on the frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StressResultants {
    pub n: ShellTensor,
    pub m: ShellTensor,
}

impl StressResultants {
    /// Un-rotated `N`, `M` as Cartesian matrices.
    pub fn unrotated(&self, frame: &SurfaceFrame, q: &nalgebra::Matrix3<f64>) -> (nalgebra::Matrix3<f64>, nalgebra::Matrix3<f64>) {
        (q * self.n.to_cartesian(frame), q * self.m.to_cartesian(frame))
    }
}

/// Derivatives of [`w_shell`] with respect to `E` and `K`.
///
/// With `Z = E b + c K`:
/// `Q^T N = w1 S(E) + w3 S(Z) b - w3 C_S:(c K b*)` and
/// `Q^T M = w1 T(K) - w3 c S(Z) + w3 c S(E) b* + w3 T(K b) b`,
/// where `S`, `T` are the derivatives of `W_coss`, `W_curv`. The signs of the
/// alternator terms follow from `c^T = -c`.
pub fn stress_resultants(
    e: &ShellTensor,
    k: &ShellTensor,
    frame: &SurfaceFrame,
    mat: &MaterialConstants,
    variant: ShearVariant,
) -> Result<StressResultants, ConstitutiveError> {
    same_frame(frame, &[e, k])?;
    let coef = mat.shear_coefficient(variant);
    let (w1, w3) = thickness_weights(frame, mat.h);
    let b = PlanarTensor::curvature(frame);
    let bs = PlanarTensor::cofactor(frame);
    let ck = alternator_apply(frame, k);
    let z = e.right_mul(&b, frame) + ck;
    let sz = coss_derivative(&z, frame, mat, coef);
    let se = coss_derivative(e, frame, mat, coef);
    let n = se * w1 + sz.right_mul(&b, frame) * w3 - apply_cs(&ck.right_mul(&bs, frame).planar(), frame, mat).to_shell() * w3;
    let kb = k.right_mul(&b, frame);
    let m = curv_derivative(k, frame, mat) * w1 - alternator_apply(frame, &sz) * w3
        + alternator_apply(frame, &se).right_mul(&bs, frame) * w3
        + curv_derivative(&kb, frame, mat).right_mul(&b, frame) * w3;
    Ok(StressResultants { n, m })
}

/// Thickness guard `h <= 0.1 / max |principal curvature|`; reported, not enforced.
pub fn thin_enough(frame: &SurfaceFrame, h: f64) -> bool {
    h * frame.max_abs_curvature() <= 0.1
}
