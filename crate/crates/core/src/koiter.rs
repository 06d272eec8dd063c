//! Classical Koiter energy and the reduction of the Cosserat shell energy to
//! it under the Kirchhoff-Love constraint (`d3 = n`, `mu_c = 0`, no
//! curvature energy).
//!
//! The reduction is checked pointwise on analytic Kirchhoff-Love
//! deformations: the deformed surface is prescribed in closed form and the
//! microrotation maps the reference triad `{a1/|a1|, n0 x a1/|a1|, n0}` to the
//! deformed triad `{t1, n x t1, n}`. All derivatives are exact, so the strain
//! identities hold to round-off and the reported discrepancy contains only
//! the terms dropped as over-quadratic.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::constitutive::MaterialConstants;
use crate::geometry::{ChartJet, GeometryError, ParameterDomain, Parametrization, SurfaceChart, SurfaceFrame};
use crate::kinematics::{
    curvature_from_rotation, kl_configuration, koiter_from_gradients, strain_from_gradient, Grid, GridGeometry,
    KinematicsError, KoiterStrains, MidsurfaceConfiguration,
};
use crate::tensor::{alternator_apply, PlanarTensor, ShellTensor};

/// Largest admissible skew part of an argument of the Koiter form.
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Largest admissible `|d3 - n|` for a Kirchhoff-Love configuration.
pub const KL_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum KoiterError {
    #[error("tensor is not symmetric: |skew| = {skew:.3e}")]
    NotSymmetric { skew: f64 },
    #[error("Kirchhoff-Love constraint violated at sample {sample}: |d3 - n| = {violation:.3e}")]
    KLViolated { sample: usize, violation: f64 },
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Kinematics(#[from] KinematicsError),
}

/// Plane-stress constants of the Koiter model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KoiterMaterial {
    pub mu: f64,
    pub lambda: f64,
    pub h: f64,
}

impl KoiterMaterial {
    pub fn new(mu: f64, lambda: f64, h: f64) -> Result<Self, KoiterError> {
        let m = Self { mu, lambda, h };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), KoiterError> {
        if !(self.mu.is_finite() && self.lambda.is_finite() && self.h.is_finite()) {
            return Err(KoiterError::InvalidMaterial("constants must be finite".into()));
        }
        if self.mu <= 0.0 || 3.0 * self.lambda + 2.0 * self.mu <= 0.0 || self.h <= 0.0 {
            return Err(KoiterError::InvalidMaterial("need mu > 0, 3 lambda + 2 mu > 0, h > 0".into()));
        }
        Ok(())
    }

    fn plane_stress_lambda(&self) -> f64 {
        self.lambda * self.mu / (self.lambda + 2.0 * self.mu)
    }
}

impl From<&MaterialConstants> for KoiterMaterial {
    fn from(m: &MaterialConstants) -> Self {
        Self { mu: m.mu, lambda: m.lambda, h: m.h }
    }
}

/// `W_mixt(S, T)` on planar tensors with `mu_c = 0`.
fn w_mixt_planar(s: &PlanarTensor, t: &PlanarTensor, frame: &SurfaceFrame, mat: &KoiterMaterial) -> f64 {
    mat.mu * s.sym().dot(&t.sym(), frame) + mat.plane_stress_lambda() * s.trace(frame) * t.trace(frame)
}

/// `W_Koit(T) = mu |sym T|^2 + lambda mu / (lambda + 2 mu) (tr T)^2` for symmetric `T`.
pub fn w_koiter_form(t: &PlanarTensor, frame: &SurfaceFrame, mat: &KoiterMaterial) -> Result<f64, KoiterError> {
    let skew = t.skew().norm_sq(frame).sqrt();
    if skew > SYMMETRY_TOL {
        return Err(KoiterError::NotSymmetric { skew });
    }
    Ok(w_mixt_planar(t, t, frame, mat))
}

/// `h W_Koit(eps) + h^3/12 W_Koit(rho)`.
pub fn koiter_energy_density(
    strains: &KoiterStrains,
    frame: &SurfaceFrame,
    mat: &KoiterMaterial,
) -> Result<f64, KoiterError> {
    let h3 = mat.h.powi(3) / 12.0;
    Ok(mat.h * w_koiter_form(&strains.eps, frame, mat)? + h3 * w_koiter_form(&strains.rho, frame, mat)?)
}

/// Cosserat and Koiter strains of a Kirchhoff-Love deformation at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct KlSample {
    pub frame: SurfaceFrame,
    pub e: ShellTensor,
    pub k: ShellTensor,
    pub koiter: KoiterStrains,
    /// `|Q n0 - n|`
    pub kl_violation: f64,
}

/// Energies of the reduction chain at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionTerms {
    /// reduced Cosserat energy in `(E, K)`
    pub w_full_reduced: f64,
    /// `h W_Koit(eps) + h^3/12 W_Koit(rho)`
    pub w_koiter_leading: f64,
    /// the curvature-dependent correction `h^3/12 [4 W(eps b, eps b - rho) - W(eps, 3K eps - 2 rho b*)]`
    pub correction: f64,
    /// `h W_Koit(eps) - h W_mixt(E)`
    pub extensional_defect: f64,
}

impl ReductionTerms {
    /// Reduced energy minus the Koiter energy with correction.
    pub fn discrepancy(&self) -> f64 {
        self.w_full_reduced - (self.w_koiter_leading + self.correction)
    }
}

/// Evaluate the reduction chain at one Kirchhoff-Love sample.
pub fn reduction_terms(sample: &KlSample, mat: &KoiterMaterial) -> ReductionTerms {
    let f = &sample.frame;
    let h3 = mat.h.powi(3) / 12.0;
    let b = PlanarTensor::curvature(f);
    let bs = PlanarTensor::cofactor(f);
    let e = sample.e.planar();
    let z = e.mul(&b, f) + alternator_apply(f, &sample.k).planar();
    let w = |s: &PlanarTensor, t: &PlanarTensor| w_mixt_planar(s, t, f, mat);
    let gauss = f.gauss_curvature;
    let w_full_reduced = (mat.h + gauss * h3) * w(&e, &e) + h3 * w(&z, &z) - 2.0 * h3 * w(&e, &z.mul(&bs, f));
    let (eps, rho) = (sample.koiter.eps, sample.koiter.rho);
    let eb = eps.mul(&b, f);
    let w_koiter_leading = mat.h * w(&eps, &eps) + h3 * w(&rho, &rho);
    let correction = h3 * (4.0 * w(&eb, &(eb - rho)) - w(&eps, &(eps * (3.0 * gauss) - rho.mul(&bs, f) * 2.0)));
    ReductionTerms {
        w_full_reduced,
        w_koiter_leading,
        correction,
        extensional_defect: mat.h * (w(&eps, &eps) - w(&e, &e)),
    }
}

/// Smooth displacement `U = sum_i A_i sin(p_i u + q_i v + phi_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigDisplacement {
    pub terms: Vec<TrigTerm>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub amplitude: [f64; 3],
    pub p: f64,
    pub q: f64,
    pub phase: f64,
}

impl TrigDisplacement {
    /// A fixed displacement with bending, stretching and twisting content.
    pub fn standard() -> Self {
        Self {
            terms: vec![
                TrigTerm { amplitude: [0.0, 0.0, 1.0], p: 2.0, q: 1.5, phase: 0.3 },
                TrigTerm { amplitude: [0.4, -0.2, 0.0], p: 1.0, q: -0.7, phase: 1.1 },
                TrigTerm { amplitude: [-0.1, 0.3, 0.5], p: -1.3, q: 2.2, phase: -0.4 },
            ],
        }
    }

    /// Value and derivatives up to second order, scaled by `s`.
    pub fn jet(&self, u: f64, v: f64, s: f64) -> ChartJet {
        let mut j = ChartJet { position: Vector3::zeros(), d1: [Vector3::zeros(); 2], d2: [[Vector3::zeros(); 2]; 2] };
        for t in &self.terms {
            let a = Vector3::from(t.amplitude) * s;
            let arg = t.p * u + t.q * v + t.phase;
            let (sn, cs) = arg.sin_cos();
            let k = [t.p, t.q];
            j.position += a * sn;
            for x in 0..2 {
                j.d1[x] += a * (cs * k[x]);
                for y in 0..2 {
                    j.d2[x][y] -= a * (sn * k[x] * k[y]);
                }
            }
        }
        j
    }
}

/// Orthonormal triad `[t1, n x t1, n]` of a surface with tangents `d1` and
/// its partial derivatives from the second derivatives `d2`.
fn triad(d1: &[Vector3<f64>; 2], d2: &[[Vector3<f64>; 2]; 2]) -> Option<(Matrix3<f64>, [Matrix3<f64>; 2])> {
    let c = d1[0].cross(&d1[1]);
    let (cn, l1) = (c.norm(), d1[0].norm());
    if cn == 0.0 || l1 == 0.0 {
        return None;
    }
    let n = c / cn;
    let t1 = d1[0] / l1;
    let t2 = n.cross(&t1);
    let d = Matrix3::from_columns(&[t1, t2, n]);
    let dd = [0, 1].map(|a| {
        let dc = d2[0][a].cross(&d1[1]) + d1[0].cross(&d2[1][a]);
        let dn = (dc - n * n.dot(&dc)) / cn;
        let dt1 = (d2[0][a] - t1 * t1.dot(&d2[0][a])) / l1;
        let dt2 = dn.cross(&t1) + n.cross(&dt1);
        Matrix3::from_columns(&[dt1, dt2, dn])
    });
    Some((d, dd))
}

/// Strains of `m = y0 + s U` with the Kirchhoff-Love microrotation at `(u, v)`.
pub fn kl_sample<P: Parametrization + ?Sized>(
    chart: &P,
    displacement: &TrigDisplacement,
    s: f64,
    u: f64,
    v: f64,
) -> Result<KlSample, KoiterError> {
    let y = chart.jet(u, v)?;
    let frame = SurfaceFrame::from_jet(&y).map_err(|_| GeometryError::DegenerateChart { u, v })?;
    let w = displacement.jet(u, v, s);
    let dm = [y.d1[0] + w.d1[0], y.d1[1] + w.d1[1]];
    let ddm = [[y.d2[0][0] + w.d2[0][0], y.d2[0][1] + w.d2[0][1]], [y.d2[1][0] + w.d2[1][0], y.d2[1][1] + w.d2[1][1]]];
    let degenerate = || GeometryError::DegenerateChart { u, v };
    let (d, dd) = triad(&dm, &ddm).ok_or_else(degenerate)?;
    let (d0, dd0) = triad(&y.d1, &y.d2).ok_or_else(degenerate)?;
    let q = d * d0.transpose();
    let dq = [0, 1].map(|a| dd[a] * d0.transpose() + d * dd0[a].transpose());
    let n = d.column(2).into_owned();
    let dn = [dd[0].column(2).into_owned(), dd[1].column(2).into_owned()];
    Ok(KlSample {
        e: strain_from_gradient(&frame, &q, &dm),
        k: curvature_from_rotation(&frame, &q, &dq),
        koiter: koiter_from_gradients(&frame, &dm, &dn),
        kl_violation: (q * frame.normal - n).norm(),
        frame,
    })
}

/// An analytic Kirchhoff-Love test deformation of a chart.
#[derive(Debug, Clone, PartialEq)]
pub struct KlFixture {
    pub name: String,
    pub chart: SurfaceChart,
    pub displacement: TrigDisplacement,
}

impl KlFixture {
    pub fn plate() -> Self {
        Self {
            name: "plate".into(),
            chart: SurfaceChart::plate(ParameterDomain::unit()),
            displacement: TrigDisplacement::standard(),
        }
    }

    /// Unit sphere, longitude in `[0, 1]`, colatitude in `[0.5, 1.3]`.
    pub fn sphere_cap() -> Self {
        let domain = ParameterDomain::new((0.0, 1.0), (0.5, 1.3)).expect("valid domain");
        Self {
            name: "sphere-cap".into(),
            chart: SurfaceChart::sphere_cap(1.0, domain).expect("valid sphere"),
            displacement: TrigDisplacement::standard(),
        }
    }

    /// Cylinder of radius 1 over `[0, 1]^2`.
    pub fn cylinder() -> Self {
        Self {
            name: "cylinder".into(),
            chart: SurfaceChart::cylinder(1.0, ParameterDomain::unit()).expect("valid cylinder"),
            displacement: TrigDisplacement::standard(),
        }
    }

    /// `n x n` interior sample points (cell centres of the parameter domain).
    pub fn sample_points(&self, n: usize) -> Vec<(f64, f64)> {
        let d = self.chart.domain();
        let mut pts = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                let (s, t) = ((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
                pts.push(d.lerp(s, t));
            }
        }
        pts
    }

    /// Grid geometry and the Kirchhoff-Love configuration built from grid
    /// differences of `m = y0 + s U`.
    pub fn grid_configuration(&self, n: usize, s: f64) -> Result<(GridGeometry, MidsurfaceConfiguration), KoiterError> {
        let grid = Grid::new(n, n, self.chart.domain())?;
        let geom = GridGeometry::new(&self.chart, grid)?;
        let positions = (0..grid.len())
            .map(|k| {
                let (u, v) = grid.coords(k);
                geom.positions[k] + self.displacement.jet(u, v, s).position
            })
            .collect();
        let config = kl_configuration(&geom, positions)?;
        Ok((geom, config))
    }
}

/// Aggregated reduction check over the sample points of one amplitude.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub amplitude: f64,
    pub samples: usize,
    /// means over the sample points
    pub w_full_reduced: f64,
    pub w_koiter_leading: f64,
    pub correction: f64,
    /// largest `|reduced - (leading + correction)|`
    pub discrepancy: f64,
    /// largest `|correction|`
    pub max_correction: f64,
    /// largest `|h W_Koit(eps) - h W_mixt(E)|`
    pub extensional_defect: f64,
    pub max_kl_violation: f64,
    /// largest `|n0 E|`
    pub max_transverse_shear: f64,
}

/// Run the reduction check at the given sample points.
pub fn reduction_check<P: Parametrization + ?Sized>(
    chart: &P,
    displacement: &TrigDisplacement,
    amplitude: f64,
    points: &[(f64, f64)],
    mat: &MaterialConstants,
) -> Result<ReductionReport, KoiterError> {
    if mat.mu_c != 0.0 {
        return Err(KoiterError::InvalidMaterial(format!("the reduction requires mu_c = 0, got {}", mat.mu_c)));
    }
    let km = KoiterMaterial::from(mat);
    km.validate()?;
    let mut r = ReductionReport {
        amplitude,
        samples: points.len(),
        w_full_reduced: 0.0,
        w_koiter_leading: 0.0,
        correction: 0.0,
        discrepancy: 0.0,
        max_correction: 0.0,
        extensional_defect: 0.0,
        max_kl_violation: 0.0,
        max_transverse_shear: 0.0,
    };
    for (i, &(u, v)) in points.iter().enumerate() {
        let s = kl_sample(chart, displacement, amplitude, u, v)?;
        if s.kl_violation > KL_TOL {
            return Err(KoiterError::KLViolated { sample: i, violation: s.kl_violation });
        }
        let t = reduction_terms(&s, &km);
        r.w_full_reduced += t.w_full_reduced;
        r.w_koiter_leading += t.w_koiter_leading;
        r.correction += t.correction;
        r.discrepancy = r.discrepancy.max(t.discrepancy().abs());
        r.max_correction = r.max_correction.max(t.correction.abs());
        r.extensional_defect = r.extensional_defect.max(t.extensional_defect.abs());
        r.max_kl_violation = r.max_kl_violation.max(s.kl_violation);
        r.max_transverse_shear = r.max_transverse_shear.max(s.e.transversal().norm_sq(&s.frame).sqrt());
    }
    let n = points.len().max(1) as f64;
    r.w_full_reduced /= n;
    r.w_koiter_leading /= n;
    r.correction /= n;
    Ok(r)
}

/// Reduction reports over several amplitudes with fitted scaling orders.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeStudy {
    pub fixture: String,
    pub reports: Vec<ReductionReport>,
    /// log-log slope of the discrepancy against the amplitude
    pub discrepancy_order: Option<f64>,
    /// log-log slope of the extensional defect against the amplitude
    pub extensional_order: Option<f64>,
}

/// Default amplitudes of the scaling study.
pub const STUDY_AMPLITUDES: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Run [`reduction_check`] at each amplitude and fit the orders.
pub fn amplitude_study(
    fixture: &KlFixture,
    amplitudes: &[f64],
    points_per_direction: usize,
    mat: &MaterialConstants,
) -> Result<AmplitudeStudy, KoiterError> {
    let points = fixture.sample_points(points_per_direction);
    let reports = amplitudes
        .iter()
        .map(|&s| reduction_check(&fixture.chart, &fixture.displacement, s, &points, mat))
        .collect::<Result<Vec<_>, _>>()?;
    let fit = |f: fn(&ReductionReport) -> f64| {
        let usable: Vec<_> = reports.iter().filter(|r| r.amplitude > 0.0 && f(r) > 0.0).collect();
        (usable.len() >= 2).then(|| {
            let s: Vec<f64> = usable.iter().map(|r| r.amplitude).collect();
            let e: Vec<f64> = usable.iter().map(|r| f(r)).collect();
            crate::fitted_order(&s, &e)
        })
    };
    Ok(AmplitudeStudy {
        fixture: fixture.name.clone(),
        discrepancy_order: fit(|r| r.discrepancy),
        extensional_order: fit(|r| r.extensional_defect),
        reports,
    })
}

/// Koiter material equivalent of the Cosserat constants with `mu_c = 0`.
pub fn koiter_material(mat: &MaterialConstants) -> MaterialConstants {
    MaterialConstants { mu_c: 0.0, ..*mat }
}
