//! Geometrically nonlinear 6-parameter (Cosserat) elastic shells.
//!
//! The crate is organised bottom-up:
//!
//! - [`geometry`]: reference midsurface charts, frames, fundamental forms, shifters.
//! - [`tensor`]: shell and planar tensor algebra on a frame, axial vectors, SO(3).
//! - [`kinematics`]: discrete configurations on a parameter grid, shell strains,
//!   Koiter strains, through-thickness expansion vectors.
//! - [`constitutive`]: material constants, energy forms, shell moduli, the
//!   areal energy density and the stress resultants.
//! - [`solver`]: total energy, its gradient, L-BFGS minimization over
//!   `(R^3 x SO(3))^N`, equilibrium residuals.
//! - [`koiter`]: Koiter energy and the reduction check under the Kirchhoff-Love constraint.
//! - [`scenario`], [`io`], [`validation`]: file formats and the invariant suites used by the CLI.

pub mod constitutive;
pub mod geometry;
pub mod io;
pub mod kinematics;
pub mod koiter;
pub mod sampling;
pub mod scenario;
pub mod solver;
pub mod tensor;
pub mod validation;

pub use constitutive::{MaterialConstants, ShearVariant, StressResultants};
pub use geometry::{evaluate_frame, shifter, ParameterDomain, Parametrization, SurfaceChart, SurfaceFrame};
pub use kinematics::{Grid, GridGeometry, MidsurfaceConfiguration, ShellStrains};
pub use tensor::{PlanarTensor, Rotation, ShellTensor, TangentVector};

/// Least-squares slope of `log(err)` against `log(step)`.
pub fn fitted_order(steps: &[f64], errors: &[f64]) -> f64 {
    let n = steps.len() as f64;
    let xs: Vec<f64> = steps.iter().map(|s| s.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}
