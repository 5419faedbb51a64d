//! Hidden-state density `p_J(n) = N_T / (nᵀT⁻²n)²`, its normalization
//! `N_T` and the critical radius `R_T = 2π N_T |det T|`.

use std::f64::consts::PI;

use nalgebra::{SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::bloch::CorrelationMatrix;
use crate::error::{Error, Result};
use crate::sphere_quad::SphereGrid;

/// Below this, `x² - 1` switches to the series of the axial quotient.
const AXIAL_SERIES_CUTOFF: f64 = 1e-6;
/// Entries closer than this count as equal when detecting symmetry.
const COINCIDENCE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMethod {
    Quadrature,
    AxialClosedForm,
    WernerClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadiusResult {
    #[serde(rename = "N_T")]
    pub n_t: f64,
    #[serde(rename = "R_T")]
    pub r_t: f64,
    pub method: RadiusMethod,
    pub est_error: f64,
}

impl RadiusResult {
    fn closed_form(t: &CorrelationMatrix, r_t: f64, method: RadiusMethod) -> Self {
        Self {
            n_t: r_t / (2.0 * PI * t.abs_det()),
            r_t,
            method,
            est_error: 0.0,
        }
    }
}

/// `nᵀ T⁻² n`.
#[inline]
pub fn quadratic_form(t: &CorrelationMatrix, n: &Vector3<f64>) -> f64 {
    (t.inverse() * n).norm_squared()
}

pub fn density_pj(t: &CorrelationMatrix, n_t: f64, n: &Vector3<f64>) -> f64 {
    let q = quadratic_form(t, n);
    n_t / (q * q)
}

/// Pole that places the peak of `p_J` where the product grid is densest.
///
/// When one singular value of `T` is much smaller than the others the
/// density concentrates on a band around the great circle orthogonal to
/// its axis, which belongs on the equator. When one is much larger the
/// density sits in two caps around its axis, which belong on the poles.
pub fn density_pole(t: &CorrelationMatrix) -> Vector3<f64> {
    let eig = SymmetricEigen::new(*t.matrix());
    let mut idx = [0usize, 1, 2];
    idx.sort_by(|&a, &b| eig.eigenvalues[a].abs().total_cmp(&eig.eigenvalues[b].abs()));
    let [lo, mid, hi] = idx.map(|k| eig.eigenvalues[k].abs());
    let axis = if mid * mid >= lo * hi { idx[0] } else { idx[2] };
    eig.eigenvectors.column(axis).normalize()
}

/// `N_T = 1 / ∫ dS (nᵀT⁻²n)⁻²`.
pub fn compute_nt(t: &CorrelationMatrix, grid: &SphereGrid) -> Result<f64> {
    let g = grid.with_pole(&density_pole(t))?;
    Ok(normalization_on(t, &g))
}

fn normalization_on(t: &CorrelationMatrix, grid: &SphereGrid) -> f64 {
    let inv = t.inverse();
    let integral = grid.integrate(|n| {
        let q = (inv * n).norm_squared();
        1.0 / (q * q)
    });
    1.0 / integral
}

/// Critical radius by quadrature; `est_error` is the change against the
/// grid at half the orders.
pub fn compute_rt(t: &CorrelationMatrix, grid: &SphereGrid) -> Result<RadiusResult> {
    let pole = density_pole(t);
    let fine = grid.with_pole(&pole)?;
    let coarse = grid.coarsened()?.with_pole(&pole)?;
    let det = t.abs_det();
    let n_t = normalization_on(t, &fine);
    let r_t = 2.0 * PI * n_t * det;
    let r_coarse = 2.0 * PI * normalization_on(t, &coarse) * det;
    if !r_t.is_finite() || r_t <= 0.0 {
        return Err(Error::Quadrature(format!("non-finite critical radius {r_t}")));
    }
    Ok(RadiusResult {
        n_t,
        r_t,
        method: RadiusMethod::Quadrature,
        est_error: (r_t - r_coarse).abs(),
    })
}

/// Critical radius of the Werner state `T = -p I`.
pub fn rt_werner(p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Werner parameter must lie in (0, 1], got {p}"
        )));
    }
    Ok(1.0 / (2.0 * p))
}

/// `arctan(√(x²-1)) / √(x²-1)`, continued to `x² < 1` as
/// `artanh(√(1-x²)) / √(1-x²)`.
pub fn axial_quotient(x2: f64) -> f64 {
    let y = x2 - 1.0;
    if y.abs() < AXIAL_SERIES_CUTOFF {
        1.0 - y / 3.0 + y * y / 5.0
    } else if y > 0.0 {
        let r = y.sqrt();
        r.atan() / r
    } else {
        let r = (-y).sqrt();
        r.atanh() / r
    }
}

/// Closed-form critical radius for `T = diag(-s, -s, -t)`.
pub fn rt_axial(s: f64, t: f64) -> Result<f64> {
    if s == 0.0 || t == 0.0 || !s.is_finite() || !t.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "axial parameters must be finite and nonzero (s = {s}, t = {t})"
        )));
    }
    let x2 = (s / t).powi(2);
    Ok(1.0 / (t.abs() * (1.0 + x2 * axial_quotient(x2))))
}

/// `(s, t)` magnitudes when `T` is diagonal with (at least) two equal
/// magnitudes; `s` is the repeated one.
pub fn axial_parameters(t: &CorrelationMatrix) -> Option<(f64, f64)> {
    let d = t.diagonal_entries()?.map(f64::abs);
    let eq = |a: f64, b: f64| (a - b).abs() <= COINCIDENCE_TOL;
    if eq(d[0], d[1]) {
        Some((d[0], d[2]))
    } else if eq(d[0], d[2]) {
        Some((d[0], d[1]))
    } else if eq(d[1], d[2]) {
        Some((d[1], d[0]))
    } else {
        None
    }
}

/// Critical radius by the cheapest exact route: Werner or axial closed
/// form when `T` has that symmetry, quadrature otherwise.
pub fn critical_radius(t: &CorrelationMatrix, grid: &SphereGrid) -> Result<RadiusResult> {
    match axial_parameters(t) {
        Some((s, u)) if (s - u).abs() <= COINCIDENCE_TOL && s <= 1.0 => Ok(
            RadiusResult::closed_form(t, rt_werner(s)?, RadiusMethod::WernerClosedForm),
        ),
        Some((s, u)) => Ok(RadiusResult::closed_form(
            t,
            rt_axial(s, u)?,
            RadiusMethod::AxialClosedForm,
        )),
        None => compute_rt(t, grid),
    }
}
