//! Classification of Bell-diagonal states `T = -diag(s1, s2, s3)`.
//!
//! Three certificates of unsteerability are reported side by side:
//! separability (the octahedron `Σ|s_i| ≤ 1`), membership in the convex hull
//! of the octahedron and the Barrett points `(±5/12, ±5/12, ±5/12)`, and the
//! critical-radius thresholds `R_T ≥ 1` (projective) and `R_T ≥ 6/5`
//! (generalized measurements). Everything depends on `|s_i|` only.
//!
//! The classifier never reports a state as steerable with POVMs: the
//! `R_T ≥ 6/5` model is sufficient but not optimal, and whether projective
//! and generalized measurements are equivalent for these states is open.
//!
//! Level surfaces `R_T = level` are traced along rays `s = k d` from the
//! origin. Since `R_{kT} = R_T / k`, the crossing sits at `k = R_T(d) / level`.

use std::f64::consts::FRAC_PI_2;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bloch::{is_physical, CorrelationMatrix, EPS_SINGULAR};
use crate::critical_radius::{compute_rt, critical_radius};
use crate::error::{Error, Result};
use crate::lhs_model::{POVM_THRESHOLD, PVM_THRESHOLD};
use crate::sphere_quad::SphereGrid;

/// Coordinate of the Barrett vertex on the Werner line.
pub const BARRETT_POINT: f64 = 5.0 / 12.0;
const SEPARABLE_TOL: f64 = 1e-12;
const HULL_TOL: f64 = 1e-12;
/// Largest relative refinement error accepted for a surface ray.
pub const SURFACE_RAY_TOL: f64 = 1e-6;

/// Octahedron membership `|s1| + |s2| + |s3| ≤ 1`.
pub fn is_separable(s1: f64, s2: f64, s3: f64) -> bool {
    s1.abs() + s2.abs() + s3.abs() <= 1.0 + SEPARABLE_TOL
}

/// Membership in `conv(octahedron ∪ {(±5/12, ±5/12, ±5/12)})`.
///
/// In the positive octant the hull is bounded by the coordinate planes and
/// the three faces through the Barrett vertex and two octahedron vertices:
/// `5a + 5b + 2c ≤ 5` for every placement of `c`.
pub fn in_prior_hull(s1: f64, s2: f64, s3: f64) -> bool {
    let [a, b, c] = [s1.abs(), s2.abs(), s3.abs()];
    prior_hull_faces()
        .iter()
        .all(|(n, rhs)| n[0] * a + n[1] * b + n[2] * c <= rhs + HULL_TOL)
}

/// Outward half-spaces `n · |s| ≤ rhs` of the prior hull in the positive
/// octant (coordinate planes omitted).
pub fn prior_hull_faces() -> [([f64; 3], f64); 3] {
    [
        ([5.0, 5.0, 2.0], 5.0),
        ([5.0, 2.0, 5.0], 5.0),
        ([2.0, 5.0, 5.0], 5.0),
    ]
}

/// Triangles of the prior-hull faces through the Barrett vertex.
pub fn prior_hull_triangles() -> Vec<[[f64; 3]; 3]> {
    let b = [BARRETT_POINT; 3];
    vec![
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], b],
        [[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], b],
        [[0.0, 0.0, 1.0], [1.0, 0.0, 0.0], b],
    ]
}

/// Face of the separability octahedron in the positive octant.
pub fn separability_triangle() -> [[f64; 3]; 3] {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub s: [f64; 3],
    pub separable: bool,
    /// `R_T ≥ 1`.
    pub pvm_unsteerable: bool,
    /// `R_T ≥ 6/5`.
    pub povm_unsteerable_new: bool,
    /// Inside the octahedron/Barrett hull.
    pub povm_unsteerable_prior: bool,
    #[serde(rename = "R_T")]
    pub r_t: f64,
    /// Distance of `R_T` from the closer of 1 and 6/5.
    pub margin: f64,
}

/// Classifies a physical, diagonal `T`.
pub fn classify_state(t: &CorrelationMatrix, grid: &SphereGrid) -> Result<Classification> {
    let d = t.diagonal_entries().ok_or_else(|| {
        Error::InvalidArgument("classification needs a diagonal correlation matrix".into())
    })?;
    let ev = crate::bloch::density_eigenvalues(t.matrix());
    if !is_physical(t.matrix()) {
        return Err(Error::Unphysical {
            min_eigenvalue: ev[0],
        });
    }
    let s = d.map(|x| -x);
    let r_t = critical_radius(t, grid)?.r_t;
    Ok(Classification {
        s,
        separable: is_separable(s[0], s[1], s[2]),
        pvm_unsteerable: r_t >= PVM_THRESHOLD,
        povm_unsteerable_new: r_t >= POVM_THRESHOLD,
        povm_unsteerable_prior: in_prior_hull(s[0], s[1], s[2]),
        r_t,
        margin: (r_t - PVM_THRESHOLD).abs().min((r_t - POVM_THRESHOLD).abs()),
    })
}

/// How the crossing along a ray is located.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RayMethod {
    /// One quadrature at unit radius, then `k = R_T(d) / level`.
    Scaling,
    /// Bisection on `k` with a quadrature per step.
    Bisection { iterations: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRecord {
    pub ray: usize,
    pub dir_theta: f64,
    pub dir_phi: f64,
    pub level: f64,
    /// `None` when the ray leaves the physical or invertible region first,
    /// or when the quadrature along it is unreliable.
    pub point: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceGrid {
    pub resolution: usize,
    pub records: Vec<SurfaceRecord>,
    pub prior_hull_faces: Vec<[[f64; 3]; 3]>,
    pub separability_face: [[f64; 3]; 3],
}

fn direction(theta: f64, phi: f64) -> Vector3<f64> {
    Vector3::new(theta.sin() * phi.cos(), theta.sin() * phi.sin(), theta.cos())
}

/// Ray directions: a `resolution × resolution` cell-centred grid in
/// `(θ, φ) ∈ (0, π/2)²`, then the Werner diagonal `(1,1,1)/√3`.
pub fn surface_directions(resolution: usize) -> Vec<(f64, f64)> {
    let h = FRAC_PI_2 / resolution as f64;
    let mut dirs: Vec<(f64, f64)> = (0..resolution)
        .flat_map(|j| (0..resolution).map(move |k| ((j as f64 + 0.5) * h, (k as f64 + 0.5) * h)))
        .collect();
    dirs.push(((1.0 / 3f64.sqrt()).acos(), FRAC_PI_2 / 2.0));
    dirs
}

fn level_point(d: &Vector3<f64>, level: f64, grid: &SphereGrid, method: RayMethod) -> Result<Option<[f64; 3]>> {
    let unit = match CorrelationMatrix::diagonal(-d.x, -d.y, -d.z) {
        Ok(t) => t,
        Err(Error::SingularCorrelation { .. }) => return Ok(None),
        Err(e) => return Err(e),
    };
    let res = compute_rt(&unit, grid)?;
    if res.est_error > SURFACE_RAY_TOL * res.r_t {
        return Ok(None);
    }
    let k = match method {
        RayMethod::Scaling => res.r_t / level,
        RayMethod::Bisection { iterations } => {
            // R_T(k d) = R_T(d)/k brackets the crossing in [k/2, 2k]
            let guess = res.r_t / level;
            let (mut lo, mut hi) = (0.5 * guess, 2.0 * guess);
            for _ in 0..iterations {
                let mid = 0.5 * (lo + hi);
                let r = compute_rt(&unit.scaled(mid)?, grid)?.r_t;
                if r > level {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let s = d * k;
    if (s.x * s.y * s.z).abs() <= EPS_SINGULAR {
        return Ok(None);
    }
    let t = CorrelationMatrix::diagonal(-s.x, -s.y, -s.z)?;
    if !is_physical(t.matrix()) {
        return Ok(None);
    }
    Ok(Some([s.x, s.y, s.z]))
}

/// Points of the level surface `R_T = level` in the positive octant.
pub fn surface_grid(resolution: usize, level: f64, grid: &SphereGrid, method: RayMethod) -> Result<SurfaceGrid> {
    if resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "surface resolution must be at least 8 (got {resolution})"
        )));
    }
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::InvalidArgument(format!("level must be positive (got {level})")));
    }
    let records = surface_directions(resolution)
        .into_iter()
        .enumerate()
        .map(|(ray, (theta, phi))| {
            let point = level_point(&direction(theta, phi), level, grid, method)?;
            Ok(SurfaceRecord {
                ray,
                dir_theta: theta,
                dir_phi: phi,
                level,
                point,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SurfaceGrid {
        resolution,
        records,
        prior_hull_faces: prior_hull_triangles(),
        separability_face: separability_triangle(),
    })
}
