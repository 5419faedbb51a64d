//! Quadrature and Monte-Carlo integration over the unit sphere.
//!
//! Grids are products of Gauss–Legendre rules in `z = cos θ` and the
//! trapezoid rule in `φ`. The `z` rule is split at the equator, one
//! Gauss–Legendre block per hemisphere, so an integrand that jumps across
//! the great circle orthogonal to the pole is still integrated at spectral
//! rate once the grid pole is rotated onto the normal of that circle.

use std::f64::consts::PI;
use std::num::NonZeroUsize;
use std::sync::Arc;

use gauss_quad::legendre::GaussLegendre;
use nalgebra::{Matrix3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bloch::FourVector;
use crate::error::{Error, Result};

pub const FOUR_PI: f64 = 4.0 * PI;
pub const DEFAULT_ORDER_THETA: usize = 200;
pub const DEFAULT_ORDER_PHI: usize = 400;

/// Values that can be accumulated by the integrators.
pub trait SphereValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, k: f64) -> Self;
    /// Componentwise product.
    fn hadamard(self, other: Self) -> Self;
    /// Componentwise `max(x, 0).sqrt()`.
    fn sqrt_pos(self) -> Self;
}

impl SphereValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn hadamard(self, o: Self) -> Self {
        self * o
    }
    fn sqrt_pos(self) -> Self {
        self.max(0.0).sqrt()
    }
}

impl SphereValue for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn hadamard(self, o: Self) -> Self {
        self.component_mul(&o)
    }
    fn sqrt_pos(self) -> Self {
        self.map(|x| x.max(0.0).sqrt())
    }
}

impl SphereValue for FourVector {
    fn zero() -> Self {
        FourVector::zero()
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, k: f64) -> Self {
        self * k
    }
    fn hadamard(self, o: Self) -> Self {
        FourVector::new(self.x0 * o.x0, self.x.component_mul(&o.x))
    }
    fn sqrt_pos(self) -> Self {
        FourVector::new(self.x0.sqrt_pos(), self.x.sqrt_pos())
    }
}

#[derive(Debug)]
struct BaseGrid {
    nodes: Vec<Vector3<f64>>,
    weights: Vec<f64>,
}

/// Product quadrature grid on the unit sphere.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    order_theta: usize,
    order_phi: usize,
    base: Arc<BaseGrid>,
    nodes: Vec<Vector3<f64>>,
    pole: Option<Vector3<f64>>,
}

/// Builds a `order_theta × order_phi` grid, optionally rotated so that its
/// north pole points along `pole`.
pub fn build_grid(
    order_theta: usize,
    order_phi: usize,
    pole: Option<Vector3<f64>>,
) -> Result<SphereGrid> {
    if order_theta < 2 || order_phi < 2 {
        return Err(Error::InvalidArgument(format!(
            "grid orders must be at least 2 (got {order_theta} x {order_phi})"
        )));
    }
    // one Gauss-Legendre block per hemisphere
    let half = NonZeroUsize::new(order_theta.div_ceil(2)).expect("order_theta >= 2");
    let rule = GaussLegendre::new(half);
    let mut z_rule = Vec::with_capacity(2 * half.get());
    for &(x, w) in rule.as_node_weight_pairs() {
        // map [-1, 1] onto [-1, 0] and [0, 1]
        z_rule.push((0.5 * (x - 1.0), 0.5 * w));
        z_rule.push((0.5 * (x + 1.0), 0.5 * w));
    }
    z_rule.sort_by(|a, b| a.0.total_cmp(&b.0));

    let dphi = 2.0 * PI / order_phi as f64;
    let mut nodes = Vec::with_capacity(z_rule.len() * order_phi);
    let mut weights = Vec::with_capacity(z_rule.len() * order_phi);
    for &(z, wz) in &z_rule {
        let rho = (1.0 - z * z).max(0.0).sqrt();
        for k in 0..order_phi {
            let phi = (k as f64 + 0.5) * dphi;
            let (s, c) = phi.sin_cos();
            nodes.push(Vector3::new(rho * c, rho * s, z));
            weights.push(wz * dphi);
        }
    }
    let grid = SphereGrid {
        order_theta,
        order_phi,
        base: Arc::new(BaseGrid {
            nodes: nodes.clone(),
            weights,
        }),
        nodes,
        pole: None,
    };
    Ok(match pole {
        Some(p) => grid.with_pole(&p)?,
        None => grid,
    })
}

/// Orthonormal frame whose third column is `m`.
pub(crate) fn frame_for_pole(m: &Vector3<f64>) -> Matrix3<f64> {
    let helper = if m.x.abs() <= m.y.abs() && m.x.abs() <= m.z.abs() {
        Vector3::x()
    } else if m.y.abs() <= m.z.abs() {
        Vector3::y()
    } else {
        Vector3::z()
    };
    let u = helper.cross(m).normalize();
    let v = m.cross(&u);
    Matrix3::from_columns(&[u, v, *m])
}

impl SphereGrid {
    /// Default grid, 200 × 400.
    pub fn default_grid() -> Self {
        build_grid(DEFAULT_ORDER_THETA, DEFAULT_ORDER_PHI, None).expect("default orders are valid")
    }

    /// Same grid with the north pole moved onto `pole`. Weights are shared.
    pub fn with_pole(&self, pole: &Vector3<f64>) -> Result<SphereGrid> {
        let norm = pole.norm();
        if !norm.is_finite() || norm == 0.0 {
            return Err(Error::InvalidArgument("grid pole must be a nonzero vector".into()));
        }
        let m = pole / norm;
        let r = frame_for_pole(&m);
        Ok(SphereGrid {
            order_theta: self.order_theta,
            order_phi: self.order_phi,
            base: Arc::clone(&self.base),
            nodes: self.base.nodes.iter().map(|b| r * b).collect(),
            pole: Some(m),
        })
    }

    /// Grid at half the orders (for refinement error estimates).
    pub fn coarsened(&self) -> Result<SphereGrid> {
        let g = build_grid((self.order_theta / 2).max(2), (self.order_phi / 2).max(2), None)?;
        match &self.pole {
            Some(p) => g.with_pole(p),
            None => Ok(g),
        }
    }

    pub fn order_theta(&self) -> usize {
        self.order_theta
    }

    pub fn order_phi(&self) -> usize {
        self.order_phi
    }

    pub fn nodes(&self) -> &[Vector3<f64>] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.base.weights
    }

    pub fn pole(&self) -> Option<&Vector3<f64>> {
        self.pole.as_ref()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(n_i)`, summed in node order.
    pub fn integrate<V, F>(&self, mut f: F) -> V
    where
        V: SphereValue,
        F: FnMut(&Vector3<f64>) -> V,
    {
        self.nodes
            .iter()
            .zip(self.base.weights.iter())
            .fold(V::zero(), |acc, (n, &w)| acc.add(f(n).scale(w)))
    }
}

/// Monte-Carlo estimate of a sphere integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate<V> {
    pub estimate: V,
    pub stderr: V,
    pub samples: usize,
}

/// Uniform points on the sphere from normalized Gaussian triples.
pub struct SphereSampler {
    rng: ChaCha8Rng,
}

impl SphereSampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn sample(&mut self) -> Vector3<f64> {
        loop {
            let v = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut self.rng));
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        }
    }
}

impl Iterator for SphereSampler {
    type Item = Vector3<f64>;
    fn next(&mut self) -> Option<Self::Item> {
        Some(self.sample())
    }
}

/// `∫ f dS` by uniform sampling, with the sample standard error.
pub fn integrate_mc<V, F>(seed: u64, samples: usize, mut f: F) -> Result<McEstimate<V>>
where
    V: SphereValue,
    F: FnMut(&Vector3<f64>) -> V,
{
    if samples < 1000 {
        return Err(Error::InvalidArgument(format!(
            "Monte-Carlo needs at least 1000 samples (got {samples})"
        )));
    }
    let mut sampler = SphereSampler::new(seed);
    // Shifted sums: the first sample is the shift, which keeps the variance
    // exact for constant integrands.
    let shift = f(&sampler.sample());
    let neg_shift = shift.scale(-1.0);
    let mut sum = V::zero();
    let mut sum_sq = V::zero();
    for _ in 1..samples {
        let d = f(&sampler.sample()).add(neg_shift);
        sum = sum.add(d);
        sum_sq = sum_sq.add(d.hadamard(d));
    }
    let n = samples as f64;
    let mean_d = sum.scale(1.0 / n);
    let mean = shift.add(mean_d);
    // unbiased variance: (Σd² - n·mean_d²) / (n - 1)
    let var = sum_sq
        .add(mean_d.hadamard(mean_d).scale(-n))
        .scale(1.0 / (n - 1.0));
    Ok(McEstimate {
        estimate: mean.scale(FOUR_PI),
        stderr: var.scale(1.0 / n).sqrt_pos().scale(FOUR_PI),
        samples,
    })
}
