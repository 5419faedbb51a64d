//! Local hidden state models for Bell-diagonal states.
//!
//! The hidden states are pure states `(1, n)` on Bob's Bloch sphere drawn
//! from `p_J`. For projective measurements outcome `i` is announced with
//! the step response `Θ(e_iᵀT⁻¹n)`. For four-outcome POVMs the step is
//! softened to
//!
//! ```text
//! g_i(n) = ½ (1 + e_iᵀT⁻¹n / |T⁻¹n|) Θ(e_iᵀT⁻¹n)
//! ```
//!
//! and renormalized with the weights
//! `γ_i = α_i(½ - c_i) / (1 - Σ_k α_k c_k)`, `c_i = ∫ p_J g_i dS`:
//!
//! ```text
//! G_i(n) = α_i g_i(n) + γ_i [1 - Σ_j α_j g_j(n)]
//! ```
//!
//! The PVM model reproduces `(½)(1, R_T T e)`, the POVM model
//! `(α_i/2)(1, (5R_T/6) T e_i)`.
//!
//! Every integrand here jumps across the great circle `e_iᵀT⁻¹n = 0`, so each
//! additive term is integrated on a grid whose pole is `T⁻¹e_i`.

use std::f64::consts::PI;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::bloch::{conditional_state, vec3_serde, CorrelationMatrix, FourVector, Povm};
use crate::critical_radius::{compute_nt, density_pole};
use crate::error::{Error, Result};
use crate::sphere_quad::{integrate_mc, McEstimate, SphereGrid};

/// Slack allowed on `c_i ∈ [0, ½]` before the quadrature is declared broken.
pub const CI_TOL: f64 = 1e-8;
/// `R_T` at or above which the PVM model simulates the state.
pub const PVM_THRESHOLD: f64 = 1.0;
/// `R_T` at or above which the POVM model simulates the state.
pub const POVM_THRESHOLD: f64 = 6.0 / 5.0;
/// Relative slack on the thresholds when deciding whether the white-noise
/// mixture can be formed; absorbs quadrature noise exactly at the boundary.
const THRESHOLD_SLACK: f64 = 1e-9;

/// Heaviside step with `Θ(0) = ½`.
#[inline]
pub fn heaviside(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        0.0
    } else {
        0.5
    }
}

/// `Θ(eᵀT⁻¹n)`.
pub fn response_pvm(t: &CorrelationMatrix, e: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
    heaviside(e.dot(&(t.inverse() * n)))
}

/// `½ (1 + eᵀT⁻¹n / |T⁻¹n|) Θ(eᵀT⁻¹n)`.
pub fn softened_g(t: &CorrelationMatrix, e: &Vector3<f64>, n: &Vector3<f64>) -> f64 {
    let w = t.inverse() * n;
    let s = e.dot(&w);
    0.5 * (1.0 + s / w.norm()) * heaviside(s)
}

/// Response functions `G_i(n)` for every outcome of a measurement.
pub trait ResponseFunction {
    fn outcomes(&self) -> usize;

    fn response(&self, outcome: usize, n: &Vector3<f64>) -> f64;

    fn responses(&self, n: &Vector3<f64>) -> Vec<f64> {
        (0..self.outcomes()).map(|i| self.response(i, n)).collect()
    }
}

/// Step responses for a projective measurement `{(1, e), (1, -e)}`.
#[derive(Debug, Clone)]
pub struct PvmResponse {
    t: CorrelationMatrix,
    directions: [Vector3<f64>; 2],
}

impl PvmResponse {
    pub fn new(t: CorrelationMatrix, povm: &Povm) -> Result<Self> {
        if !povm.is_projective() {
            return Err(Error::InvalidArgument(format!(
                "projective response needs 2 outcomes, got {}",
                povm.len()
            )));
        }
        let fx = povm.effects();
        Ok(Self {
            t,
            directions: [fx[0].e, fx[1].e],
        })
    }

    pub fn directions(&self) -> &[Vector3<f64>; 2] {
        &self.directions
    }
}

impl ResponseFunction for PvmResponse {
    fn outcomes(&self) -> usize {
        2
    }

    fn response(&self, outcome: usize, n: &Vector3<f64>) -> f64 {
        response_pvm(&self.t, &self.directions[outcome], n)
    }
}

/// The renormalized POVM response with its precomputed `c_i` and `γ_i`.
#[derive(Debug, Clone, Serialize)]
pub struct PovmResponse {
    pub povm: Povm,
    #[serde(skip)]
    pub t: CorrelationMatrix,
    pub c: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl PovmResponse {
    /// `Σ_j α_j g_j(n)`.
    pub fn subnormalization(&self, n: &Vector3<f64>) -> f64 {
        self.povm
            .effects()
            .iter()
            .filter(|f| f.alpha > 0.0)
            .map(|f| f.alpha * softened_g(&self.t, &f.e, n))
            .sum()
    }
}

impl ResponseFunction for PovmResponse {
    fn outcomes(&self) -> usize {
        self.povm.len()
    }

    fn response(&self, outcome: usize, n: &Vector3<f64>) -> f64 {
        let f = &self.povm.effects()[outcome];
        let own = if f.alpha > 0.0 {
            f.alpha * softened_g(&self.t, &f.e, n)
        } else {
            0.0
        };
        own + self.gamma[outcome] * (1.0 - self.subnormalization(n))
    }

    fn responses(&self, n: &Vector3<f64>) -> Vec<f64> {
        let own: Vec<f64> = self
            .povm
            .effects()
            .iter()
            .map(|f| {
                if f.alpha > 0.0 {
                    f.alpha * softened_g(&self.t, &f.e, n)
                } else {
                    0.0
                }
            })
            .collect();
        let rest = 1.0 - own.iter().sum::<f64>();
        own.iter()
            .zip(&self.gamma)
            .map(|(a, g)| a + g * rest)
            .collect()
    }
}

/// The vectors `u_i`, `v_i` and `t_i = u_i + v_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Uvt {
    #[serde(with = "vec3_serde")]
    pub u: Vector3<f64>,
    #[serde(with = "vec3_serde")]
    pub v: Vector3<f64>,
    #[serde(with = "vec3_serde")]
    pub t: Vector3<f64>,
}

/// `u = |det T| (πN_T/2) T e`, `v = |det T| (πN_T/3) T e`,
/// `t = |det T| (5πN_T/6) T e`.
pub fn closed_form_uvt(t: &CorrelationMatrix, e: &Vector3<f64>, n_t: f64) -> Uvt {
    let te = t.apply(e) * (t.abs_det() * PI * n_t);
    Uvt {
        u: te / 2.0,
        v: te / 3.0,
        t: te * (5.0 / 6.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Pvm,
    Povm,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeReport {
    pub outcome: usize,
    pub simulated: FourVector,
    pub target: FourVector,
    pub residual: f64,
}

/// Mixing the model with white noise so that it reproduces the actual
/// conditional states; only defined above the model's threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhysicalMatch {
    /// Weight of the model response in the mixture.
    pub mixing: f64,
    pub residuals: Vec<f64>,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub measurement: MeasurementKind,
    #[serde(rename = "R_T")]
    pub r_t: f64,
    /// Factor multiplying `T e_i` in the simulated states.
    pub vector_factor: f64,
    pub outcomes: Vec<OutcomeReport>,
    pub max_residual: f64,
    pub physical_match: Option<PhysicalMatch>,
}

/// Hidden-state ensemble `p_J` for a fixed correlation matrix.
#[derive(Debug, Clone, Copy)]
pub struct LhsModel {
    t: CorrelationMatrix,
    n_t: f64,
}

impl LhsModel {
    /// Computes `N_T` on `grid`.
    pub fn new(t: CorrelationMatrix, grid: &SphereGrid) -> Result<Self> {
        Ok(Self {
            t,
            n_t: compute_nt(&t, grid)?,
        })
    }

    pub fn with_normalization(t: CorrelationMatrix, n_t: f64) -> Self {
        Self { t, n_t }
    }

    pub fn correlation(&self) -> &CorrelationMatrix {
        &self.t
    }

    pub fn n_t(&self) -> f64 {
        self.n_t
    }

    pub fn r_t(&self) -> f64 {
        2.0 * PI * self.n_t * self.t.abs_det()
    }

    pub fn density(&self, n: &Vector3<f64>) -> f64 {
        let q = (self.t.inverse() * n).norm_squared();
        self.n_t / (q * q)
    }

    /// Normal of the great circle where the responses for `e` jump.
    pub fn hemisphere_pole(&self, e: &Vector3<f64>) -> Vector3<f64> {
        (self.t.inverse() * e).normalize()
    }

    fn step_grid(&self, e: &Vector3<f64>, grid: &SphereGrid) -> Result<SphereGrid> {
        grid.with_pole(&self.hemisphere_pole(e))
    }

    /// `∫ p_J (1, n) dS`, ideally `(1, 0)`.
    pub fn mean_state(&self, grid: &SphereGrid) -> Result<FourVector> {
        let g = grid.with_pole(&density_pole(&self.t))?;
        Ok(g.integrate(|n| FourVector::new(1.0, *n) * self.density(n)))
    }

    /// `∫ p_J g (1, n) dS` for the softened response along `e`.
    pub fn softened_moment(&self, e: &Vector3<f64>, grid: &SphereGrid) -> Result<FourVector> {
        let g = self.step_grid(e, grid)?;
        Ok(g.integrate(|n| FourVector::new(1.0, *n) * (self.density(n) * softened_g(&self.t, e, n))))
    }

    /// `∫ p_J Θ(eᵀT⁻¹n) (1, n) dS`.
    pub fn step_moment(&self, e: &Vector3<f64>, grid: &SphereGrid) -> Result<FourVector> {
        let g = self.step_grid(e, grid)?;
        Ok(g.integrate(|n| FourVector::new(1.0, *n) * (self.density(n) * response_pvm(&self.t, e, n))))
    }

    /// `c = ∫ p_J g dS`, clamped onto `[0, ½]`.
    pub fn compute_ci(&self, e: &Vector3<f64>, grid: &SphereGrid) -> Result<f64> {
        let c = self.softened_moment(e, grid)?.x0;
        if !(-CI_TOL..=0.5 + CI_TOL).contains(&c) {
            return Err(Error::Quadrature(format!("c_i = {c} outside [0, 1/2]")));
        }
        Ok(c.clamp(0.0, 0.5))
    }

    pub fn build_povm_response(&self, povm: &Povm, grid: &SphereGrid) -> Result<PovmResponse> {
        if povm.len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "POVM response needs 4 outcomes, got {}",
                povm.len()
            )));
        }
        let c = povm
            .effects()
            .iter()
            .map(|f| self.compute_ci(&f.e, grid))
            .collect::<Result<Vec<_>>>()?;
        let denom = 1.0
            - povm
                .effects()
                .iter()
                .zip(&c)
                .map(|(f, c)| f.alpha * c)
                .sum::<f64>();
        if !(denom > 0.0) {
            return Err(Error::Quadrature(format!(
                "degenerate response normalization 1 - Σαc = {denom}"
            )));
        }
        let gamma = povm
            .effects()
            .iter()
            .zip(&c)
            .map(|(f, c)| f.alpha * (0.5 - c) / denom)
            .collect();
        Ok(PovmResponse {
            povm: povm.clone(),
            t: self.t,
            c,
            gamma,
        })
    }

    /// Simulated conditional states of the POVM model, term by term.
    pub fn simulate_povm(&self, response: &PovmResponse, grid: &SphereGrid) -> Result<Vec<FourVector>> {
        let fx = response.povm.effects();
        let moments = fx
            .iter()
            .map(|f| {
                if f.alpha > 0.0 {
                    self.softened_moment(&f.e, grid)
                } else {
                    Ok(FourVector::zero())
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let weighted = fx
            .iter()
            .zip(&moments)
            .fold(FourVector::zero(), |acc, (f, m)| acc + *m * f.alpha);
        let rest = self.mean_state(grid)? - weighted;
        Ok(fx
            .iter()
            .zip(&moments)
            .zip(&response.gamma)
            .map(|((f, m), g)| *m * f.alpha + rest * *g)
            .collect())
    }

    /// Simulated conditional states of the PVM model.
    pub fn simulate_pvm(&self, response: &PvmResponse, grid: &SphereGrid) -> Result<Vec<FourVector>> {
        response
            .directions()
            .iter()
            .map(|e| self.step_moment(e, grid))
            .collect()
    }

    /// `∫ p_J G_i (1, n) dS` on a single grid, for any response.
    pub fn simulate_on_grid<R: ResponseFunction>(&self, response: &R, grid: &SphereGrid) -> Vec<FourVector> {
        (0..response.outcomes())
            .map(|i| grid.integrate(|n| FourVector::new(1.0, *n) * (self.density(n) * response.response(i, n))))
            .collect()
    }

    /// Monte-Carlo counterpart of [`LhsModel::simulate_on_grid`].
    pub fn simulate_mc<R: ResponseFunction>(
        &self,
        response: &R,
        seed: u64,
        samples: usize,
    ) -> Result<Vec<McEstimate<FourVector>>> {
        (0..response.outcomes())
            .map(|i| {
                integrate_mc(seed, samples, |n| {
                    FourVector::new(1.0, *n) * (self.density(n) * response.response(i, n))
                })
            })
            .collect()
    }

    pub fn closed_form_uvt(&self, e: &Vector3<f64>) -> Uvt {
        closed_form_uvt(&self.t, e, self.n_t)
    }

    /// `u`, `v`, `t` by quadrature from their defining integrals.
    pub fn quadrature_uvt(&self, e: &Vector3<f64>, grid: &SphereGrid) -> Result<Uvt> {
        let g = self.step_grid(e, grid)?;
        let m = self.t.inverse() * e;
        let inv = self.t.inverse();
        let PairVec(u, v) = g.integrate(|n| {
            let s = m.dot(n);
            if s < 0.0 {
                return PairVec(Vector3::zeros(), Vector3::zeros());
            }
            let q = (inv * n).norm_squared();
            let th = heaviside(s);
            PairVec(n * (th / (q * q)), n * (s * th / (q * q * q.sqrt())))
        });
        let u = u * (0.5 * self.n_t);
        let v = v * (0.5 * self.n_t);
        Ok(Uvt { u, v, t: u + v })
    }

    /// Compares the simulated conditional states with the model's targets.
    pub fn verify_simulation(&self, povm: &Povm, grid: &SphereGrid) -> Result<SimulationReport> {
        let r_t = self.r_t();
        let (kind, simulated, factor, threshold) = if povm.is_projective() {
            let resp = PvmResponse::new(self.t, povm)?;
            (MeasurementKind::Pvm, self.simulate_pvm(&resp, grid)?, r_t, PVM_THRESHOLD)
        } else {
            let resp = self.build_povm_response(povm, grid)?;
            (
                MeasurementKind::Povm,
                self.simulate_povm(&resp, grid)?,
                5.0 * r_t / 6.0,
                POVM_THRESHOLD,
            )
        };
        let outcomes: Vec<OutcomeReport> = povm
            .effects()
            .iter()
            .zip(&simulated)
            .enumerate()
            .map(|(i, (f, sim))| {
                let target = FourVector::new(1.0, self.t.apply(&f.e) * factor) * (0.5 * f.alpha);
                OutcomeReport {
                    outcome: i,
                    simulated: *sim,
                    target,
                    residual: (*sim - target).norm(),
                }
            })
            .collect();
        let max_residual = outcomes.iter().map(|o| o.residual).fold(0.0, f64::max);

        let physical_match = if r_t >= threshold * (1.0 - THRESHOLD_SLACK) {
            let mixing = (threshold / r_t).min(1.0);
            let noise = self.mean_state(grid)?;
            let residuals: Vec<f64> = povm
                .effects()
                .iter()
                .zip(&simulated)
                .map(|(f, sim)| {
                    let mixed = *sim * mixing + noise * ((1.0 - mixing) * 0.5 * f.alpha);
                    (mixed - conditional_state(&self.t, f)).norm()
                })
                .collect();
            let max_residual = residuals.iter().copied().fold(0.0, f64::max);
            Some(PhysicalMatch {
                mixing,
                residuals,
                max_residual,
            })
        } else {
            None
        };

        Ok(SimulationReport {
            measurement: kind,
            r_t,
            vector_factor: factor,
            outcomes,
            max_residual,
            physical_match,
        })
    }
}

/// Builds the model on `grid` and verifies it against `povm`.
pub fn verify_simulation(t: &CorrelationMatrix, povm: &Povm, grid: &SphereGrid) -> Result<SimulationReport> {
    LhsModel::new(*t, grid)?.verify_simulation(povm, grid)
}

/// Two 3-vectors accumulated together.
#[derive(Debug, Clone, Copy)]
struct PairVec(Vector3<f64>, Vector3<f64>);

impl crate::sphere_quad::SphereValue for PairVec {
    fn zero() -> Self {
        PairVec(Vector3::zeros(), Vector3::zeros())
    }
    fn add(self, o: Self) -> Self {
        PairVec(self.0 + o.0, self.1 + o.1)
    }
    fn scale(self, k: f64) -> Self {
        PairVec(self.0 * k, self.1 * k)
    }
    fn hadamard(self, o: Self) -> Self {
        PairVec(self.0.component_mul(&o.0), self.1.component_mul(&o.1))
    }
    fn sqrt_pos(self) -> Self {
        PairVec(self.0.map(|x| x.max(0.0).sqrt()), self.1.map(|x| x.max(0.0).sqrt()))
    }
}
