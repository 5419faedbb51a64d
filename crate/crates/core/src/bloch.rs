//! Bloch representation of qubit operators, Bell-diagonal states and
//! rank-1 POVMs.
//!
//! A single-qubit operator is `X = (1/2) Σ_k x_k σ_k` and is stored as the
//! four-vector `(x0, x)`. A Bell-diagonal two-qubit state is fixed by its
//! symmetric 3×3 correlation block `T` of the Bloch tensor
//! `Λ = diag-block(1, T)`, i.e. `ρ = (1/4) Σ_ij Λ_ij σ_i ⊗ σ_j`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{Complex, Matrix2, Matrix3, Matrix4, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest admissible `|det T|`.
pub const EPS_SINGULAR: f64 = 1e-9;
/// Tolerance on the POVM normalization constraints and effect norms.
pub const POVM_TOL: f64 = 1e-12;
/// Eigenvalues of the density operator above this count as nonnegative.
pub const PHYSICAL_TOL: f64 = 1e-10;

const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) mod vec3_serde {
    use nalgebra::Vector3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector3<f64>, s: S) -> Result<S::Ok, S::Error> {
        [v.x, v.y, v.z].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector3<f64>, D::Error> {
        let [x, y, z] = <[f64; 3]>::deserialize(d)?;
        Ok(Vector3::new(x, y, z))
    }
}

/// Bloch four-vector `(x0, x)` of a qubit operator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FourVector {
    pub x0: f64,
    #[serde(with = "vec3_serde")]
    pub x: Vector3<f64>,
}

impl FourVector {
    pub fn new(x0: f64, x: Vector3<f64>) -> Self {
        Self { x0, x }
    }

    pub fn zero() -> Self {
        Self::new(0.0, Vector3::zeros())
    }

    /// Pure state along the unit vector `n`.
    pub fn pure(n: Vector3<f64>) -> Self {
        Self::new(1.0, n)
    }

    pub fn is_state(&self, tol: f64) -> bool {
        (self.x0 - 1.0).abs() <= tol && self.x.norm() <= 1.0 + tol
    }

    pub fn is_pure(&self, tol: f64) -> bool {
        (self.x0 - 1.0).abs() <= tol && (self.x.norm() - 1.0).abs() <= tol
    }

    /// Euclidean norm over all four components.
    pub fn norm(&self) -> f64 {
        (self.x0 * self.x0 + self.x.norm_squared()).sqrt()
    }

    /// Largest absolute component.
    pub fn max_abs(&self) -> f64 {
        self.x.amax().max(self.x0.abs())
    }

    /// The 2×2 operator `(1/2)(x0 I + x·σ)`.
    pub fn to_operator(&self) -> Matrix2<Complex<f64>> {
        let c = |re: f64, im: f64| Complex::new(re, im);
        Matrix2::new(
            c(0.5 * (self.x0 + self.x.z), 0.0),
            c(0.5 * self.x.x, -0.5 * self.x.y),
            c(0.5 * self.x.x, 0.5 * self.x.y),
            c(0.5 * (self.x0 - self.x.z), 0.0),
        )
    }
}

impl Add for FourVector {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x0 + o.x0, self.x + o.x)
    }
}

impl Sub for FourVector {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x0 - o.x0, self.x - o.x)
    }
}

impl Mul<f64> for FourVector {
    type Output = Self;
    fn mul(self, k: f64) -> Self {
        Self::new(self.x0 * k, self.x * k)
    }
}

/// Symmetric, invertible correlation matrix `T` of a Bell-diagonal state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCorrelation", into = "RawCorrelation")]
pub struct CorrelationMatrix {
    t: Matrix3<f64>,
    inv: Matrix3<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawCorrelation {
    t: [[f64; 3]; 3],
}

impl TryFrom<RawCorrelation> for CorrelationMatrix {
    type Error = Error;

    fn try_from(raw: RawCorrelation) -> Result<Self> {
        Self::new(Matrix3::from_fn(|i, j| raw.t[i][j]))
    }
}

impl From<CorrelationMatrix> for RawCorrelation {
    fn from(c: CorrelationMatrix) -> Self {
        let t = c.t;
        RawCorrelation {
            t: [0, 1, 2].map(|i| [0, 1, 2].map(|j| t[(i, j)])),
        }
    }
}

impl CorrelationMatrix {
    pub fn new(t: Matrix3<f64>) -> Result<Self> {
        let asymmetry = (t - t.transpose()).amax();
        if !asymmetry.is_finite() || asymmetry > SYMMETRY_TOL {
            return Err(Error::NotSymmetric { asymmetry });
        }
        let det = t.determinant();
        if !det.is_finite() || det.abs() <= EPS_SINGULAR {
            return Err(Error::SingularCorrelation { det });
        }
        let inv = t
            .try_inverse()
            .ok_or(Error::SingularCorrelation { det })?;
        Ok(Self { t, inv })
    }

    pub fn diagonal(t1: f64, t2: f64, t3: f64) -> Result<Self> {
        Self::new(Matrix3::from_diagonal(&Vector3::new(t1, t2, t3)))
    }

    /// Werner correlations `T = -p I`.
    pub fn werner(p: f64) -> Result<Self> {
        Self::diagonal(-p, -p, -p)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.t
    }

    pub fn inverse(&self) -> &Matrix3<f64> {
        &self.inv
    }

    pub fn inverse_squared(&self) -> Matrix3<f64> {
        self.inv * self.inv
    }

    pub fn det(&self) -> f64 {
        self.t.determinant()
    }

    pub fn abs_det(&self) -> f64 {
        self.det().abs()
    }

    pub fn is_diagonal(&self) -> bool {
        let t = &self.t;
        t[(0, 1)] == 0.0 && t[(0, 2)] == 0.0 && t[(1, 2)] == 0.0
    }

    /// Diagonal entries, if `T` is diagonal.
    pub fn diagonal_entries(&self) -> Option<[f64; 3]> {
        self.is_diagonal()
            .then(|| [self.t[(0, 0)], self.t[(1, 1)], self.t[(2, 2)]])
    }

    pub fn scaled(&self, k: f64) -> Result<Self> {
        Self::new(self.t * k)
    }

    pub fn apply(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.t * v
    }
}

/// A Bell-diagonal two-qubit state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    pub t: CorrelationMatrix,
}

impl BellDiagonalState {
    pub fn new(t: CorrelationMatrix) -> Self {
        Self { t }
    }

    /// Bloch tensor `Λ` with vanishing local parts.
    pub fn bloch_tensor(&self) -> Matrix4<f64> {
        let mut lambda = Matrix4::zeros();
        lambda[(0, 0)] = 1.0;
        lambda.fixed_view_mut::<3, 3>(1, 1).copy_from(self.t.matrix());
        lambda
    }

    pub fn density(&self) -> Matrix4<Complex<f64>> {
        reconstruct_density(self.t.matrix())
    }

    pub fn is_physical(&self) -> bool {
        is_physical(self.t.matrix())
    }

    pub fn conditional_state(&self, effect: &Effect) -> FourVector {
        conditional_state(&self.t, effect)
    }
}

fn pauli(k: usize) -> Matrix2<Complex<f64>> {
    let o = Complex::new(0.0, 0.0);
    let r = Complex::new(1.0, 0.0);
    let i = Complex::new(0.0, 1.0);
    match k {
        0 => Matrix2::new(r, o, o, r),
        1 => Matrix2::new(o, r, r, o),
        2 => Matrix2::new(o, -i, i, o),
        3 => Matrix2::new(r, o, o, -r),
        _ => unreachable!("Pauli index out of range"),
    }
}

fn kron(a: &Matrix2<Complex<f64>>, b: &Matrix2<Complex<f64>>) -> Matrix4<Complex<f64>> {
    Matrix4::from_fn(|r, c| a[(r / 2, c / 2)] * b[(r % 2, c % 2)])
}

/// `ρ = (1/4)(I⊗I + Σ_ij T_ij σ_i⊗σ_j)` for any real 3×3 `T`.
pub fn reconstruct_density(t: &Matrix3<f64>) -> Matrix4<Complex<f64>> {
    let mut rho = kron(&pauli(0), &pauli(0));
    for i in 0..3 {
        for j in 0..3 {
            let tij = t[(i, j)];
            if tij != 0.0 {
                rho += kron(&pauli(i + 1), &pauli(j + 1)) * Complex::new(tij, 0.0);
            }
        }
    }
    rho * Complex::new(0.25, 0.0)
}

/// Ascending eigenvalues of the reconstructed density operator.
pub fn density_eigenvalues(t: &Matrix3<f64>) -> [f64; 4] {
    let sym = (t + t.transpose()) * 0.5;
    let eig = SymmetricEigen::new(reconstruct_density(&sym));
    let mut ev = [0.0; 4];
    ev.copy_from_slice(eig.eigenvalues.as_slice());
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn is_physical(t: &Matrix3<f64>) -> bool {
    density_eigenvalues(t)[0] >= -PHYSICAL_TOL
}

/// Bob's conditional state `(α/2)(1, T e)` for Alice's effect `α(1, e)`.
pub fn conditional_state(t: &CorrelationMatrix, effect: &Effect) -> FourVector {
    FourVector::new(1.0, t.apply(&effect.e)) * (0.5 * effect.alpha)
}

/// Weighted rank-1 effect `α (1, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Effect {
    pub alpha: f64,
    #[serde(with = "vec3_serde")]
    pub e: Vector3<f64>,
}

impl Effect {
    pub fn new(alpha: f64, e: Vector3<f64>) -> Self {
        Self { alpha, e }
    }

    pub fn four_vector(&self) -> FourVector {
        FourVector::new(1.0, self.e) * self.alpha
    }
}

/// Rank-1 POVM with two (projective) or four outcomes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPovm", into = "RawPovm")]
pub struct Povm {
    effects: Vec<Effect>,
}

#[derive(Serialize, Deserialize)]
struct RawPovm {
    effects: Vec<Effect>,
}

impl TryFrom<RawPovm> for Povm {
    type Error = Error;
    fn try_from(raw: RawPovm) -> Result<Self> {
        Povm::new(raw.effects)
    }
}

impl From<Povm> for RawPovm {
    fn from(p: Povm) -> Self {
        RawPovm { effects: p.effects }
    }
}

impl Povm {
    pub fn new(effects: Vec<Effect>) -> Result<Self> {
        let violations = validate_povm(&effects);
        if violations.is_empty() {
            Ok(Self { effects })
        } else {
            Err(Error::InvalidPovm(violations))
        }
    }

    pub fn effects(&self) -> &[Effect] {
        &self.effects
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn is_projective(&self) -> bool {
        self.effects.len() == 2
    }
}

/// A failed POVM constraint together with its residual.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    OutcomeCount { count: usize },
    WeightRange { index: usize, alpha: f64 },
    NonUnitDirection { index: usize, norm: f64 },
    WeightSum { sum: f64 },
    DirectionBalance { residual: f64 },
    NotProjective { index: usize, residual: f64 },
}

impl Violation {
    pub fn residual(&self) -> f64 {
        match *self {
            Violation::OutcomeCount { count } => count as f64,
            Violation::WeightRange { alpha, .. } => {
                if alpha < 0.0 {
                    -alpha
                } else {
                    alpha - 1.0
                }
            }
            Violation::NonUnitDirection { norm, .. } => (norm - 1.0).abs(),
            Violation::WeightSum { sum } => (sum - 2.0).abs(),
            Violation::DirectionBalance { residual } => residual,
            Violation::NotProjective { residual, .. } => residual,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutcomeCount { count } => {
                write!(f, "outcome count {count} not in {{2, 4}}")
            }
            Violation::WeightRange { index, alpha } => {
                write!(f, "α_{index} = {alpha} outside [0, 1]")
            }
            Violation::NonUnitDirection { index, norm } => {
                write!(f, "|e_{index}| = {norm} ≠ 1")
            }
            Violation::WeightSum { sum } => write!(f, "Σα = {sum} ≠ 2"),
            Violation::DirectionBalance { residual } => {
                write!(f, "|Σα e| = {residual:e} ≠ 0")
            }
            Violation::NotProjective { index, residual } => {
                write!(f, "two-outcome effect {index} is not projective (residual {residual:e})")
            }
        }
    }
}

/// Checks every POVM constraint; an empty list means the effects form a
/// valid rank-1 POVM.
pub fn validate_povm(effects: &[Effect]) -> Vec<Violation> {
    let mut out = Vec::new();
    let n = effects.len();
    if n != 2 && n != 4 {
        out.push(Violation::OutcomeCount { count: n });
    }
    for (index, eff) in effects.iter().enumerate() {
        if !(0.0..=1.0).contains(&eff.alpha) {
            out.push(Violation::WeightRange { index, alpha: eff.alpha });
        }
        let norm = eff.e.norm();
        if !((norm - 1.0).abs() <= POVM_TOL) {
            out.push(Violation::NonUnitDirection { index, norm });
        }
    }
    let sum: f64 = effects.iter().map(|e| e.alpha).sum();
    if !((sum - 2.0).abs() <= POVM_TOL) {
        out.push(Violation::WeightSum { sum });
    }
    let balance: Vector3<f64> = effects.iter().map(|e| e.e * e.alpha).sum();
    let residual = balance.norm();
    if !(residual <= POVM_TOL) {
        out.push(Violation::DirectionBalance { residual });
    }
    if n == 2 {
        for (index, eff) in effects.iter().enumerate() {
            let r = (eff.alpha - 1.0).abs();
            if r > POVM_TOL {
                out.push(Violation::NotProjective { index, residual: r });
            }
        }
        let r = (effects[0].e + effects[1].e).norm();
        if r > POVM_TOL {
            out.push(Violation::NotProjective { index: 1, residual: r });
        }
    }
    out
}
