//! Rank-1 four-outcome POVMs for test corpora.
//!
//! A draw picks four uniform directions and solves
//! `Σ α_i = 2, Σ α_i e_i = 0` for the weights; it is kept when every
//! weight lies in `[0, 1]`.

use nalgebra::{Matrix4, Vector3, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bloch::{validate_povm, Effect, Povm};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_RETRIES: usize = 1000;
/// Direction matrices worse conditioned than this are redrawn.
pub const MAX_CONDITION: f64 = 1e8;

/// Tetrahedral (SIC) POVM with equal weights ½.
pub fn sic_povm() -> Povm {
    let k = 1.0 / 3f64.sqrt();
    let effects = [(1., 1., 1.), (1., -1., -1.), (-1., 1., -1.), (-1., -1., 1.)]
        .iter()
        .map(|&(x, y, z)| Effect::new(0.5, Vector3::new(x, y, z) * k))
        .collect();
    Povm::new(effects).expect("tetrahedron is a valid POVM")
}

/// Projective measurement `{(1, e), (1, -e)}`.
pub fn embed_pvm(e: &Vector3<f64>) -> Result<Povm> {
    Povm::new(vec![Effect::new(1.0, *e), Effect::new(1.0, -e)])
}

/// Weights for four fixed directions, if they form a POVM.
pub fn povm_from_directions(dirs: &[Vector3<f64>; 4]) -> Result<Povm> {
    let a = Matrix4::from_fn(|r, c| if r == 0 { 1.0 } else { dirs[c][r - 1] });
    let sv = a.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::InvalidArgument(format!(
            "direction matrix is near-singular (condition number {cond:e})"
        )));
    }
    let rhs = Vector4::new(2.0, 0.0, 0.0, 0.0);
    let lu = a.lu();
    let mut alpha = lu
        .solve(&rhs)
        .ok_or_else(|| Error::InvalidArgument("singular direction matrix".into()))?;
    // one step of iterative refinement
    if let Some(d) = lu.solve(&(rhs - a * alpha)) {
        alpha += d;
    }
    let effects: Vec<Effect> = dirs
        .iter()
        .zip(alpha.iter())
        .map(|(e, &w)| Effect::new(w, *e))
        .collect();
    let violations = validate_povm(&effects);
    if violations.is_empty() {
        Ok(Povm::new(effects)?)
    } else {
        Err(Error::InvalidPovm(violations))
    }
}

/// Seeded stream of random four-outcome POVMs.
#[derive(Debug, Clone)]
pub struct PovmSampler {
    seed: u64,
    max_retries: usize,
    rng: ChaCha8Rng,
}

impl PovmSampler {
    pub fn new(seed: u64) -> Self {
        Self::with_retries(seed, DEFAULT_MAX_RETRIES)
    }

    pub fn with_retries(seed: u64, max_retries: usize) -> Self {
        Self {
            seed,
            max_retries: max_retries.max(1),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn direction(&mut self) -> Vector3<f64> {
        loop {
            let v = Vector3::<f64>::from_fn(|_, _| StandardNormal.sample(&mut self.rng));
            let n = v.norm();
            if n > 1e-12 {
                return v / n;
            }
        }
    }

    pub fn sample_povm(&mut self) -> Result<Povm> {
        for _ in 0..self.max_retries {
            let dirs = [(); 4].map(|_| self.direction());
            if let Ok(p) = povm_from_directions(&dirs) {
                return Ok(p);
            }
        }
        Err(Error::RetriesExhausted {
            attempts: self.max_retries,
        })
    }
}
