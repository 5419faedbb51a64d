//! Seeded test corpora shared by the integration tests.

#![allow(dead_code)]

use bell_steering::bloch::{is_physical, CorrelationMatrix};
use bell_steering::sphere_quad::SphereSampler;
use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Smallest `|t_i|` drawn for random correlation matrices.
pub const MIN_ENTRY: f64 = 0.1;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn signed_magnitude(rng: &mut ChaCha8Rng) -> f64 {
    let m = rng.random_range(MIN_ENTRY..=1.0);
    if rng.random_bool(0.5) {
        m
    } else {
        -m
    }
}

/// Physical diagonal `T` with `|t_i| ∈ [0.1, 1]` and random signs.
pub fn physical_diagonal(rng: &mut ChaCha8Rng) -> CorrelationMatrix {
    loop {
        let d = [(); 3].map(|_| signed_magnitude(rng));
        let t = CorrelationMatrix::diagonal(d[0], d[1], d[2]).expect("entries are nonzero");
        if is_physical(t.matrix()) {
            return t;
        }
    }
}

/// Physical axial `T` (two equal magnitudes `s`, third `t`), with the
/// repeated pair placed at a random position. Returns `(T, s, t)`.
pub fn physical_axial(rng: &mut ChaCha8Rng) -> (CorrelationMatrix, f64, f64) {
    loop {
        let s = signed_magnitude(rng);
        let s2 = if rng.random_bool(0.5) { s } else { -s };
        let t = signed_magnitude(rng);
        let d = match rng.random_range(0..3) {
            0 => [s, s2, t],
            1 => [s, t, s2],
            _ => [t, s, s2],
        };
        let m = CorrelationMatrix::diagonal(d[0], d[1], d[2]).expect("entries are nonzero");
        if is_physical(m.matrix()) {
            return (m, s.abs(), t.abs());
        }
    }
}

pub fn direction(seed: u64) -> Vector3<f64> {
    SphereSampler::new(seed).sample()
}
