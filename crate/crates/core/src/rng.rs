//! Named, splittable seeding: every consumer derives its own ChaCha stream
//! from a root seed and a path of names, so adding a consumer never shifts
//! the draws of another.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::linalg::DenseOperator;
use crate::C64;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedTree {
    key: [u8; 32],
}

impl SeedTree {
    pub fn new(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"root");
        h.update(seed.to_le_bytes());
        Self {
            key: h.finalize().into(),
        }
    }

    /// Independent subtree for `name`.
    pub fn child(&self, name: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.key);
        h.update((name.len() as u64).to_le_bytes());
        h.update(name.as_bytes());
        Self {
            key: h.finalize().into(),
        }
    }

    /// Generator for `name` under this node.
    pub fn stream(&self, name: &str) -> ChaCha8Rng {
        ChaCha8Rng::from_seed(self.child(name).key)
    }
}

/// Complex number with real and imaginary parts uniform in `[-r, r]`.
pub fn complex_in<R: Rng>(rng: &mut R, r: f64) -> C64 {
    C64::new(rng.gen_range(-r..=r), rng.gen_range(-r..=r))
}

pub fn complex_vector<R: Rng>(rng: &mut R, dim: usize, r: f64) -> Vec<C64> {
    (0..dim).map(|_| complex_in(rng, r)).collect()
}

/// Matrix with complex entries bounded by `r` in each part.
pub fn complex_matrix<R: Rng>(rng: &mut R, dim: usize, r: f64) -> DenseOperator {
    DenseOperator::from_fn(dim, |_, _| complex_in(rng, r))
}

/// Random matrix rescaled so that its Frobenius norm equals `norm`.
pub fn matrix_with_norm<R: Rng>(rng: &mut R, dim: usize, norm: f64) -> DenseOperator {
    let m = complex_matrix(rng, dim, 1.0);
    let f = m.frobenius_norm();
    m.scale(C64::new(norm / f, 0.0))
}
