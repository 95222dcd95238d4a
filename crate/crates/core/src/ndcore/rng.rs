//! Seeded random streams.
//!
//! Every stream is a ChaCha20 generator (`rand_chacha::ChaCha20Rng`). A
//! stream for a named purpose is keyed by
//! `SHA-256("sparseview-rng-v1" ‖ master_seed as u64 LE ‖ purpose as UTF-8)`,
//! so streams for different purposes (network init, latent init, noise,
//! search, ...) are independent and reproducible on every platform.

use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use super::Matrix;

const DOMAIN: &[u8] = b"sparseview-rng-v1";

#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha20Rng,
}

impl Rng {
    /// The root stream of `seed` (purpose `""`).
    pub fn new(seed: u64) -> Self {
        Self::derive(seed, "")
    }

    pub fn derive(master_seed: u64, purpose: &str) -> Self {
        let mut h = Sha256::new();
        h.update(DOMAIN);
        h.update(master_seed.to_le_bytes());
        h.update(purpose.as_bytes());
        let key: [u8; 32] = h.finalize().into();
        Self { inner: ChaCha20Rng::from_seed(key) }
    }

    pub fn normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.inner)
    }

    /// Uniform draw on `[lo, hi)`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.inner.random::<f64>()
    }

    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn normal_matrix(&mut self, rows: usize, cols: usize) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.normal())
    }

    pub fn uniform_matrix(&mut self, rows: usize, cols: usize, lo: f64, hi: f64) -> Matrix {
        Matrix::from_fn(rows, cols, |_, _| self.uniform(lo, hi))
    }

    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        use rand::seq::SliceRandom;
        items.shuffle(&mut self.inner);
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let a = Rng::derive(7, "noise").normal_matrix(4, 5);
        let b = Rng::derive(7, "noise").normal_matrix(4, 5);
        assert_eq!(a, b);
    }

    #[test]
    fn purposes_are_independent() {
        let a = Rng::derive(7, "noise").normal_matrix(2, 2);
        let b = Rng::derive(7, "init").normal_matrix(2, 2);
        let c = Rng::derive(8, "noise").normal_matrix(2, 2);
        assert_ne!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn uniform_respects_bounds() {
        let mut r = Rng::new(1);
        for _ in 0..1000 {
            let u = r.uniform(0.5, 1.0);
            assert!((0.5..1.0).contains(&u));
        }
    }
}
