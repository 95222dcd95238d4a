//! Fixed-size inputs shared by the benchmarks.

use sparseview::simgen::gen_nonlinear;
use sparseview::{MultiviewDataset, Split, TrainConfig};

/// Standardized two-view nonlinear data with `n` samples split 4:3.
pub fn nonlinear_fixture(n: usize, p: usize, seed: u64) -> MultiviewDataset {
    let n1 = n * 4 / 7;
    let (raw, _) = gen_nonlinear(n1, n - n1, p, p, seed, Split::Train).expect("valid fixture size");
    raw.standardized(&raw.fit_standardization().expect("non-empty views")).expect("matching stats")
}

/// Default configuration with a fixed iteration budget and no early stop.
pub fn fixed_iterations(iters: usize) -> TrainConfig {
    TrainConfig { max_iters: iters, rel_tol: 0.0, ..TrainConfig::default() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_shapes() {
        let data = nonlinear_fixture(70, 100, 1);
        assert_eq!(data.n_samples(), 70);
        assert_eq!(data.feature_counts(), vec![100, 100]);
        assert_eq!(fixed_iterations(5).max_iters, 5);
    }
}
