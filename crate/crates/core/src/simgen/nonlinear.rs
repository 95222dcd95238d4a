use std::f64::consts::PI;

use super::{block_labels, descriptor, ScenarioTruth, Split};
use crate::dataset::MultiviewDataset;
use crate::error::{Error, Result};
use crate::ndcore::{Matrix, Rng};
use crate::pipeline::selection_size;

const NOISE_SCALE: f64 = 0.2;
const LEADING: usize = 5;

/// Number of planted signal columns in a view of width `p`.
pub fn signal_count(p: usize) -> usize {
    selection_size(p, 0.10)
}

fn evenly_spaced(n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| 3.0 * PI * i as f64 / (n - 1) as f64).collect(),
    }
}

/// The first `count` columns of the noiseless view `view` (1 or 2) for
/// classes of the given sizes, stacked by class.
///
/// Every column draws its own phase jitter `θ = θ̃ + 0.5·U(0, 1)`; class `k`
/// adds `k·π` inside each trigonometric argument.
pub fn signal_columns(view: usize, class_sizes: &[usize], count: usize, rng: &mut Rng) -> Result<Matrix> {
    if view != 1 && view != 2 {
        return Err(Error::InvalidArgument(format!("view must be 1 or 2, got {view}")));
    }
    let n: usize = class_sizes.iter().sum();
    let grids: Vec<Vec<f64>> = class_sizes.iter().map(|&m| evenly_spaced(m)).collect();
    let mut out = Matrix::zeros(n, count);
    for j in 0..count {
        let mut row = 0;
        for (k, grid) in grids.iter().enumerate() {
            let shift = k as f64 * PI;
            for &t in grid {
                let theta = t + 0.5 * rng.uniform(0.0, 1.0);
                out[(row, j)] = match (view, j < LEADING) {
                    (1, true) => theta,
                    (1, false) => (theta + shift).cos() + rng.normal(),
                    (_, true) => (0.15 * theta).exp() * (1.5 * theta + shift).sin(),
                    (_, false) => (0.15 * theta).exp() * (1.5 * theta + shift).cos(),
                };
                row += 1;
            }
        }
    }
    Ok(out)
}

/// Two-class nonlinear scenario: the first 10% of the columns of each view
/// carry signal, everything else is `0.2·N(0, 1)` noise.
pub fn gen_nonlinear(n1: usize, n2: usize, p1: usize, p2: usize, seed: u64, split: Split) -> Result<(MultiviewDataset, ScenarioTruth)> {
    if p1 < 50 || p2 < 50 {
        return Err(Error::InvalidArgument(format!("views need at least 50 columns, got {p1} and {p2}")));
    }
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidArgument("both classes need at least one sample".into()));
    }
    let sizes = [n1, n2];
    let n = n1 + n2;
    let mut views = Vec::with_capacity(2);
    let mut signals = Vec::with_capacity(2);
    for (v, p) in [(1usize, p1), (2, p2)] {
        let s = signal_count(p);
        let mut signal_rng = Rng::derive(seed, &format!("{split}/nonlinear/view{v}/signal"));
        let mut noise_rng = Rng::derive(seed, &format!("{split}/nonlinear/view{v}/noise"));
        let clean = signal_columns(v, &sizes, s, &mut signal_rng)?;
        let mut x = noise_rng.normal_matrix(n, p).scale(NOISE_SCALE);
        for i in 0..n {
            for j in 0..s {
                x[(i, j)] += clean[(i, j)];
            }
        }
        views.push(x);
        signals.push((0..s).collect());
    }
    let labels = block_labels(&sizes);
    let dataset = MultiviewDataset::new(views, Some(labels.clone()))?;
    let params = [("n1", n1 as f64), ("n2", n2 as f64), ("p1", p1 as f64), ("p2", p2 as f64)];
    Ok((dataset, ScenarioTruth { signals, labels, descriptor: descriptor("nonlinear", &params, seed, split) }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
        let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
        let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
        let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
        cov / (va * vb).sqrt()
    }

    #[test]
    fn shapes_and_truth() {
        let (ds, truth) = gen_nonlinear(20, 15, 500, 60, 7, Split::Train).unwrap();
        assert_eq!(ds.view(0).shape(), (35, 500));
        assert_eq!(ds.view(1).shape(), (35, 60));
        assert_eq!(truth.signals[0].len(), 50);
        assert_eq!(truth.signals[1], (0..6).collect::<Vec<_>>());
        assert_eq!(truth.labels.iter().filter(|&&l| l == 1).count(), 15);
        assert_eq!(ds.labels(), Some(&truth.labels[..]));
    }

    #[test]
    fn invalid_sizes() {
        assert!(gen_nonlinear(10, 10, 49, 100, 0, Split::Train).is_err());
        assert!(gen_nonlinear(0, 10, 100, 100, 0, Split::Train).is_err());
    }

    #[test]
    fn reproducible_and_split_dependent() {
        let a = gen_nonlinear(10, 10, 50, 50, 3, Split::Train).unwrap().0;
        let b = gen_nonlinear(10, 10, 50, 50, 3, Split::Train).unwrap().0;
        let c = gen_nonlinear(10, 10, 50, 50, 3, Split::Test).unwrap().0;
        for d in 0..2 {
            let bits = |m: &Matrix| m.as_slice().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a.view(d)), bits(b.view(d)));
            assert_ne!(bits(a.view(d)), bits(c.view(d)));
        }
    }

    #[test]
    fn noise_columns_have_variance_near_004() {
        let (ds, _) = gen_nonlinear(300, 300, 50, 50, 11, Split::Train).unwrap();
        for d in 0..2 {
            for j in 5..50 {
                let col = ds.view(d).column(j);
                let n = col.len() as f64;
                let m = col.iter().sum::<f64>() / n;
                let var = col.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
                assert!((0.03..=0.05).contains(&var), "view {d} column {j}: {var}");
            }
        }
    }

    #[test]
    fn leading_columns_follow_the_angle() {
        let mut rng = Rng::new(1);
        let x = signal_columns(1, &[4, 4], 2, &mut rng).unwrap();
        let grid = evenly_spaced(4);
        for i in 0..4 {
            let d = x[(i, 0)] - grid[i];
            assert!((0.0..0.5).contains(&d));
            assert!((0.0..0.5).contains(&(x[(i + 4, 1)] - grid[i])));
        }
        assert!((grid[3] - 3.0 * PI).abs() < 1e-15);
    }

    #[test]
    fn cross_view_signals_are_more_correlated_than_noise() {
        let (ds, _) = gen_nonlinear(150, 150, 100, 100, 5, Split::Train).unwrap();
        let (x1, x2) = (ds.view(0), ds.view(1));
        let mut signal = 0.0;
        let mut count = 0.0;
        for j1 in 5..10 {
            for j2 in 5..10 {
                signal += pearson(&x1.column(j1), &x2.column(j2)).abs();
                count += 1.0;
            }
        }
        signal /= count;
        let mut noise = 0.0;
        let mut count = 0.0;
        for j1 in 5..10 {
            for j2 in 10..100 {
                noise += pearson(&x1.column(j1), &x2.column(j2)).abs();
                count += 1.0;
            }
        }
        noise /= count;
        assert!(signal > noise, "{signal} vs {noise}");
    }
}
