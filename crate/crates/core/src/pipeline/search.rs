use std::collections::BTreeMap;

use rand::seq::index;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::ndcore::Rng;

/// Candidate values per hyperparameter name.
///
/// Recognized names: `latent_dim` (or `K`), `lambda`, `lr_net`, `lr_z`,
/// `lr_test`, `r_fraction`, `max_iters`, `svm_c`, `svm_gamma`.
pub type SearchSpace = BTreeMap<String, Vec<f64>>;

fn as_count(name: &str, v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(Error::InvalidArgument(format!("{name} candidate {v} is not a non-negative integer")))
    }
}

fn apply(cfg: &mut TrainConfig, name: &str, v: f64) -> Result<()> {
    match name {
        "latent_dim" | "K" | "k" => cfg.latent_dim = as_count(name, v)?,
        "lambda" => cfg.lambdas = vec![v],
        "lr_net" => cfg.lr_net = vec![v],
        "lr_z" => cfg.lr_z = v,
        "lr_test" => cfg.lr_test = Some(v),
        "r_fraction" => cfg.r_fraction = v,
        "max_iters" => cfg.max_iters = as_count(name, v)?,
        "svm_c" => cfg.svm_c = v,
        "svm_gamma" => cfg.svm_gamma = Some(v),
        _ => return Err(Error::InvalidArgument(format!("unknown hyperparameter {name:?}"))),
    }
    Ok(())
}

/// Every admissible grid point in odometer order (last name varies fastest).
/// Points whose latent width exceeds the bound for `feature_counts` are
/// dropped.
pub fn expand_grid(space: &SearchSpace, base: &TrainConfig, feature_counts: &[usize]) -> Result<Vec<TrainConfig>> {
    if space.is_empty() || space.values().any(Vec::is_empty) {
        return Err(Error::InvalidArgument("search space is empty".into()));
    }
    let names: Vec<&String> = space.keys().collect();
    let lists: Vec<&Vec<f64>> = space.values().collect();
    let mut pos = vec![0usize; names.len()];
    let mut out = Vec::new();
    loop {
        let mut cfg = base.clone();
        for (k, name) in names.iter().enumerate() {
            apply(&mut cfg, name, lists[k][pos[k]])?;
        }
        if cfg.latent_dim as f64 <= cfg.latent_upper_bound(feature_counts) {
            out.push(cfg);
        }
        let mut k = names.len();
        loop {
            if k == 0 {
                return Ok(out);
            }
            k -= 1;
            pos[k] += 1;
            if pos[k] < lists[k].len() {
                break;
            }
            pos[k] = 0;
        }
    }
}

/// `n_draws` distinct admissible grid points, sampled uniformly without
/// replacement.
pub fn random_search(
    space: &SearchSpace,
    base: &TrainConfig,
    feature_counts: &[usize],
    n_draws: usize,
    seed: u64,
) -> Result<Vec<TrainConfig>> {
    let grid = expand_grid(space, base, feature_counts)?;
    if n_draws > grid.len() {
        return Err(Error::InvalidArgument(format!("{n_draws} draws requested from {} admissible combinations", grid.len())));
    }
    let mut rng = Rng::derive(seed, "search");
    Ok(index::sample(&mut rng, grid.len(), n_draws).into_iter().map(|i| grid[i].clone()).collect())
}
