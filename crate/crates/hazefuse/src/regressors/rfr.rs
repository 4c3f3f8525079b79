//! Random forest: bootstrap-resampled trees averaged together.
//!
//! Trees grow unbounded with MSE splits and a random `ceil(sqrt(p))` feature
//! pool per split. Each tree derives its own RNG stream from the forest seed
//! and its index, so training is reproducible and trees can be fit in
//! parallel without changing the result.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_impl, RegressionTree, TreeParams};
use super::{check_targets, FeatureMatrix, FeatureSubsample};
use crate::error::{Error, Result};
use crate::seed;

const SEED_TAG_RFR: u64 = 0x7f0e;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RfrConfig {
    pub n_estimators: usize,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for RfrConfig {
    fn default() -> Self {
        RfrConfig {
            n_estimators: 100,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RfrModel {
    column_names: Vec<String>,
    trees: Vec<RegressionTree>,
}

impl RfrModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.check_schema(&self.column_names)?;
        let mut out = vec![0.0; x.n_rows()];
        for tree in &self.trees {
            for (i, v) in out.iter_mut().enumerate() {
                *v += tree.predict_row(x.row(i));
            }
        }
        let k = self.trees.len() as f64;
        out.iter_mut().for_each(|v| *v /= k);
        Ok(out)
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }

    /// Bounds on any forest prediction: [min leaf value, max leaf value]
    /// over all trees.
    pub fn leaf_bounds(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for t in &self.trees {
            let (a, b) = t.leaf_range();
            lo = lo.min(a);
            hi = hi.max(b);
        }
        (lo, hi)
    }
}

pub fn fit_rfr(x: &FeatureMatrix, y: &[f64], cfg: &RfrConfig) -> Result<RfrModel> {
    check_targets(x, y, 2)?;
    if cfg.n_estimators == 0 {
        return Err(Error::InvalidConfig("n_estimators must be >= 1".into()));
    }
    let n = x.n_rows();
    let params = TreeParams {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
    };

    let trees: Result<Vec<RegressionTree>> = (0..cfg.n_estimators)
        .into_par_iter()
        .map(|t| {
            use rand::Rng;
            let mut rng = seed::rng(cfg.seed, &[SEED_TAG_RFR, t as u64]);
            let indices: Vec<usize> = if cfg.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree_impl(x, y, &params, cfg.feature_subsample, Some(&mut rng), indices)
        })
        .collect();

    Ok(RfrModel {
        column_names: x.column_names().to_vec(),
        trees: trees?,
    })
}
