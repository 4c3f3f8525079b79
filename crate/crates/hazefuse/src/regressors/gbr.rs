//! Gradient boosting with least-squares loss.
//!
//! Stage zero predicts the target mean; every later stage fits a shallow
//! tree to the current residuals (the negative least-squares gradient) and is
//! added with shrinkage. With learning rate in (0, 2) the training loss is
//! nonincreasing stage over stage.

use serde::{Deserialize, Serialize};

use super::tree::{fit_tree_impl, RegressionTree, TreeParams};
use super::{check_targets, FeatureMatrix, FeatureSubsample};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbrConfig {
    pub n_estimators: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbrConfig {
    fn default() -> Self {
        GbrConfig {
            n_estimators: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbrModel {
    column_names: Vec<String>,
    initial: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
    /// Training MSE after the initial stage and after each boosting stage.
    staged_training_mse: Vec<f64>,
}

impl GbrModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        x.check_schema(&self.column_names)?;
        let mut out = vec![self.initial; x.n_rows()];
        for tree in &self.trees {
            for (i, v) in out.iter_mut().enumerate() {
                *v += self.learning_rate * tree.predict_row(x.row(i));
            }
        }
        Ok(out)
    }

    pub fn staged_training_mse(&self) -> &[f64] {
        &self.staged_training_mse
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }
}

pub fn fit_gbr(x: &FeatureMatrix, y: &[f64], cfg: &GbrConfig) -> Result<GbrModel> {
    check_targets(x, y, 2)?;
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "learning rate {} outside (0, 1]",
            cfg.learning_rate
        )));
    }
    let n = x.n_rows();
    let initial = y.iter().sum::<f64>() / n as f64;
    let mut current: Vec<f64> = vec![initial; n];
    let params = TreeParams {
        max_depth: Some(cfg.max_depth),
        min_samples_leaf: cfg.min_samples_leaf,
    };

    let mse = |pred: &[f64]| -> f64 {
        pred.iter()
            .zip(y)
            .map(|(p, t)| (p - t) * (p - t))
            .sum::<f64>()
            / n as f64
    };

    let mut trees = Vec::with_capacity(cfg.n_estimators);
    let mut staged = Vec::with_capacity(cfg.n_estimators + 1);
    staged.push(mse(&current));

    for _ in 0..cfg.n_estimators {
        let residuals: Vec<f64> = y.iter().zip(&current).map(|(t, p)| t - p).collect();
        let tree = fit_tree_impl(
            x,
            &residuals,
            &params,
            FeatureSubsample::All,
            None,
            (0..n).collect(),
        )?;
        for (i, v) in current.iter_mut().enumerate() {
            *v += cfg.learning_rate * tree.predict_row(x.row(i));
        }
        staged.push(mse(&current));
        trees.push(tree);
    }

    Ok(GbrModel {
        column_names: x.column_names().to_vec(),
        initial,
        learning_rate: cfg.learning_rate,
        trees,
        staged_training_mse: staged,
    })
}
