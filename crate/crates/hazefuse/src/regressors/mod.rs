//! Fusion estimators: gradient boosting, random forest, and support vector
//! regression, built on a shared CART splitter and a dense feature matrix.
//!
//! Configurations default to the published experiment settings: 100 trees and
//! learning rate 0.1 for boosting, 100 bootstrap trees for the forest, and
//! C=1.0, ε=0.1 with an RBF kernel for SVR. Models serialize to a versioned
//! JSON document.

mod gbr;
mod rfr;
mod svr;
mod tree;

pub use gbr::{fit_gbr, GbrConfig, GbrModel};
pub use rfr::{fit_rfr, RfrConfig, RfrModel};
pub use svr::{fit_svr, SvrConfig, SvrModel};
pub use tree::{fit_tree, RegressionTree, TreeParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major feature matrix with named columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<f64>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn from_rows(column_names: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n_cols = column_names.len();
        if n_cols == 0 {
            return Err(Error::InvalidValue("feature matrix needs columns".into()));
        }
        let mut data = Vec::with_capacity(rows.len() * n_cols);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_cols {
                return Err(Error::InvalidValue(format!(
                    "row {i} has {} values, expected {n_cols}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidValue(format!(
                    "row {i} contains a missing or non-finite value"
                )));
            }
            data.extend_from_slice(row);
        }
        Ok(FeatureMatrix {
            n_rows: rows.len(),
            n_cols,
            data,
            column_names,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.n_cols + col]
    }

    /// Keep only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        let mut data = Vec::with_capacity(rows.len() * self.n_cols);
        for &r in rows {
            data.extend_from_slice(self.row(r));
        }
        FeatureMatrix {
            n_rows: rows.len(),
            n_cols: self.n_cols,
            data,
            column_names: self.column_names.clone(),
        }
    }

    fn check_schema(&self, trained: &[String]) -> Result<()> {
        if self.column_names != trained {
            return Err(Error::SchemaMismatch {
                expected: trained.to_vec(),
                actual: self.column_names.clone(),
            });
        }
        Ok(())
    }
}

/// Per-split feature pools for tree fitting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSubsample {
    /// Consider every feature at every split.
    All,
    /// Consider a random `ceil(sqrt(p))` features per split.
    Sqrt,
}

/// The three estimator families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Gbr,
    Rfr,
    Svr,
}

impl RegressorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            RegressorKind::Gbr => "gbr",
            RegressorKind::Rfr => "rfr",
            RegressorKind::Svr => "svr",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gbr" => Ok(RegressorKind::Gbr),
            "rfr" => Ok(RegressorKind::Rfr),
            "svr" => Ok(RegressorKind::Svr),
            other => Err(Error::InvalidValue(format!(
                "unknown regressor '{other}' (expected gbr, rfr, or svr)"
            ))),
        }
    }
}

/// A trained estimator of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FittedModel {
    Gbr(GbrModel),
    Rfr(RfrModel),
    Svr(SvrModel),
}

impl FittedModel {
    pub fn predict(&self, x: &FeatureMatrix) -> Result<Vec<f64>> {
        match self {
            FittedModel::Gbr(m) => m.predict(x),
            FittedModel::Rfr(m) => m.predict(x),
            FittedModel::Svr(m) => m.predict(x),
        }
    }

    pub fn kind(&self) -> RegressorKind {
        match self {
            FittedModel::Gbr(_) => RegressorKind::Gbr,
            FittedModel::Rfr(_) => RegressorKind::Rfr,
            FittedModel::Svr(_) => RegressorKind::Svr,
        }
    }
}

/// Fit an estimator with the published default configuration. Only the
/// forest consumes the seed; boosting and SVR are deterministic.
pub fn fit(kind: RegressorKind, x: &FeatureMatrix, y: &[f64], seed: u64) -> Result<FittedModel> {
    Ok(match kind {
        RegressorKind::Gbr => FittedModel::Gbr(fit_gbr(x, y, &GbrConfig::default())?),
        RegressorKind::Rfr => FittedModel::Rfr(fit_rfr(
            x,
            y,
            &RfrConfig {
                seed,
                ..Default::default()
            },
        )?),
        RegressorKind::Svr => FittedModel::Svr(fit_svr(x, y, &SvrConfig::default())?),
    })
}

const MODEL_DOCUMENT_VERSION: u32 = 1;

/// Versioned on-disk form of a trained model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub model: FittedModel,
}

impl ModelDocument {
    pub fn new(model: FittedModel) -> Self {
        ModelDocument {
            version: MODEL_DOCUMENT_VERSION,
            model,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("models are serializable")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(s).map_err(|e| Error::ModelFormat(e.to_string()))?;
        if doc.version != MODEL_DOCUMENT_VERSION {
            return Err(Error::ModelFormat(format!(
                "unsupported model document version {} (expected {MODEL_DOCUMENT_VERSION})",
                doc.version
            )));
        }
        Ok(doc)
    }
}

fn check_targets(x: &FeatureMatrix, y: &[f64], min_samples: usize) -> Result<()> {
    if x.n_rows() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.n_rows(),
            right: y.len(),
        });
    }
    if x.n_rows() < min_samples {
        return Err(Error::InsufficientData(format!(
            "need at least {min_samples} samples, got {}",
            x.n_rows()
        )));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidValue("non-finite target".into()));
    }
    Ok(())
}
