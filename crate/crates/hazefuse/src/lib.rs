//! Vision-plus-sensor PM2.5 estimation.
//!
//! The crate covers the full estimation pipeline for a dense particle-counter
//! deployment photographed by fixed and airborne cameras:
//!
//! - [`dataset_io`] — sensor logs, image manifests, and station geometry,
//!   parsed into analysis-ready structures and time-aligned.
//! - [`haze_features`] — per-image haze features: mean dark-channel-prior
//!   transmission and the grayscale standard-deviation scattering coefficient.
//! - [`calibration`] — two-stage piecewise-linear co-location calibration of
//!   raw particle-counter readings.
//! - [`spatial_stats`] — Spearman correlation matrices, correlation-vs-distance
//!   regression, and summary statistics.
//! - [`regressors`] — from-scratch gradient boosting, random forest, and
//!   support vector regression used as fusion estimators.
//! - [`experiment`] — the leave-sensors-out evaluation protocol: MAE over
//!   repeated random splits, percentage-change curves, and two-sample
//!   Kolmogorov-Smirnov significance tests.
//! - [`synthetic`] — forward-rendered hazy scenes and correlated sensor fields
//!   with known ground truth, so the whole pipeline can be verified without
//!   the real dataset.

// indexed loops are the clearest form for the kernel/matrix math throughout
#![allow(clippy::needless_range_loop)]

pub mod calibration;
pub mod dataset_io;
pub mod error;
pub mod experiment;
pub mod haze_features;
pub mod regressors;
pub mod seed;
pub mod spatial_stats;
pub mod synthetic;

pub use error::{Error, Result};
