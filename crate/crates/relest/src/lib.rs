//! Experiment harness for the `relest-core` estimators: configuration
//! presets, CSV traces and estimates, multi-seed RMSE tables, replay of
//! recorded `t,u,iota` streams and latency measurement.

pub mod bench;
pub mod config;
pub mod error;
pub mod experiment;
pub mod io;

pub use config::{ExperimentConfig, Preset};
pub use error::{Category, Error, Result};
