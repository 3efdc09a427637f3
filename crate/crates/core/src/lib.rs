//! Distribution-based iterative variable screening for ultrahigh-dimensional
//! linear regression.
//!
//! [`screen`] dispatches between the iterative basic screener and the
//! two-stage random-partition screener depending on the shape of the data.

pub mod config;
pub mod error;
pub mod matrix;
pub mod regression;
pub mod rng;
pub mod screening;
pub mod simulation;
pub mod special;
pub mod theory;
pub mod thresholds;

pub use config::{Algorithm, ScreenConfig, ThresholdMode, ThresholdSpec};
pub use error::{Error, Result};
pub use matrix::{correlation_scan, DataMatrix, MatrixFormat, PredictorSet, ResponseVector};
pub use regression::{resid, FitResult};
pub use screening::{basic_screen, db_sis, screen, two_stage_screen, ScreenOutcome};
pub use theory::{theory_report, TheoryReport};
pub use thresholds::{normal_threshold, ThresholdMethod, ThresholdValue};
