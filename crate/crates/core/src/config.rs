use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 0.5;
pub const DEFAULT_DELTA: f64 = 0.03;
pub const DEFAULT_BOOTSTRAP_REPS: usize = 500;
pub const DEFAULT_AUTO_CUTOFF_N: usize = 200;
pub const DEFAULT_PARTITIONS: usize = 10;
pub const MIN_BOOTSTRAP_REPS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMode {
    /// Bootstrap below `auto_cutoff_n` observations, normal approximation otherwise.
    Auto,
    Normal,
    Bootstrap,
}

impl ThresholdMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            ThresholdMode::Auto => "auto",
            ThresholdMode::Normal => "normal",
            ThresholdMode::Bootstrap => "bootstrap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSpec {
    pub alpha: f64,
    pub mode: ThresholdMode,
    pub bootstrap_reps: usize,
    pub auto_cutoff_n: usize,
}

impl Default for ThresholdSpec {
    fn default() -> Self {
        Self {
            alpha: DEFAULT_ALPHA,
            mode: ThresholdMode::Auto,
            bootstrap_reps: DEFAULT_BOOTSTRAP_REPS,
            auto_cutoff_n: DEFAULT_AUTO_CUTOFF_N,
        }
    }
}

impl ThresholdSpec {
    pub fn normal(alpha: f64) -> Self {
        Self { alpha, mode: ThresholdMode::Normal, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if self.bootstrap_reps < MIN_BOOTSTRAP_REPS {
            return Err(Error::Config(format!(
                "bootstrap_reps must be at least {MIN_BOOTSTRAP_REPS}, got {}",
                self.bootstrap_reps
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(Error::Config(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Basic,
    TwoStage,
    /// Two-stage iff `p > n^(2 - delta)`.
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenConfig {
    pub threshold: ThresholdSpec,
    pub delta: f64,
    pub algorithm: Algorithm,
    /// Number of random partitions for the two-stage screener.
    pub partitions: usize,
    pub seed: u64,
}

impl Default for ScreenConfig {
    fn default() -> Self {
        Self {
            threshold: ThresholdSpec::default(),
            delta: DEFAULT_DELTA,
            algorithm: Algorithm::Auto,
            partitions: DEFAULT_PARTITIONS,
            seed: 0,
        }
    }
}

impl ScreenConfig {
    pub fn alpha(&self) -> f64 {
        self.threshold.alpha
    }

    pub fn validate(&self) -> Result<()> {
        self.threshold.validate()?;
        if !(self.delta > 0.0 && self.delta < 2.0) {
            return Err(Error::Config(format!("delta must lie in (0, 2), got {}", self.delta)));
        }
        if self.algorithm != Algorithm::Basic && self.partitions < 2 {
            return Err(Error::Config(format!(
                "two-stage screening needs at least 2 partitions, got {}",
                self.partitions
            )));
        }
        Ok(())
    }

    /// Resolves `Auto` against the data shape.
    pub fn effective_algorithm(&self, n: usize, p: usize) -> Algorithm {
        match self.algorithm {
            Algorithm::Auto if p > moderate_size_limit(n, self.delta) => Algorithm::TwoStage,
            Algorithm::Auto => Algorithm::Basic,
            other => other,
        }
    }
}

/// `floor(n^(2 - delta))`, the largest group size the basic screener is run on.
pub fn moderate_size_limit(n: usize, delta: f64) -> usize {
    ((n as f64).powf(2.0 - delta).floor() as usize).max(1)
}
