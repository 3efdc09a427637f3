//! Screening thresholds: the bootstrap quantile of the maximal null correlation
//! and its closed-form normal approximation.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{check_alpha, ThresholdMode, ThresholdSpec};
use crate::error::{Error, Result};
use crate::matrix::{resampled_abs_correlation, DataMatrix, PredictorSet, ResponseVector};
use crate::rng::{fork_seed, substream};
use crate::special::normal_quantile_tail;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdMethod {
    Normal,
    Bootstrap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdValue {
    pub value: f64,
    pub method_used: ThresholdMethod,
    pub reps_used: Option<usize>,
}

/// `Phi^-1(1 - 0.5 * (1 - (1 - alpha)^(1/p)))`, computed from the small tail
/// probability directly so it stays accurate for very large `p`.
pub fn normal_critical_value(p: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if p == 0 {
        return Err(Error::Config("candidate count p must be positive".into()));
    }
    let tail = -0.5 * ((-alpha).ln_1p() / p as f64).exp_m1();
    Ok(normal_quantile_tail(tail, false))
}

/// Normal-approximation threshold `z(n, p, alpha) = c(p) / sqrt(n)`.
pub fn normal_threshold(n: usize, p: usize, alpha: f64) -> Result<ThresholdValue> {
    if n < 3 {
        return Err(Error::Config(format!("n must be at least 3, got {n}")));
    }
    let c = normal_critical_value(p, alpha)?;
    Ok(ThresholdValue {
        value: c / (n as f64).sqrt(),
        method_used: ThresholdMethod::Normal,
        reps_used: None,
    })
}

/// Draws `reps` values of `max_{j in subset} |corr(y, x*_j)|`, each `x*_j`
/// resampled independently from column `j`. Rep `r` uses its own substream.
pub fn bootstrap_null_maxima<R: Rng + ?Sized>(
    x: &DataMatrix,
    y: &ResponseVector,
    subset: &PredictorSet,
    reps: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    y.require_pairable(x)?;
    subset.validate(x.p())?;
    if subset.is_empty() {
        return Err(Error::Config("bootstrap threshold needs a non-empty subset".into()));
    }
    if reps == 0 {
        return Err(Error::Config("bootstrap reps must be positive".into()));
    }
    let base = fork_seed(rng);
    let yc = y.centered();
    let y_norm = y.centered_norm();
    let maxima = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut rep_rng = substream(base, &[r as u64]);
            let mut buf = Vec::with_capacity(x.n());
            subset.iter().fold(0.0f64, |m, j| {
                m.max(resampled_abs_correlation(x.column(j), yc, y_norm, &mut buf, &mut rep_rng))
            })
        })
        .collect();
    Ok(maxima)
}

/// Nearest-rank `(1 - alpha)` quantile: the `ceil((1 - alpha) * len)`-th smallest value.
pub fn nearest_rank_quantile(sample: &[f64], alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if sample.is_empty() {
        return Err(Error::Config("quantile of an empty sample".into()));
    }
    let mut sorted = sample.to_vec();
    sorted.sort_by(f64::total_cmp);
    let len = sorted.len();
    // the epsilon absorbs representation error in (1 - alpha) * len, e.g. alpha = 0.8
    let rank = (((1.0 - alpha) * len as f64) - 1e-9).ceil() as usize;
    Ok(sorted[rank.clamp(1, len) - 1])
}

pub fn bootstrap_threshold<R: Rng + ?Sized>(
    x: &DataMatrix,
    y: &ResponseVector,
    subset: &PredictorSet,
    alpha: f64,
    reps: usize,
    rng: &mut R,
) -> Result<ThresholdValue> {
    check_alpha(alpha)?;
    let maxima = bootstrap_null_maxima(x, y, subset, reps, rng)?;
    Ok(ThresholdValue {
        value: nearest_rank_quantile(&maxima, alpha)?,
        method_used: ThresholdMethod::Bootstrap,
        reps_used: Some(reps),
    })
}

/// Picks the threshold backend. The normal formula uses `|subset|` as its `p`.
pub fn resolve_threshold<R: Rng + ?Sized>(
    spec: &ThresholdSpec,
    x: &DataMatrix,
    y: &ResponseVector,
    subset: &PredictorSet,
    rng: &mut R,
) -> Result<ThresholdValue> {
    spec.validate()?;
    let use_bootstrap = match spec.mode {
        ThresholdMode::Auto => x.n() < spec.auto_cutoff_n,
        ThresholdMode::Normal => false,
        ThresholdMode::Bootstrap => true,
    };
    if use_bootstrap {
        bootstrap_threshold(x, y, subset, spec.alpha, spec.bootstrap_reps, rng)
    } else {
        normal_threshold(x.n(), subset.len().max(1), spec.alpha)
    }
}
