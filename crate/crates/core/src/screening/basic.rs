//! Distribution-based SIS and the iterative basic screener.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{moderate_size_limit, ScreenConfig, ThresholdSpec};
use crate::error::{Error, Result};
use crate::matrix::{correlation_scan, DataMatrix, PredictorSet, ResponseVector};
use crate::regression::resid;
use crate::thresholds::{resolve_threshold, ThresholdValue};

/// Residual norms at or below this fraction of `||Y - mean(Y)||` count as zero.
pub const RESIDUAL_ZERO_TOL: f64 = 1e-10;

/// One DB-SIS pass: the exceedances plus the correlations and threshold behind them.
#[derive(Debug, Clone, PartialEq)]
pub struct DbSisOutcome {
    pub selected: PredictorSet,
    /// `(index, correlation)` for every selected predictor, in index order.
    pub correlations: Vec<(usize, f64)>,
    pub threshold: ThresholdValue,
}

/// Keeps `j` in `candidates` when `|corr(y, x_j)|` strictly exceeds the
/// threshold resolved for `|candidates|` predictors.
pub fn db_sis_detailed<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    candidates: &PredictorSet,
    spec: &ThresholdSpec,
    rng: &mut R,
) -> Result<DbSisOutcome> {
    if candidates.is_empty() {
        return Err(Error::Config("DB-SIS needs a non-empty candidate set".into()));
    }
    let rho = correlation_scan(x, y, candidates)?;
    let threshold = resolve_threshold(spec, x, y, candidates, rng)?;
    let correlations: Vec<(usize, f64)> = candidates
        .iter()
        .zip(rho)
        .filter(|(_, r)| r.abs() > threshold.value)
        .collect();
    let selected = PredictorSet::new(correlations.iter().map(|&(j, _)| j));
    Ok(DbSisOutcome { selected, correlations, threshold })
}

pub fn db_sis<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    candidates: &PredictorSet,
    spec: &ThresholdSpec,
    rng: &mut R,
) -> Result<PredictorSet> {
    Ok(db_sis_detailed(y, x, candidates, spec, rng)?.selected)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    None,
    NoNewPredictors,
    ResidualZero,
    OverdeterminedGuard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub iteration: usize,
    /// Absent for the closing entry that only observed a zero residual.
    pub threshold: Option<ThresholdValue>,
    pub newly_selected: PredictorSet,
    /// Norm of the (centered) response the iteration screened against.
    pub residual_norm: f64,
    pub stop_reason: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningResult {
    pub selected: PredictorSet,
    pub trace: Vec<IterationTrace>,
    pub config_echo: ScreenConfig,
    /// `p` exceeded `n^(2 - delta)`; the run went ahead anyway.
    pub moderate_size_exceeded: bool,
}

impl ScreeningResult {
    pub fn stop_reason(&self) -> StopReason {
        self.trace.last().map_or(StopReason::None, |t| t.stop_reason)
    }
}

/// Iterative screening for `p <= n^(2 - delta)`.
///
/// Starts with DB-SIS on every column, then alternates residualizing the
/// response on the current selection and screening the unselected columns
/// against that residual. Stops when a pass selects nothing, the residual
/// vanishes, or the selection reaches `n - 2` columns.
pub fn basic_screen<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    config: &ScreenConfig,
    rng: &mut R,
) -> Result<ScreeningResult> {
    config.validate()?;
    let n = x.n();
    let p = x.p();
    let all = PredictorSet::all(p);
    let y_norm = y.centered_norm();

    let first = db_sis_detailed(y, x, &all, &config.threshold, rng)?;
    let mut selected = first.selected.clone();
    let mut trace = vec![IterationTrace {
        iteration: 1,
        threshold: Some(first.threshold),
        newly_selected: first.selected,
        residual_norm: y_norm,
        stop_reason: StopReason::None,
    }];

    loop {
        let last = trace.last_mut().expect("trace starts non-empty");
        if last.newly_selected.is_empty() {
            last.stop_reason = StopReason::NoNewPredictors;
            break;
        }
        if selected.len() + 2 >= n {
            last.stop_reason = StopReason::OverdeterminedGuard;
            break;
        }
        let iteration = last.iteration + 1;
        let fit = resid(y, x, &selected)?;
        let residual_norm = fit.residual_norm();
        if residual_norm <= RESIDUAL_ZERO_TOL * y_norm {
            trace.push(IterationTrace {
                iteration,
                threshold: None,
                newly_selected: PredictorSet::empty(),
                residual_norm,
                stop_reason: StopReason::ResidualZero,
            });
            break;
        }
        let remaining = all.difference(&selected);
        if remaining.is_empty() {
            trace.last_mut().unwrap().stop_reason = StopReason::NoNewPredictors;
            break;
        }
        let y_resid = ResponseVector::new(fit.residuals)?;
        let pass = db_sis_detailed(&y_resid, x, &remaining, &config.threshold, rng)?;
        selected.extend(&pass.selected);
        trace.push(IterationTrace {
            iteration,
            threshold: Some(pass.threshold),
            newly_selected: pass.selected,
            residual_norm,
            stop_reason: StopReason::None,
        });
    }

    Ok(ScreeningResult {
        selected,
        trace,
        config_echo: config.clone(),
        moderate_size_exceeded: p > moderate_size_limit(n, config.delta),
    })
}
