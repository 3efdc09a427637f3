//! Random-partition screening for `p` beyond the moderate-size limit.
//!
//! The first stage partitions the columns into groups no larger than
//! `n^(2 - delta)`, screens every group against a shared residual, and grows a
//! kernel from whichever group's selection best explains the response. It is
//! repeated over `T` independent partitions. The second stage keeps the columns
//! chosen in every partition and admits less frequent ones by a slope test
//! against the current residual.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{moderate_size_limit, ScreenConfig};
use crate::error::{Error, Result};
use crate::matrix::{correlation_scan, DataMatrix, PredictorSet, ResponseVector};
use crate::regression::{resid, simple_slope_pvalue};
use crate::rng::{fork_seed, substream};
use crate::screening::basic::{db_sis_detailed, RESIDUAL_ZERO_TOL};

/// Second-stage admission level for the slope test.
pub const ADMISSION_PVALUE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub k: usize,
    pub groups: Vec<PredictorSet>,
    pub max_group_size: usize,
}

/// Randomly cuts `0..p` into `ceil(p / floor(n^(2 - delta)))` groups whose
/// sizes differ by at most one.
pub fn make_partition<R: Rng + ?Sized>(p: usize, n: usize, delta: f64, rng: &mut R) -> Result<PartitionPlan> {
    if p == 0 || n < 3 || !(delta > 0.0 && delta < 2.0) {
        return Err(Error::Config(format!("invalid partition request p={p}, n={n}, delta={delta}")));
    }
    let limit = moderate_size_limit(n, delta);
    let k = p.div_ceil(limit);
    let mut order: Vec<usize> = (0..p).collect();
    order.shuffle(rng);
    let base = p / k;
    let extra = p % k;
    let mut groups = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let size = base + usize::from(g < extra);
        groups.push(PredictorSet::new(order[start..start + size].iter().copied()));
        start += size;
    }
    Ok(PartitionPlan { k, groups, max_group_size: p.div_ceil(k) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStop {
    NoNewPredictors,
    AdjR2NotIncreasing,
    SelectionLimit,
    OverdeterminedGuard,
    ResidualZero,
    RoundLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// `|A_nu|` for each group, in group order.
    pub group_selected: Vec<usize>,
    /// 0-based index of the group whose selection joined the kernel.
    pub winning_group: usize,
    pub winning_adj_r2: f64,
    pub kernel_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionRunResult {
    /// 1-based partition number.
    pub partition_index: usize,
    pub k: usize,
    pub selected: PredictorSet,
    pub kernel: PredictorSet,
    pub rounds: Vec<RoundRecord>,
    pub stop: RunStop,
}

struct Candidate {
    added: PredictorSet,
    adj_r2: f64,
    truncated: bool,
}

/// First-stage screening over one partition.
pub fn first_stage_run<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    plan: &PartitionPlan,
    config: &ScreenConfig,
    partition_index: usize,
    rng: &mut R,
) -> Result<PartitionRunResult> {
    config.validate()?;
    let n = x.n();
    for g in &plan.groups {
        g.validate(x.p())?;
    }
    let budget = n - 2;
    let y_norm = y.centered_norm();
    let mut kernel = PredictorSet::empty();
    let mut selected = PredictorSet::empty();
    let mut y_resid = y.clone();
    let mut rounds = Vec::new();
    let mut prev_best: Option<f64> = None;
    let mut stop = RunStop::RoundLimit;

    for _ in 0..n {
        let base = fork_seed(rng);
        let passes = plan
            .groups
            .par_iter()
            .enumerate()
            .map(|(g, group)| {
                let candidates = group.difference(&kernel);
                if candidates.is_empty() {
                    return Ok(Vec::new());
                }
                let mut group_rng = substream(base, &[g as u64]);
                let pass = db_sis_detailed(&y_resid, x, &candidates, &config.threshold, &mut group_rng)?;
                Ok(pass.correlations)
            })
            .collect::<Result<Vec<_>>>()?;

        let before = selected.len();
        for pass in &passes {
            selected.extend(&PredictorSet::new(pass.iter().map(|&(j, _)| j)));
        }

        let candidates = passes
            .par_iter()
            .map(|pass| {
                let room = budget - kernel.len();
                let truncated = pass.len() > room;
                let added = if truncated {
                    let mut ranked = pass.clone();
                    ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
                    PredictorSet::new(ranked[..room].iter().map(|&(j, _)| j))
                } else {
                    PredictorSet::new(pass.iter().map(|&(j, _)| j))
                };
                let fit = resid(y, x, &added.union(&kernel))?;
                Ok(Candidate { added, adj_r2: fit.adj_r_squared, truncated })
            })
            .collect::<Result<Vec<_>>>()?;

        let mut winner = 0;
        for (g, c) in candidates.iter().enumerate() {
            if c.adj_r2 > candidates[winner].adj_r2 {
                winner = g;
            }
        }
        let best = &candidates[winner];
        kernel.extend(&best.added);
        rounds.push(RoundRecord {
            group_selected: passes.iter().map(Vec::len).collect(),
            winning_group: winner,
            winning_adj_r2: best.adj_r2,
            kernel_size: kernel.len(),
        });

        if best.truncated {
            stop = RunStop::OverdeterminedGuard;
            break;
        }
        if selected.len() == before {
            stop = RunStop::NoNewPredictors;
            break;
        }
        if prev_best.is_some_and(|prev| best.adj_r2 <= prev) {
            stop = RunStop::AdjR2NotIncreasing;
            break;
        }
        if selected.len() > budget {
            stop = RunStop::SelectionLimit;
            break;
        }
        prev_best = Some(best.adj_r2);

        let fit = resid(y, x, &kernel)?;
        if fit.residual_norm() <= RESIDUAL_ZERO_TOL * y_norm {
            stop = RunStop::ResidualZero;
            break;
        }
        y_resid = ResponseVector::new(fit.residuals)?;
    }

    Ok(PartitionRunResult { partition_index, k: plan.k, selected, kernel, rounds, stop })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegrationResult {
    /// How many of the `T` runs selected each predictor.
    pub psi_counts: BTreeMap<usize, usize>,
    pub final_set: PredictorSet,
    /// Predictors admitted by the slope test at each occurrence level.
    pub admitted_by_level: BTreeMap<usize, PredictorSet>,
    /// The degrees-of-freedom budget cut admissions short.
    pub truncated: bool,
}

/// Second-stage vote integration over the `T` first-stage selections.
pub fn integrate(runs: &[PartitionRunResult], y: &ResponseVector, x: &DataMatrix) -> Result<IntegrationResult> {
    let t = runs.len();
    if t < 2 {
        return Err(Error::Config(format!("integration needs at least 2 runs, got {t}")));
    }
    let n = x.n();
    let budget = n - 2;
    let mut psi_counts: BTreeMap<usize, usize> = BTreeMap::new();
    for run in runs {
        run.selected.validate(x.p())?;
        for j in run.selected.iter() {
            *psi_counts.entry(j).or_default() += 1;
        }
    }
    let level = |l: usize| PredictorSet::new(psi_counts.iter().filter(|&(_, &c)| c == l).map(|(&j, _)| j));

    let mut final_set = level(t);
    let mut truncated = false;
    let mut admitted_by_level = BTreeMap::new();
    if final_set.len() > budget {
        // keep the columns most correlated with the response
        let rho = correlation_scan(x, y, &final_set)?;
        let mut ranked: Vec<(usize, f64)> = final_set.iter().zip(rho).collect();
        ranked.sort_by(|a, b| b.1.abs().total_cmp(&a.1.abs()).then(a.0.cmp(&b.0)));
        final_set = PredictorSet::new(ranked[..budget].iter().map(|&(j, _)| j));
        truncated = true;
    }

    if !truncated {
        let mut y_resid = resid(y, x, &final_set)?.residuals;
        for l in (2..t).rev() {
            let members = level(l);
            if members.is_empty() {
                continue;
            }
            let mut passing: Vec<(usize, f64)> = members
                .as_slice()
                .par_iter()
                .map(|&j| Ok((j, simple_slope_pvalue(&y_resid, x.column(j))?)))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .filter(|&(_, pv)| pv < ADMISSION_PVALUE)
                .collect();
            let room = budget - final_set.len();
            if passing.len() > room {
                passing.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
                passing.truncate(room);
                truncated = true;
            }
            let admitted = PredictorSet::new(passing.iter().map(|&(j, _)| j));
            final_set.extend(&admitted);
            admitted_by_level.insert(l, admitted);
            if truncated {
                break;
            }
            y_resid = resid(y, x, &final_set)?.residuals;
        }
    }

    Ok(IntegrationResult { psi_counts, final_set, admitted_by_level, truncated })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStageResult {
    pub integration: IntegrationResult,
    pub runs: Vec<PartitionRunResult>,
    pub config_echo: ScreenConfig,
    /// `p <= n^(2 - delta)`: every partition was a single group.
    pub below_moderate_size: bool,
}

impl TwoStageResult {
    pub fn selected(&self) -> &PredictorSet {
        &self.integration.final_set
    }
}

/// Runs `T = config.partitions` independent first-stage passes, each on a
/// fresh random partition, then integrates them.
pub fn two_stage_screen<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    config: &ScreenConfig,
    rng: &mut R,
) -> Result<TwoStageResult> {
    config.validate()?;
    if config.partitions < 2 {
        return Err(Error::Config("two-stage screening needs at least 2 partitions".into()));
    }
    y.require_pairable(x)?;
    let base = fork_seed(rng);
    let runs = (0..config.partitions)
        .into_par_iter()
        .map(|t| {
            let mut run_rng = substream(base, &[t as u64]);
            let plan = make_partition(x.p(), x.n(), config.delta, &mut run_rng)?;
            first_stage_run(y, x, &plan, config, t + 1, &mut run_rng)
        })
        .collect::<Result<Vec<_>>>()?;
    let integration = integrate(&runs, y, x)?;
    Ok(TwoStageResult {
        integration,
        runs,
        config_echo: config.clone(),
        below_moderate_size: x.p() <= moderate_size_limit(x.n(), config.delta),
    })
}
