pub mod basic;
pub mod twostage;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::{Algorithm, ScreenConfig};
use crate::error::Result;
use crate::matrix::{DataMatrix, PredictorSet, ResponseVector};

pub use basic::{basic_screen, db_sis, db_sis_detailed, IterationTrace, ScreeningResult, StopReason};
pub use twostage::{
    first_stage_run, integrate, make_partition, two_stage_screen, IntegrationResult, PartitionPlan,
    PartitionRunResult, TwoStageResult,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "kebab-case")]
pub enum ScreenOutcome {
    Basic(ScreeningResult),
    TwoStage(TwoStageResult),
}

impl ScreenOutcome {
    pub fn selected(&self) -> &PredictorSet {
        match self {
            ScreenOutcome::Basic(r) => &r.selected,
            ScreenOutcome::TwoStage(r) => r.selected(),
        }
    }

    pub fn algorithm(&self) -> Algorithm {
        match self {
            ScreenOutcome::Basic(_) => Algorithm::Basic,
            ScreenOutcome::TwoStage(_) => Algorithm::TwoStage,
        }
    }
}

/// Runs whichever screener `config.algorithm` resolves to for this data shape.
pub fn screen<R: Rng + ?Sized>(
    y: &ResponseVector,
    x: &DataMatrix,
    config: &ScreenConfig,
    rng: &mut R,
) -> Result<ScreenOutcome> {
    match config.effective_algorithm(x.n(), x.p()) {
        Algorithm::TwoStage => Ok(ScreenOutcome::TwoStage(two_stage_screen(y, x, config, rng)?)),
        _ => Ok(ScreenOutcome::Basic(basic_screen(y, x, config, rng)?)),
    }
}
