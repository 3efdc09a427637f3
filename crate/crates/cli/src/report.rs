//! JSON report shapes. Field changes must bump `SCHEMA_VERSION` and
//! `schema/report.schema.json` together.

use serde::Serialize;
use sievecast::config::{Algorithm, ScreenConfig};
use sievecast::simulation::TableRow;
use sievecast::{ScreenOutcome, TheoryReport};

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Debug, Serialize)]
pub struct ResponseInfo {
    pub column: usize,
    pub name: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ScreenReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub input: String,
    pub n: usize,
    pub p: usize,
    pub response: ResponseInfo,
    pub algorithm: Algorithm,
    /// Group count per partition for the two-stage screener.
    pub partition_k: Option<usize>,
    /// Indices into the predictor matrix, i.e. with the response column removed.
    pub selected_indices: Vec<usize>,
    /// The same predictors as column positions in the input file.
    pub selected_columns: Vec<usize>,
    pub selected_names: Vec<String>,
    pub config: ScreenConfig,
    pub result: ScreenOutcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wall_time_ms: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct SimulateReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub preset: String,
    pub reps: usize,
    pub seed: u64,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Serialize)]
pub struct TheoryOutput {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub seed: u64,
    #[serde(flatten)]
    pub report: TheoryReport,
}

#[derive(Debug, Serialize)]
pub struct BenchReport {
    pub schema_version: &'static str,
    pub command: &'static str,
    pub n: usize,
    pub p: usize,
    pub threads: usize,
    pub estimated_peak_bytes: u64,
    pub scan_seconds: f64,
    pub columns_per_second: f64,
    pub screen_pass_seconds: f64,
    pub selected: usize,
}
