//! Synthetic regression designs, the recall-style accuracy measure, and the
//! replicate harness that turns a grid of scenarios into a results table.

use std::fmt::Write as _;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{moderate_size_limit, Algorithm, ScreenConfig, ThresholdSpec};
use crate::error::{Error, Result};
use crate::matrix::{DataMatrix, PredictorSet, ResponseVector};
use crate::rng::{derive_seed, rng_from_seed};
use crate::screening::{basic_screen, db_sis, two_stage_screen};

/// `E[beta_j^2]` for `beta_j ~ U[0.5, 1.5]`.
const BETA_SECOND_MOMENT: f64 = 13.0 / 12.0;
/// Active coordinates covered by the first equicorrelated block.
pub const BLOCK_SLOTS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum CovFamily {
    Identity,
    /// Stationary AR(1): `corr(x_i, x_j) = rho^|i-j|`.
    Ar { rho: f64 },
    /// First ten coordinates equicorrelated at `rho1`, the rest at `off`, no cross-block correlation.
    Block { rho1: f64, off: f64 },
}

impl CovFamily {
    pub fn ar() -> Self {
        CovFamily::Ar { rho: 0.75 }
    }

    pub fn block(rho1: f64) -> Self {
        CovFamily::Block { rho1, off: 0.05 }
    }

    pub fn label(&self) -> String {
        match self {
            CovFamily::Identity => "identity".into(),
            CovFamily::Ar { rho } => format!("ar({rho})"),
            CovFamily::Block { rho1, off } => format!("block({rho1};{off})"),
        }
    }

    /// Population covariance between coordinates `i` and `j` (unit marginals).
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 1.0;
        }
        match *self {
            CovFamily::Identity => 0.0,
            CovFamily::Ar { rho } => rho.powi(i.abs_diff(j) as i32),
            CovFamily::Block { rho1, off } => {
                let (a, b) = (i < BLOCK_SLOTS, j < BLOCK_SLOTS);
                match (a, b) {
                    (true, true) => rho1,
                    (false, false) => off,
                    _ => 0.0,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "dist", rename_all = "snake_case")]
pub enum PredictorDist {
    Gaussian,
    StudentT { df: f64 },
    SkewNormal { location: f64, scale: f64, slant: f64 },
}

impl PredictorDist {
    pub fn student_t4() -> Self {
        PredictorDist::StudentT { df: 4.0 }
    }

    pub fn skew_normal_default() -> Self {
        PredictorDist::SkewNormal { location: 1.0, scale: 1.5, slant: -8.0 }
    }

    pub fn label(&self) -> String {
        match self {
            PredictorDist::Gaussian => "gaussian".into(),
            PredictorDist::StudentT { df } => format!("t({df})"),
            PredictorDist::SkewNormal { location, scale, slant } => format!("skew_normal({location};{scale};{slant})"),
        }
    }

    /// Marginal variance of one draw.
    pub fn variance(&self) -> Result<f64> {
        match *self {
            PredictorDist::Gaussian => Ok(1.0),
            PredictorDist::StudentT { df } if df > 2.0 => Ok(df / (df - 2.0)),
            PredictorDist::StudentT { df } => Err(Error::Config(format!("t({df}) has no finite variance"))),
            PredictorDist::SkewNormal { scale, slant, .. } => {
                let d = slant / (1.0 + slant * slant).sqrt();
                Ok(scale * scale * (1.0 - 2.0 * d * d / std::f64::consts::PI))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimScenario {
    pub n: usize,
    pub p: usize,
    pub cov: CovFamily,
    pub dist: PredictorDist,
    pub r_star: f64,
    pub kappa: usize,
    pub beta_range: (f64, f64),
}

impl SimScenario {
    pub fn new(n: usize, p: usize, cov: CovFamily, r_star: f64) -> Self {
        Self { n, p, cov, dist: PredictorDist::Gaussian, r_star, kappa: 10, beta_range: (0.5, 1.5) }
    }

    pub fn with_dist(mut self, dist: PredictorDist) -> Self {
        self.dist = dist;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.p < 1 {
            return Err(Error::Config(format!("need n >= 3 and p >= 1, got n={}, p={}", self.n, self.p)));
        }
        if !(self.r_star > 0.0 && self.r_star < 1.0) {
            return Err(Error::Config(format!("r_star must lie in (0, 1), got {}", self.r_star)));
        }
        if self.kappa == 0 || self.kappa > self.p {
            return Err(Error::Config(format!("kappa must lie in 1..=p, got {}", self.kappa)));
        }
        if self.beta_range != (0.5, 1.5) {
            return Err(Error::Config("only the U[0.5, 1.5] coefficient law is supported".into()));
        }
        self.dist.variance()?;
        match self.cov {
            CovFamily::Identity => {}
            _ if self.dist != PredictorDist::Gaussian => {
                return Err(Error::Config("non-Gaussian predictors are only generated independently".into()))
            }
            CovFamily::Ar { rho } if rho.is_nan() || rho.abs() >= 1.0 => {
                return Err(Error::Config(format!("AR coefficient must lie in (-1, 1), got {rho}")))
            }
            CovFamily::Ar { .. } => {}
            CovFamily::Block { rho1, off } => {
                if !(0.0..1.0).contains(&rho1) || !(0.0..1.0).contains(&off) {
                    return Err(Error::Config(format!(
                        "block correlations must lie in [0, 1) for a positive-definite shared-factor design, got rho1={rho1}, off={off}"
                    )));
                }
                if self.kappa > BLOCK_SLOTS {
                    return Err(Error::Config(format!("block family holds at most {BLOCK_SLOTS} active predictors")));
                }
            }
        }
        Ok(())
    }

    /// `E[beta' Sigma beta]` over the coefficient draw, in closed form.
    pub fn expected_signal_variance(&self) -> Result<f64> {
        let var = self.dist.variance()?;
        let mut total = 0.0;
        for i in 0..self.kappa {
            for j in 0..self.kappa {
                total += if i == j { BETA_SECOND_MOMENT } else { self.cov.entry(i, j) };
            }
        }
        Ok(var * total)
    }

    /// Noise variance that makes the expected signal fraction equal `r_star`.
    pub fn noise_variance(&self) -> Result<f64> {
        Ok(self.expected_signal_variance()? * (1.0 - self.r_star) / self.r_star)
    }

    pub fn truth(&self) -> PredictorSet {
        PredictorSet::all(self.kappa)
    }
}

#[derive(Debug, Clone)]
pub struct SimData {
    pub x: DataMatrix,
    pub y: ResponseVector,
    pub truth: PredictorSet,
    pub beta: Vec<f64>,
}

fn draw<R: Rng + ?Sized>(dist: &PredictorDist, rng: &mut R) -> f64 {
    match *dist {
        PredictorDist::Gaussian => StandardNormal.sample(rng),
        PredictorDist::StudentT { df } => StudentT::new(df).expect("validated df").sample(rng),
        PredictorDist::SkewNormal { location, scale, slant } => {
            let d = slant / (1.0 + slant * slant).sqrt();
            let z0: f64 = StandardNormal.sample(rng);
            let z1: f64 = StandardNormal.sample(rng);
            location + scale * (d * z0.abs() + (1.0 - d * d).sqrt() * z1)
        }
    }
}

/// Draws one data set: `Y = X beta + eps` with `beta_j ~ U[0.5, 1.5]` on the
/// first `kappa` columns and `eps ~ N(0, sigma^2)`.
pub fn generate<R: Rng + ?Sized>(scenario: &SimScenario, rng: &mut R) -> Result<SimData> {
    scenario.validate()?;
    let SimScenario { n, p, kappa, .. } = *scenario;
    let (lo, hi) = scenario.beta_range;
    let beta: Vec<f64> = (0..kappa).map(|_| rng.random_range(lo..hi)).collect();

    let mut data = vec![0.0f64; n * p];
    match scenario.cov {
        CovFamily::Identity => match scenario.dist {
            PredictorDist::StudentT { df } => {
                let t = StudentT::new(df).map_err(|e| Error::Config(e.to_string()))?;
                data.iter_mut().for_each(|v| *v = t.sample(rng));
            }
            dist => data.iter_mut().for_each(|v| *v = draw(&dist, rng)),
        },
        CovFamily::Ar { rho } => {
            let innov = (1.0 - rho * rho).sqrt();
            for v in data[..n].iter_mut() {
                *v = StandardNormal.sample(rng);
            }
            for j in 1..p {
                let (prev, cur) = data[(j - 1) * n..(j + 1) * n].split_at_mut(n);
                for (c, &pv) in cur.iter_mut().zip(prev.iter()) {
                    let z: f64 = StandardNormal.sample(rng);
                    *c = rho * pv + innov * z;
                }
            }
        }
        CovFamily::Block { rho1, off } => {
            let shared: Vec<[f64; 2]> = (0..n)
                .map(|_| [StandardNormal.sample(rng), StandardNormal.sample(rng)])
                .collect();
            for (j, col) in data.chunks_mut(n).enumerate() {
                let (slot, rho) = if j < BLOCK_SLOTS { (0, rho1) } else { (1, off) };
                let (a, b) = (rho.sqrt(), (1.0 - rho).sqrt());
                for (v, g) in col.iter_mut().zip(&shared) {
                    let z: f64 = StandardNormal.sample(rng);
                    *v = a * g[slot] + b * z;
                }
            }
        }
    }

    let sigma = scenario.noise_variance()?.sqrt();
    let mut y: Vec<f64> = (0..n)
        .map(|_| {
            let e: f64 = StandardNormal.sample(rng);
            sigma * e
        })
        .collect();
    for (j, &b) in beta.iter().enumerate() {
        for (yi, &xv) in y.iter_mut().zip(&data[j * n..(j + 1) * n]) {
            *yi += b * xv;
        }
    }

    Ok(SimData {
        x: DataMatrix::from_column_major(n, p, data)?,
        y: ResponseVector::new(y)?,
        truth: scenario.truth(),
        beta,
    })
}

/// `|truth ∩ estimate| / |truth|`.
pub fn accuracy(truth: &PredictorSet, estimate: &PredictorSet) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Config("accuracy needs a non-empty true active set".into()));
    }
    Ok(truth.intersection_len(estimate) as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Basic,
    TwoStage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimCell {
    pub scenario: SimScenario,
    pub method: Method,
    pub config: ScreenConfig,
}

impl SimCell {
    pub fn new(scenario: SimScenario, method: Method, config: ScreenConfig) -> Self {
        Self { scenario, method, config }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub cell: SimCell,
    pub reps: usize,
    pub mean_accuracy: f64,
    pub se_accuracy: f64,
    pub median_selected: f64,
    pub rep_accuracy: Vec<f64>,
    pub rep_selected: Vec<usize>,
}

fn scenario_key(s: &SimScenario) -> u64 {
    // FNV-1a over the Debug rendering; cells with the same design share data draws
    let text = format!("{s:?}");
    text.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

const DATA_STREAM: u64 = 0x64617461;
const SCREEN_STREAM: u64 = 0x7363726e;

/// Runs `reps` replicates of one cell: generate, screen, score.
pub fn run_cell(cell: &SimCell, cell_index: usize, reps: usize, master_seed: u64) -> Result<TableRow> {
    if reps == 0 {
        return Err(Error::Config("reps must be positive".into()));
    }
    cell.scenario.validate()?;
    cell.config.validate()?;
    let key = scenario_key(&cell.scenario);
    let outcomes = (0..reps)
        .into_par_iter()
        .map(|rep| {
            let mut data_rng = rng_from_seed(derive_seed(master_seed, &[DATA_STREAM, key, rep as u64]));
            let data = generate(&cell.scenario, &mut data_rng)?;
            let mut screen_rng =
                rng_from_seed(derive_seed(master_seed, &[SCREEN_STREAM, cell_index as u64, rep as u64]));
            let selected = match cell.method {
                Method::Basic => basic_screen(&data.y, &data.x, &cell.config, &mut screen_rng)?.selected,
                Method::TwoStage => {
                    two_stage_screen(&data.y, &data.x, &cell.config, &mut screen_rng)?.integration.final_set
                }
            };
            Ok((accuracy(&data.truth, &selected)?, selected.len()))
        })
        .collect::<Result<Vec<_>>>()?;

    let rep_accuracy: Vec<f64> = outcomes.iter().map(|o| o.0).collect();
    let rep_selected: Vec<usize> = outcomes.iter().map(|o| o.1).collect();
    let (mean, se) = mean_and_se(&rep_accuracy);
    Ok(TableRow {
        cell: cell.clone(),
        reps,
        mean_accuracy: mean,
        se_accuracy: se,
        median_selected: median(&rep_selected),
        rep_accuracy,
        rep_selected,
    })
}

/// Runs every cell in order. Seeds derive from `(master_seed, cell, rep)`;
/// cells sharing a design also share its data draws.
pub fn run_table(cells: &[SimCell], reps: usize, master_seed: u64) -> Result<Vec<TableRow>> {
    if cells.is_empty() {
        return Err(Error::Config("empty scenario grid".into()));
    }
    cells.iter().enumerate().map(|(i, c)| run_cell(c, i, reps, master_seed)).collect()
}

pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(values: &[usize]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m] as f64
    } else {
        (v[m - 1] + v[m]) as f64 / 2.0
    }
}

pub const CSV_HEADER: &str =
    "cov,dist,n,p,r_star,kappa,method,alpha,threshold,partitions,mean_accuracy,se_accuracy,median_selected,reps";

/// One CSV line per row, header first.
pub fn table_to_csv(rows: &[TableRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let c = &r.cell;
        let method = match c.method {
            Method::Basic => "basic",
            Method::TwoStage => "two-stage",
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            c.scenario.cov.label(),
            c.scenario.dist.label(),
            c.scenario.n,
            c.scenario.p,
            c.scenario.r_star,
            c.scenario.kappa,
            method,
            c.config.threshold.alpha,
            c.config.threshold.mode.as_str(),
            c.config.partitions,
            r.mean_accuracy,
            r.se_accuracy,
            r.median_selected,
            r.reps
        );
    }
    out
}

/// Number of columns a pure-noise design selects in one DB-SIS pass with the
/// normal threshold, repeated `runs` times with independent data.
pub fn null_false_selections(n: usize, p: usize, alpha: f64, runs: usize, master_seed: u64) -> Result<Vec<usize>> {
    let spec = ThresholdSpec::normal(alpha);
    spec.validate()?;
    let all = PredictorSet::all(p);
    (0..runs)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(master_seed, &[r as u64]));
            let data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x = DataMatrix::from_column_major(n, p, data)?;
            let y = ResponseVector::new(y)?;
            Ok(db_sis(&y, &x, &all, &spec, &mut rng)?.len())
        })
        .collect()
}

/// Knobs a preset grid honours.
#[derive(Debug, Clone, PartialEq)]
pub struct PresetOptions {
    pub n: Option<usize>,
    pub p: Option<usize>,
    pub partitions: Option<usize>,
    pub threshold: ThresholdSpec,
    pub delta: f64,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            n: None,
            p: None,
            partitions: None,
            threshold: ThresholdSpec::default(),
            delta: crate::config::DEFAULT_DELTA,
        }
    }
}

pub const PRESETS: [&str; 4] = ["table1", "table2", "table3", "table-heavy"];

/// Dimension used for the moderate-size grids: fixed sizes for the
/// sample sizes that have them, `floor(n^(2 - delta))` otherwise.
pub fn moderate_p(n: usize, delta: f64) -> usize {
    match n {
        100 => 8_700,
        200 => 34_000,
        300 => 75_000,
        400 => 133_000,
        _ => moderate_size_limit(n, delta),
    }
}

/// Builds the named scenario grid.
pub fn preset_grid(name: &str, opts: &PresetOptions) -> Result<Vec<SimCell>> {
    let n = opts.n.unwrap_or(200);
    let config = |alpha: f64, algorithm: Algorithm| ScreenConfig {
        threshold: ThresholdSpec { alpha, ..opts.threshold.clone() },
        delta: opts.delta,
        algorithm,
        partitions: opts.partitions.unwrap_or(crate::config::DEFAULT_PARTITIONS),
        seed: 0,
    };
    let alpha = opts.threshold.alpha;
    let moderate = opts.p.unwrap_or_else(|| moderate_p(n, opts.delta));
    let basic = |cov: CovFamily, r: f64, a: f64| {
        SimCell::new(SimScenario::new(n, moderate, cov, r), Method::Basic, config(a, Algorithm::Basic))
    };

    let cells = match name {
        "table1" => [
            (CovFamily::Identity, [0.91, 0.95]),
            (CovFamily::ar(), [0.5, 0.55]),
            (CovFamily::block(0.5), [0.5, 0.55]),
            (CovFamily::block(0.3), [0.5, 0.55]),
        ]
        .into_iter()
        .flat_map(|(cov, rs)| rs.into_iter().map(move |r| (cov, r)))
        .map(|(cov, r)| basic(cov, r, alpha))
        .collect(),
        "table2" => {
            let ps: Vec<usize> = match opts.p {
                Some(p) => vec![p],
                None => vec![68_000, 136_000, 204_000, 272_000],
            };
            let families = [
                (CovFamily::Identity, 0.8),
                (CovFamily::ar(), 0.3),
                (CovFamily::block(0.5), 0.3),
                (CovFamily::block(0.3), 0.4),
            ];
            families
                .iter()
                .flat_map(|&(cov, r)| {
                    let config = &config;
                    ps.iter().map(move |&p| {
                        SimCell::new(SimScenario::new(n, p, cov, r), Method::TwoStage, config(alpha, Algorithm::TwoStage))
                    })
                })
                .collect()
        }
        "table3" => [0.91, 0.95]
            .into_iter()
            .flat_map(|r| [0.8, 0.65, 0.5, 0.35, 0.2].into_iter().map(move |a| (r, a)))
            .map(|(r, a)| basic(CovFamily::Identity, r, a))
            .collect(),
        "table-heavy" => [PredictorDist::student_t4(), PredictorDist::skew_normal_default()]
            .into_iter()
            .flat_map(|d| [0.91, 0.95].into_iter().map(move |r| (d, r)))
            .map(|(d, r)| {
                let mut cell = basic(CovFamily::Identity, r, alpha);
                cell.scenario.dist = d;
                cell
            })
            .collect(),
        other => {
            return Err(Error::Config(format!(
                "unknown preset {other:?}; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(cells)
}
