//! False-selection calculator for the normal-approximation threshold.
//!
//! With Gaussian data, each of the `p - kappa` inactive columns clears the
//! threshold independently with probability
//! `p1 = P(|Z| / sqrt(Z^2 + U) > c(p) / sqrt(n))`, `Z ~ N(0,1)`, `U ~ chi2(n-2)`,
//! so the false-selection count is `Bin(p - kappa, p1)`; `p * p1` tends to
//! `lambda0 = -ln(1 - alpha)` and the tail `P(N >= r)` to at most `lambda0^r / r!`.

use std::collections::BTreeMap;

use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;

use crate::config::check_alpha;
use crate::error::{Error, Result};
use crate::rng::substream;
use crate::thresholds::normal_critical_value;

const MC_CHUNK: usize = 1 << 16;
pub const TAIL_ORDERS: std::ops::RangeInclusive<usize> = 1..=5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TheoryReport {
    pub n: usize,
    pub p: usize,
    pub alpha: f64,
    pub kappa: usize,
    pub c_p: f64,
    /// Monte Carlo estimate of the per-column exceedance probability.
    pub p1: f64,
    pub p1_mc_se: f64,
    pub mc_reps: usize,
    /// Closed form: `r^2 = Z^2 / (Z^2 + U)` is `Beta(1/2, (n-2)/2)`.
    pub p1_exact: f64,
    /// `(p - kappa) * p1`, the mean false-selection count.
    pub expected_false: f64,
    pub lambda0: f64,
    /// `r -> lambda0^r / r!` for `r = 1..=5`.
    pub tail_bounds: BTreeMap<usize, f64>,
}

/// `-ln(1 - alpha)`.
pub fn poisson_limit(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(-(-alpha).ln_1p())
}

/// `lambda^r / r!`.
pub fn poisson_tail_bound(lambda: f64, r: usize) -> f64 {
    (1..=r).fold(1.0, |acc, k| acc * lambda / k as f64)
}

/// Exact `P(|Z| / sqrt(Z^2 + U) > c / sqrt(n))`.
pub fn exceedance_probability(n: usize, c: f64) -> f64 {
    let t2 = c * c / n as f64;
    if t2 >= 1.0 {
        return 0.0;
    }
    // P(r^2 > t2) with r^2 ~ Beta(1/2, (n-2)/2)
    (1.0 - beta_reg(0.5, (n as f64 - 2.0) / 2.0, t2)).clamp(0.0, 1.0)
}

pub fn theory_report(n: usize, p: usize, alpha: f64, kappa: usize, mc_reps: usize, seed: u64) -> Result<TheoryReport> {
    check_alpha(alpha)?;
    if n < 4 {
        return Err(Error::Config(format!("theory report needs n >= 4, got {n}")));
    }
    if p <= kappa {
        return Err(Error::Config(format!("need p > kappa, got p={p}, kappa={kappa}")));
    }
    if mc_reps == 0 {
        return Err(Error::Config("mc_reps must be positive".into()));
    }
    let c_p = normal_critical_value(p, alpha)?;
    let cut = c_p / (n as f64).sqrt();
    let chi = ChiSquared::new(n as f64 - 2.0).map_err(|e| Error::Config(e.to_string()))?;

    let chunks = mc_reps.div_ceil(MC_CHUNK);
    let hits: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = substream(seed, &[c as u64]);
            let len = MC_CHUNK.min(mc_reps - c * MC_CHUNK);
            (0..len)
                .filter(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let u: f64 = chi.sample(&mut rng);
                    (z / (z * z + u).sqrt()).abs() > cut
                })
                .count()
        })
        .sum();

    let p1 = hits as f64 / mc_reps as f64;
    let lambda0 = poisson_limit(alpha)?;
    Ok(TheoryReport {
        n,
        p,
        alpha,
        kappa,
        c_p,
        p1,
        p1_mc_se: (p1 * (1.0 - p1) / mc_reps as f64).sqrt(),
        mc_reps,
        p1_exact: exceedance_probability(n, c_p),
        expected_false: (p - kappa) as f64 * p1,
        lambda0,
        tail_bounds: TAIL_ORDERS.map(|r| (r, poisson_tail_bound(lambda0, r))).collect(),
    })
}
