//! Least-squares kernels used by the screeners: residuals after projecting the
//! response onto a predictor set, adjusted R², and simple-slope p-values.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{compensated_sum, DataMatrix, PredictorSet, ResponseVector};
use crate::special::student_t_two_sided;

/// Columns whose pivoted diagonal falls below this fraction of the leading one
/// are treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub residuals: Vec<f64>,
    pub r_squared: f64,
    pub adj_r_squared: f64,
    pub rank: usize,
    pub dof_resid: usize,
}

impl FitResult {
    pub fn residual_norm(&self) -> f64 {
        compensated_sum(self.residuals.iter().map(|r| r * r)).sqrt()
    }
}

/// OLS of `y` on the columns in `set` plus an intercept.
///
/// Rank-deficient designs are fit on the independent columns picked by
/// column-pivoted QR. An empty set returns the centered response.
pub fn resid(y: &ResponseVector, x: &DataMatrix, set: &PredictorSet) -> Result<FitResult> {
    let n = x.n();
    if y.len() != n {
        return Err(Error::Format(format!("response has {} values, matrix has {n} rows", y.len())));
    }
    set.validate(x.p())?;
    if set.len() + 2 > n {
        return Err(Error::Overdetermined { predictors: set.len(), n });
    }
    let columns: Vec<Vec<f64>> = set
        .iter()
        .map(|j| {
            let mean = x.col_mean()[j];
            x.column(j).iter().map(|&v| v - mean).collect()
        })
        .collect();
    Ok(fit_centered(y.centered(), columns))
}

/// Projects centered `yc` off the span of already-centered `columns`.
pub(crate) fn fit_centered(yc: &[f64], mut columns: Vec<Vec<f64>>) -> FitResult {
    let n = yc.len();
    let k = columns.len();
    let mut b = yc.to_vec();
    let mut reflectors: Vec<(usize, Vec<f64>)> = Vec::with_capacity(k);
    let mut lead = 0.0f64;

    for step in 0..k.min(n) {
        // pivot: largest remaining column norm over rows step..n
        let (pivot, norm) = (step..k)
            .map(|c| (c, columns[c][step..].iter().map(|v| v * v).sum::<f64>().sqrt()))
            .fold((step, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if step == 0 {
            lead = norm;
        }
        if norm <= RANK_TOLERANCE * lead || norm == 0.0 {
            break;
        }
        columns.swap(step, pivot);

        let col = &columns[step];
        let alpha = if col[step] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = col[step..].to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 == 0.0 {
            reflectors.push((step, v));
            continue;
        }
        for c in columns.iter_mut().skip(step + 1) {
            apply_reflector(&v, vnorm2, &mut c[step..]);
        }
        apply_reflector(&v, vnorm2, &mut b[step..]);
        reflectors.push((step, v));
    }

    let rank = reflectors.len();
    b[..rank].iter_mut().for_each(|t| *t = 0.0);
    for (step, v) in reflectors.iter().rev() {
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        if vnorm2 > 0.0 {
            apply_reflector(v, vnorm2, &mut b[*step..]);
        }
    }

    let tss = compensated_sum(yc.iter().map(|v| v * v));
    let rss = compensated_sum(b.iter().map(|v| v * v));
    let r_squared = if tss > 0.0 { (1.0 - rss / tss).clamp(0.0, 1.0) } else { 0.0 };
    let dof_resid = n.saturating_sub(rank + 1);
    let adj_r_squared = adjusted_r2(r_squared, n, rank).unwrap_or(f64::NEG_INFINITY);
    FitResult { residuals: b, r_squared, adj_r_squared, rank, dof_resid }
}

#[inline]
fn apply_reflector(v: &[f64], vnorm2: f64, target: &mut [f64]) {
    let dot: f64 = v.iter().zip(target.iter()).map(|(a, b)| a * b).sum();
    let scale = 2.0 * dot / vnorm2;
    for (t, &vi) in target.iter_mut().zip(v) {
        *t -= scale * vi;
    }
}

/// `1 - (1 - R²)(n - 1)/(n - k - 1)`.
pub fn adjusted_r2(r_squared: f64, n: usize, k: usize) -> Result<f64> {
    let dof = n as i64 - k as i64 - 1;
    if dof < 1 {
        return Err(Error::Dof { n, k, dof });
    }
    if k == 0 {
        return Ok(r_squared);
    }
    Ok(1.0 - (1.0 - r_squared) * (n as f64 - 1.0) / dof as f64)
}

/// Two-sided p-value of the slope in the simple regression of `y` on `x`
/// with intercept. Constant `x` (or constant `y`) is never significant.
pub fn simple_slope_pvalue(y: &[f64], x: &[f64]) -> Result<f64> {
    let n = y.len();
    if x.len() != n {
        return Err(Error::Format(format!("x has {} values, y has {n}", x.len())));
    }
    if n < 4 {
        return Err(Error::Config(format!("slope test needs n >= 4, got {n}")));
    }
    let rho = sample_correlation(y, x);
    if rho == 0.0 {
        return Ok(1.0);
    }
    if rho.abs() >= 1.0 {
        return Ok(0.0);
    }
    let dof = (n - 2) as f64;
    let t = rho * (dof / (1.0 - rho * rho)).sqrt();
    Ok(student_t_two_sided(t, dof))
}

/// Two-pass Pearson correlation; 0 when either side is constant.
pub(crate) fn sample_correlation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = compensated_sum(a.iter().copied()) / n;
    let mb = compensated_sum(b.iter().copied()) / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (&u, &v) in a.iter().zip(b) {
        let (du, dv) = (u - ma, v - mb);
        sab += du * dv;
        saa += du * du;
        sbb += dv * dv;
    }
    if saa == 0.0 || sbb == 0.0 || a.iter().all(|&v| v == a[0]) || b.iter().all(|&v| v == b[0]) {
        return 0.0;
    }
    (sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)
}
