//! Normal quantile and Student-t tail probabilities.

use statrs::function::beta::beta_reg;

/// Standard normal quantile, Wichura's AS 241 (PPND16).
///
/// Relative accuracy is about 1e-16 over the open unit interval. Returns
/// `-inf`/`+inf` at 0 and 1 and NaN outside `[0, 1]`.
pub fn normal_quantile(p: f64) -> f64 {
    if p.is_nan() || !(0.0..=1.0).contains(&p) {
        return f64::NAN;
    }
    if p == 0.0 {
        return f64::NEG_INFINITY;
    }
    if p == 1.0 {
        return f64::INFINITY;
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    normal_tail_quantile(r, q < 0.0)
}

/// Quantile at lower-tail probability `tail` when `lower`, else at `1 - tail`,
/// without ever forming `1 - tail`.
pub fn normal_quantile_tail(tail: f64, lower: bool) -> f64 {
    if tail.is_nan() || !(0.0..=1.0).contains(&tail) {
        return f64::NAN;
    }
    if tail >= 0.5 {
        let p = if lower { tail } else { 1.0 - tail };
        return normal_quantile(p);
    }
    if tail == 0.0 {
        return if lower { f64::NEG_INFINITY } else { f64::INFINITY };
    }
    if (0.5 - tail) <= 0.425 {
        let q = if lower { tail - 0.5 } else { 0.5 - tail };
        let r = 0.180625 - q * q;
        return q * poly(&A, r) / poly(&B, r);
    }
    normal_tail_quantile(tail, lower)
}

fn normal_tail_quantile(tail: f64, lower: bool) -> f64 {
    let r = (-tail.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly(&C, r) / poly(&D, r)
    } else {
        let r = r - 5.0;
        poly(&E, r) / poly(&F, r)
    };
    if lower {
        -val
    } else {
        val
    }
}

#[inline]
fn poly(coef: &[f64; 8], x: f64) -> f64 {
    coef.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

#[allow(clippy::excessive_precision)]
const A: [f64; 8] = [
    3.387132872796366608,
    133.14166789178437745,
    1971.5909503065514427,
    13731.693765509461125,
    45921.953931549871457,
    67265.770927008700853,
    33430.575583588128105,
    2509.0809287301226727,
];
#[allow(clippy::excessive_precision)]
const B: [f64; 8] = [
    1.0,
    42.313330701600911252,
    687.1870074920579083,
    5394.1960214247511077,
    21213.794301586595867,
    39307.89580009271061,
    28729.085735721942674,
    5226.495278852545925,
];
#[allow(clippy::excessive_precision)]
const C: [f64; 8] = [
    1.42343711074968357734,
    4.6303378461565452959,
    5.7694972214606914055,
    3.64784832476320460504,
    1.27045825245236838258,
    0.24178072517745061177,
    0.0227238449892691845833,
    7.7454501427834140764e-4,
];
#[allow(clippy::excessive_precision)]
const D: [f64; 8] = [
    1.0,
    2.05319162663775882187,
    1.6763848301838038494,
    0.68976733498510000455,
    0.14810397642748007459,
    0.0151986665636164571966,
    5.475938084995344946e-4,
    1.05075007164441684324e-9,
];
#[allow(clippy::excessive_precision)]
const E: [f64; 8] = [
    6.6579046435011037772,
    5.4637849111641143699,
    1.7848265399172913358,
    0.29656057182850489123,
    0.026532189526576123093,
    0.0012426609473880784386,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
#[allow(clippy::excessive_precision)]
const F: [f64; 8] = [
    1.0,
    0.59983220655588793769,
    0.13692988092273580531,
    0.0148753612908506148525,
    7.868691311456132591e-4,
    1.8463183175100546818e-5,
    1.4215117583164458887e-7,
    2.04426310338993978564e-15,
];

/// Two-sided tail `P(|T| > |t|)` for Student-t with `dof` degrees of freedom.
pub fn student_t_two_sided(t: f64, dof: f64) -> f64 {
    if t.is_nan() {
        return f64::NAN;
    }
    if t.is_infinite() {
        return 0.0;
    }
    // P(|T| > |t|) = I_{dof/(dof+t^2)}(dof/2, 1/2)
    let x = dof / (dof + t * t);
    beta_reg(dof / 2.0, 0.5, x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use statrs::function::erf::erfc;

    fn normal_cdf(x: f64) -> f64 {
        0.5 * erfc(-x / std::f64::consts::SQRT_2)
    }

    fn bisect_quantile(p: f64) -> f64 {
        let (mut lo, mut hi) = (-40.0f64, 40.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal_cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn matches_bisection_oracle() {
        let probes = [
            1e-300, 1e-100, 1e-20, 1e-10, 1e-5, 0.001, 0.01, 0.025, 0.07, 0.1, 0.2, 0.3, 0.4, 0.5,
            0.6, 0.75, 0.9, 0.95, 0.975, 0.99, 0.999,
        ];
        for &p in &probes {
            let z = normal_quantile(p);
            let oracle = bisect_quantile(p);
            let scale = oracle.abs().max(1e-300);
            if p != 0.5 {
                assert!(((z - oracle) / scale).abs() < 1e-10, "p={p}: {z} vs {oracle}");
            } else {
                assert!(z.abs() < 1e-15);
            }
        }
    }

    #[test]
    fn known_values() {
        assert!((normal_quantile(0.75) - 0.674_489_750_196_081_7).abs() < 1e-15);
        assert!((normal_quantile(0.975) - 1.959_963_984_540_054).abs() < 1e-14);
        assert_eq!(normal_quantile(0.0), f64::NEG_INFINITY);
        assert_eq!(normal_quantile(1.0), f64::INFINITY);
        assert!(normal_quantile(1.5).is_nan());
    }

    #[test]
    fn tail_form_agrees_and_is_antisymmetric() {
        for &t in &[1e-12, 1e-6, 0.001, 0.04, 0.2, 0.49] {
            let upper = normal_quantile_tail(t, false);
            let lower = normal_quantile_tail(t, true);
            assert_eq!(upper, -lower);
            assert!((lower - normal_quantile(t)).abs() <= 1e-15 * lower.abs().max(1.0));
        }
    }

    #[test]
    fn t_two_sided_reference_values() {
        // t_{0.975, 10} = 2.228138851986...
        assert!((student_t_two_sided(2.228_138_851_986_273_5, 10.0) - 0.05).abs() < 1e-12);
        assert!((student_t_two_sided(0.0, 5.0) - 1.0).abs() < 1e-15);
        // dof = 1 is Cauchy: P(|T| > 1) = 0.5
        assert!((student_t_two_sided(1.0, 1.0) - 0.5).abs() < 1e-12);
    }
}
