//! End-to-end acceptance checks, one PASS/FAIL line each. Runs full-size
//! simulations, so expect a few minutes in total.

use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde_json::Value;
use sievecast::config::{Algorithm, ScreenConfig, ThresholdSpec};
use sievecast::rng::{rng_from_seed, substream};
use sievecast::simulation::{null_false_selections, run_cell, CovFamily, Method, SimCell, SimScenario, TableRow};
use sievecast::thresholds::bootstrap_threshold;
use sievecast::{db_sis, normal_threshold, resid, DataMatrix, PredictorSet, ResponseVector};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn sievecast(args: &[&str]) -> Result<Vec<u8>, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_sievecast"))
        .args(args)
        .env_remove("SIEVECAST_SEED")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("sievecast {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(out.stdout)
}

fn verdict(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn two_stage_cell(p: usize, t: usize) -> SimCell {
    SimCell::new(
        SimScenario::new(200, p, CovFamily::Identity, 0.8),
        Method::TwoStage,
        ScreenConfig { algorithm: Algorithm::TwoStage, partitions: t, ..ScreenConfig::default() },
    )
}

fn table1_spot_checks() -> Check {
    let out = sievecast(&["simulate", "--preset", "table1", "--reps", "50", "--n", "200", "--p", "34000", "--emit", "json", "--seed", "1"])?;
    let report: Value = serde_json::from_slice(&out).map_err(|e| e.to_string())?;
    let rows = report["rows"].as_array().ok_or("no rows")?;
    let find = |family: &str, rho1: Option<f64>, r: f64| {
        rows.iter()
            .find(|row| {
                let s = &row["cell"]["scenario"];
                s["cov"]["family"] == family && s["cov"]["rho1"].as_f64() == rho1 && s["r_star"].as_f64() == Some(r)
            })
            .ok_or(format!("row {family} r*={r} missing"))
    };
    let ident = find("identity", None, 0.95)?;
    let block = find("block", Some(0.5), 0.5)?;
    let (a1, m1) = (ident["mean_accuracy"].as_f64().unwrap(), ident["median_selected"].as_f64().unwrap());
    let a2 = block["mean_accuracy"].as_f64().unwrap();
    verdict(
        rows.len() == 8 && a1 >= 0.98 && (10.0..=14.0).contains(&m1) && a2 >= 0.97,
        format!("identity r*=0.95: acc {a1:.4}, median {m1}; block(0.5) r*=0.5: acc {a2:.4}"),
    )
}

fn table2_spot_check() -> Check {
    let row = run_cell(&two_stage_cell(136_000, 10), 0, 20, 2).map_err(|e| e.to_string())?;
    verdict(
        (row.mean_accuracy - 0.907).abs() <= 0.07 && (20.0..=34.0).contains(&row.median_selected),
        format!("p=136000, T=10: acc {:.3} (se {:.3}), median {}", row.mean_accuracy, row.se_accuracy, row.median_selected),
    )
}

fn monotone_in_partitions() -> Check {
    let rows: Vec<TableRow> = [5, 10, 15, 20]
        .iter()
        .enumerate()
        .map(|(i, &t)| run_cell(&two_stage_cell(68_000, t), i, 20, 3))
        .collect::<sievecast::Result<_>>()
        .map_err(|e| e.to_string())?;
    let acc: Vec<f64> = rows.iter().map(|r| r.mean_accuracy).collect();
    let se: Vec<f64> = rows.iter().map(|r| r.se_accuracy).collect();
    let rising = (0..2).all(|i| acc[i + 1] >= acc[i] - se[i].max(se[i + 1]));
    let flat = (acc[3] - acc[2]).abs() < 0.03;
    verdict(
        rising && flat,
        format!(
            "acc T=5/10/15/20: {:.3}/{:.3}/{:.3}/{:.3} (se {:.3}/{:.3}/{:.3}/{:.3})",
            acc[0], acc[1], acc[2], acc[3], se[0], se[1], se[2], se[3]
        ),
    )
}

fn false_selection_calibration() -> Check {
    let counts = null_false_selections(300, 2000, 0.5, 500, 4).map_err(|e| e.to_string())?;
    let m = counts.len() as f64;
    let mean = counts.iter().sum::<usize>() as f64 / m;
    let tail = counts.iter().filter(|&&c| c >= 2).count() as f64 / m;
    verdict(
        (0.55..=0.85).contains(&mean) && tail <= 0.27,
        format!("mean false selections {mean:.3}, P(N >= 2) = {tail:.3}"),
    )
}

fn threshold_consistency() -> Check {
    let mut worst = 0.0f64;
    for n in [300usize, 500] {
        let normal = normal_threshold(n, 100, 0.5).map_err(|e| e.to_string())?.value;
        for seed in 0..20u64 {
            let mut rng = substream(5, &[n as u64, seed]);
            let data: Vec<f64> = (0..n * 100).map(|_| StandardNormal.sample(&mut rng)).collect();
            let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let x = DataMatrix::from_column_major(n, 100, data).map_err(|e| e.to_string())?;
            let y = ResponseVector::new(y).map_err(|e| e.to_string())?;
            let boot = bootstrap_threshold(&x, &y, &PredictorSet::all(100), 0.5, 2000, &mut rng)
                .map_err(|e| e.to_string())?
                .value;
            worst = worst.max((boot - normal).abs() / normal);
        }
    }
    verdict(worst < 0.10, format!("max relative gap {worst:.4} over 40 data sets"))
}

fn reference_corr(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let sab: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let saa: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let sbb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

/// Residuals from the normal equations of the centered design (Gauss-Jordan).
#[allow(clippy::needless_range_loop)]
fn reference_residuals(y: &[f64], cols: &[&[f64]]) -> Vec<f64> {
    let n = y.len();
    let k = cols.len();
    let center = |v: &[f64]| {
        let m = v.iter().sum::<f64>() / n as f64;
        v.iter().map(|a| a - m).collect::<Vec<_>>()
    };
    let yc = center(y);
    let xc: Vec<Vec<f64>> = cols.iter().map(|c| center(c)).collect();
    let mut a = vec![vec![0.0; k + 1]; k];
    for i in 0..k {
        for j in 0..k {
            a[i][j] = xc[i].iter().zip(&xc[j]).map(|(u, v)| u * v).sum();
        }
        a[i][k] = xc[i].iter().zip(&yc).map(|(u, v)| u * v).sum();
    }
    for c in 0..k {
        let piv = (c..k).max_by(|&r, &s| a[r][c].abs().total_cmp(&a[s][c].abs())).unwrap();
        a.swap(c, piv);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for m in c..=k {
                    a[r][m] -= f * a[c][m];
                }
            }
        }
    }
    (0..n).map(|i| yc[i] - (0..k).map(|j| a[j][k] / a[j][j] * xc[j][i]).sum::<f64>()).collect()
}

fn oracle_equivalence() -> Check {
    let mut rng = rng_from_seed(6);
    let mut mismatches = 0;
    let mut worst_resid = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(10..=50);
        let p = rng.random_range(1..=30);
        let alpha = rng.random_range(0.05..0.95);
        let mut data: Vec<f64> = (0..n * p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let y: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
        for j in 0..p.min(3) {
            let w: f64 = rng.random_range(0.0..2.0);
            (0..n).for_each(|i| data[j * n + i] += w * y[i]);
        }
        let x = DataMatrix::from_column_major(n, p, data).map_err(|e| e.to_string())?;
        let yv = ResponseVector::new(y.clone()).map_err(|e| e.to_string())?;
        let got = db_sis(&yv, &x, &PredictorSet::all(p), &ThresholdSpec::normal(alpha), &mut rng_from_seed(0))
            .map_err(|e| e.to_string())?;
        let thr = normal_threshold(n, p, alpha).map_err(|e| e.to_string())?.value;
        let want = PredictorSet::new((0..p).filter(|&j| reference_corr(x.column(j), &y).abs() > thr));
        if got != want {
            mismatches += 1;
        }

        let k = p.min(5).min(n - 3);
        let set = PredictorSet::all(k);
        let fit = resid(&yv, &x, &set).map_err(|e| e.to_string())?;
        let cols: Vec<&[f64]> = (0..k).map(|j| x.column(j)).collect();
        let want = reference_residuals(&y, &cols);
        for (g, w) in fit.residuals.iter().zip(&want) {
            worst_resid = worst_resid.max((g - w).abs());
        }
    }
    verdict(
        mismatches == 0 && worst_resid < 1e-8,
        format!("db_sis mismatches {mismatches}/200, max residual gap {worst_resid:.2e}"),
    )
}

fn alpha_pattern() -> Check {
    let medians: Vec<f64> = [0.2, 0.5, 0.8]
        .iter()
        .enumerate()
        .map(|(i, &alpha)| {
            let cell = SimCell::new(
                SimScenario::new(200, 34_000, CovFamily::Identity, 0.91),
                Method::Basic,
                ScreenConfig { algorithm: Algorithm::Basic, threshold: ThresholdSpec { alpha, ..Default::default() }, ..Default::default() },
            );
            run_cell(&cell, i, 30, 7).map(|r| r.median_selected)
        })
        .collect::<sievecast::Result<_>>()
        .map_err(|e| e.to_string())?;
    verdict(
        medians[0] < medians[1] && medians[1] < medians[2],
        format!("median selected at alpha 0.2/0.5/0.8: {}/{}/{}", medians[0], medians[1], medians[2]),
    )
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("det.csv");
    let mut rng = rng_from_seed(8);
    let (n, p) = (120, 400);
    let mut text = (0..=p).map(|j| if j == 0 { "y".to_string() } else { format!("v{j}") }).collect::<Vec<_>>().join(",");
    text.push('\n');
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let e: f64 = StandardNormal.sample(&mut rng);
        let y = row[..5].iter().sum::<f64>() + e;
        text.push_str(&std::iter::once(y).chain(row).map(|v| v.to_string()).collect::<Vec<_>>().join(","));
        text.push('\n');
    }
    std::fs::write(&path, text).map_err(|e| e.to_string())?;
    let file = path.to_str().unwrap();

    let invocations: Vec<Vec<&str>> = vec![
        vec!["screen", "--input", file, "--response", "y", "--seed", "9"],
        vec!["screen", "--input", file, "--response", "y", "--threshold", "bootstrap", "--seed", "9"],
        vec!["screen", "--input", file, "--response", "y", "--algorithm", "two-stage", "--delta", "0.9", "--T", "4", "--seed", "9"],
        vec!["simulate", "--preset", "table1", "--reps", "3", "--n", "60", "--p", "500", "--emit", "json", "--seed", "9"],
        vec!["theory", "--n", "300", "--p", "2000", "--mc-reps", "200000", "--seed", "9"],
    ];
    for args in &invocations {
        let outputs: Vec<Vec<u8>> = ["1", "1", "8"]
            .iter()
            .map(|t| sievecast(&[&args[..], &["--threads", t]].concat()))
            .collect::<Result<_, _>>()?;
        if outputs.iter().any(|o| o != &outputs[0]) {
            return Err(format!("output differs for {args:?}"));
        }
    }
    verdict(true, format!("{} commands byte-identical over 2 runs and threads 1/8", invocations.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("table1 preset spot checks", table1_spot_checks),
        ("table2 preset spot check", table2_spot_check),
        ("monotone in T", monotone_in_partitions),
        ("false-selection calibration", false_selection_calibration),
        ("threshold consistency", threshold_consistency),
        ("oracle equivalence", oracle_equivalence),
        ("alpha pattern", alpha_pattern),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let (tag, detail) = match check() {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {}: {tag} {name} [{:.1}s] {detail}", i + 1, start.elapsed().as_secs_f64());
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
