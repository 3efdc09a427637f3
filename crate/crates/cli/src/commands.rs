use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use sievecast::config::{Algorithm, ScreenConfig, ThresholdMode, ThresholdSpec};
use sievecast::rng::{rng_from_seed, substream};
use sievecast::screening::db_sis;
use sievecast::simulation::{preset_grid, run_table, table_to_csv, PresetOptions};
use sievecast::{correlation_scan, screen, theory_report, DataMatrix, MatrixFormat, PredictorSet, ResponseVector};
use thiserror::Error;

use crate::report::{BenchReport, ResponseInfo, ScreenReport, SimulateReport, TheoryOutput, SCHEMA_VERSION};
use crate::{AlgorithmArg, BenchArgs, Command, Common, EmitArg, FormatArg, ScreenArgs, SimulateArgs, TheoryArgs, ThresholdArg, ThresholdArgs};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] sievecast::Error),
    #[error("{0}")]
    Usage(String),
    #[error("cannot write output: {0}")]
    Output(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(sievecast::Error::DegenerateResponse) => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> CliResult<()> {
    match command {
        Command::Screen(a) => cmd_screen(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Theory(a) => cmd_theory(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn init_threads(common: &Common) -> CliResult<()> {
    if let Some(t) = common.threads {
        if t == 0 {
            return Err(CliError::Usage("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    Ok(())
}

fn emit(common: &Common, body: &str) -> CliResult<()> {
    match &common.output {
        Some(path) => std::fs::write(path, body).map_err(CliError::Output),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(body.as_bytes()).and_then(|_| out.flush()).map_err(CliError::Output)
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| CliError::Usage(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

fn threshold_spec(a: &ThresholdArgs) -> ThresholdSpec {
    let mode = match a.threshold {
        ThresholdArg::Auto => ThresholdMode::Auto,
        ThresholdArg::Normal => ThresholdMode::Normal,
        ThresholdArg::Bootstrap => ThresholdMode::Bootstrap,
    };
    ThresholdSpec { alpha: a.alpha, mode, bootstrap_reps: a.bootstrap_reps, ..ThresholdSpec::default() }
}

fn infer_format(path: &Path) -> MatrixFormat {
    match path.extension().and_then(|e| e.to_str()) {
        Some("svm1") | Some("bin") => MatrixFormat::Svm1,
        _ => MatrixFormat::Csv,
    }
}

fn resolve_response(x: &DataMatrix, selector: &str) -> CliResult<usize> {
    if let Some(j) = x.column_index(selector) {
        return Ok(j);
    }
    match selector.parse::<usize>() {
        Ok(j) if j < x.p() => Ok(j),
        Ok(j) => Err(CliError::Usage(format!("response column {j} out of range: input has {} columns", x.p()))),
        Err(_) => Err(CliError::Usage(format!("response column {selector:?} not found in input header"))),
    }
}

fn cmd_screen(a: ScreenArgs) -> CliResult<()> {
    init_threads(&a.common)?;
    let start = Instant::now();
    let config = ScreenConfig {
        threshold: threshold_spec(&a.threshold),
        delta: a.threshold.delta,
        algorithm: match a.algorithm {
            AlgorithmArg::Basic => Algorithm::Basic,
            AlgorithmArg::TwoStage => Algorithm::TwoStage,
            AlgorithmArg::Auto => Algorithm::Auto,
        },
        partitions: a.partitions,
        seed: a.common.seed,
    };
    config.validate()?;

    let format = match a.format {
        Some(FormatArg::Csv) => MatrixFormat::Csv,
        Some(FormatArg::Svm1) => MatrixFormat::Svm1,
        None => infer_format(&a.input),
    };
    let full = DataMatrix::load_path(&a.input, format)?;
    let resp_col = resolve_response(&full, &a.response)?;
    let resp_name = full.names().map(|n| n[resp_col].clone());
    let (x, y) = full.take_column(resp_col)?;
    let y = ResponseVector::new(y)?;
    if y.is_degenerate() {
        return Err(sievecast::Error::DegenerateResponse.into());
    }

    let outcome = screen(&y, &x, &config, &mut rng_from_seed(config.seed))?;
    let selected: Vec<usize> = outcome.selected().iter().collect();
    let columns: Vec<usize> = selected.iter().map(|&j| if j >= resp_col { j + 1 } else { j }).collect();
    let names = match x.names() {
        Some(names) => selected.iter().map(|&j| names[j].clone()).collect(),
        None => columns.iter().map(|c| format!("x{c}")).collect(),
    };
    let partition_k = match &outcome {
        sievecast::ScreenOutcome::TwoStage(r) => r.runs.first().map(|run| run.k),
        sievecast::ScreenOutcome::Basic(_) => None,
    };

    let report = ScreenReport {
        schema_version: SCHEMA_VERSION,
        command: "screen",
        input: a.input.display().to_string(),
        n: x.n(),
        p: x.p(),
        response: ResponseInfo { column: resp_col, name: resp_name },
        algorithm: outcome.algorithm(),
        partition_k,
        selected_indices: selected,
        selected_columns: columns,
        selected_names: names,
        config,
        result: outcome,
        wall_time_ms: a.timing.then(|| start.elapsed().as_millis() as u64),
    };
    emit(&a.common, &to_json(&report)?)
}

fn cmd_simulate(a: SimulateArgs) -> CliResult<()> {
    init_threads(&a.common)?;
    if a.reps == 0 {
        return Err(CliError::Usage("--reps must be positive".into()));
    }
    let opts = PresetOptions {
        n: a.n,
        p: a.p,
        partitions: a.partitions,
        threshold: threshold_spec(&a.threshold),
        delta: a.threshold.delta,
    };
    let cells = preset_grid(&a.preset, &opts)?;
    let rows = run_table(&cells, a.reps, a.common.seed)?;
    let body = match a.emit {
        EmitArg::Csv => table_to_csv(&rows),
        EmitArg::Json => to_json(&SimulateReport {
            schema_version: SCHEMA_VERSION,
            command: "simulate",
            preset: a.preset,
            reps: a.reps,
            seed: a.common.seed,
            rows,
        })?,
    };
    emit(&a.common, &body)
}

fn cmd_theory(a: TheoryArgs) -> CliResult<()> {
    init_threads(&a.common)?;
    let report = theory_report(a.n, a.p, a.alpha, a.kappa, a.mc_reps, a.common.seed)?;
    emit(
        &a.common,
        &to_json(&TheoryOutput { schema_version: SCHEMA_VERSION, command: "theory", seed: a.common.seed, report })?,
    )
}

/// Matrix, response, per-column statistics and the correlation buffer.
pub fn bench_bytes(n: usize, p: usize) -> u64 {
    8 * (n as u64 * p as u64 + n as u64 + 3 * p as u64)
}

fn cmd_bench(a: BenchArgs) -> CliResult<()> {
    init_threads(&a.common)?;
    if a.mem_cap_gib.is_nan() || a.mem_cap_gib <= 0.0 {
        return Err(CliError::Usage("--mem-cap-gib must be positive".into()));
    }
    let bytes = bench_bytes(a.n, a.p);
    let cap = a.mem_cap_gib * (1u64 << 30) as f64;
    if bytes as f64 > cap {
        return Err(CliError::Usage(format!(
            "a {}x{} matrix needs about {:.2} GiB, above the {} GiB cap",
            a.n,
            a.p,
            bytes as f64 / (1u64 << 30) as f64,
            a.mem_cap_gib
        )));
    }
    let spec = ThresholdSpec::normal(a.alpha);
    spec.validate()?;

    let mut rng = substream(a.common.seed, &[0]);
    let data: Vec<f64> = (0..a.n * a.p).map(|_| StandardNormal.sample(&mut rng)).collect();
    let y: Vec<f64> = (0..a.n).map(|_| StandardNormal.sample(&mut rng)).collect();
    let x = DataMatrix::from_column_major(a.n, a.p, data)?;
    let y = ResponseVector::new(y)?;
    let all = PredictorSet::all(a.p);

    let t0 = Instant::now();
    let rho = correlation_scan(&x, &y, &all)?;
    let scan = t0.elapsed().as_secs_f64();
    std::hint::black_box(&rho);

    let t1 = Instant::now();
    let selected = db_sis(&y, &x, &all, &spec, &mut rng)?;
    let pass = t1.elapsed().as_secs_f64();

    let report = BenchReport {
        schema_version: SCHEMA_VERSION,
        command: "bench",
        n: a.n,
        p: a.p,
        threads: rayon::current_num_threads(),
        estimated_peak_bytes: bytes,
        scan_seconds: scan,
        columns_per_second: a.p as f64 / scan.max(1e-9),
        screen_pass_seconds: pass,
        selected: selected.len(),
    };
    emit(&a.common, &to_json(&report)?)
}
