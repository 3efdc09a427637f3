//! Python bindings. Matrices cross the boundary as lists of columns.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use sievecast::config::{Algorithm, ScreenConfig, ThresholdMode, ThresholdSpec};
use sievecast::rng::rng_from_seed;

fn value_error(e: sievecast::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn threshold_mode(name: &str) -> PyResult<ThresholdMode> {
    match name {
        "auto" => Ok(ThresholdMode::Auto),
        "normal" => Ok(ThresholdMode::Normal),
        "bootstrap" => Ok(ThresholdMode::Bootstrap),
        other => Err(PyValueError::new_err(format!("unknown threshold mode {other:?}"))),
    }
}

fn algorithm(name: &str) -> PyResult<Algorithm> {
    match name {
        "auto" => Ok(Algorithm::Auto),
        "basic" => Ok(Algorithm::Basic),
        "two-stage" | "two_stage" => Ok(Algorithm::TwoStage),
        other => Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    }
}

/// Column-major design matrix.
#[pyclass(name = "DataMatrix", module = "sievecast_py", frozen)]
struct PyDataMatrix {
    inner: sievecast::DataMatrix,
}

#[pymethods]
impl PyDataMatrix {
    #[new]
    fn new(columns: Vec<Vec<f64>>) -> PyResult<Self> {
        sievecast::DataMatrix::from_columns(columns).map(|inner| Self { inner }).map_err(value_error)
    }

    /// Loads a CSV (`format="csv"`) or SVM1 binary (`format="svm1"`) file.
    #[staticmethod]
    #[pyo3(signature = (path, format = "csv"))]
    fn load(path: &str, format: &str) -> PyResult<Self> {
        let format = match format {
            "csv" => sievecast::MatrixFormat::Csv,
            "svm1" => sievecast::MatrixFormat::Svm1,
            other => return Err(PyValueError::new_err(format!("unknown format {other:?}"))),
        };
        sievecast::DataMatrix::load_path(std::path::Path::new(path), format)
            .map(|inner| Self { inner })
            .map_err(value_error)
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn p(&self) -> usize {
        self.inner.p()
    }

    #[getter]
    fn names(&self) -> Option<Vec<String>> {
        self.inner.names().map(<[String]>::to_vec)
    }

    fn column(&self, j: usize) -> PyResult<Vec<f64>> {
        self.inner.check_index(j).map_err(value_error)?;
        Ok(self.inner.column(j).to_vec())
    }

    /// Splits off column `j`: returns `(predictors, response)`.
    fn take_column(&self, j: usize) -> PyResult<(PyDataMatrix, Vec<f64>)> {
        let (inner, y) = self.inner.take_column(j).map_err(value_error)?;
        Ok((PyDataMatrix { inner }, y))
    }

    fn __repr__(&self) -> String {
        format!("DataMatrix(n={}, p={})", self.inner.n(), self.inner.p())
    }
}

/// Outcome of a screening run.
#[pyclass(name = "ScreenResult", module = "sievecast_py", frozen)]
struct PyScreenResult {
    outcome: sievecast::ScreenOutcome,
}

#[pymethods]
impl PyScreenResult {
    #[getter]
    fn selected(&self) -> Vec<usize> {
        self.outcome.selected().iter().collect()
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        match self.outcome.algorithm() {
            Algorithm::TwoStage => "two-stage",
            _ => "basic",
        }
    }

    /// Full trace (basic) or per-partition runs and vote integration (two-stage).
    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.outcome).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn __repr__(&self) -> String {
        format!("ScreenResult(algorithm={:?}, selected={:?})", self.algorithm(), self.selected())
    }
}

fn response(y: Vec<f64>) -> PyResult<sievecast::ResponseVector> {
    sievecast::ResponseVector::new(y).map_err(value_error)
}

#[pyfunction]
fn normal_threshold(n: usize, p: usize, alpha: f64) -> PyResult<f64> {
    sievecast::normal_threshold(n, p, alpha).map(|t| t.value).map_err(value_error)
}

/// One DB-SIS pass over every column.
#[pyfunction]
#[pyo3(signature = (x, y, alpha = 0.5, threshold = "normal", bootstrap_reps = 500, seed = 0))]
fn db_sis(x: &PyDataMatrix, y: Vec<f64>, alpha: f64, threshold: &str, bootstrap_reps: usize, seed: u64) -> PyResult<Vec<usize>> {
    let spec = ThresholdSpec { alpha, mode: threshold_mode(threshold)?, bootstrap_reps, ..ThresholdSpec::default() };
    let all = sievecast::PredictorSet::all(x.inner.p());
    sievecast::db_sis(&response(y)?, &x.inner, &all, &spec, &mut rng_from_seed(seed))
        .map(sievecast::PredictorSet::into_vec)
        .map_err(value_error)
}

#[pyfunction]
#[pyo3(signature = (
    x, y, alpha = 0.5, delta = 0.03, algorithm = "auto", threshold = "auto",
    partitions = 10, bootstrap_reps = 500, seed = 0
))]
#[allow(clippy::too_many_arguments)]
fn screen(
    py: Python<'_>,
    x: &PyDataMatrix,
    y: Vec<f64>,
    alpha: f64,
    delta: f64,
    algorithm: &str,
    threshold: &str,
    partitions: usize,
    bootstrap_reps: usize,
    seed: u64,
) -> PyResult<PyScreenResult> {
    let config = ScreenConfig {
        threshold: ThresholdSpec { alpha, mode: threshold_mode(threshold)?, bootstrap_reps, ..ThresholdSpec::default() },
        delta,
        algorithm: self::algorithm(algorithm)?,
        partitions,
        seed,
    };
    let y = response(y)?;
    let outcome = py
        .detach(|| sievecast::screen(&y, &x.inner, &config, &mut rng_from_seed(seed)))
        .map_err(value_error)?;
    Ok(PyScreenResult { outcome })
}

/// OLS of `y` on an intercept plus the listed columns.
/// Returns `(residuals, r_squared, adj_r_squared)`.
#[pyfunction]
fn resid(x: &PyDataMatrix, y: Vec<f64>, columns: Vec<usize>) -> PyResult<(Vec<f64>, f64, f64)> {
    let fit = sievecast::resid(&response(y)?, &x.inner, &sievecast::PredictorSet::new(columns)).map_err(value_error)?;
    Ok((fit.residuals, fit.r_squared, fit.adj_r_squared))
}

/// False-selection calculator for the normal threshold.
#[pyfunction]
#[pyo3(signature = (n, p, alpha = 0.5, kappa = 0, mc_reps = 100_000, seed = 0))]
fn theory<'py>(
    py: Python<'py>,
    n: usize,
    p: usize,
    alpha: f64,
    kappa: usize,
    mc_reps: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let r = py
        .detach(|| sievecast::theory_report(n, p, alpha, kappa, mc_reps, seed))
        .map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("n", r.n)?;
    d.set_item("p", r.p)?;
    d.set_item("alpha", r.alpha)?;
    d.set_item("kappa", r.kappa)?;
    d.set_item("c_p", r.c_p)?;
    d.set_item("p1", r.p1)?;
    d.set_item("p1_mc_se", r.p1_mc_se)?;
    d.set_item("p1_exact", r.p1_exact)?;
    d.set_item("expected_false", r.expected_false)?;
    d.set_item("lambda0", r.lambda0)?;
    d.set_item("tail_bounds", r.tail_bounds)?;
    Ok(d)
}

#[pymodule]
fn sievecast_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyDataMatrix>()?;
    m.add_class::<PyScreenResult>()?;
    m.add_function(wrap_pyfunction!(normal_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(db_sis, m)?)?;
    m.add_function(wrap_pyfunction!(screen, m)?)?;
    m.add_function(wrap_pyfunction!(resid, m)?)?;
    m.add_function(wrap_pyfunction!(theory, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn option_names_parse() {
        assert_eq!(threshold_mode("bootstrap").unwrap(), ThresholdMode::Bootstrap);
        assert_eq!(algorithm("two_stage").unwrap(), Algorithm::TwoStage);
        assert_eq!(algorithm("two-stage").unwrap(), Algorithm::TwoStage);
        assert!(threshold_mode("median").is_err());
        assert!(algorithm("lasso").is_err());
    }
}
