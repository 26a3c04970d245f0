//! Python bindings. Fields cross the boundary as flat row-major lists of
//! length `n * n`; run and sweep summaries come back as JSON strings.

use std::path::Path;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use qnlab::harness::{self, RunConfig};
use qnlab::{Error, ScalarField, TorusGrid};

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io(_) => PyOSError::new_err(e.to_string()),
        Error::Parameter(_) | Error::Config(_) | Error::Hypothesis(_) => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn field(values: Vec<f64>, n: usize) -> PyResult<ScalarField> {
    let grid = TorusGrid::new(n).map_err(py_err)?;
    ScalarField::from_values(grid, values).map_err(py_err)
}

fn json<T: serde::Serialize>(v: &T) -> PyResult<String> {
    serde_json::to_string(v).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

/// Solves `-eps * lap(phi) = rhs - mean(rhs)` with zero-mean `phi`.
#[pyfunction]
fn poisson_neg(values: Vec<f64>, n: usize, eps: f64) -> PyResult<Vec<f64>> {
    let phi = qnlab::poisson_neg(&field(values, n)?, eps).map_err(py_err)?;
    Ok(phi.into_values())
}

/// Divergence-free velocity `(u1, u2)` with curl equal to `omega`.
#[pyfunction]
fn biot_savart(omega: Vec<f64>, n: usize) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let u = qnlab::biot_savart(&field(omega, n)?).map_err(py_err)?;
    Ok((u.x1.into_values(), u.x2.into_values()))
}

#[pyfunction]
fn h_minus1_norm(values: Vec<f64>, n: usize) -> PyResult<f64> {
    Ok(qnlab::h_minus1_norm(&field(values, n)?))
}

/// Least-squares slope of `log(values)` against `log(eps)`.
#[pyfunction]
fn fit_rate(eps: Vec<f64>, values: Vec<f64>) -> PyResult<f64> {
    harness::fit_rate(&eps, &values).map_err(py_err)
}

/// Parses config text (`key = value` lines) and returns it normalized.
#[pyfunction]
fn parse_config(text: &str) -> PyResult<String> {
    Ok(RunConfig::from_text(text).map_err(py_err)?.to_text())
}

/// Runs one configuration into `out` and returns the summary as JSON.
#[pyfunction]
#[pyo3(signature = (config_text, out))]
fn run(py: Python<'_>, config_text: &str, out: &str) -> PyResult<String> {
    let c = RunConfig::from_text(config_text).map_err(py_err)?;
    let rep = py.detach(|| harness::run_single_in(&c, Path::new(out))).map_err(py_err)?;
    json(&rep.summary)
}

/// Runs an epsilon sweep into `out` and returns the sweep report as JSON.
#[pyfunction]
fn sweep(py: Python<'_>, config_text: &str, eps: Vec<f64>, out: &str) -> PyResult<String> {
    let c = RunConfig::from_text(config_text).map_err(py_err)?;
    let rep = py.detach(|| harness::sweep_epsilon(&c, &eps, Path::new(out))).map_err(py_err)?;
    json(&rep)
}

#[pymodule]
fn qnlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(poisson_neg, m)?)?;
    m.add_function(wrap_pyfunction!(biot_savart, m)?)?;
    m.add_function(wrap_pyfunction!(h_minus1_norm, m)?)?;
    m.add_function(wrap_pyfunction!(fit_rate, m)?)?;
    m.add_function(wrap_pyfunction!(parse_config, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    Ok(())
}
