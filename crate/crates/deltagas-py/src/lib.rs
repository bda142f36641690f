use deltagas::correlators::{self, Regime};
use deltagas::genfun::{self, FreeMethod, GenericOptions, ImpenetrableMethod};
use deltagas::grids::ContourSpec;
use deltagas::identities::{run_suite, Thresholds};
use deltagas::thermo::{default_tba_grid, solve_dressed_energy, GasParams};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: deltagas::Error) -> PyErr {
    match e {
        deltagas::Error::Numerical(m) => PyRuntimeError::new_err(m),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn regime(name: &str) -> PyResult<Regime> {
    match name {
        "impenetrable" => Ok(Regime::Impenetrable),
        "free" => Ok(Regime::Free),
        "generic" => Ok(Regime::Generic),
        _ => Err(PyValueError::new_err(format!("unknown regime {name}"))),
    }
}

type Series = (Vec<Complex64>, Complex64, f64);

/// Dressed energy on the default grid: (p, epsilon, converged, residual).
#[pyfunction]
#[pyo3(signature = (c, t, mu, nodes = 128, tol = 1e-12))]
fn solve_tba(c: f64, t: f64, mu: f64, nodes: usize, tol: f64) -> PyResult<(Vec<f64>, Vec<f64>, bool, f64)> {
    let params = GasParams::finite(c, t, mu).map_err(py_err)?;
    let grid = default_tba_grid(t, mu, nodes).map_err(py_err)?;
    let eps = solve_dressed_energy(&params, &grid, tol, 100_000).map_err(py_err)?;
    Ok((grid.nodes, eps.values, eps.converged, eps.residual))
}

/// (terms, total, tail_estimate); terms is empty for the nystrom method.
#[pyfunction]
#[pyo3(signature = (t, mu, x, phi, method = "nystrom", nmax = 8, nodes = 128))]
fn genfun_impenetrable(t: f64, mu: f64, x: f64, phi: Complex64, method: &str, nmax: usize, nodes: usize) -> PyResult<Series> {
    let m = match method {
        "nystrom" => ImpenetrableMethod::Nystrom,
        "series" => ImpenetrableMethod::Series(nmax),
        _ => return Err(PyValueError::new_err(format!("unknown method {method}"))),
    };
    let grid = genfun::limit_grid(t, mu, nodes).map_err(py_err)?;
    let e = genfun::genfun_impenetrable(t, mu, x, phi, m, &grid).map_err(py_err)?;
    Ok((e.terms, e.total, e.tail_estimate))
}

#[pyfunction]
#[pyo3(signature = (t, mu, x, phi, method = "perm_series", nmax = 8, nodes = 128))]
fn genfun_free(t: f64, mu: f64, x: f64, phi: Complex64, method: &str, nmax: usize, nodes: usize) -> PyResult<Series> {
    let m = match method {
        "perm_series" => FreeMethod::PermSeries(nmax),
        "resolvent" => FreeMethod::Resolvent,
        _ => return Err(PyValueError::new_err(format!("unknown method {method}"))),
    };
    let grid = genfun::limit_grid(t, mu, nodes).map_err(py_err)?;
    let e = genfun::genfun_free(t, mu, x, phi, m, &grid).map_err(py_err)?;
    Ok((e.terms, e.total, e.tail_estimate))
}

#[pyfunction]
#[pyo3(signature = (c, t, mu, x, phi, nmax = 2, nodes = 128, coarse = 24))]
#[allow(clippy::too_many_arguments)]
fn genfun_generic(py: Python<'_>, c: f64, t: f64, mu: f64, x: f64, phi: Complex64, nmax: usize, nodes: usize, coarse: usize) -> PyResult<Series> {
    py.detach(|| {
        let params = GasParams::finite(c, t, mu)?;
        let grid = default_tba_grid(t, mu, nodes)?;
        let eps = solve_dressed_energy(&params, &grid, 1e-12, 100_000)?;
        let spec = ContourSpec::default_for(c, x)?;
        let opts = GenericOptions { coarse, ..Default::default() };
        genfun::genfun_generic(&params, &eps, x, phi, nmax, &spec, &eps.grid, &opts)
    })
    .map(|s| (s.terms, s.total, s.tail_estimate))
    .map_err(py_err)
}

/// (density, g2, connected) from the closed forms or the series route.
#[pyfunction]
#[pyo3(signature = (name, t, mu, x, route = "closed"))]
fn correlate(name: &str, t: f64, mu: f64, x: f64, route: &str) -> PyResult<(f64, f64, f64)> {
    let r = regime(name)?;
    let res = match route {
        "closed" => correlators::correlators_closed(r, t, mu, x),
        "series" => correlators::correlators_from_series(r, t, mu, x),
        _ => return Err(PyValueError::new_err(format!("unknown route {route}"))),
    }
    .map_err(py_err)?;
    Ok((res.density, res.g2, res.connected))
}

/// Identity checks: list of (name, residual, tolerance, pass).
#[pyfunction]
#[pyo3(signature = (seeds = 25))]
fn verify(py: Python<'_>, seeds: u64) -> PyResult<Vec<(String, f64, f64, bool)>> {
    let res = py.detach(|| run_suite(seeds, &Thresholds::standard())).map_err(py_err)?;
    Ok(res.into_iter().map(|r| (r.name.to_string(), r.residual, r.tolerance, r.pass)).collect())
}

#[pymodule]
fn deltagas_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(solve_tba, m)?)?;
    m.add_function(wrap_pyfunction!(genfun_impenetrable, m)?)?;
    m.add_function(wrap_pyfunction!(genfun_free, m)?)?;
    m.add_function(wrap_pyfunction!(genfun_generic, m)?)?;
    m.add_function(wrap_pyfunction!(correlate, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
