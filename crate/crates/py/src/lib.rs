//! Python bindings: map evaluation, Fatou-coordinate data, the two-cycle,
//! Lavaurs tri-state grids and single acceptance criteria.

use implosion_core::dynamics::{fixed_points, henon_apply, Direction, HenonParams};
use implosion_core::fatou::{FatouConfig, FatouEngine, ParabolicData};
use implosion_core::lavaurs::{c0_estimate, lavaurs_slice_grid, transition_h, CylinderEnd, HopBudget, ZetaBox};
use implosion_core::periodic::two_cycle as core_two_cycle;
use implosion_core::verify::{run_criterion, VerifyOptions};
use implosion_core::{Error, Point2};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::InvalidParams(m) => PyValueError::new_err(m),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

type Pair = (Complex64, Complex64);

/// One forward (or inverse) step of the Henon map.
#[pyfunction]
#[pyo3(signature = (a, eps, x, y, inverse = false))]
fn henon(a: Complex64, eps: Complex64, x: Complex64, y: Complex64, inverse: bool) -> PyResult<Pair> {
    let f = HenonParams::new(a, eps).map_err(py_err)?;
    let dir = if inverse { Direction::Inverse } else { Direction::Forward };
    let p = henon_apply(&f, Point2::new(x, y), dir).map_err(py_err)?;
    Ok((p.x, p.y))
}

#[pyfunction]
fn henon_fixed_points(a: Complex64, eps: Complex64) -> PyResult<(Pair, Pair)> {
    let f = HenonParams::new(a, eps).map_err(py_err)?;
    let [p, q] = fixed_points(&f);
    Ok(((p.x, p.y), (q.x, q.y)))
}

/// Closed-form value of the constant c0+ for the parabolic map.
#[pyfunction]
fn c0_plus(a: Complex64) -> PyResult<Complex64> {
    Ok(ParabolicData::henon(a).map_err(py_err)?.c0_plus)
}

/// Numerical c0 estimate at the given cylinder height (negative for the lower end).
#[pyfunction]
fn c0_numeric(a: Complex64, height: f64) -> PyResult<Complex64> {
    let eng = FatouEngine::henon(a, FatouConfig::default()).map_err(py_err)?;
    let end = if height >= 0.0 { CylinderEnd::Upper } else { CylinderEnd::Lower };
    c0_estimate(&eng, end, height.abs()).map_err(py_err)
}

#[pyfunction]
fn transition(a: Complex64, alpha: Complex64, zeta: Complex64) -> PyResult<Complex64> {
    let eng = FatouEngine::henon(a, FatouConfig::default()).map_err(py_err)?;
    transition_h(&eng, alpha, zeta).map_err(py_err)
}

/// The period-two saddle: points and the two multipliers.
#[pyfunction]
#[pyo3(signature = (a, eps = Complex64::new(0.0, 0.0)))]
fn two_cycle(a: Complex64, eps: Complex64) -> PyResult<(Vec<Pair>, Pair)> {
    let o = core_two_cycle(a, eps).map_err(py_err)?;
    Ok((o.points.iter().map(|p| (p.x, p.y)).collect(), o.multipliers))
}

/// Row-major tri-state codes (0 gray, 1 black, 2 white, 3 undecided).
#[pyfunction]
#[pyo3(signature = (a, alpha, window, width, height, max_hops = 64))]
fn lavaurs_codes(
    py: Python<'_>,
    a: Complex64,
    alpha: Complex64,
    window: (f64, f64, f64, f64),
    width: usize,
    height: usize,
    max_hops: usize,
) -> PyResult<Vec<u8>> {
    let eng = FatouEngine::henon(a, FatouConfig::default()).map_err(py_err)?;
    let bx = ZetaBox { re_min: window.0, re_max: window.1, im_min: window.2, im_max: window.3 };
    let budget = HopBudget { max_hops, ..HopBudget::default() };
    let g = py.detach(|| lavaurs_slice_grid(&eng, alpha, &bx, width, height, &budget)).map_err(py_err)?;
    Ok(g.data.iter().map(|p| p.code()).collect())
}

/// Run one acceptance criterion; returns the report as a JSON string.
#[pyfunction]
#[pyo3(signature = (id, tolerance_scale = 1.0))]
fn criterion(py: Python<'_>, id: u8, tolerance_scale: f64) -> PyResult<String> {
    let opts = VerifyOptions { tolerance_scale, ..VerifyOptions::default() };
    let r = py.detach(|| run_criterion(id, &opts));
    serde_json::to_string(&r).map_err(|e| PyRuntimeError::new_err(e.to_string()))
}

#[pymodule]
fn implosion(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(henon, m)?)?;
    m.add_function(wrap_pyfunction!(henon_fixed_points, m)?)?;
    m.add_function(wrap_pyfunction!(c0_plus, m)?)?;
    m.add_function(wrap_pyfunction!(c0_numeric, m)?)?;
    m.add_function(wrap_pyfunction!(transition, m)?)?;
    m.add_function(wrap_pyfunction!(two_cycle, m)?)?;
    m.add_function(wrap_pyfunction!(lavaurs_codes, m)?)?;
    m.add_function(wrap_pyfunction!(criterion, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_functions_round_trip() {
        let a = Complex64::new(0.3, 0.0);
        let z = Complex64::new(0.0, 0.0);
        let (x, y) = henon(a, z, Complex64::new(0.2, 0.1), Complex64::new(0.0, -0.4), false).unwrap();
        let (bx, by) = henon(a, z, x, y, true).unwrap();
        assert!((bx - Complex64::new(0.2, 0.1)).norm() < 1e-12 && (by - Complex64::new(0.0, -0.4)).norm() < 1e-12);
        assert!((c0_plus(a).unwrap().im + 5.8336).abs() < 1e-3);
        assert!(c0_plus(Complex64::new(1.0, 0.0)).is_err());
    }
}
