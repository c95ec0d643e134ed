//! Python module `hkpath`.

use hk::exchange::{self, DiagnosticSetup};
use hk::fresnel;
use hk::gauge::{self, CousinOptions, Division1D, ExtReal, Gauge1D};
use hk::integrate::{oscillatory_full_line, IntegratorConfig};
use hk::pathint::{self, Potential, PropagatorQuery, Sampling, SliceGrid, SlicedReport};
use hk::{acceptance, config::RunConfig, Complex64};
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(hkpath, HkpathError, PyException);

fn err(e: hk::Error) -> PyErr {
    HkpathError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    HkpathError::new_err(e.to_string())
}

/// A transition `(xi_start, tau_start) -> (xi_end, tau_end)`.
///
/// `potential` is either a descriptor (`"zero"`, `"const:<c>"`,
/// `"harmonic:<omega>"`) or a Python callable `V(x, t) -> float`.
#[pyclass(name = "PropagatorQuery", module = "hkpath")]
#[derive(Clone)]
struct PyQuery {
    inner: PropagatorQuery,
}

fn potential_from(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<Potential> {
    if let Ok(s) = obj.extract::<String>() {
        return s.parse().map_err(err);
    }
    if !obj.is_callable() {
        return Err(HkpathError::new_err("potential must be a descriptor string or a callable"));
    }
    let f: Py<PyAny> = obj.clone().unbind();
    let _ = py;
    Ok(Potential::custom(move |x, t| {
        Python::with_gil(|py| f.call1(py, (x, t)).and_then(|v| v.extract::<f64>(py)).unwrap_or(f64::NAN))
    }))
}

#[pymethods]
impl PyQuery {
    #[new]
    #[pyo3(signature = (xi_start, tau_start, xi_end, tau_end, slices = 1, potential = None, mass = 1.0))]
    fn new(
        py: Python<'_>,
        xi_start: f64,
        tau_start: f64,
        xi_end: f64,
        tau_end: f64,
        slices: usize,
        potential: Option<&Bound<'_, PyAny>>,
        mass: f64,
    ) -> PyResult<Self> {
        let v = match potential {
            Some(p) => potential_from(py, p)?,
            None => Potential::zero(),
        };
        let inner = PropagatorQuery::new((xi_start, tau_start), (xi_end, tau_end), slices, v)
            .and_then(|q| q.with_mass(mass))
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        PropagatorQuery::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    fn with_slices(&self, slices: usize) -> PyResult<Self> {
        self.inner.with_slices(slices).map(|inner| Self { inner }).map_err(err)
    }

    #[getter]
    fn xi_start(&self) -> f64 {
        self.inner.xi_start
    }
    #[getter]
    fn tau_start(&self) -> f64 {
        self.inner.tau_start
    }
    #[getter]
    fn xi_end(&self) -> f64 {
        self.inner.xi_end
    }
    #[getter]
    fn tau_end(&self) -> f64 {
        self.inner.tau_end
    }
    #[getter]
    fn slices(&self) -> usize {
        self.inner.slices
    }
    #[getter]
    fn mass(&self) -> f64 {
        self.inner.mass
    }
    #[getter]
    fn potential(&self) -> String {
        self.inner.potential.to_string()
    }

    fn __repr__(&self) -> String {
        let q = &self.inner;
        format!(
            "PropagatorQuery(({}, {}) -> ({}, {}), slices={}, potential={:?}, mass={})",
            q.xi_start, q.tau_start, q.xi_end, q.tau_end, q.slices, q.potential.to_string(), q.mass
        )
    }
}

/// Quadrature grid for the sliced kernel.
#[pyclass(name = "SliceGrid", module = "hkpath")]
#[derive(Clone)]
struct PyGrid {
    inner: SliceGrid,
}

#[pymethods]
impl PyGrid {
    #[new]
    #[pyo3(signature = (extent = None, points = None, damping = None, rel_tol = None, midpoint = false))]
    fn new(
        extent: Option<f64>,
        points: Option<usize>,
        damping: Option<f64>,
        rel_tol: Option<f64>,
        midpoint: bool,
    ) -> PyResult<Self> {
        let d = SliceGrid::default();
        let inner = SliceGrid {
            extent: extent.unwrap_or(d.extent),
            points: points.unwrap_or(d.points),
            damping: damping.unwrap_or(d.damping),
            rel_tol: rel_tol.unwrap_or(d.rel_tol),
            sampling: if midpoint { Sampling::Midpoint } else { Sampling::LeftEndpoint },
        };
        inner.validate().map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn extent(&self) -> f64 {
        self.inner.extent
    }
    #[getter]
    fn points(&self) -> usize {
        self.inner.points
    }
    #[getter]
    fn damping(&self) -> f64 {
        self.inner.damping
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

fn grid_or_default(grid: Option<&PyGrid>) -> SliceGrid {
    grid.map_or_else(SliceGrid::default, |g| g.inner)
}

fn report(r: SlicedReport) -> (Complex64, f64) {
    (r.value, r.abs_error_estimate)
}

/// `∫ exp(c x²/2) dx` over the real line for `Re c <= 0`, computed by damped quadrature.
#[pyfunction]
#[pyo3(signature = (c, tol = 1e-9))]
fn fresnel_full_line(py: Python<'_>, c: Complex64, tol: f64) -> PyResult<Complex64> {
    py.allow_threads(|| oscillatory_full_line(c, tol, &IntegratorConfig::default())).map_err(err)
}

/// `∫_0^u exp(i x²) dx`.
#[pyfunction]
fn incomplete_fresnel(u: f64) -> Complex64 {
    fresnel::incomplete_fresnel(u)
}

/// Normalised Fresnel mass of the cell `(u, v]`; infinite endpoints are allowed.
#[pyfunction]
fn g1_distribution(u: f64, v: f64) -> PyResult<Complex64> {
    let cell = cell_from(u, v)?;
    Ok(fresnel::g1_distribution(&cell))
}

fn cell_from(u: f64, v: f64) -> PyResult<gauge::Cell1D> {
    use gauge::Cell1D;
    let cell = match (u.is_infinite(), v.is_infinite()) {
        (true, true) if u < 0.0 && v > 0.0 => Cell1D::FullLine,
        (true, false) if u < 0.0 => Cell1D::NegTail(v),
        (false, true) if v > 0.0 => Cell1D::PosTail(u),
        (false, false) => return Cell1D::bounded(u, v).map_err(err),
        _ => return Err(HkpathError::new_err(format!("({u}, {v}] is not a cell"))),
    };
    Ok(cell)
}

/// Closed-form free kernel.
#[pyfunction]
fn psi0_closed(q: &PyQuery) -> PyResult<Complex64> {
    pathint::psi0_closed(&q.inner).map_err(err)
}

/// Closed-form harmonic-oscillator kernel.
#[pyfunction]
fn mehler_kernel(q: &PyQuery) -> PyResult<Complex64> {
    pathint::mehler_kernel(&q.inner).map_err(err)
}

/// Time-sliced kernel as `(value, error_estimate)`.
#[pyfunction]
#[pyo3(signature = (q, grid = None))]
fn psi_sliced(py: Python<'_>, q: &PyQuery, grid: Option<&PyGrid>) -> PyResult<(Complex64, f64)> {
    let g = grid_or_default(grid);
    let q = q.inner.clone();
    py.allow_threads(move || pathint::psi_sliced(&q, &g)).map(report).map_err(err)
}

/// Time-sliced free kernel, ignoring the query's potential.
#[pyfunction]
#[pyo3(signature = (q, grid = None))]
fn psi0_sliced(py: Python<'_>, q: &PyQuery, grid: Option<&PyGrid>) -> PyResult<(Complex64, f64)> {
    let g = grid_or_default(grid);
    let q = q.inner.clone();
    py.allow_threads(move || pathint::psi0_sliced(&q, &g)).map(report).map_err(err)
}

/// Terms `psi_0 … psi_m` of the potential expansion.
#[pyfunction]
#[pyo3(signature = (m, q, grid = None))]
fn perturbation_terms(py: Python<'_>, m: usize, q: &PyQuery, grid: Option<&PyGrid>) -> PyResult<Vec<Complex64>> {
    let g = grid_or_default(grid);
    let q = q.inner.clone();
    py.allow_threads(move || pathint::perturbation_terms(m, &q, &g))
        .map(|ts| ts.into_iter().map(|t| t.value).collect())
        .map_err(err)
}

/// Window sums of `|g_0|` for `n` equal increments of length `dt`.
///
/// Returns `(rows, verdict)` with rows `(radius, sum, level)`.
#[pyfunction]
#[pyo3(signature = (n, dt, radii = None))]
fn growth_table(py: Python<'_>, n: usize, dt: f64, radii: Option<Vec<f64>>) -> PyResult<(Vec<(f64, f64, u32)>, String)> {
    let radii = radii.unwrap_or_else(|| DiagnosticSetup::default().radii);
    let sched = fresnel::IncrementSchedule::uniform(n, dt, 0.0, 0.0).map_err(err)?;
    let (table, probe) = py
        .allow_threads(move || {
            let t = exchange::abs_g0_growth(&sched, &radii)?;
            let p = exchange::beta_probe(&t)?;
            Ok::<_, hk::Error>((t, p))
        })
        .map_err(err)?;
    let verdict = serde_json::to_value(probe.verdict).map_err(json_err)?;
    Ok((
        table.rows.iter().map(|r| (r.radius, r.sum, r.level)).collect(),
        verdict.as_str().unwrap_or_default().to_owned(),
    ))
}

/// Partial sums against the sliced kernel, plus growth and convergence verdicts.
#[pyfunction]
#[pyo3(signature = (q, m_max, grid = None, eps = None, samples = None, seed = None))]
fn exchange_experiment<'py>(
    py: Python<'py>,
    q: &PyQuery,
    m_max: usize,
    grid: Option<&PyGrid>,
    eps: Option<f64>,
    samples: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Bound<'py, PyDict>> {
    let g = grid_or_default(grid);
    let mut setup = DiagnosticSetup::default();
    if let Some(e) = eps {
        setup.eps = e;
    }
    if let Some(s) = samples {
        setup.samples = s;
    }
    if let Some(s) = seed {
        setup.seed = s;
    }
    setup.validate().map_err(err)?;
    let q = q.inner.clone();
    let r = py.allow_threads(move || exchange::exchange_experiment(&q, m_max, &g, &setup)).map_err(err)?;
    let d = PyDict::new_bound(py);
    d.set_item("partial_sums", r.rows.iter().map(|row| row.partial_sum).collect::<Vec<_>>())?;
    d.set_item("sliced", r.rows.first().map(|row| row.sliced))?;
    d.set_item("abs_diff", r.rows.iter().map(|row| row.abs_diff).collect::<Vec<_>>())?;
    d.set_item("growth", r.growth.rows.iter().map(|x| (x.radius, x.sum, x.level)).collect::<Vec<_>>())?;
    let verdict = serde_json::to_value(r.verdict.beta_probe).map_err(json_err)?;
    d.set_item("beta_probe", verdict.as_str())?;
    d.set_item("m_found", r.verdict.m_found)?;
    d.set_item("eps", r.verdict.eps)?;
    Ok(d)
}

fn affine_gauge(delta: f64, slope: f64, tail: f64) -> Gauge1D {
    Gauge1D::new(move |x| match x {
        ExtReal::Finite(v) => delta + slope * v.abs(),
        _ => tail,
    })
}

/// Cousin division for the gauge `delta + slope |x|` with tail value `tail`, as JSON.
#[pyfunction]
#[pyo3(signature = (delta, slope = 0.0, tail = 0.25, max_depth = 60))]
fn build_division(delta: f64, slope: f64, tail: f64, max_depth: usize) -> PyResult<String> {
    let g = affine_gauge(delta, slope, tail);
    let opts = CousinOptions { max_depth, tails: None };
    gauge::cousin_division(&g, &opts).and_then(|d| d.to_json()).map_err(err)
}

/// Validation report of a division document as JSON; fineness is checked when `delta` is given.
#[pyfunction]
#[pyo3(signature = (text, delta = None, slope = 0.0, tail = 0.25))]
fn validate_division(text: &str, delta: Option<f64>, slope: f64, tail: f64) -> PyResult<String> {
    let d = Division1D::from_json(text).map_err(err)?;
    let g = delta.map(|d| affine_gauge(d, slope, tail));
    let rep = gauge::validate_division(&d, g.as_ref());
    let v = serde_json::json!({ "valid": rep.is_valid(), "violations": rep.violations });
    serde_json::to_string(&v).map_err(json_err)
}

/// Runs the built-in checks; returns `(id, passed, line)` per check.
#[pyfunction]
#[pyo3(signature = (only = None))]
fn selftest(py: Python<'_>, only: Option<Vec<u32>>) -> PyResult<Vec<(u32, bool, String)>> {
    let ids = only.unwrap_or_else(|| acceptance::CRITERIA.to_vec());
    if let Some(bad) = ids.iter().find(|i| !acceptance::CRITERIA.contains(i)) {
        return Err(HkpathError::new_err(format!("no check numbered {bad}")));
    }
    let cfg = RunConfig::default();
    Ok(py.allow_threads(move || {
        ids.iter()
            .map(|&i| {
                let o = acceptance::run_criterion(i, &cfg);
                (o.id, o.passed, o.to_string())
            })
            .collect()
    }))
}

#[pymodule]
fn hkpath(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("HkpathError", m.py().get_type_bound::<HkpathError>())?;
    m.add("FORMAT_VERSION", hk::config::FORMAT_VERSION)?;
    m.add_class::<PyQuery>()?;
    m.add_class::<PyGrid>()?;
    m.add_function(wrap_pyfunction!(fresnel_full_line, m)?)?;
    m.add_function(wrap_pyfunction!(incomplete_fresnel, m)?)?;
    m.add_function(wrap_pyfunction!(g1_distribution, m)?)?;
    m.add_function(wrap_pyfunction!(psi0_closed, m)?)?;
    m.add_function(wrap_pyfunction!(mehler_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(psi_sliced, m)?)?;
    m.add_function(wrap_pyfunction!(psi0_sliced, m)?)?;
    m.add_function(wrap_pyfunction!(perturbation_terms, m)?)?;
    m.add_function(wrap_pyfunction!(growth_table, m)?)?;
    m.add_function(wrap_pyfunction!(exchange_experiment, m)?)?;
    m.add_function(wrap_pyfunction!(build_division, m)?)?;
    m.add_function(wrap_pyfunction!(validate_division, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
