use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;

use shadowlab::bench::{self, CenterModel, SweepConfig};
use shadowlab::interpolate::{self, PhaseOneMethod, TwoPhaseStatus};
use shadowlab::lp::{self, SolveStatus};
use shadowlab::perturb::{self, sphere_centers, unit_direction, NoiseKind, NoiseSpec, SmoothedModel};
use shadowlab::phase_one::SymRvConfig;
use shadowlab::polar::{self, PlaneBasis};
use shadowlab::rng::rng_from_seed;
use shadowlab::Error;

create_exception!(shadowlab_py, ShadowlabError, PyException);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::Domain(_) | Error::InvalidInstance(_) | Error::Json(_) => {
            PyValueError::new_err(e.to_string())
        }
        Error::Io(_) | Error::Csv(_) => PyIOError::new_err(e.to_string()),
        _ => ShadowlabError::new_err(e.to_string()),
    }
}

/// Serialises through JSON so results arrive as plain dicts and lists.
fn to_object<T: serde::Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| to_py(e.into()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// LP `max c^T x` subject to `A x <= b`.
#[pyclass(name = "LpInstance", module = "shadowlab_py", from_py_object)]
#[derive(Clone)]
struct PyLpInstance {
    inner: shadowlab::LpInstance,
}

#[pymethods]
impl PyLpInstance {
    #[new]
    #[pyo3(signature = (a, b, c))]
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> PyResult<Self> {
        let inner = shadowlab::LpInstance::from_rows(&a, &b, &c).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(|e| to_py(e.into()))?;
        Ok(Self { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| to_py(e.into()))
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.d()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn a(&self) -> Vec<Vec<f64>> {
        self.inner.a().row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    #[getter]
    fn b(&self) -> Vec<f64> {
        self.inner.b().as_slice().to_vec()
    }

    #[getter]
    fn c(&self) -> Vec<f64> {
        self.inner.c().as_slice().to_vec()
    }

    /// The same constraints with right-hand side 1.
    fn unit(&self) -> Self {
        Self { inner: self.inner.unit() }
    }

    fn __repr__(&self) -> String {
        format!("LpInstance(d={}, n={})", self.inner.d(), self.inner.n())
    }
}

/// Outcome of a solve: `status` is "optimal", "unbounded" or "infeasible".
#[pyclass(name = "SolveResult", module = "shadowlab_py", get_all, skip_from_py_object)]
#[derive(Clone)]
struct PySolveResult {
    status: String,
    x: Option<Vec<f64>>,
    value: Option<f64>,
    ray: Option<Vec<f64>>,
    basis: Option<Vec<usize>>,
    phase1_pivots: Option<usize>,
    phase2_pivots: Option<usize>,
    restarts: Option<usize>,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        match self.value {
            Some(v) => format!("SolveResult(status='{}', value={v})", self.status),
            None => format!("SolveResult(status='{}')", self.status),
        }
    }
}

fn empty_result(status: &str) -> PySolveResult {
    PySolveResult {
        status: status.to_string(),
        x: None,
        value: None,
        ray: None,
        basis: None,
        phase1_pivots: None,
        phase2_pivots: None,
        restarts: None,
    }
}

/// Brute-force reference solve over all bases.
#[pyfunction]
fn oracle_solve(inst: &PyLpInstance) -> PyResult<PySolveResult> {
    let status = lp::oracle_solve(&inst.inner).map_err(to_py)?;
    let mut out = empty_result(status.label());
    match status {
        SolveStatus::Optimal { x, basis, value } => {
            out.x = Some(x.as_slice().to_vec());
            out.basis = Some(basis.indices().to_vec());
            out.value = Some(value);
        }
        SolveStatus::Unbounded { ray } => out.ray = Some(ray.as_slice().to_vec()),
        SolveStatus::Infeasible => {}
    }
    Ok(out)
}

/// Two-phase shadow simplex; `phase1` is "symrv" or "dd".
#[pyfunction]
#[pyo3(signature = (inst, phase1 = "symrv", sigma = 0.1, seed = 0))]
fn two_phase_solve(inst: &PyLpInstance, phase1: &str, sigma: f64, seed: u64) -> PyResult<PySolveResult> {
    let method: PhaseOneMethod = phase1.parse().map_err(to_py)?;
    let mut rng = rng_from_seed(seed);
    let res = interpolate::solve_instance(&inst.inner, method, &SymRvConfig::with_sigma(sigma), &mut rng)
        .map_err(to_py)?;
    let mut out = empty_result(res.status.label());
    match res.status {
        TwoPhaseStatus::Optimal { x, basis, value } => {
            out.x = Some(x.as_slice().to_vec());
            out.basis = Some(basis.indices().to_vec());
            out.value = Some(value);
        }
        TwoPhaseStatus::Unbounded { ray } => out.ray = Some(ray.as_slice().to_vec()),
        TwoPhaseStatus::Infeasible => {}
    }
    out.phase1_pivots = Some(res.phase1_pivots);
    out.phase2_pivots = Some(res.phase2_pivots);
    out.restarts = Some(res.restarts);
    Ok(out)
}

/// Smoothed instance with sphere centers and a random unit objective.
#[pyfunction]
#[pyo3(signature = (d, n, sigma, dist = "gaussian", seed = 0, unit = false))]
fn sample_instance(d: usize, n: usize, sigma: f64, dist: &str, seed: u64, unit: bool) -> PyResult<PyLpInstance> {
    let kind: NoiseKind = dist.parse().map_err(to_py)?;
    if d < 1 || n < d {
        return Err(PyValueError::new_err(format!("need n >= d >= 1, got d = {d}, n = {n}")));
    }
    let mut rng = rng_from_seed(seed);
    let c = unit_direction(d, &mut rng);
    let noise = NoiseSpec::new(kind, sigma);
    let model = if unit {
        SmoothedModel::unit(sphere_centers(n, d, &mut rng), c, noise)
    } else {
        let joint = sphere_centers(n, d + 1, &mut rng);
        SmoothedModel::smooth(joint.columns(0, d).into_owned(), joint.column(d).into_owned(), c, noise)
    }
    .map_err(to_py)?;
    let inner = model.sample_instance(&mut rng).map_err(to_py)?;
    Ok(PyLpInstance { inner })
}

fn plane(d: usize, u: Option<Vec<f64>>, v: Option<Vec<f64>>) -> PyResult<PlaneBasis> {
    match (u, v) {
        (Some(u), Some(v)) => PlaneBasis::from_span(&u.into(), &v.into()).map_err(to_py),
        (None, None) => PlaneBasis::coordinate(d, 0, 1).map_err(to_py),
        _ => Err(PyValueError::new_err("give both plane vectors or neither")),
    }
}

/// Section of the convex hull of `points` with `span(u, v)`, default `span(e1, e2)`.
#[pyfunction]
#[pyo3(signature = (points, u = None, v = None))]
fn polar_section(py: Python<'_>, points: Vec<Vec<f64>>, u: Option<Vec<f64>>, v: Option<Vec<f64>>) -> PyResult<Py<PyAny>> {
    let d = points.first().map_or(0, Vec::len);
    if points.iter().any(|p| p.len() != d) {
        return Err(PyValueError::new_err("ragged point rows"));
    }
    let m = nalgebra::DMatrix::from_fn(points.len(), d, |i, j| points[i][j]);
    let section = polar::polar_section(&m, &plane(d, u, v)?).map_err(to_py)?;
    to_object(py, &section)
}

/// Vertex count of the projection of the feasible set onto `span(u, v)`.
#[pyfunction]
#[pyo3(signature = (inst, u = None, v = None))]
fn shadow_vertices(inst: &PyLpInstance, u: Option<Vec<f64>>, v: Option<Vec<f64>>) -> PyResult<usize> {
    polar::shadow_vertices(&inst.inner, &plane(inst.inner.d(), u, v)?).map_err(to_py)
}

/// Certified `L`, `tau`, `R_nd` and `r_n` of a noise family.
#[pyfunction]
fn certificate(py: Python<'_>, dist: &str, d: usize, n: usize, sigma: f64) -> PyResult<Py<PyAny>> {
    let kind: NoiseKind = dist.parse().map_err(to_py)?;
    to_object(py, &perturb::certificate(kind, d, n, sigma).map_err(to_py)?)
}

#[pyfunction]
fn parametrized_edge_bound(d: usize, lipschitz: f64, tau: f64, cutoff: f64, r_n: f64) -> f64 {
    polar::parametrized_edge_bound(d, lipschitz, tau, cutoff, r_n)
}

/// Expected edge bound with certified parameters of `dist`.
#[pyfunction]
fn edge_bound(dist: &str, d: usize, n: usize, sigma: f64) -> PyResult<f64> {
    match dist.parse().map_err(to_py)? {
        NoiseKind::Gaussian => polar::gaussian_shadow_bound(d, n, sigma),
        kind => polar::certified_edge_bound(kind, d, n, sigma),
    }
    .map_err(to_py)
}

#[pyfunction]
fn sigma_bar(d: usize, n: usize) -> f64 {
    perturb::sigma_bar(d, n)
}

/// Seeded sweep; returns `{"records": [...], "summary": {...}, "tails": [...]}`.
#[pyfunction]
#[pyo3(signature = (
    d = vec![3], n = vec![10], sigma = vec![0.1], dist = "gaussian", trials = 10, seed = 0,
    phase1 = "symrv", mode = "solve", centers = "sphere", perturb_rhs = true, geometry = true,
    tail_samples = 100_000,
))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    d: Vec<usize>,
    n: Vec<usize>,
    sigma: Vec<f64>,
    dist: &str,
    trials: usize,
    seed: u64,
    phase1: &str,
    mode: &str,
    centers: &str,
    perturb_rhs: bool,
    geometry: bool,
    tail_samples: usize,
) -> PyResult<Py<PyAny>> {
    let centers = match centers {
        "sphere" => CenterModel::Sphere,
        "zero" => CenterModel::Zero,
        other => return Err(PyValueError::new_err(format!("unknown center model '{other}'"))),
    };
    let cfg = SweepConfig {
        d_list: d,
        n_list: n,
        sigma_list: sigma,
        dist: dist.parse().map_err(to_py)?,
        trials,
        master_seed: seed,
        phase1: phase1.parse().map_err(to_py)?,
        mode: mode.parse().map_err(to_py)?,
        centers,
        perturb_rhs,
        geometry,
        tail_samples,
        ..Default::default()
    };
    let out = py.detach(|| bench::run_sweep(&cfg)).map_err(to_py)?;
    to_object(py, &out)
}

/// Sweep records as CSV text.
#[pyfunction]
fn records_to_csv(py: Python<'_>, records: Py<PyAny>) -> PyResult<String> {
    let text: String = py.import("json")?.call_method1("dumps", (records,))?.extract()?;
    let records: Vec<bench::SweepRecord> = serde_json::from_str(&text).map_err(|e| to_py(e.into()))?;
    let mut buf = Vec::new();
    bench::write_records(&records, bench::EmitFormat::Csv, &mut buf).map_err(to_py)?;
    String::from_utf8(buf).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Tail-bound table for one noise family.
#[pyfunction]
#[pyo3(signature = (dist, d, n, sigma, samples = 100_000, seed = 0))]
fn verify_tails(py: Python<'_>, dist: &str, d: usize, n: usize, sigma: f64, samples: usize, seed: u64) -> PyResult<Py<PyAny>> {
    let kind: NoiseKind = dist.parse().map_err(to_py)?;
    let rows = py.detach(|| bench::verify_tails(kind, d, n, sigma, samples, seed)).map_err(to_py)?;
    to_object(py, &rows)
}

#[pymodule]
fn shadowlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ShadowlabError", m.py().get_type::<ShadowlabError>())?;
    m.add_class::<PyLpInstance>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(oracle_solve, m)?)?;
    m.add_function(wrap_pyfunction!(two_phase_solve, m)?)?;
    m.add_function(wrap_pyfunction!(sample_instance, m)?)?;
    m.add_function(wrap_pyfunction!(polar_section, m)?)?;
    m.add_function(wrap_pyfunction!(shadow_vertices, m)?)?;
    m.add_function(wrap_pyfunction!(certificate, m)?)?;
    m.add_function(wrap_pyfunction!(parametrized_edge_bound, m)?)?;
    m.add_function(wrap_pyfunction!(edge_bound, m)?)?;
    m.add_function(wrap_pyfunction!(sigma_bar, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(records_to_csv, m)?)?;
    m.add_function(wrap_pyfunction!(verify_tails, m)?)?;
    Ok(())
}
