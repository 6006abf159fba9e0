use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use dafsp::bench::{generate_instance as gen, GeneratorConfig};
use dafsp::petri::{build_app, fire_job_and_settle, iba_safe};

fn err(e: dafsp::Error) -> PyErr {
    match e {
        dafsp::Error::Infeasible { .. } | dafsp::Error::Domain(_) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn to_zero(ids: &[usize]) -> PyResult<Vec<usize>> {
    ids.iter()
        .map(|&i| i.checked_sub(1).ok_or_else(|| PyValueError::new_err("ids are 1-based")))
        .collect()
}

fn to_one(ids: &[usize]) -> Vec<usize> {
    ids.iter().map(|i| i + 1).collect()
}

/// Problem instance. Job, factory and product ids are 1-based on this side.
#[pyclass(name = "Instance", module = "dafsp_py", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: dafsp::Instance,
}

#[pymethods]
impl PyInstance {
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        dafsp::Instance::from_json(text).map(|inner| Self { inner }).map_err(err)
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    #[getter]
    fn jobs(&self) -> usize {
        self.inner.jobs()
    }

    #[getter]
    fn factories(&self) -> usize {
        self.inner.factories()
    }

    #[getter]
    fn machines(&self) -> usize {
        self.inner.machines()
    }

    #[getter]
    fn products(&self) -> usize {
        self.inner.products()
    }

    #[getter]
    fn buffer(&self) -> usize {
        self.inner.buffer()
    }

    fn __repr__(&self) -> String {
        let i = &self.inner;
        format!(
            "Instance(jobs={}, factories={}, machines={}, products={}, buffer={})",
            i.jobs(),
            i.factories(),
            i.machines(),
            i.products(),
            i.buffer()
        )
    }
}

#[pyclass(name = "Evaluation", module = "dafsp_py", frozen, get_all)]
struct PyEvaluation {
    lambda_prime: Vec<usize>,
    mu: Vec<usize>,
    sigma: Vec<usize>,
    cm_max: i64,
    ca_max: i64,
    max_buffer_occupancy: usize,
}

impl From<&dafsp::EvalResult> for PyEvaluation {
    fn from(e: &dafsp::EvalResult) -> Self {
        Self {
            lambda_prime: to_one(&e.lambda_prime),
            mu: to_one(&e.schedule.mu),
            sigma: to_one(&e.schedule.sigma),
            cm_max: e.cm_max,
            ca_max: e.ca_max,
            max_buffer_occupancy: e.max_buffer_occupancy,
        }
    }
}

#[pymethods]
impl PyEvaluation {
    fn __repr__(&self) -> String {
        format!("Evaluation(ca_max={}, cm_max={})", self.ca_max, self.cm_max)
    }
}

/// Amends `lambda` for deadlock and evaluates the schedule.
#[pyfunction]
fn evaluate(inst: &PyInstance, lambda: Vec<usize>, mu: Vec<usize>) -> PyResult<PyEvaluation> {
    let coding = dafsp::Coding::from_one_based(&inst.inner, &lambda, &mu).map_err(err)?;
    let eval = dafsp::evaluate(&inst.inner, &coding).map_err(err)?;
    Ok(PyEvaluation::from(&eval))
}

#[pyfunction]
fn idam(inst: &PyInstance, lambda: Vec<usize>) -> PyResult<Vec<usize>> {
    let net = build_app(&inst.inner);
    let amended = dafsp::idam(&net, &to_zero(&lambda)?).map_err(err)?;
    Ok(to_one(&amended))
}

/// Whether the marking reached by entering `prefix` into the buffer is safe.
#[pyfunction]
fn iba(inst: &PyInstance, prefix: Vec<usize>) -> PyResult<bool> {
    let net = build_app(&inst.inner);
    let mut m = net.initial_marking();
    for job in to_zero(&prefix)? {
        m = fire_job_and_settle(&net, &m, job).map_err(err)?;
    }
    Ok(iba_safe(&net, &m))
}

#[pyfunction]
#[pyo3(signature = (inst, seed=0, max_generations=None, budget_ms=None, preset="small"))]
fn solve(
    py: Python<'_>,
    inst: &PyInstance,
    seed: u64,
    max_generations: Option<u64>,
    budget_ms: Option<u64>,
    preset: &str,
) -> PyResult<PyEvaluation> {
    let preset: dafsp::Preset = preset.parse().map_err(err)?;
    let params = dafsp::SolverParams {
        seed,
        max_generations,
        budget_ms,
        ..dafsp::SolverParams::preset(preset)
    };
    let inner = inst.inner.clone();
    let out = py.detach(move || dafsp::solve(&inner, &params)).map_err(err)?;
    Ok(PyEvaluation::from(&out.eval))
}

#[pyfunction]
#[pyo3(signature = (jobs, factories, machines, products, seed=0))]
fn generate(jobs: usize, factories: usize, machines: usize, products: usize, seed: u64) -> PyResult<PyInstance> {
    let inner = gen(&GeneratorConfig::new(jobs, factories, machines, products, seed)).map_err(err)?;
    Ok(PyInstance { inner })
}

#[pymodule]
fn dafsp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PyEvaluation>()?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    m.add_function(wrap_pyfunction!(idam, m)?)?;
    m.add_function(wrap_pyfunction!(iba, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    Ok(())
}
