//! Python bindings. Instances and solve reports are classes; ratios come back
//! as `fractions.Fraction`, assignments as lists of machine indices, and the
//! larger documents (traces, search summaries) as plain dicts.

use irse_core::dynamics::{self, DynamicsConfig, InitialState, NeighborhoodSpec};
use irse_core::game::{self, Allocation};
use irse_core::search::{self, SearchOptions, SearchSpace};
use irse_core::solvers::{self, Objective, SolverConfig, DEFAULT_NODE_LIMIT};
use irse_core::{generators, Error, Ratio};
use pyo3::exceptions::{PyArithmeticError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

pyo3::create_exception!(
    irse,
    ResourceExhausted,
    PyRuntimeError,
    "The solver hit its node limit."
);
pyo3::create_exception!(
    irse,
    BoundViolation,
    PyArithmeticError,
    "An instance broke the [1, 4/3] ratio bound."
);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ResourceExhausted { .. } => ResourceExhausted::new_err(e.to_string()),
        Error::BoundViolation { .. } => BoundViolation::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn fraction<'py>(py: Python<'py>, r: Ratio) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?.getattr("Fraction")?.call1((r.num(), r.den()))
}

/// Accepts an int, a `Fraction`, or a string such as "3/2" or "0.5".
fn to_ratio(value: &Bound<'_, PyAny>) -> PyResult<Ratio> {
    if let Ok(s) = value.extract::<String>() {
        return s.parse().map_err(to_py);
    }
    if let (Ok(num), Ok(den)) = (value.getattr("numerator"), value.getattr("denominator")) {
        let (num, den) = (num.extract::<u64>()?, den.extract::<u64>()?);
        return Ratio::new(num, den).map_err(to_py);
    }
    value.str()?.to_str()?.parse().map_err(to_py)
}

fn json_to_py<'py>(py: Python<'py>, value: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

/// `m` identical machines and job weights, kept sorted nonincreasing.
#[pyclass(name = "Instance", module = "irse", frozen, eq, hash, from_py_object)]
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PyInstance {
    inner: irse_core::Instance,
}

#[pymethods]
impl PyInstance {
    #[new]
    fn new(m: usize, weights: Vec<u64>) -> PyResult<Self> {
        irse_core::Instance::new(m, weights)
            .map(|inner| PyInstance { inner })
            .map_err(to_py)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        serde_json::from_str(text)
            .map(|inner| PyInstance { inner })
            .map_err(|e| PyValueError::new_err(e.to_string()))
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn weights(&self) -> Vec<u64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn total_weight(&self) -> u64 {
        self.inner.total_weight()
    }

    /// The same game with the weights divided by their gcd.
    fn canonicalize(&self) -> Self {
        PyInstance {
            inner: self.inner.canonicalize(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Instance(m={}, weights={:?})", self.inner.m(), self.inner.weights())
    }
}

#[pyclass(name = "SolveReport", module = "irse", frozen, get_all)]
pub struct PySolveReport {
    opt_makespan: u64,
    min_potential: i128,
    worst_po_makespan: u64,
    opt_witness: Vec<usize>,
    worst_po_witness: Vec<usize>,
    nodes_explored: u64,
    po_count_up_to_symmetry: u64,
}

#[pymethods]
impl PySolveReport {
    /// Worst potential-optimal makespan over the optimal makespan.
    #[getter]
    fn irse<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(
            py,
            Ratio::new(self.worst_po_makespan, self.opt_makespan).map_err(to_py)?,
        )
    }

    fn __repr__(&self) -> String {
        format!(
            "SolveReport(opt_makespan={}, worst_po_makespan={}, min_potential={})",
            self.opt_makespan, self.worst_po_makespan, self.min_potential
        )
    }
}

fn allocation(instance: &PyInstance, assignment: Vec<usize>) -> PyResult<Allocation> {
    let a = Allocation::new(assignment);
    a.validate(&instance.inner).map_err(to_py)?;
    Ok(a)
}

/// Sorted machine loads of an assignment.
#[pyfunction]
fn loads(instance: &PyInstance, assignment: Vec<usize>) -> PyResult<Vec<u64>> {
    let a = allocation(instance, assignment)?;
    Ok(game::loads(&instance.inner, &a).map_err(to_py)?.loads().to_vec())
}

#[pyfunction]
fn makespan(instance: &PyInstance, assignment: Vec<usize>) -> PyResult<u64> {
    let a = allocation(instance, assignment)?;
    Ok(game::loads(&instance.inner, &a).map_err(to_py)?.makespan())
}

#[pyfunction]
fn potential(instance: &PyInstance, assignment: Vec<usize>) -> PyResult<i128> {
    let a = allocation(instance, assignment)?;
    Ok(game::loads(&instance.inner, &a).map_err(to_py)?.potential())
}

#[pyfunction]
fn move_delta(instance: &PyInstance, assignment: Vec<usize>, job: usize, target: usize) -> PyResult<i128> {
    let a = allocation(instance, assignment)?;
    game::move_delta(&instance.inner, &a, job, target).map_err(to_py)
}

#[pyfunction]
fn is_nash(instance: &PyInstance, assignment: Vec<usize>) -> PyResult<bool> {
    let a = allocation(instance, assignment)?;
    game::is_nash(&instance.inner, &a).map_err(to_py)
}

#[pyfunction]
fn lpt(instance: &PyInstance) -> Vec<usize> {
    solvers::lpt(&instance.inner).into_inner()
}

#[pyfunction]
#[pyo3(signature = (instance, node_limit = DEFAULT_NODE_LIMIT))]
fn solve(py: Python<'_>, instance: &PyInstance, node_limit: u64) -> PyResult<PySolveReport> {
    let inner = instance.inner.clone();
    let r = py
        .detach(move || solvers::solve(&inner, &SolverConfig { node_limit }))
        .map_err(to_py)?;
    Ok(PySolveReport {
        opt_makespan: r.opt_makespan,
        min_potential: r.min_potential,
        worst_po_makespan: r.worst_po_makespan,
        opt_witness: r.opt_witness.into_inner(),
        worst_po_witness: r.worst_po_witness.into_inner(),
        nodes_explored: r.nodes_explored,
        po_count_up_to_symmetry: r.po_count_up_to_symmetry,
    })
}

#[pyfunction(name = "irse")]
#[pyo3(signature = (instance, node_limit = DEFAULT_NODE_LIMIT))]
fn irse_ratio<'py>(py: Python<'py>, instance: &PyInstance, node_limit: u64) -> PyResult<Bound<'py, PyAny>> {
    let inner = instance.inner.clone();
    let r = py
        .detach(move || solvers::irse_with(&inner, &SolverConfig { node_limit }))
        .map_err(to_py)?;
    fraction(py, r)
}

/// Enumerates all assignments; returns the optimum and every optimal
/// assignment in lexicographic order. `objective` is "makespan" or
/// "potential".
#[pyfunction]
fn brute_force(py: Python<'_>, instance: &PyInstance, objective: &str) -> PyResult<(i128, Vec<Vec<usize>>)> {
    let objective = match objective {
        "makespan" => Objective::Makespan,
        "potential" => Objective::Potential,
        other => return Err(PyValueError::new_err(format!("unknown objective {other:?}"))),
    };
    let inner = instance.inner.clone();
    let r = py
        .detach(move || solvers::brute_force(&inner, objective))
        .map_err(to_py)?;
    Ok((r.value, r.witnesses.into_iter().map(Allocation::into_inner).collect()))
}

/// The family member for `k` as a dict with the instance and its predictions.
#[pyfunction]
fn lower_bound_family<'py>(py: Python<'py>, k: u64) -> PyResult<Bound<'py, PyAny>> {
    let family = generators::lower_bound_family(k).map_err(to_py)?;
    json_to_py(py, &family)
}

/// The two equal-potential allocations of the family member for `k`.
#[pyfunction]
fn paper_allocations(k: u64) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let (left, right) = generators::paper_allocations(k).map_err(to_py)?;
    Ok((left.into_inner(), right.into_inner()))
}

#[pyfunction]
fn random_instance(n: usize, m: usize, w_max: u64, seed: u64) -> PyResult<PyInstance> {
    generators::random_instance(n, m, w_max, seed)
        .map(|inner| PyInstance { inner })
        .map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (instance, start, single_move = true, pair_swap = true, bundle_swap_max = 2))]
fn local_search(
    instance: &PyInstance,
    start: Vec<usize>,
    single_move: bool,
    pair_swap: bool,
    bundle_swap_max: usize,
) -> PyResult<Vec<usize>> {
    let spec = NeighborhoodSpec {
        single_move,
        pair_swap,
        bundle_swap_max,
    };
    let start = allocation(instance, start)?;
    dynamics::local_search(&instance.inner, &start, &spec)
        .map(Allocation::into_inner)
        .map_err(to_py)
}

/// Logit dynamics; returns the trace statistics as a dict.
#[pyfunction]
#[pyo3(signature = (instance, beta, steps, seed = 0, initial = None, replicas = 1, workers = 1))]
#[allow(clippy::too_many_arguments)]
fn simulate<'py>(
    py: Python<'py>,
    instance: &PyInstance,
    beta: &Bound<'py, PyAny>,
    steps: u64,
    seed: u64,
    initial: Option<Vec<usize>>,
    replicas: u64,
    workers: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let config = DynamicsConfig {
        beta: to_ratio(beta)?,
        steps,
        seed,
        initial: initial.map_or(InitialState::Random, |v| InitialState::Given(Allocation::new(v))),
    };
    let inner = instance.inner.clone();
    let stats = py
        .detach(move || dynamics::simulate_replicas(&inner, &config, replicas, workers))
        .map_err(to_py)?;
    json_to_py(py, &stats)
}

/// Stationary probabilities of every assignment vector, in lexicographic
/// order of the vectors.
#[pyfunction]
fn exact_stationary(py: Python<'_>, instance: &PyInstance, beta: &Bound<'_, PyAny>) -> PyResult<Vec<f64>> {
    let beta = to_ratio(beta)?;
    let inner = instance.inner.clone();
    let d = py
        .detach(move || dynamics::exact_stationary(&inner, beta))
        .map_err(to_py)?;
    Ok(d.probabilities)
}

/// Solves every instance of a space. Returns `(summary, records)` as dicts.
#[pyfunction]
#[pyo3(signature = (n_range, m_range, w_max, random = None, seed = 0, workers = 1, keep_all = false, node_limit = DEFAULT_NODE_LIMIT))]
#[allow(clippy::too_many_arguments)]
fn run_search<'py>(
    py: Python<'py>,
    n_range: (usize, usize),
    m_range: (usize, usize),
    w_max: u64,
    random: Option<u64>,
    seed: u64,
    workers: usize,
    keep_all: bool,
    node_limit: u64,
) -> PyResult<(Bound<'py, PyAny>, Bound<'py, PyAny>)> {
    let space = match random {
        Some(count) => SearchSpace::random(n_range, m_range, w_max, count, seed),
        None => SearchSpace::exhaustive(n_range, m_range, w_max),
    };
    let options = SearchOptions {
        workers,
        node_limit,
        keep_all,
    };
    let outcome = py.detach(move || search::run_search(&space, &options)).map_err(to_py)?;
    Ok((json_to_py(py, &outcome.summary)?, json_to_py(py, &outcome.records)?))
}

#[pymodule]
fn irse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyInstance>()?;
    m.add_class::<PySolveReport>()?;
    m.add("ResourceExhausted", m.py().get_type::<ResourceExhausted>())?;
    m.add("BoundViolation", m.py().get_type::<BoundViolation>())?;
    m.add_function(wrap_pyfunction!(loads, m)?)?;
    m.add_function(wrap_pyfunction!(makespan, m)?)?;
    m.add_function(wrap_pyfunction!(potential, m)?)?;
    m.add_function(wrap_pyfunction!(move_delta, m)?)?;
    m.add_function(wrap_pyfunction!(is_nash, m)?)?;
    m.add_function(wrap_pyfunction!(lpt, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(irse_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_family, m)?)?;
    m.add_function(wrap_pyfunction!(paper_allocations, m)?)?;
    m.add_function(wrap_pyfunction!(random_instance, m)?)?;
    m.add_function(wrap_pyfunction!(local_search, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(exact_stationary, m)?)?;
    m.add_function(wrap_pyfunction!(run_search, m)?)?;
    Ok(())
}
