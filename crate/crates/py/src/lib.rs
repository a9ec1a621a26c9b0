//! Python bindings for the congen solver.
//!
//! Exposes the BLP instance type plus the main operations: weighted exact
//! cover generation, the exhaustive oracle, the Ising conversion, and the
//! constraint-generation loop. Build with
//! `cargo build -p congen-py --release` and load the produced `libcongen.so`
//! (see `python/smoke_test.py`).

use ndarray::{Array1, Array2};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use congen_core::congen::{run_congen, CongenConfig, RunResult, SolverSpec, Threshold};
use congen_core::hamiltonian::{build_rqp, compute_big_m, qubo_to_ising, PenaltyState};
use congen_core::problem::{
    brute_force_opt, generate_wec, load_instance, save_instance, Assignment, OptResult, WecConfig,
};

fn to_py_err(err: congen_core::Error) -> PyErr {
    match err {
        congen_core::Error::Io(e) => PyRuntimeError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn assignment(bits: Vec<u8>) -> PyResult<Assignment> {
    Assignment::new(bits).map_err(to_py_err)
}

// Vec<u8> would surface as Python bytes; bit vectors should be int lists.
fn bits_list(bits: &[u8]) -> Vec<u32> {
    bits.iter().map(|&b| u32::from(b)).collect()
}

/// A binary linear program `min { c^T x | A x = b, x in {0,1}^n }`.
#[pyclass(frozen, name = "BlpInstance")]
struct PyBlpInstance {
    inner: congen_core::BlpInstance,
}

#[pymethods]
impl PyBlpInstance {
    #[new]
    fn new(name: &str, c: Vec<f64>, a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        let n = c.len();
        let m = b.len();
        let mut flat = Vec::with_capacity(m * n);
        for row in &a {
            if row.len() != n {
                return Err(PyValueError::new_err(format!(
                    "row of A has {} entries, expected {n}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let matrix = Array2::from_shape_vec((m, n), flat)
            .map_err(|e| PyValueError::new_err(e.to_string()))?;
        let inner = congen_core::BlpInstance::new(name, Array1::from(c), matrix, Array1::from(b))
            .map_err(to_py_err)?;
        Ok(Self { inner })
    }

    /// Parse the BLP JSON schema.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: load_instance(text.as_bytes()).map_err(to_py_err)?,
        })
    }

    /// Generate a weighted exact cover instance (deterministic per seed).
    #[staticmethod]
    #[pyo3(signature = (sets, elements, max_size, weight_min=1, weight_max=100, seed=0))]
    fn generate_wec(
        sets: usize,
        elements: usize,
        max_size: usize,
        weight_min: u64,
        weight_max: u64,
        seed: u64,
    ) -> PyResult<Self> {
        let cfg = WecConfig {
            n_sets: sets,
            n_elements: elements,
            max_set_size: max_size,
            weight_min,
            weight_max,
            seed,
        };
        Ok(Self {
            inner: generate_wec(&cfg).map_err(to_py_err)?,
        })
    }

    fn to_json(&self) -> String {
        String::from_utf8(save_instance(&self.inner)).expect("instance JSON is UTF-8")
    }

    #[getter]
    fn name(&self) -> &str {
        self.inner.name()
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn m(&self) -> usize {
        self.inner.m()
    }

    fn c(&self) -> Vec<f64> {
        self.inner.c().to_vec()
    }

    fn a(&self) -> Vec<Vec<f64>> {
        self.inner
            .a()
            .rows()
            .into_iter()
            .map(|row| row.to_vec())
            .collect()
    }

    fn b(&self) -> Vec<f64> {
        self.inner.b().to_vec()
    }

    fn objective(&self, x: Vec<u8>) -> PyResult<f64> {
        self.inner.objective(&assignment(x)?).map_err(to_py_err)
    }

    fn residual(&self, x: Vec<u8>) -> PyResult<Vec<f64>> {
        Ok(self
            .inner
            .residual(&assignment(x)?)
            .map_err(to_py_err)?
            .to_vec())
    }

    fn is_feasible(&self, x: Vec<u8>) -> PyResult<bool> {
        self.inner.is_feasible(&assignment(x)?).map_err(to_py_err)
    }

    /// Exhaustive oracle; returns {"status", "x", "value"}.
    fn brute_force<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let result = brute_force_opt(&self.inner).map_err(to_py_err)?;
        let out = PyDict::new(py);
        match result {
            OptResult::Optimal { x, value } => {
                out.set_item("status", "Optimal")?;
                out.set_item("x", bits_list(x.bits()))?;
                out.set_item("value", value)?;
            }
            OptResult::Infeasible => {
                out.set_item("status", "Infeasible")?;
                out.set_item("x", py.None())?;
                out.set_item("value", py.None())?;
            }
        }
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!(
            "BlpInstance(name='{}', n={}, m={})",
            self.inner.name(),
            self.inner.n(),
            self.inner.m()
        )
    }
}

/// Penalty weight `(1/kappa) * sum(|c|)`, floored at 1.
#[pyfunction]
#[pyo3(signature = (inst, kappa=1.0))]
fn big_m(inst: &PyBlpInstance, kappa: f64) -> PyResult<f64> {
    compute_big_m(&inst.inner, kappa).map_err(to_py_err)
}

/// Ising model of the instance for the given active rows (default: all).
/// Returns {"J", "h", "mu", "constant", "M", "active_rows"}.
#[pyfunction]
#[pyo3(signature = (inst, rows=None, kappa=1.0))]
fn ising_model<'py>(
    py: Python<'py>,
    inst: &PyBlpInstance,
    rows: Option<Vec<usize>>,
    kappa: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let blp = &inst.inner;
    let active = rows.unwrap_or_else(|| (0..blp.m()).collect());
    let state = PenaltyState::with_rows(blp.m(), active).map_err(to_py_err)?;
    let m_penalty = compute_big_m(blp, kappa).map_err(to_py_err)?;
    let qubo = build_rqp(blp, &state, m_penalty).map_err(to_py_err)?;
    let ising = qubo_to_ising(&qubo, blp, &state, m_penalty).map_err(to_py_err)?;

    let out = PyDict::new(py);
    let j: Vec<Vec<f64>> = ising.j().rows().into_iter().map(|r| r.to_vec()).collect();
    out.set_item("J", j)?;
    out.set_item("h", ising.h().to_vec())?;
    out.set_item("mu", ising.mu())?;
    out.set_item("constant", ising.constant())?;
    out.set_item("M", m_penalty)?;
    out.set_item("active_rows", state.active_rows().collect::<Vec<_>>())?;
    Ok(out)
}

fn run_to_dict<'py>(
    py: Python<'py>,
    result: &RunResult,
    include_trace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("status", format!("{:?}", result.status))?;
    match &result.best {
        Some(best) => {
            out.set_item("x", bits_list(best.x.bits()))?;
            out.set_item("value", best.value)?;
        }
        None => {
            out.set_item("x", py.None())?;
            out.set_item("value", py.None())?;
        }
    }
    out.set_item("iterations", result.total_solver_calls)?;
    if include_trace {
        let trace = PyList::empty(py);
        for record in &result.trace {
            let entry = PyDict::new(py);
            entry.set_item("iter", record.iter)?;
            entry.set_item("active_rows_before", record.active_rows_before.clone())?;
            entry.set_item("active_rows_after", record.active_rows_after.clone())?;
            entry.set_item("nu", record.nu.clone())?;
            entry.set_item("tau", bits_list(&record.tau))?;
            entry.set_item("coupling_count", record.coupling_count)?;
            entry.set_item(
                "best_feasible_value_so_far",
                record.best_feasible_value_so_far,
            )?;
            entry.set_item("solver_mean_energy", record.solver_mean_energy)?;
            entry.set_item("feasible_sample_ratio", record.feasible_sample_ratio)?;
            trace.append(entry)?;
        }
        out.set_item("trace", trace)?;
    }
    Ok(out)
}

/// Run the constraint-generation loop.
///
/// `solver` is "exact", "qaoa", or "metropolis"; `t` is a threshold in
/// [0, 1] or "max". The Metropolis start temperature defaults to twice the
/// penalty weight. Returns {"status", "x", "value", "iterations"} plus
/// "trace" when requested.
#[pyfunction]
#[pyo3(signature = (
    inst, solver="exact", t="max", q=1024, seed=0, p=2, budget=300,
    sweeps=2000, t_start=None, t_end=0.1, max_iters=100, t_decay=0.5,
    kappa=1.0, stop_on_first_feasible=true, value_threshold=None,
    feasible_ratio_threshold=None, qubit_cap=None, include_trace=false
))]
#[allow(clippy::too_many_arguments)]
fn solve<'py>(
    py: Python<'py>,
    inst: &PyBlpInstance,
    solver: &str,
    t: &str,
    q: u64,
    seed: u64,
    p: usize,
    budget: usize,
    sweeps: usize,
    t_start: Option<f64>,
    t_end: f64,
    max_iters: usize,
    t_decay: f64,
    kappa: f64,
    stop_on_first_feasible: bool,
    value_threshold: Option<f64>,
    feasible_ratio_threshold: Option<f64>,
    qubit_cap: Option<usize>,
    include_trace: bool,
) -> PyResult<Bound<'py, PyDict>> {
    let spec = match solver {
        "exact" => SolverSpec::Exact,
        "qaoa" => SolverSpec::Qaoa { p, budget },
        "metropolis" => {
            let m_penalty = compute_big_m(&inst.inner, kappa).map_err(to_py_err)?;
            SolverSpec::Metropolis {
                sweeps,
                t_start: t_start.unwrap_or(2.0 * m_penalty),
                t_end,
            }
        }
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown solver '{other}' (expected exact, qaoa, or metropolis)"
            )))
        }
    };
    let threshold = if t == "max" {
        Threshold::Max
    } else {
        let value: f64 = t.parse().map_err(|_| {
            PyValueError::new_err(format!("t must be a number or 'max', got '{t}'"))
        })?;
        Threshold::Value(value)
    };
    let cfg = CongenConfig {
        t: threshold,
        q,
        max_iters,
        t_decay,
        stop_on_first_feasible,
        value_threshold,
        feasible_ratio_threshold,
        kappa,
        seed,
        qubit_cap,
    };
    let result = run_congen(&inst.inner, &spec, &cfg).map_err(to_py_err)?;
    run_to_dict(py, &result, include_trace)
}

#[pymodule]
fn congen(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBlpInstance>()?;
    m.add_function(wrap_pyfunction!(big_m, m)?)?;
    m.add_function(wrap_pyfunction!(ising_model, m)?)?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
