use kf::error::{KreinError, Result as KreinResult};
use kf::instances::{self, InstanceMeta, RandomSpec};
use kf::krein::{self as kr, DEFAULT_TOL};
use kf::linalg::{Matrix, Vector};
use kf::runner::{self, BatchItem, RunConfig, EXIT_NUMERICAL};
use kf::spectral::{self, Interval, SpectralType};
use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyException;
use pyo3::prelude::*;
use pyo3::types::PyAny;

create_exception!(krein_flow, KreinFlowError, PyException, "Base error of the krein_flow module.");
create_exception!(krein_flow, InvalidInputError, KreinFlowError, "Invalid instance, hypothesis or configuration.");
create_exception!(krein_flow, NumericalError, KreinFlowError, "Numerical failure of the pipeline.");

fn to_py(err: KreinError) -> PyErr {
    let msg = err.to_string();
    if runner::exit_code(&err) == EXIT_NUMERICAL {
        NumericalError::new_err(msg)
    } else {
        InvalidInputError::new_err(msg)
    }
}

fn lift<T>(r: KreinResult<T>) -> PyResult<T> {
    r.map_err(to_py)
}

fn matrix_from(rows: Vec<Vec<Complex64>>) -> PyResult<Matrix> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(InvalidInputError::new_err("matrix must be square"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<Complex64>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn json_loads<'py>(py: Python<'py>, text: &str) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.call_method1("loads", (text,))
}

/// `ℂⁿ` with the indefinite inner product `[x, y] = Σ s_i x_i conj(y_i)`.
#[pyclass(name = "KreinSpace", module = "krein_flow", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyKreinSpace {
    inner: kr::KreinSpace,
}

#[pymethods]
impl PyKreinSpace {
    #[new]
    fn new(signature: Vec<i8>) -> PyResult<Self> {
        Ok(Self {
            inner: lift(kr::KreinSpace::new(signature))?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn signature(&self) -> Vec<i8> {
        self.inner.signature().to_vec()
    }

    fn inner_product(&self, x: Vec<Complex64>, y: Vec<Complex64>) -> PyResult<Complex64> {
        lift(kr::inner(&Vector::from_vec(x), &Vector::from_vec(y), &self.inner))
    }

    fn __repr__(&self) -> String {
        format!("KreinSpace({:?})", self.inner.signature())
    }
}

/// A pair `(A, C)` of non-negative operators on a Krein space.
#[pyclass(name = "Instance", module = "krein_flow", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyInstance {
    inner: instances::Instance,
}

#[pymethods]
impl PyInstance {
    /// Builds an instance from square complex matrices and validates it.
    #[new]
    fn new(signature: Vec<i8>, a: Vec<Vec<Complex64>>, c: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let space = lift(kr::KreinSpace::new(signature))?;
        let inst = lift(instances::Instance::new(space, matrix_from(a)?, matrix_from(c)?, InstanceMeta::default()))?;
        lift(inst.validate(DEFAULT_TOL))?;
        Ok(Self { inner: inst })
    }

    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        Ok(Self {
            inner: lift(instances::preset(name))?.instance,
        })
    }

    #[staticmethod]
    #[pyo3(signature = (seed, n, plus=None, rank=None))]
    fn random(seed: u64, n: usize, plus: Option<usize>, rank: Option<usize>) -> PyResult<Self> {
        let mut spec = RandomSpec::new(n, plus.unwrap_or(n.div_ceil(2)));
        spec.rank = rank;
        Ok(Self {
            inner: lift(instances::random_instance(seed, &spec))?,
        })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inst = lift(instances::Instance::from_json_str(text))?;
        Ok(Self { inner: inst })
    }

    fn to_json(&self) -> String {
        runner::to_json_string(&self.inner.to_json_value())
    }

    #[getter]
    fn space(&self) -> PyKreinSpace {
        PyKreinSpace {
            inner: self.inner.space.clone(),
        }
    }

    #[getter]
    fn a(&self) -> Vec<Vec<Complex64>> {
        matrix_rows(self.inner.a.entries())
    }

    #[getter]
    fn c(&self) -> Vec<Vec<Complex64>> {
        matrix_rows(self.inner.c.entries())
    }

    fn validate(&self) -> PyResult<()> {
        lift(self.inner.validate(DEFAULT_TOL))
    }

    /// `(rank C, rank C²)`.
    fn regularity_ranks(&self) -> (usize, usize) {
        spectral::regularity_ranks(&self.inner.c, DEFAULT_TOL)
    }

    /// Nonzero eigenvalues of `A + tC` repeated by multiplicity, ascending.
    #[pyo3(signature = (t=0.0))]
    fn eigenvalues(&self, t: f64) -> PyResult<Vec<f64>> {
        let op = lift(self.inner.a.add_scaled(t, &self.inner.c))?;
        Ok(lift(spectral::eigen_nonnegative(&op, DEFAULT_TOL))?.eigenvalues_with_multiplicity())
    }

    /// `(eigenvalue, type)` pairs of `A + tC` with type `"positive"`, `"negative"` or `"neutral"`.
    #[pyo3(signature = (t=0.0))]
    fn spectral_types(&self, t: f64) -> PyResult<Vec<(f64, &'static str)>> {
        let op = lift(self.inner.a.add_scaled(t, &self.inner.c))?;
        let report = lift(spectral::eigen_nonnegative(&op, DEFAULT_TOL))?;
        report
            .clusters
            .iter()
            .map(|k| {
                let kind = match lift(spectral::classify_point(&report, k.value))? {
                    SpectralType::PositiveType => "positive",
                    SpectralType::NegativeType => "negative",
                    SpectralType::Neutral => "neutral",
                };
                Ok((k.value, kind))
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Instance(n={}, signature={:?})", self.inner.space.dim(), self.inner.space.signature())
    }
}

/// Result of one pipeline run.
#[pyclass(name = "Report", module = "krein_flow", frozen)]
struct PyReport {
    outcome: runner::RunOutcome,
}

#[pymethods]
impl PyReport {
    #[getter]
    fn delta(&self) -> f64 {
        self.outcome.report.delta
    }

    #[getter]
    fn lp_sum(&self) -> f64 {
        self.outcome.report.lp_sum
    }

    #[getter]
    fn bound_rhs(&self) -> f64 {
        self.outcome.report.bound_rhs
    }

    #[getter]
    fn margin(&self) -> f64 {
        self.outcome.report.margin
    }

    #[getter]
    fn gammas(&self) -> Vec<f64> {
        self.outcome.report.gammas.clone()
    }

    #[getter]
    fn passed(&self) -> bool {
        self.outcome.report.passed
    }

    #[getter]
    fn exit_status(&self) -> i32 {
        self.outcome.report.exit_status
    }

    #[getter]
    fn failed_checks(&self) -> Vec<&'static str> {
        self.outcome.report.failed_checks.clone()
    }

    /// `(alpha, beta, multiplicity)` of the paired extended enumerations.
    #[getter]
    fn pairs(&self) -> Vec<(f64, f64, usize)> {
        self.outcome
            .report
            .enumeration
            .pairs
            .iter()
            .map(|p| (p.alpha, p.beta, p.multiplicity))
            .collect()
    }

    /// Rows `(t, branch_id, lambda, multiplicity, gram_min)`.
    fn trajectory(&self) -> Vec<(f64, usize, f64, usize, f64)> {
        self.outcome
            .trajectory
            .iter()
            .map(|r| (r.t, r.branch_id, r.lambda, r.multiplicity, r.gram_min))
            .collect()
    }

    fn to_json(&self) -> String {
        runner::to_json_string(&self.outcome.report)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_loads(py, &self.to_json())
    }

    fn __repr__(&self) -> String {
        let r = &self.outcome.report;
        format!(
            "Report(delta={:e}, lp_sum={:e}, bound_rhs={:e}, passed={})",
            r.delta, r.lp_sum, r.bound_rhs, r.passed
        )
    }
}

fn run_config(interval: (f64, f64), p: f64, steps: usize, tol: f64, matching_tol: f64, split: Vec<f64>) -> PyResult<RunConfig> {
    let cfg = RunConfig {
        tol,
        matching_tol,
        split,
        ..RunConfig::new(lift(Interval::new(interval.0, interval.1))?, p, steps)
    };
    lift(cfg.validate())?;
    Ok(cfg)
}

/// Tracks `A + tC` and checks the ℓ^p variation bound on `interval`.
#[pyfunction]
#[pyo3(signature = (instance, interval, p=1.0, steps=201, tol=DEFAULT_TOL, matching_tol=1e-10, split=Vec::new()))]
#[allow(clippy::too_many_arguments)]
fn run(
    py: Python<'_>,
    instance: &PyInstance,
    interval: (f64, f64),
    p: f64,
    steps: usize,
    tol: f64,
    matching_tol: f64,
    split: Vec<f64>,
) -> PyResult<PyReport> {
    let cfg = run_config(interval, p, steps, tol, matching_tol, split)?;
    let inst = instance.inner.clone();
    let outcome = py.detach(move || runner::run(&inst, &cfg));
    Ok(PyReport { outcome: lift(outcome)? })
}

/// Runs `count` random instances from consecutive seeds; returns the batch report as a dict.
#[pyfunction]
#[pyo3(signature = (count, seed=0, n=8, plus=None, interval=(0.1, 5.0), p=1.0, steps=201))]
#[allow(clippy::too_many_arguments)]
fn verify<'py>(
    py: Python<'py>,
    count: usize,
    seed: u64,
    n: usize,
    plus: Option<usize>,
    interval: (f64, f64),
    p: f64,
    steps: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let cfg = run_config(interval, p, steps, DEFAULT_TOL, 1e-10, Vec::new())?;
    let spec = RandomSpec::new(n, plus.unwrap_or(n.div_ceil(2)));
    let items: Vec<BatchItem> = (0..count as u64)
        .map(|k| BatchItem::Random {
            seed: seed + k,
            spec: spec.clone(),
            config: cfg.clone(),
        })
        .collect();
    let report = py.detach(move || runner::verify(&items));
    json_loads(py, &runner::to_json_string(&report))
}

#[pyfunction]
fn presets() -> Vec<&'static str> {
    instances::PRESETS.to_vec()
}

#[pymodule]
fn krein_flow(m: &Bound<'_, PyModule>) -> PyResult<()> {
    let py = m.py();
    m.add_class::<PyKreinSpace>()?;
    m.add_class::<PyInstance>()?;
    m.add_class::<PyReport>()?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    m.add_function(wrap_pyfunction!(presets, m)?)?;
    m.add("KreinFlowError", py.get_type::<KreinFlowError>())?;
    m.add("InvalidInputError", py.get_type::<InvalidInputError>())?;
    m.add("NumericalError", py.get_type::<NumericalError>())?;
    m.add("EXIT_CODES", (runner::EXIT_PASS, runner::EXIT_CHECK_FAILED, runner::EXIT_INVALID, EXIT_NUMERICAL))?;
    Ok(())
}
