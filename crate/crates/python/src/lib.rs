//! Python bindings: homogenized constants, random fields, subsolutions and
//! experiment runs.

use std::sync::Arc;

use multiscale_is::experiment::{self, Workers};
use multiscale_is::periodic_env::{self, PeriodicModel, DEFAULT_QUADRATURE_NODES};
use multiscale_is::potential::{Constant, CosSin, Potential, Quadratic};
use multiscale_is::random_env;
use multiscale_is::subsolution::{
    verify_subsolution, ExitShape, ExitSubsolution, Hamiltonian1D, TerminalQuadraticSubsolution,
    VerificationGrid, VerifyOptions,
};
use multiscale_is::{Error, EstimatorKind, Subsolution};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(
    pymsis,
    BudgetExceeded,
    PyException,
    "The run would exceed the step ceiling."
);

fn to_py(err: Error) -> PyErr {
    match err {
        Error::BudgetExceeded { .. } => BudgetExceeded::new_err(err.to_string()),
        Error::Io { .. } | Error::Csv(_) => PyIOError::new_err(err.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Homogenized coefficients of a periodic potential.
#[pyclass(frozen, module = "pymsis")]
struct PeriodicConstants {
    model: PeriodicModel,
    inner: periodic_env::EffectiveCoefficients,
}

#[pymethods]
impl PeriodicConstants {
    #[getter]
    fn l(&self) -> f64 {
        self.inner.l
    }
    #[getter]
    fn l_hat(&self) -> f64 {
        self.inner.l_hat
    }
    #[getter]
    fn kappa(&self) -> f64 {
        self.inner.kappa
    }
    #[getter]
    fn q(&self) -> f64 {
        self.inner.q
    }

    /// `1 + χ'(y)`.
    fn corrector(&self, y: f64) -> f64 {
        periodic_env::corrector_factor(&self.model, &self.inner, y)
    }

    fn __repr__(&self) -> String {
        format!(
            "PeriodicConstants(l={}, l_hat={}, kappa={}, q={})",
            self.inner.l, self.inner.l_hat, self.inner.kappa, self.inner.q
        )
    }
}

/// Constants for `Q(y) = amplitude (cos y + sin y)`, or `Q ≡ 0` when the amplitude is zero.
#[pyfunction]
#[pyo3(signature = (amplitude = 1.0, diffusion = 1.0, n_quad = DEFAULT_QUADRATURE_NODES))]
fn cos_sin_constants(amplitude: f64, diffusion: f64, n_quad: usize) -> PyResult<PeriodicConstants> {
    let fast: Arc<dyn Potential> = if amplitude == 0.0 {
        Arc::new(Constant(0.0))
    } else {
        Arc::new(CosSin { amplitude })
    };
    let model = PeriodicModel::new(
        fast,
        Arc::new(Quadratic { stiffness: 1.0 }),
        std::f64::consts::TAU,
        diffusion,
    )
    .map_err(to_py)?;
    let inner = periodic_env::compute_constants(&model, n_quad).map_err(to_py)?;
    Ok(PeriodicConstants { model, inner })
}

/// `(K, K̂, κ, q)` of a Gaussian random potential with the given variance.
#[pyfunction]
#[pyo3(signature = (variance = 1.0, diffusion = 1.0))]
fn random_constants(variance: f64, diffusion: f64) -> PyResult<(f64, f64, f64, f64)> {
    let spec = random_env::GaussianFieldSpec {
        variance,
        ..Default::default()
    };
    let c = random_env::homogenized_constants(&spec, diffusion).map_err(to_py)?;
    Ok((c.k, c.k_hat, c.kappa, c.q))
}

/// `Δ = tol · δ²/ε`.
#[pyfunction]
fn step_size(epsilon: f64, delta: f64, tol: f64) -> PyResult<f64> {
    multiscale_is::step_size(epsilon, delta, tol).map_err(to_py)
}

/// One frozen realization of a stationary Gaussian potential.
#[pyclass(frozen, module = "pymsis")]
struct GaussianField {
    inner: random_env::FieldRealization,
}

#[pymethods]
impl GaussianField {
    #[new]
    #[pyo3(signature = (variance = 1.0, corr_length_sq = 1.0, n_modes = random_env::DEFAULT_MODES, seed = 0))]
    fn new(variance: f64, corr_length_sq: f64, n_modes: usize, seed: u64) -> PyResult<Self> {
        let spec = random_env::GaussianFieldSpec {
            variance,
            corr_length_sq,
            n_modes,
            seed,
        };
        Ok(Self {
            inner: random_env::FieldRealization::from_seed(&spec).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_record(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: random_env::FieldRealization::from_record(text).map_err(to_py)?,
        })
    }

    fn to_record(&self) -> String {
        self.inner.to_record()
    }

    #[getter]
    fn n_modes(&self) -> usize {
        self.inner.n_modes()
    }

    fn value(&self, y: f64) -> f64 {
        self.inner.value(y)
    }

    fn derivative(&self, y: f64) -> f64 {
        self.inner.derivative(y)
    }

    fn values(&self, ys: Vec<f64>) -> Vec<f64> {
        ys.into_iter().map(|y| self.inner.value(y)).collect()
    }
}

/// Subsolution used to build importance-sampling controls.
#[pyclass(frozen, name = "Subsolution", module = "pymsis")]
struct PySubsolution {
    inner: Subsolution,
}

#[pymethods]
impl PySubsolution {
    /// Value function for drift `-κx` and terminal cost `(|x| - 1)²`.
    #[staticmethod]
    #[pyo3(signature = (kappa, diffusion = 1.0, horizon = 1.0))]
    fn terminal_quadratic(kappa: f64, diffusion: f64, horizon: f64) -> Self {
        Self {
            inner: Subsolution::TerminalQuadratic(TerminalQuadraticSubsolution {
                kappa,
                diffusion,
                horizon,
            }),
        }
    }

    /// Exit subsolution; `shape` is `"linear_drift"` or `"rest_point"`.
    #[staticmethod]
    #[pyo3(signature = (x_minus, x_plus, shape, diffusion = 1.0))]
    fn exit(x_minus: f64, x_plus: f64, shape: &str, diffusion: f64) -> PyResult<Self> {
        let shape = match shape {
            "linear_drift" => ExitShape::LinearDrift,
            "rest_point" => ExitShape::RestPoint,
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown exit shape {other:?}"
                )))
            }
        };
        Ok(Self {
            inner: Subsolution::Exit(ExitSubsolution {
                diffusion,
                x_minus,
                x_plus,
                shape,
            }),
        })
    }

    #[staticmethod]
    fn zero() -> Self {
        Self {
            inner: Subsolution::Zero,
        }
    }

    fn value(&self, t: f64, x: f64) -> f64 {
        self.inner.value(t, x)
    }

    fn gradient(&self, t: f64, x: f64) -> f64 {
        self.inner.gradient(t, x)
    }

    /// Checks the subsolution inequalities for drift `-kappa · slope(x)`
    /// and effective diffusivity `q` on an `nt × nx` grid.
    #[pyo3(signature = (kappa, q, slow, t_range, x_range, nt = 100, nx = 100, tol = 1e-4, fd_step = 1e-4))]
    #[allow(clippy::too_many_arguments)]
    fn verify<'py>(
        &self,
        py: Python<'py>,
        kappa: f64,
        q: f64,
        slow: &str,
        t_range: (f64, f64),
        x_range: (f64, f64),
        nt: usize,
        nx: usize,
        tol: f64,
        fd_step: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let ham = match slow {
            "linear" => Hamiltonian1D::new(move |_| -kappa, q),
            "quadratic" => Hamiltonian1D::new(move |x| -kappa * x, q),
            other => {
                return Err(PyValueError::new_err(format!(
                    "unknown slow potential {other:?}"
                )))
            }
        }
        .map_err(to_py)?;
        let grid = VerificationGrid {
            t_range,
            x_range,
            nt,
            nx,
        };
        let opts = VerifyOptions {
            tol,
            fd_step,
            ..Default::default()
        };
        let r = verify_subsolution(&self.inner, &ham, &grid, &opts).map_err(to_py)?;
        let d = PyDict::new(py);
        d.set_item("passed", r.passed)?;
        d.set_item("max_violation", r.max_violation)?;
        d.set_item("max_abs_residual", r.max_abs_residual)?;
        d.set_item("boundary_violation", r.boundary_violation)?;
        d.set_item("worst_at", r.worst_at)?;
        Ok(d)
    }
}

/// Experiment definition, created from a preset or a config file.
#[pyclass(name = "ExperimentSpec", module = "pymsis", skip_from_py_object)]
#[derive(Clone)]
struct PyExperimentSpec {
    inner: experiment::ExperimentSpec,
}

#[pymethods]
impl PyExperimentSpec {
    #[staticmethod]
    #[pyo3(signature = (table, row, scale_n = 1.0))]
    fn preset(table: u8, row: usize, scale_n: f64) -> PyResult<Self> {
        Ok(Self {
            inner: experiment::preset(table, row, scale_n).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn from_config(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: experiment::parse_config(text).map_err(to_py)?,
        })
    }

    fn to_config(&self) -> String {
        experiment::serialize_config(&self.inner)
    }

    #[getter]
    fn experiment_id(&self) -> String {
        self.inner.experiment_id.clone()
    }
    #[getter]
    fn epsilon(&self) -> f64 {
        self.inner.epsilon
    }
    #[getter]
    fn delta(&self) -> f64 {
        self.inner.delta
    }
    #[getter]
    fn n_paths(&self) -> u64 {
        self.inner.n_paths
    }
    #[setter]
    fn set_n_paths(&mut self, n: u64) {
        self.inner.n_paths = n;
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.inner.master_seed
    }
    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.master_seed = seed;
    }
    #[getter]
    fn estimators(&self) -> Vec<&'static str> {
        self.inner.estimators.iter().map(|k| k.name()).collect()
    }
    #[setter]
    fn set_estimators(&mut self, names: Vec<String>) -> PyResult<()> {
        self.inner.estimators = names
            .iter()
            .map(|n| n.parse::<EstimatorKind>())
            .collect::<Result<_, _>>()
            .map_err(to_py)?;
        Ok(())
    }
    #[setter]
    fn set_workers(&mut self, workers: usize) {
        self.inner.workers = if workers == 0 {
            Workers::Auto
        } else {
            Workers::Fixed(workers)
        };
    }

    fn estimated_steps(&self) -> PyResult<f64> {
        self.inner.estimated_steps().map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!(
            "ExperimentSpec(id={:?}, epsilon={}, delta={}, n_paths={})",
            self.inner.experiment_id, self.inner.epsilon, self.inner.delta, self.inner.n_paths
        )
    }
}

#[pyclass(frozen, module = "pymsis")]
struct ExperimentResult {
    inner: experiment::ExperimentResult,
}

#[pymethods]
impl ExperimentResult {
    /// CSV rows as dictionaries; undefined statistics are `None`.
    fn rows<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyDict>>> {
        self.inner
            .csv_rows()
            .into_iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("experiment_id", r.experiment_id)?;
                d.set_item("epsilon", r.epsilon)?;
                d.set_item("delta", r.delta)?;
                d.set_item("eps_over_delta", r.eps_over_delta)?;
                d.set_item("estimator", r.estimator.name())?;
                d.set_item("n", r.n)?;
                d.set_item("mean", r.mean)?;
                d.set_item("second_moment", r.second_moment)?;
                d.set_item("re_sample", r.re_sample)?;
                d.set_item("re_mean", r.re_mean)?;
                d.set_item("neg_eps_log_mean", r.neg_eps_log_mean)?;
                d.set_item("neg_eps_log_m2", r.neg_eps_log_m2)?;
                d.set_item("censored", r.censored)?;
                d.set_item("wall_seconds", r.wall_seconds)?;
                d.set_item("seed", r.seed)?;
                Ok(d)
            })
            .collect()
    }

    /// `(mean, standard error)` of one estimator.
    fn estimate(&self, name: &str) -> PyResult<(f64, f64)> {
        let kind: EstimatorKind = name.parse().map_err(to_py)?;
        let s = self
            .inner
            .estimate(kind)
            .ok_or_else(|| PyValueError::new_err(format!("{name} was not run")))?;
        Ok((s.mean, s.std_error()))
    }

    fn max_z(&self) -> f64 {
        self.inner.cross_check.max_z()
    }

    fn write_csv(&self, path: std::path::PathBuf) -> PyResult<()> {
        experiment::write_csv(&path, &self.inner.csv_rows()).map_err(to_py)
    }

    fn summary(&self) -> String {
        self.inner.summary_text()
    }
}

/// Runs an experiment with the interpreter lock released.
#[pyfunction]
fn run_experiment(py: Python<'_>, spec: &PyExperimentSpec) -> PyResult<ExperimentResult> {
    let spec = spec.inner.clone();
    let inner = py
        .detach(move || experiment::run_experiment(&spec))
        .map_err(to_py)?;
    Ok(ExperimentResult { inner })
}

#[pymodule]
pub fn pymsis(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_class::<PeriodicConstants>()?;
    m.add_class::<GaussianField>()?;
    m.add_class::<PySubsolution>()?;
    m.add_class::<PyExperimentSpec>()?;
    m.add_class::<ExperimentResult>()?;
    m.add_function(wrap_pyfunction!(cos_sin_constants, m)?)?;
    m.add_function(wrap_pyfunction!(random_constants, m)?)?;
    m.add_function(wrap_pyfunction!(step_size, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
