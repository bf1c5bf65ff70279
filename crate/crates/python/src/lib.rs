//! Python bindings: kernels, return series, loop sums and predictions.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;

use spreadpc::kernels::{make_uniform, parse_kernel_file, KernelSpec};
use spreadpc::returns::{self, Truncation};
use spreadpc::sums::{self, Model};

fn to_py(e: spreadpc::Error) -> PyErr {
    match e {
        spreadpc::Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn json<T: serde::Serialize>(x: &T) -> PyResult<String> {
    serde_json::to_string(x).map_err(|e| PyValueError::new_err(e.to_string()))
}

#[pyclass(name = "Kernel", module = "spreadpc_py", frozen)]
pub struct PyKernel {
    inner: KernelSpec,
}

#[pymethods]
impl PyKernel {
    /// Uniform punctured box of range `L` in dimension `d`.
    #[staticmethod]
    #[allow(non_snake_case)]
    fn uniform(d: usize, L: u32) -> PyResult<Self> {
        Ok(PyKernel {
            inner: make_uniform(d, L).map_err(to_py)?,
        })
    }

    /// Parses the kernel definition format (header line, then offset/mass rows).
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(PyKernel {
            inner: parse_kernel_file(text).map_err(to_py)?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.dim()
    }

    #[getter(L)]
    fn range(&self) -> u32 {
        self.inner.range()
    }

    #[getter]
    fn beta(&self) -> f64 {
        self.inner.beta()
    }

    fn __repr__(&self) -> String {
        format!(
            "Kernel(d={}, L={}, uniform={})",
            self.inner.dim(),
            self.inner.range(),
            self.inner.is_uniform()
        )
    }
}

#[pyclass(name = "ReturnSeries", module = "spreadpc_py", frozen)]
pub struct PyReturnSeries {
    inner: returns::ReturnSeries,
}

#[pymethods]
impl PyReturnSeries {
    #[getter]
    fn values(&self) -> Vec<f64> {
        self.inner.values.clone()
    }

    #[getter]
    fn method(&self) -> &'static str {
        self.inner.method.as_str()
    }

    #[getter]
    fn gauss_constant(&self) -> f64 {
        self.inner.gauss_constant
    }

    /// `r_n` as a string fraction, when the exact route was used.
    fn exact(&self, n: usize) -> Option<String> {
        self.inner.exact.as_ref().and_then(|q| q.get(n)).map(|q| q.to_string())
    }

    fn invariants_hold(&self) -> bool {
        self.inner.check_invariants().all_hold()
    }

    fn to_csv(&self, rational: bool) -> String {
        self.inner.to_csv(rational)
    }

    fn __len__(&self) -> usize {
        self.inner.values.len()
    }

    fn __getitem__(&self, n: usize) -> PyResult<f64> {
        self.inner.get(n).map_err(|e| pyo3::exceptions::PyIndexError::new_err(e.to_string()))
    }
}

#[pyclass(name = "Prediction", module = "spreadpc_py", frozen)]
pub struct PyPrediction {
    inner: sums::Prediction,
}

#[pymethods]
impl PyPrediction {
    #[getter]
    fn model(&self) -> &'static str {
        self.inner.model.as_str()
    }

    #[getter]
    fn correction_term(&self) -> f64 {
        self.inner.correction_term
    }

    #[getter]
    fn p_c_leading(&self) -> f64 {
        self.inner.p_c_leading
    }

    #[getter]
    fn error_scale(&self) -> f64 {
        self.inner.error_scale
    }

    #[getter]
    fn tail_valid(&self) -> bool {
        self.inner.tail_valid
    }

    fn to_json(&self) -> PyResult<String> {
        json(&self.inner)
    }

    fn __repr__(&self) -> String {
        format!(
            "Prediction({}, d={}, L={}, p_c=1+{:e}+O({:e}))",
            self.inner.model, self.inner.d, self.inner.range, self.inner.correction_term, self.inner.error_scale
        )
    }
}

fn parse_model(model: &str) -> PyResult<Model> {
    model.parse().map_err(to_py)
}

/// `r_0..r_nmax`, exact for uniform kernels when feasible.
#[pyfunction]
#[pyo3(signature = (kernel, nmax = returns::DEFAULT_N_MAX))]
fn return_series(kernel: &PyKernel, nmax: usize) -> PyResult<PyReturnSeries> {
    Ok(PyReturnSeries {
        inner: returns::return_series(&kernel.inner, nmax).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (model, kernel, nmax = returns::DEFAULT_N_MAX, tol = returns::DEFAULT_TOL, override_gate = false))]
fn predict_pc(model: &str, kernel: &PyKernel, nmax: usize, tol: f64, override_gate: bool) -> PyResult<PyPrediction> {
    let t = Truncation { n_max: nmax, tol };
    Ok(PyPrediction {
        inner: sums::predict_pc(parse_model(model)?, &kernel.inner, t, override_gate).map_err(to_py)?,
    })
}

#[pyfunction]
#[pyo3(signature = (model, d, L, nmax = returns::DEFAULT_N_MAX, override_gate = false))]
#[allow(non_snake_case)]
fn predict_pc_continuum(model: &str, d: usize, L: u32, nmax: usize, override_gate: bool) -> PyResult<PyPrediction> {
    Ok(PyPrediction {
        inner: sums::predict_pc_continuum(parse_model(model)?, d, L, nmax, override_gate).map_err(to_py)?,
    })
}

/// Loop sums as a JSON string.
#[pyfunction]
#[pyo3(signature = (kernel, tol = returns::DEFAULT_TOL))]
fn loop_sums(kernel: &PyKernel, tol: f64) -> PyResult<String> {
    let t = Truncation {
        n_max: returns::DEFAULT_N_MAX,
        tol,
    };
    let s = returns::return_series_truncated(&kernel.inner, t).map_err(to_py)?;
    json(&sums::loop_sums(&s, tol))
}

#[pyfunction]
fn cp_epsilon_sum(kernel: &PyKernel, epsilon: f64) -> PyResult<f64> {
    let s = returns::return_series(&kernel.inner, returns::DEFAULT_N_MAX).map_err(to_py)?;
    Ok(sums::cp_epsilon_sum(&s, epsilon).map_err(to_py)?.value)
}

#[pymodule]
fn spreadpc_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyKernel>()?;
    m.add_class::<PyReturnSeries>()?;
    m.add_class::<PyPrediction>()?;
    m.add_function(wrap_pyfunction!(return_series, m)?)?;
    m.add_function(wrap_pyfunction!(predict_pc, m)?)?;
    m.add_function(wrap_pyfunction!(predict_pc_continuum, m)?)?;
    m.add_function(wrap_pyfunction!(loop_sums, m)?)?;
    m.add_function(wrap_pyfunction!(cp_epsilon_sum, m)?)?;
    Ok(())
}
