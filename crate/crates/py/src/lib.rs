//! Python bindings. Matrices cross the boundary as nested lists of complex
//! numbers (row-major); reports come back as plain dicts.

use std::path::PathBuf;

use nheth::dynamics::{expectation_trajectory, DynamicsState};
use nheth::ensembles::{sample, EnsembleSpec, Model};
use nheth::ethstats::{
    corrected_elements, matrix_elements, BasisKind, DiagReference, EnergyWindow,
};
use nheth::fock::{enumerate_half_filling, number_operator};
use nheth::harness::report::to_json;
use nheth::harness::{run_sweep, RunConfig};
use nheth::spectral::{decompose_with, overlap_gram, SpectralDecomposition, SpectralOptions};
use nheth::{c64, Error, Mat, MatRef};
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

type Rows = Vec<Vec<c64>>;

fn py_err(e: Error) -> PyErr {
    match e.exit_code() {
        1 => PyValueError::new_err(e.to_string()),
        3 => PyOSError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_mat(rows: &Rows) -> PyResult<Mat<c64>> {
    let d = rows.len();
    if d == 0 || rows.iter().any(|r| r.len() != d) {
        return Err(PyValueError::new_err("expected a non-empty square matrix"));
    }
    Ok(Mat::from_fn(d, d, |i, j| rows[i][j]))
}

fn to_rows(m: MatRef<'_, c64>) -> Rows {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
}

fn parse<T: std::str::FromStr<Err = Error>>(s: &str) -> PyResult<T> {
    s.parse().map_err(py_err)
}

fn json_to_py(py: Python<'_>, text: &str) -> PyResult<PyObject> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Dense Hamiltonian of one realization in the half-filled Fock basis.
#[pyfunction]
#[pyo3(signature = (model, n_modes, seed, index=0))]
fn sample_hamiltonian(model: &str, n_modes: usize, seed: u64, index: u64) -> PyResult<Rows> {
    let spec = EnsembleSpec::new(parse::<Model>(model)?, n_modes, seed, index);
    let real = sample(&spec).map_err(py_err)?;
    Ok(to_rows(real.matrix.as_ref()))
}

/// Half-filled basis states as integers, bit `i` = occupation of mode `i`.
#[pyfunction]
fn half_filling_states(n_modes: usize) -> PyResult<Vec<u32>> {
    Ok(enumerate_half_filling(n_modes).map_err(py_err)?.states().to_vec())
}

/// Matrix of `n_mode` in the half-filled basis of `n_modes` modes.
#[pyfunction]
fn number_matrix(mode: usize, n_modes: usize) -> PyResult<Rows> {
    let basis = enumerate_half_filling(n_modes).map_err(py_err)?;
    Ok(to_rows(number_operator(mode, &basis).map_err(py_err)?.as_ref()))
}

/// Biorthogonal eigendecomposition of a non-Hermitian matrix.
#[pyclass(name = "Spectrum", frozen)]
struct PySpectrum {
    dec: SpectralDecomposition,
}

#[pymethods]
impl PySpectrum {
    #[new]
    #[pyo3(signature = (matrix, pairing_threshold=None, max_condition=None))]
    fn new(matrix: Rows, pairing_threshold: Option<f64>, max_condition: Option<f64>) -> PyResult<Self> {
        let mut opts = SpectralOptions::default();
        if let Some(p) = pairing_threshold {
            opts.pairing_threshold = p;
        }
        if let Some(c) = max_condition {
            opts.max_condition = c;
        }
        let h = to_mat(&matrix)?;
        Ok(Self {
            dec: decompose_with(h.as_ref(), &opts).map_err(py_err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.dec.dim()
    }

    #[getter]
    fn eigenvalues(&self) -> Vec<c64> {
        self.dec.eigenvalues().to_vec()
    }

    /// Right eigenvectors as columns.
    #[getter]
    fn right(&self) -> Rows {
        to_rows(self.dec.right())
    }

    /// Left eigenvectors as rows.
    #[getter]
    fn left(&self) -> Rows {
        to_rows(self.dec.left())
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.dec.residual()
    }

    #[getter]
    fn pairing_error(&self) -> f64 {
        self.dec.pairing_error()
    }

    fn condition_numbers(&self) -> Vec<f64> {
        self.dec.condition_numbers()
    }

    /// `G_mn = <R_m|R_n>`.
    fn gram(&self) -> Rows {
        to_rows(overlap_gram(&self.dec).matrix())
    }

    /// `<R_m|O|R_n>` (`basis="right-right"`) or `<R_m|O|L_n>` (`"right-left"`).
    #[pyo3(signature = (observable, basis="right-right"))]
    fn matrix_elements(&self, observable: Rows, basis: &str) -> PyResult<Rows> {
        let kind = match basis {
            "right-right" | "rr" => BasisKind::RightRight,
            "right-left" | "rl" => BasisKind::RightLeft,
            other => return Err(PyValueError::new_err(format!("unknown basis '{other}'"))),
        };
        let o = to_mat(&observable)?;
        let set = matrix_elements(o.as_ref(), &self.dec, kind).map_err(py_err)?;
        Ok(to_rows(set.elements.as_ref()))
    }

    /// `O_mn - G_mn tr(O)/D` for `m != n` in the right basis; the diagonal is
    /// left as `O_mm`.
    fn corrected_elements(&self, observable: Rows) -> PyResult<Rows> {
        let o = to_mat(&observable)?;
        let set = matrix_elements(o.as_ref(), &self.dec, BasisKind::RightRight).map_err(py_err)?;
        Ok(to_rows(corrected_elements(&set).map_err(py_err)?.tilde.as_ref()))
    }

    /// `(t, Tr(O rho(t))/Tr rho(t), Tr rho(t))` for each time.
    fn trajectory(&self, rho: Rows, observable: Rows, times: Vec<f64>) -> PyResult<Vec<(f64, c64, f64)>> {
        let rho = to_mat(&rho)?;
        let o = to_mat(&observable)?;
        let state = DynamicsState::new(rho.as_ref(), &self.dec).map_err(py_err)?;
        let traj = expectation_trajectory(o.as_ref(), &state, &self.dec, &times).map_err(py_err)?;
        Ok(traj.into_iter().map(|p| (p.t, p.value, p.trace_factor)).collect())
    }

    fn __repr__(&self) -> String {
        format!(
            "Spectrum(dim={}, residual={:.2e}, pairing_error={:.2e})",
            self.dec.dim(),
            self.dec.residual(),
            self.dec.pairing_error()
        )
    }
}

/// Indices of eigenvalues inside `window` (`"disk:r"` or `"slice:a,b,phi"`).
#[pyfunction]
fn select_window(eigenvalues: Vec<c64>, window: &str) -> PyResult<Vec<usize>> {
    let w: EnergyWindow = parse(window)?;
    Ok(nheth::ethstats::select_window(&eigenvalues, &w))
}

/// Disorder-averaged fluctuation sweep; returns the summary as a dict.
#[pyfunction]
#[pyo3(signature = (model, sizes, realizations, seed=0, window="disk:0.2", mode=0, reference=None, jobs=0, output_dir=None))]
#[allow(clippy::too_many_arguments)]
fn sweep(
    py: Python<'_>,
    model: &str,
    sizes: Vec<usize>,
    realizations: Vec<usize>,
    seed: u64,
    window: &str,
    mode: usize,
    reference: Option<&str>,
    jobs: usize,
    output_dir: Option<PathBuf>,
) -> PyResult<PyObject> {
    let cfg = RunConfig {
        model: parse(model)?,
        master_seed: seed,
        sizes,
        realizations_per_size: realizations,
        window: parse(window)?,
        observable_mode: mode,
        reference: reference.map(parse::<DiagReference>).transpose()?,
        output_dir,
        parallelism: jobs,
        ..RunConfig::default()
    };
    let report = py.allow_threads(|| run_sweep(&cfg)).map_err(py_err)?;
    json_to_py(py, &to_json(&report))
}

#[pymodule]
fn pynheth(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(sample_hamiltonian, m)?)?;
    m.add_function(wrap_pyfunction!(half_filling_states, m)?)?;
    m.add_function(wrap_pyfunction!(number_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(select_window, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_class::<PySpectrum>()?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
