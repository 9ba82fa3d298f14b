use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

use locaw::annihil;
use locaw::cli::{self, SystemConfig};
use locaw::lawstruct;
use locaw::limits::{validate_system, ProjectiveSystem, Thread, Verdict};
use locaw::matstar::{self, AlgebraElement, FinStarAlgebra};
use locaw::projlat::{self, Projection};
use locaw::report::CheckRecord;
use locaw::spectral::{self, MuRule, ReconstructOptions};
use locaw::{tol, Error};

type Rows = Vec<Vec<Complex64>>;

fn err(e: Error) -> PyErr {
    match e {
        Error::Precondition(_) | Error::Config { .. } | Error::UnknownNode(_) | Error::Horizon { .. } => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn to_block(rows: &Rows) -> PyResult<DMatrix<Complex64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(PyValueError::new_err("each block must be a square list of rows"));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn from_block(b: &DMatrix<Complex64>) -> Rows {
    (0..b.nrows())
        .map(|i| (0..b.ncols()).map(|j| b[(i, j)]).collect())
        .collect()
}

fn records<'py>(py: Python<'py>, recs: &[CheckRecord]) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(recs).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn elements(set: &[PyRef<'_, Element>]) -> Vec<AlgebraElement> {
    set.iter().map(|e| e.inner.clone()).collect()
}

fn projections(set: &[PyRef<'_, Element>]) -> PyResult<Vec<Projection>> {
    set.iter()
        .map(|e| Projection::new(e.inner.clone(), tol::DEFAULT).map_err(err))
        .collect()
}

/// A finite direct sum of full matrix algebras.
#[pyclass(module = "locaw", frozen)]
#[derive(Clone)]
struct Algebra {
    inner: FinStarAlgebra,
}

#[pymethods]
impl Algebra {
    #[new]
    fn new(block_sizes: Vec<usize>) -> PyResult<Self> {
        Ok(Self {
            inner: FinStarAlgebra::new(block_sizes).map_err(err)?,
        })
    }

    #[getter]
    fn block_sizes(&self) -> Vec<usize> {
        self.inner.block_sizes().to_vec()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn identity(&self) -> Element {
        AlgebraElement::identity(&self.inner).into()
    }

    fn zero(&self) -> Element {
        AlgebraElement::zero(&self.inner).into()
    }

    fn basis(&self) -> Vec<Element> {
        self.inner.basis().into_iter().map(Element::from).collect()
    }

    fn element(&self, blocks: Vec<Rows>) -> PyResult<Element> {
        let blocks = blocks.iter().map(to_block).collect::<PyResult<Vec<_>>>()?;
        Ok(AlgebraElement::new(&self.inner, blocks).map_err(err)?.into())
    }

    fn __repr__(&self) -> String {
        format!("Algebra({:?})", self.inner.block_sizes())
    }
}

/// An element of an `Algebra`, stored block by block.
#[pyclass(module = "locaw", frozen)]
#[derive(Clone)]
struct Element {
    inner: AlgebraElement,
}

impl From<AlgebraElement> for Element {
    fn from(inner: AlgebraElement) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl Element {
    #[staticmethod]
    fn diag(values: Vec<f64>) -> PyResult<Self> {
        Ok(AlgebraElement::diag(&values).map_err(err)?.into())
    }

    #[getter]
    fn algebra(&self) -> Algebra {
        Algebra {
            inner: self.inner.algebra().clone(),
        }
    }

    fn blocks(&self) -> Vec<Rows> {
        self.inner.blocks().iter().map(from_block).collect()
    }

    fn __add__(&self, other: &Element) -> PyResult<Element> {
        Ok(self.inner.add(&other.inner).map_err(err)?.into())
    }

    fn __sub__(&self, other: &Element) -> PyResult<Element> {
        Ok(self.inner.sub(&other.inner).map_err(err)?.into())
    }

    fn __mul__(&self, other: &Element) -> PyResult<Element> {
        Ok(self.inner.mul(&other.inner).map_err(err)?.into())
    }

    fn scale(&self, c: Complex64) -> Element {
        self.inner.scale(c).into()
    }

    fn adjoint(&self) -> Element {
        self.inner.adjoint().into()
    }

    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn dist(&self, other: &Element) -> f64 {
        self.inner.dist(&other.inner)
    }

    #[pyo3(signature = (tol = tol::DEFAULT))]
    fn is_hermitian(&self, tol: f64) -> bool {
        self.inner.is_hermitian(tol)
    }

    #[pyo3(signature = (tol = tol::DEFAULT))]
    fn is_projection(&self, tol: f64) -> bool {
        self.inner.is_projection(tol)
    }

    /// Ascending eigenvalues per block and the unitary of eigenvectors.
    fn eigen(&self) -> PyResult<(Vec<Vec<f64>>, Element)> {
        let e = matstar::hermitian_eigen(&self.inner).map_err(err)?;
        Ok((e.eigenvalues, e.unitary.into()))
    }

    fn range_projection(&self) -> PyResult<Element> {
        Ok(matstar::range_projection(&self.inner).map_err(err)?.into())
    }

    fn kernel_projection(&self) -> PyResult<Element> {
        Ok(matstar::kernel_projection(&self.inner).map_err(err)?.into())
    }

    /// The projection `E(λ)` onto the spectral subspace below `lam`.
    fn spectral_projection(&self, lam: f64) -> PyResult<Element> {
        Ok(spectral::spectral_projection(&self.inner, lam)
            .map_err(err)?
            .into_element()
            .into())
    }

    fn __repr__(&self) -> String {
        format!(
            "Element(algebra={:?}, norm={:.6})",
            self.inner.algebra().block_sizes(),
            self.inner.norm()
        )
    }
}

#[pyfunction]
fn right_annihilator(set: Vec<PyRef<'_, Element>>) -> PyResult<Element> {
    Ok(annihil::right_annihilating_projection(&elements(&set))
        .map_err(err)?
        .into_element()
        .into())
}

#[pyfunction]
fn left_annihilator(set: Vec<PyRef<'_, Element>>) -> PyResult<Element> {
    Ok(annihil::left_annihilating_projection(&elements(&set))
        .map_err(err)?
        .into_element()
        .into())
}

#[pyfunction]
fn sup(family: Vec<PyRef<'_, Element>>) -> PyResult<Element> {
    Ok(projlat::sup_family(&projections(&family)?)
        .map_err(err)?
        .into_element()
        .into())
}

#[pyfunction]
fn inf(family: Vec<PyRef<'_, Element>>) -> PyResult<Element> {
    Ok(projlat::inf_family(&projections(&family)?)
        .map_err(err)?
        .into_element()
        .into())
}

/// A projective system together with the named threads of its config.
#[pyclass(module = "locaw", frozen)]
struct System {
    system: Arc<ProjectiveSystem>,
    elements: Vec<(String, Thread)>,
}

#[pymethods]
impl System {
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        let model = SystemConfig::parse(text).and_then(|c| c.build()).map_err(err)?;
        Ok(Self {
            system: model.system,
            elements: model.elements.into_iter().collect(),
        })
    }

    #[staticmethod]
    fn chain(block_size: usize, horizon: usize) -> PyResult<Self> {
        let system = Arc::new(ProjectiveSystem::chain(block_size, horizon).map_err(err)?);
        Ok(Self {
            system,
            elements: Vec::new(),
        })
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.system.poset().labels().to_vec()
    }

    #[getter]
    fn element_names(&self) -> Vec<String> {
        self.elements.iter().map(|(n, _)| n.clone()).collect()
    }

    fn algebra(&self, label: &str) -> PyResult<Algebra> {
        let node = self.system.node(label).map_err(err)?;
        Ok(Algebra {
            inner: self.system.algebra(node).clone(),
        })
    }

    fn element(&self, name: &str) -> PyResult<ThreadPy> {
        self.elements
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| ThreadPy { inner: t.clone() })
            .ok_or_else(|| PyValueError::new_err(format!("unknown element `{name}`")))
    }

    /// Builds a thread from its top coordinate.
    fn thread(&self, top: &Element) -> PyResult<ThreadPy> {
        Ok(ThreadPy {
            inner: Thread::from_top(&self.system, top.inner.clone()).map_err(err)?,
        })
    }

    fn validate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        records(py, &validate_system(&self.system))
    }

    #[pyo3(signature = (samples = 50, seed = 0))]
    fn verify_equivalences<'py>(&self, py: Python<'py>, samples: usize, seed: u64) -> PyResult<Bound<'py, PyAny>> {
        let plan = annihil::SamplingPlan::new(samples, seed);
        let rep = py
            .detach(|| lawstruct::verify_equivalences(&self.system, plan))
            .map_err(err)?;
        records(py, &rep.records())
    }
}

/// A coherent thread of a projective system.
#[pyclass(name = "Thread", module = "locaw", frozen)]
struct ThreadPy {
    inner: Thread,
}

#[pymethods]
impl ThreadPy {
    fn project(&self, label: &str) -> PyResult<Element> {
        Ok(self.inner.project_label(label).map_err(err)?.into())
    }

    fn __add__(&self, other: &ThreadPy) -> PyResult<ThreadPy> {
        Ok(ThreadPy {
            inner: self.inner.add(&other.inner).map_err(err)?,
        })
    }

    fn __mul__(&self, other: &ThreadPy) -> PyResult<ThreadPy> {
        Ok(ThreadPy {
            inner: self.inner.mul(&other.inner).map_err(err)?,
        })
    }

    fn adjoint(&self) -> ThreadPy {
        ThreadPy {
            inner: self.inner.adjoint(),
        }
    }

    #[pyo3(signature = (tol = tol::DEFAULT))]
    fn is_projection(&self, tol: f64) -> bool {
        self.inner.is_projection(tol)
    }

    /// Returns `("bounded" | "exceeds" | "inconclusive", sup over the horizon)`.
    #[pyo3(signature = (horizon = None))]
    fn sup_norm(&self, horizon: Option<usize>) -> PyResult<(&'static str, f64)> {
        let horizon = horizon.unwrap_or_else(|| self.inner.system().len());
        let v = self.inner.sup_norm(horizon).map_err(err)?;
        let kind = match v.verdict {
            Verdict::Bounded { .. } => "bounded",
            Verdict::ExceedsBound { .. } => "exceeds",
            Verdict::Inconclusive => "inconclusive",
        };
        Ok((kind, v.sup_over_horizon))
    }

    /// Integral-sum reconstruction; returns `(max_error, records)`.
    #[pyo3(signature = (mesh = 0.1, eps = 0.1, rule = "midpoint", horizon = usize::MAX))]
    fn reconstruct<'py>(
        &self,
        py: Python<'py>,
        mesh: f64,
        eps: f64,
        rule: &str,
        horizon: usize,
    ) -> PyResult<(f64, Bound<'py, PyAny>)> {
        let mut opts = ReconstructOptions::new(mesh, eps);
        opts.rule = rule.parse::<MuRule>().map_err(err)?;
        opts.horizon = horizon;
        let r = py.detach(|| spectral::reconstruct(&self.inner, opts)).map_err(err)?;
        Ok((r.max_error(), records(py, &r.records)?))
    }
}

/// Runs the command-line interface in process; returns `(code, stdout, stderr)`.
#[pyfunction]
fn invoke(args: &Bound<'_, PyList>) -> PyResult<(i32, String, String)> {
    let mut argv = vec!["locaw".to_string()];
    argv.extend(args.extract::<Vec<String>>()?);
    let out = cli::invoke(argv);
    Ok((out.code, out.stdout, out.stderr))
}

#[pymodule(name = "locaw")]
pub fn locaw_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Algebra>()?;
    m.add_class::<Element>()?;
    m.add_class::<System>()?;
    m.add_class::<ThreadPy>()?;
    m.add_function(wrap_pyfunction!(right_annihilator, m)?)?;
    m.add_function(wrap_pyfunction!(left_annihilator, m)?)?;
    m.add_function(wrap_pyfunction!(sup, m)?)?;
    m.add_function(wrap_pyfunction!(inf, m)?)?;
    m.add_function(wrap_pyfunction!(invoke, m)?)?;
    Ok(())
}
