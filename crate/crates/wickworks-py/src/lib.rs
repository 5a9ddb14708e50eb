//! Python bindings: exact Hermite/cumulant algebra, Feynman diagrams,
//! torus fields and the Φ⁴ expansion.

use std::str::FromStr;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyTuple;

use wickworks::chaos::{self, MultiIndex, MultiplyRoute};
use wickworks::cumulants::{self, Functional};
use wickworks::feynman::{self, named};
use wickworks::pairings::{self, CovMatrix};
use wickworks::polyalg;
use wickworks::torusfield::{self, ModeLattice, SpectralProfile, Synthesis};
use wickworks::{phi4, verify, Rational};

fn err(e: wickworks::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn fraction<'py>(py: Python<'py>, r: &Rational) -> PyResult<Bound<'py, PyAny>> {
    py.import("fractions")?
        .getattr("Fraction")?
        .call1((r.to_string(),))
}

/// Accepts int, str or fractions.Fraction.
fn rational(obj: &Bound<'_, PyAny>) -> PyResult<Rational> {
    let s = obj.str()?.to_string();
    Rational::from_str(s.trim())
        .map_err(|_| PyValueError::new_err(format!("not a rational: {s:?}")))
}

fn json_value<'py>(py: Python<'py>, v: &serde_json::Value) -> PyResult<Bound<'py, PyAny>> {
    py.import("json")?.getattr("loads")?.call1((v.to_string(),))
}

#[pyclass(module = "wickworks", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Polynomial {
    inner: polyalg::Polynomial,
}

#[pymethods]
impl Polynomial {
    #[new]
    fn new(coefficients: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let c = coefficients
            .iter()
            .map(rational)
            .collect::<PyResult<Vec<_>>>()?;
        Ok(Polynomial {
            inner: polyalg::Polynomial::new(c),
        })
    }

    /// Coefficients from degree 0 upward, as Fractions.
    #[getter]
    fn coefficients<'py>(&self, py: Python<'py>) -> PyResult<Vec<Bound<'py, PyAny>>> {
        self.inner
            .coeffs()
            .iter()
            .map(|c| fraction(py, c))
            .collect()
    }

    #[getter]
    fn degree(&self) -> Option<usize> {
        self.inner.degree()
    }

    fn derivative(&self) -> Self {
        Polynomial {
            inner: self.inner.derivative(),
        }
    }

    fn __call__(&self, x: f64) -> f64 {
        self.inner.eval_f64(x)
    }

    fn __add__(&self, o: &Self) -> Self {
        Polynomial {
            inner: &self.inner + &o.inner,
        }
    }

    fn __mul__(&self, o: &Self) -> Self {
        Polynomial {
            inner: &self.inner * &o.inner,
        }
    }

    fn __eq__(&self, o: &Self) -> bool {
        self.inner == o.inner
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Polynomial({})", self.inner)
    }
}

/// H_n, or the variance-σ² family when sigma2 is given.
#[pyfunction]
#[pyo3(signature = (n, sigma2=None))]
fn hermite(n: usize, sigma2: Option<Bound<'_, PyAny>>) -> PyResult<Polynomial> {
    let inner = match sigma2 {
        None => polyalg::hermite(n),
        Some(s) => polyalg::hermite_scaled(n, &rational(&s)?),
    };
    Ok(Polynomial { inner })
}

/// H_n H_m expanded in the Hermite basis: {k: coefficient}.
#[pyfunction]
fn hermite_product(py: Python<'_>, n: usize, m: usize) -> PyResult<Vec<(usize, Bound<'_, PyAny>)>> {
    polyalg::hermite_product(n, m)
        .iter()
        .map(|(k, c)| Ok((*k, fraction(py, c)?)))
        .collect()
}

/// E[p(X)] for X ~ N(0, 1).
#[pyfunction]
fn gaussian_expectation<'py>(py: Python<'py>, p: &Polynomial) -> PyResult<Bound<'py, PyAny>> {
    fraction(py, &polyalg::gaussian_expectation(&p.inner))
}

/// E[X_{i1} … X_{ik}] for a centred Gaussian vector with covariance `cov`.
#[pyfunction]
fn isserlis_moment<'py>(
    py: Python<'py>,
    cov: Vec<Vec<Bound<'py, PyAny>>>,
    indices: Vec<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let rows = cov
        .iter()
        .map(|r| r.iter().map(rational).collect::<PyResult<Vec<_>>>())
        .collect::<PyResult<Vec<_>>>()?;
    let c = CovMatrix::new(rows).map_err(err)?;
    fraction(py, &pairings::isserlis_moment(&c, &indices).map_err(err)?)
}

/// Number of perfect matchings of n points.
#[pyfunction]
fn count_matchings(n: usize) -> usize {
    pairings::enumerate_matchings(n, true).count()
}

fn functional(v: &[Bound<'_, PyAny>]) -> PyResult<Functional> {
    if v.is_empty() {
        return Err(PyValueError::new_err("need at least the degree-0 value"));
    }
    Ok(Functional::from_rationals(
        &v.iter().map(rational).collect::<PyResult<Vec<_>>>()?,
    ))
}

fn functional_out<'py>(py: Python<'py>, f: &Functional) -> PyResult<Vec<Bound<'py, PyAny>>> {
    f.values()
        .iter()
        .map(|v| fraction(py, &v.constant_term()))
        .collect()
}

/// Moments μ_0..μ_D from cumulants κ_0..κ_D.
#[pyfunction]
fn moments_from_cumulants<'py>(
    py: Python<'py>,
    kappa: Vec<Bound<'py, PyAny>>,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    functional_out(
        py,
        &cumulants::moments_from_cumulants(&functional(&kappa)?).map_err(err)?,
    )
}

/// Cumulants κ_0..κ_D from moments μ_0..μ_D (μ_0 must be 1).
#[pyfunction]
fn cumulants_from_moments<'py>(
    py: Python<'py>,
    mu: Vec<Bound<'py, PyAny>>,
) -> PyResult<Vec<Bound<'py, PyAny>>> {
    functional_out(
        py,
        &cumulants::cumulants_from_moments(&functional(&mu)?).map_err(err)?,
    )
}

/// Σ c_k Φ_k over multi-indices, in a fixed number of Gaussian coordinates.
#[pyclass(module = "wickworks", frozen, skip_from_py_object)]
#[derive(Clone)]
struct ChaosElement {
    inner: chaos::ChaosElement,
}

#[pymethods]
impl ChaosElement {
    /// Φ_k for the multi-index k (one exponent per coordinate).
    #[staticmethod]
    fn phi(k: Vec<u32>) -> PyResult<Self> {
        Ok(ChaosElement {
            inner: chaos::ChaosElement::phi(k.len(), MultiIndex::from_dense(&k)).map_err(err)?,
        })
    }

    #[staticmethod]
    fn var(dim: usize, i: usize) -> PyResult<Self> {
        if i >= dim {
            return Err(PyValueError::new_err("coordinate out of range"));
        }
        Ok(ChaosElement {
            inner: chaos::ChaosElement::var(dim, i).map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim
    }

    /// [(exponents, coefficient)] in multi-index order.
    fn terms<'py>(&self, py: Python<'py>) -> PyResult<Vec<(Vec<u32>, Bound<'py, PyAny>)>> {
        self.inner
            .terms()
            .map(|(k, c)| {
                Ok((
                    (0..self.inner.dim).map(|i| k.get(i)).collect(),
                    fraction(py, c)?,
                ))
            })
            .collect()
    }

    fn grades(&self) -> Vec<usize> {
        self.inner.grades()
    }

    fn expectation<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &chaos::expectation(&self.inner))
    }

    fn inner<'py>(&self, py: Python<'py>, o: &Self) -> PyResult<Bound<'py, PyAny>> {
        fraction(py, &chaos::inner(&self.inner, &o.inner))
    }

    fn wick(&self, o: &Self) -> PyResult<Self> {
        Ok(ChaosElement {
            inner: chaos::wick_product(&self.inner, &o.inner).map_err(err)?,
        })
    }

    fn __add__(&self, o: &Self) -> Self {
        ChaosElement {
            inner: self.inner.plus(&o.inner),
        }
    }

    fn __sub__(&self, o: &Self) -> Self {
        ChaosElement {
            inner: self.inner.minus(&o.inner),
        }
    }

    fn __mul__(&self, o: &Self) -> PyResult<Self> {
        Ok(ChaosElement {
            inner: chaos::chaos_multiply(&self.inner, &o.inner, MultiplyRoute::Direct)
                .map_err(err)?,
        })
    }

    fn __eq__(&self, o: &Self) -> bool {
        self.inner == o.inner
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.dim {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.eval_f64(&x))
    }
}

#[pyclass(module = "wickworks", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Diagram {
    inner: feynman::Diagram,
}

#[pymethods]
impl Diagram {
    /// Vacuum multigraph on n vertices; loops are (v, v).
    #[staticmethod]
    fn from_edges(n: usize, edges: Vec<(usize, usize)>) -> PyResult<Self> {
        if edges.iter().any(|&(a, b)| a >= n || b >= n) {
            return Err(PyValueError::new_err("edge endpoint out of range"));
        }
        Ok(Diagram {
            inner: feynman::Diagram::from_edges(n, &edges),
        })
    }

    /// One of single_edge, fgii, fgiii, fgiv, fgvi, fgiiiplus, bubble_ring, k4_doubled, doubled_square.
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        let inner = match name {
            "single_edge" => named::single_edge(),
            "fgii" => named::fgii(),
            "fgiii" => named::fgiii(),
            "fgiv" => named::fgiv(),
            "fgvi" => named::fgvi(),
            "fgiiiplus" => named::fgiiiplus(),
            "bubble_ring" => named::bubble_ring(),
            "k4_doubled" => named::k4_doubled(),
            "doubled_square" => named::doubled_square(),
            _ => return Err(PyValueError::new_err(format!("unknown diagram {name:?}"))),
        };
        Ok(Diagram { inner })
    }

    #[getter]
    fn num_vertices(&self) -> usize {
        self.inner.num_vertices()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.inner.num_edges()
    }

    fn is_connected(&self) -> bool {
        self.inner.is_connected()
    }

    fn canonical(&self) -> Self {
        Diagram {
            inner: feynman::canonical(&self.inner),
        }
    }

    /// Superficial degree of divergence at dimension d.
    fn degree(&self, d: f64) -> f64 {
        feynman::degree(&self.inner, d)
    }

    /// Π_N(Γ) at dimension d.
    fn value(&self, d: f64, n: usize) -> PyResult<f64> {
        feynman::valuate(&self.inner, d, n).map_err(err)
    }

    fn to_dot(&self, name: &str) -> String {
        self.inner.to_dot(name)
    }

    fn to_json<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        json_value(py, &self.inner.to_json(true))
    }

    /// Isomorphism, not labelled equality.
    fn __eq__(&self, o: &Self) -> bool {
        feynman::canonical(&self.inner) == feynman::canonical(&o.inner)
    }

    fn __hash__(&self) -> u64 {
        use std::hash::{DefaultHasher, Hash, Hasher};
        let mut h = DefaultHasher::new();
        feynman::canonical(&self.inner).to_string().hash(&mut h);
        h.finish()
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }

    fn __repr__(&self) -> String {
        format!("Diagram({})", self.inner)
    }
}

/// Isomorphism classes of leg matchings with their multiplicities.
#[pyfunction]
#[pyo3(signature = (vertices, arity=4, connected=false, externals=vec![]))]
fn diagrams<'py>(
    py: Python<'py>,
    vertices: usize,
    arity: u32,
    connected: bool,
    externals: Vec<String>,
) -> PyResult<Vec<(Diagram, Bound<'py, PyAny>)>> {
    let ext: Vec<&str> = externals.iter().map(String::as_str).collect();
    let mut s = feynman::generate_diagrams(&vec![arity; vertices], &ext).map_err(err)?;
    if connected {
        s = s.connected_part();
    }
    s.iter()
        .map(|(g, c)| Ok((Diagram { inner: g.clone() }, fraction(py, c)?)))
        .collect()
}

/// Full expansion report (coefficients, diagrams, counterterms at d = 3) as a dict.
#[pyfunction]
#[pyo3(signature = (d, n, order=3))]
fn phi4_report<'py>(
    py: Python<'py>,
    d: f64,
    n: usize,
    order: usize,
) -> PyResult<Bound<'py, PyAny>> {
    let v = py
        .detach(|| phi4::report_json(d, n, order, None))
        .map_err(err)?;
    json_value(py, &v)
}

/// Coefficients c_0..c_order of Z(α)/Z(0) = Σ c_n αⁿ.
#[pyfunction]
#[pyo3(signature = (d, n, order=3))]
fn partition_series(py: Python<'_>, d: f64, n: usize, order: usize) -> PyResult<Vec<f64>> {
    let s = py
        .detach(|| phi4::partition_ratio_series(d, n, order))
        .map_err(err)?;
    Ok((0..=s.order()).map(|k| s.value(k)).collect())
}

/// Coefficients of log Z(α)/Z(0), connected diagrams only.
#[pyfunction]
#[pyo3(signature = (d, n, order=3))]
fn log_partition_series(py: Python<'_>, d: f64, n: usize, order: usize) -> PyResult<Vec<f64>> {
    let s = py
        .detach(|| phi4::log_partition_series(d, n, order))
        .map_err(err)?;
    Ok((0..=s.order()).map(|k| s.value(k)).collect())
}

/// Mass and energy counterterms at d = 3 as a dict.
#[pyfunction]
fn counterterms<'py>(py: Python<'py>, alpha: f64, n: usize) -> PyResult<Bound<'py, PyAny>> {
    let c = py.detach(|| phi4::counterterms_d3(alpha, n)).map_err(err)?;
    json_value(py, &c.to_json())
}

/// Orders at which energy and mass renormalisation start failing, for d in [3, 4).
#[pyfunction]
fn thresholds<'py>(py: Python<'py>, d: f64) -> PyResult<Bound<'py, PyAny>> {
    let t = phi4::thresholds(d).map_err(err)?;
    json_value(py, &serde_json::to_value(t).expect("plain data"))
}

/// Monte Carlo E[exp(−α∫:φ_N⁴:)] as (estimate, stderr); d is 1 or 2.
#[pyfunction]
fn mc_partition_ratio(
    py: Python<'_>,
    d: usize,
    n: usize,
    alpha: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(f64, f64)> {
    let m = py
        .detach(|| phi4::mc_partition_ratio(d, n, alpha, samples, seed))
        .map_err(err)?;
    Ok((m.estimate, m.stderr))
}

/// C_N = E[φ_N(x)²].
#[pyfunction]
fn c_variance(d: usize, n: usize) -> PyResult<f64> {
    torusfield::c_variance(d, n).map_err(err)
}

fn profile(s: &str) -> PyResult<SpectralProfile> {
    let p = match s {
        "white" => SpectralProfile::White,
        "gff" => SpectralProfile::Gff,
        _ => match s.strip_prefix("fractional:").map(f64::from_str) {
            Some(Ok(x)) => SpectralProfile::Fractional(x),
            _ => {
                return Err(PyValueError::new_err(format!(
                    "profile must be white, gff or fractional:<s>, got {s:?}"
                )))
            }
        },
    };
    p.validate().map_err(err)?;
    Ok(p)
}

#[pyclass(module = "wickworks", frozen)]
struct FieldSample {
    inner: torusfield::FieldSample,
}

#[pymethods]
impl FieldSample {
    #[new]
    fn new(profile_name: &str, d: usize, n: usize, seed: u64) -> PyResult<Self> {
        let lat = ModeLattice::new(d, n).map_err(err)?;
        Ok(FieldSample {
            inner: torusfield::sample_field(profile(profile_name)?, &lat, seed).map_err(err)?,
        })
    }

    #[getter]
    fn d(&self) -> usize {
        self.inner.lattice.d
    }

    #[getter]
    fn coefficients(&self) -> Vec<f64> {
        self.inner.coeffs.clone()
    }

    /// Values on the m^d grid, row-major.
    fn grid(&self, m: usize) -> PyResult<Vec<f64>> {
        if m == 0 {
            return Err(PyValueError::new_err("grid size must be positive"));
        }
        Ok(self.inner.grid_values(m, Synthesis::Fft))
    }

    fn __call__(&self, x: Vec<f64>) -> PyResult<f64> {
        if x.len() != self.inner.lattice.d {
            return Err(PyValueError::new_err("point has the wrong dimension"));
        }
        Ok(self.inner.eval(&x))
    }
}

/// Run acceptance criteria; returns a list of (id, name, passed, detail).
#[pyfunction]
#[pyo3(signature = (ids=None, seed=verify::DEFAULT_SEED))]
fn run_verify(py: Python<'_>, ids: Option<Vec<usize>>, seed: u64) -> PyResult<Vec<Py<PyTuple>>> {
    let ids = ids.unwrap_or_else(|| (1..=verify::CRITERIA).collect());
    let mut out = Vec::new();
    for id in ids {
        let r = py.detach(|| verify::run_criterion(id, seed)).map_err(err)?;
        out.push(
            PyTuple::new(
                py,
                [
                    r.id.into_pyobject(py)?.into_any(),
                    r.name.into_pyobject(py)?.into_any(),
                    pyo3::types::PyBool::new(py, r.passed).to_owned().into_any(),
                    r.detail.into_pyobject(py)?.into_any(),
                ],
            )?
            .unbind(),
        );
    }
    Ok(out)
}

#[pymodule]
#[pyo3(name = "wickworks")]
fn wickworks_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Polynomial>()?;
    m.add_class::<ChaosElement>()?;
    m.add_class::<Diagram>()?;
    m.add_class::<FieldSample>()?;
    m.add_function(wrap_pyfunction!(hermite, m)?)?;
    m.add_function(wrap_pyfunction!(hermite_product, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_expectation, m)?)?;
    m.add_function(wrap_pyfunction!(isserlis_moment, m)?)?;
    m.add_function(wrap_pyfunction!(count_matchings, m)?)?;
    m.add_function(wrap_pyfunction!(moments_from_cumulants, m)?)?;
    m.add_function(wrap_pyfunction!(cumulants_from_moments, m)?)?;
    m.add_function(wrap_pyfunction!(diagrams, m)?)?;
    m.add_function(wrap_pyfunction!(phi4_report, m)?)?;
    m.add_function(wrap_pyfunction!(partition_series, m)?)?;
    m.add_function(wrap_pyfunction!(log_partition_series, m)?)?;
    m.add_function(wrap_pyfunction!(counterterms, m)?)?;
    m.add_function(wrap_pyfunction!(thresholds, m)?)?;
    m.add_function(wrap_pyfunction!(mc_partition_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(c_variance, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    m.add("DEFAULT_SEED", verify::DEFAULT_SEED)?;
    Ok(())
}
