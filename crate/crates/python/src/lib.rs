//! Python module `bergtoep`: domains, measures, Berezin and averaging
//! transforms, lattices, Toeplitz truncations and the CLI experiments.

use std::path::PathBuf;

use bergtoep::config::{parse_measure, Experiment, ExperimentConfig};
use bergtoep::domains::{Domain as CoreDomain, C64};
use bergtoep::functionals;
use bergtoep::lattice::{self, LatticeOptions};
use bergtoep::measures::Measure as CoreMeasure;
use bergtoep::quadrature::{build_graded_quadrature, MetricBallTemplate};
use bergtoep::toeplitz;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn err(e: bergtoep::Error) -> PyErr {
    match e {
        bergtoep::Error::Config(_)
        | bergtoep::Error::InvalidDomain(_)
        | bergtoep::Error::InvalidMeasure(_)
        | bergtoep::Error::InvalidParameter(_)
        | bergtoep::Error::OutsideDomain { .. }
        | bergtoep::Error::DimensionMismatch { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

/// A model domain: `"disk"`, `"ball(n)"`, `"bidisk"` or `"polydisk(n)"`.
/// Points are sequences of complex numbers.
#[pyclass(frozen, eq, module = "bergtoep")]
#[derive(PartialEq)]
struct Domain {
    inner: CoreDomain,
}

#[pymethods]
impl Domain {
    #[new]
    fn new(spec: &str) -> PyResult<Self> {
        Ok(Domain {
            inner: spec.parse().map_err(err)?,
        })
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.inner.dimension()
    }

    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    fn contains(&self, z: Vec<C64>) -> bool {
        self.inner.contains(&z)
    }

    fn kernel(&self, z: Vec<C64>, w: Vec<C64>) -> PyResult<C64> {
        self.inner.kernel(&z, &w).map_err(err)
    }

    fn normalized_kernel(&self, a: Vec<C64>, z: Vec<C64>) -> PyResult<C64> {
        self.inner.normalized_kernel(&a, &z).map_err(err)
    }

    /// Bergman distance.
    fn distance(&self, z: Vec<C64>, w: Vec<C64>) -> PyResult<f64> {
        self.inner.distance(&z, &w).map_err(err)
    }

    fn boundary_distance(&self, z: Vec<C64>) -> PyResult<f64> {
        self.inner.boundary_distance(&z).map_err(err)
    }

    /// The involutive automorphism exchanging `a` and the center, applied to `z`.
    fn automorphism(&self, a: Vec<C64>, z: Vec<C64>) -> PyResult<Vec<C64>> {
        let chart = self.inner.automorphism(&a).map_err(err)?;
        self.inner.check(&z).map_err(err)?;
        Ok(chart.forward(&z).0)
    }

    fn __repr__(&self) -> String {
        format!("Domain('{}')", self.inner)
    }

    fn __str__(&self) -> String {
        self.inner.to_string()
    }
}

/// A positive measure, from a catalog name such as `"power_vanishing(1)"` or
/// measure JSON; validated against `domain`.
#[pyclass(frozen, module = "bergtoep")]
struct Measure {
    label: String,
    domain: CoreDomain,
    inner: CoreMeasure,
}

#[pymethods]
impl Measure {
    #[new]
    fn new(spec: &str, domain: &Domain) -> PyResult<Self> {
        let (label, inner) = parse_measure(spec, domain.inner).map_err(err)?;
        Ok(Measure {
            label,
            domain: domain.inner,
            inner,
        })
    }

    #[getter]
    fn label(&self) -> &str {
        &self.label
    }

    fn density(&self, z: Vec<C64>) -> PyResult<f64> {
        self.domain.check(&z).map_err(err)?;
        Ok(self.inner.density_at(self.domain, &z))
    }

    fn atoms(&self) -> Vec<(Vec<C64>, f64)> {
        self.inner
            .atoms()
            .into_iter()
            .map(|a| (a.point.0.clone(), a.mass))
            .collect()
    }

    fn to_json(&self) -> String {
        self.inner.to_json()
    }

    /// `mu~(z)`, integrating on a graded rule of the given resolution.
    #[pyo3(signature = (z, resolution = 48))]
    fn berezin(&self, py: Python<'_>, z: Vec<C64>, resolution: usize) -> PyResult<f64> {
        let (d, mu) = (self.domain, self.inner.clone());
        py.detach(move || {
            let rule = build_graded_quadrature(d, resolution)?;
            functionals::berezin_transform(&mu, &z, &rule)
        })
        .map_err(err)
    }

    /// `mu(B(z, r)) / Vol(B(z, r))`.
    #[pyo3(signature = (z, radius = 1.0, resolution = 16))]
    fn averaging(
        &self,
        py: Python<'_>,
        z: Vec<C64>,
        radius: f64,
        resolution: usize,
    ) -> PyResult<f64> {
        let (d, mu) = (self.domain, self.inner.clone());
        py.detach(move || {
            let template = MetricBallTemplate::new(d, radius, resolution)?;
            functionals::averaging_function(&mu, &z, &template)
        })
        .map_err(err)
    }

    /// Truncation of `T_mu` to polynomials of degree at most `degree`.
    fn toeplitz(&self, py: Python<'_>, degree: u32) -> PyResult<Toeplitz> {
        let (d, mu) = (self.domain, self.inner.clone());
        let inner = py
            .detach(move || toeplitz::toeplitz_default(&mu, d, degree))
            .map_err(err)?;
        Ok(Toeplitz { inner })
    }

    fn __repr__(&self) -> String {
        format!("Measure('{}', '{}')", self.label, self.domain)
    }
}

/// A truncated Toeplitz matrix in the orthonormal monomial basis.
#[pyclass(frozen, module = "bergtoep")]
struct Toeplitz {
    inner: toeplitz::ToeplitzTruncation,
}

#[pymethods]
impl Toeplitz {
    #[getter]
    fn size(&self) -> usize {
        self.inner.size()
    }

    /// Multi-indices of the basis, in matrix order.
    fn indices(&self) -> Vec<Vec<u32>> {
        self.inner.basis().indices().to_vec()
    }

    /// Rows of the matrix.
    fn matrix(&self) -> Vec<Vec<C64>> {
        let m = self.inner.matrix();
        (0..m.nrows())
            .map(|i| m.row(i).iter().copied().collect())
            .collect()
    }

    /// Eigenvalues, largest first.
    fn spectrum(&self) -> Vec<f64> {
        self.inner.spectrum()
    }

    fn numerical_rank(&self, tolerance: f64) -> usize {
        self.inner.numerical_rank(tolerance)
    }

    /// Norm of the block on basis elements of degree at least each cutoff.
    fn tail_norms(&self, cutoffs: Vec<u32>) -> Vec<(u32, f64)> {
        self.inner
            .tail_profile(&cutoffs)
            .into_iter()
            .map(|r| (r.degree, r.norm))
            .collect()
    }

    /// `(<T k_z, k_z>, capture)`: the Berezin symbol and how much of `k_z`
    /// the basis holds.
    fn berezin(&self, z: Vec<C64>) -> PyResult<(f64, f64)> {
        let b = self.inner.berezin(&z).map_err(err)?;
        Ok((b.value, b.capture))
    }
}

/// Builds an `r`-lattice on `{boundary distance >= margin}` and certifies it
/// with `samples` random points. Returns the nodes and the certificate as a
/// dict.
#[pyfunction]
#[pyo3(signature = (domain, radius = 1.0, margin = 0.01, samples = 20000, seed = 0))]
fn build_lattice(
    py: Python<'_>,
    domain: &Domain,
    radius: f64,
    margin: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(Vec<Vec<C64>>, Py<PyAny>)> {
    let d = domain.inner;
    let (nodes, cert) = py
        .detach(move || {
            let l = lattice::build_lattice(d, radius, margin, &LatticeOptions::default())?;
            let cert = lattice::certify_lattice(&l, samples, seed)?;
            let nodes: Vec<Vec<C64>> = l.nodes().iter().map(|p| p.0.clone()).collect();
            Ok::<_, bergtoep::Error>((nodes, serde_json::to_string(&cert)?))
        })
        .map_err(err)?;
    Ok((nodes, json_loads(py, &cert)?))
}

fn json_loads(py: Python<'_>, text: &str) -> PyResult<Py<PyAny>> {
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Runs a CLI experiment (`"verify-geometry"`, `"carleson-report"`,
/// `"equivalence-report"` or `"toeplitz-spectrum"`) with a JSON config and
/// returns the report as a dict. Writes outputs when `out` is given.
#[pyfunction]
#[pyo3(signature = (experiment, config = "{}", out = None))]
fn run_experiment(
    py: Python<'_>,
    experiment: &str,
    config: &str,
    out: Option<PathBuf>,
) -> PyResult<Py<PyAny>> {
    let exp = match experiment {
        "verify-geometry" => Experiment::VerifyGeometry,
        "carleson-report" => Experiment::CarlesonReport,
        "equivalence-report" => Experiment::EquivalenceReport,
        "toeplitz-spectrum" => Experiment::ToeplitzSpectrum,
        other => {
            return Err(PyValueError::new_err(format!(
                "unknown experiment {other:?}"
            )))
        }
    };
    let settings = ExperimentConfig::from_json(config)
        .and_then(|c| c.resolve(exp))
        .map_err(err)?;
    let text = py
        .detach(move || {
            let outcome = bergtoep::experiments::run(&settings)?;
            if let Some(dir) = out {
                outcome.save(&dir)?;
            }
            Ok::<_, bergtoep::Error>(serde_json::to_string(&outcome.report)?)
        })
        .map_err(err)?;
    json_loads(py, &text)
}

#[pymodule]
#[pyo3(name = "bergtoep")]
fn bergtoep_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Domain>()?;
    m.add_class::<Measure>()?;
    m.add_class::<Toeplitz>()?;
    m.add_function(wrap_pyfunction!(build_lattice, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
