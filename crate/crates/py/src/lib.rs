//! Python bindings for the collective-risk premium library: grid
//! distributions, risk measures, the two premium estimators, and the
//! distance/rate diagnostics.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use collrisk_core as core;

fn err(e: core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Probability mass function on an equidistant grid.
#[pyclass(name = "LatticeDistribution", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyLattice {
    inner: core::LatticeDistribution,
}

#[pymethods]
impl PyLattice {
    /// Build from (point, mass) pairs forming an arithmetic progression.
    #[staticmethod]
    fn from_pmf(points_and_masses: Vec<(f64, f64)>) -> PyResult<Self> {
        Ok(Self { inner: core::from_pmf(&points_and_masses).map_err(err)? })
    }

    /// Empirical measure of nonnegative claims on the grid `h * {0,1,...}`.
    #[staticmethod]
    fn empirical(claims: Vec<f64>, h: f64) -> PyResult<Self> {
        let sample = core::ClaimSample::new(claims, h).map_err(err)?;
        Ok(Self { inner: core::empirical_measure(&sample) })
    }

    /// Discretized claim mixture `(1-p) delta_0 + p Pareto(a, b)` with the
    /// upper-cell rule on the grid `h * {0,1,...}`.
    #[staticmethod]
    #[pyo3(signature = (p, a, b, h, tail_eps = 1e-12))]
    fn discretize_mixture(p: f64, a: f64, b: f64, h: f64, tail_eps: f64) -> PyResult<Self> {
        let spec = core::MixtureSpec::new(p, a, b, h).map_err(err)?;
        Ok(Self { inner: core::discretize_mixture(&spec, tail_eps).map_err(err)? })
    }

    #[getter]
    fn offset(&self) -> f64 {
        self.inner.offset()
    }

    #[getter]
    fn step(&self) -> f64 {
        self.inner.step()
    }

    #[getter]
    fn masses(&self) -> Vec<f64> {
        self.inner.masses().to_vec()
    }

    #[getter]
    fn points(&self) -> Vec<f64> {
        self.inner.support().map(|(x, _)| x).collect()
    }

    fn mean(&self) -> f64 {
        core::mean(&self.inner)
    }

    fn variance(&self) -> f64 {
        core::variance(&self.inner)
    }

    fn abs_central_moment(&self, order: f64) -> PyResult<f64> {
        core::abs_central_moment(&self.inner, order).map_err(err)
    }

    fn cdf(&self, x: f64) -> f64 {
        core::cdf(&self.inner, x)
    }

    fn quantile_left(&self, alpha: f64) -> PyResult<f64> {
        core::quantile_left(&self.inner, alpha).map_err(err)
    }

    /// Affine image with mean zero and unit variance.
    fn standardize(&self) -> PyResult<Self> {
        Ok(Self { inner: core::standardize(&self.inner).map_err(err)? })
    }

    /// Exact n-fold convolution by the lattice recursion.
    #[pyo3(signature = (n, trunc_eps = 1e-12))]
    fn convolve(&self, n: u32, trunc_eps: f64) -> PyResult<PyConvolution> {
        let result = core::convolve_n(&self.inner, n, trunc_eps).map_err(err)?;
        Ok(PyConvolution {
            dist: Self { inner: result.dist.clone() },
            n: result.n,
            truncated_mass: result.truncated_mass,
            log_scale_used: result.log_scale_used,
        })
    }

    /// Brute-force n-fold convolution (verification oracle).
    fn convolve_direct(&self, n: u32) -> PyResult<Self> {
        Ok(Self { inner: core::convolve_direct(&self.inner, n).map_err(err)? })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "LatticeDistribution(offset={}, step={}, points={})",
            self.inner.offset(),
            self.inner.step(),
            self.inner.len()
        )
    }
}

/// Convolution output with its truncation bookkeeping.
#[pyclass(name = "ConvolutionResult", frozen)]
struct PyConvolution {
    #[pyo3(get)]
    dist: PyLattice,
    #[pyo3(get)]
    n: u32,
    #[pyo3(get)]
    truncated_mass: f64,
    #[pyo3(get)]
    log_scale_used: bool,
}

/// Law-invariant risk measure description.
#[pyclass(name = "RiskMeasure", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyMeasure {
    inner: core::RiskMeasureSpec,
}

#[pymethods]
impl PyMeasure {
    /// Value at Risk at the given level.
    #[staticmethod]
    fn var(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: core::RiskMeasureSpec::var(alpha).map_err(err)? })
    }

    /// Average Value at Risk at the given level.
    #[staticmethod]
    fn avar(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: core::RiskMeasureSpec::avar(alpha).map_err(err)? })
    }

    /// One-sided p-th moment measure with loading a.
    #[staticmethod]
    fn one_sided_moment(a: f64, p: f64) -> PyResult<Self> {
        Ok(Self { inner: core::RiskMeasureSpec::one_sided_moment(a, p).map_err(err)? })
    }

    /// Expectile-based measure at level alpha in [1/2, 1).
    #[staticmethod]
    fn expectile(alpha: f64) -> PyResult<Self> {
        Ok(Self { inner: core::RiskMeasureSpec::expectile(alpha).map_err(err)? })
    }

    /// Distortion measure with `g(t) = t^beta`.
    #[staticmethod]
    fn power_distortion(beta: f64) -> PyResult<Self> {
        let g = core::DistortionFunction::power(beta).map_err(err)?;
        Ok(Self { inner: core::RiskMeasureSpec::distortion(g).map_err(err)? })
    }

    /// Distortion measure from piecewise-linear (t, g(t)) knots.
    #[staticmethod]
    fn distortion_knots(knots: Vec<(f64, f64)>) -> PyResult<Self> {
        let g = core::DistortionFunction::piecewise_linear(knots).map_err(err)?;
        Ok(Self { inner: core::RiskMeasureSpec::distortion(g).map_err(err)? })
    }

    /// Evaluate the measure on a lattice distribution.
    fn evaluate(&self, dist: &PyLattice) -> PyResult<f64> {
        core::evaluate(&self.inner, &dist.inner).map_err(err)
    }

    /// The constant `R(N(0,1))` for this measure.
    fn normal_constant(&self) -> PyResult<f64> {
        Ok(core::risk_of_std_normal(&self.inner).map_err(err)?.value)
    }

    /// Induced distortion `g(t) = 1 - rho(Bernoulli(1 - t))`.
    fn induced_distortion(&self, t: f64) -> PyResult<f64> {
        core::induced_distortion(&self.inner, t).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("RiskMeasure({:?})", self.inner)
    }
}

/// Premium estimate with its decomposition and confidence interval.
#[pyclass(name = "PremiumReport", frozen)]
struct PyPremiumReport {
    #[pyo3(get)]
    method: String,
    #[pyo3(get)]
    n: u32,
    #[pyo3(get)]
    u: u32,
    #[pyo3(get)]
    premium_per_risk: f64,
    #[pyo3(get)]
    m_hat: f64,
    #[pyo3(get)]
    s_hat: f64,
    #[pyo3(get)]
    normal_constant: f64,
    #[pyo3(get)]
    ci_low: f64,
    #[pyo3(get)]
    ci_high: f64,
    #[pyo3(get)]
    ci_level: f64,
}

fn convert_report(report: core::PremiumReport, ci: f64) -> PyResult<PyPremiumReport> {
    let (lo, hi) = core::confidence_interval(&report, ci).map_err(err)?;
    Ok(PyPremiumReport {
        method: report.method.as_str().to_string(),
        n: report.n,
        u: report.u,
        premium_per_risk: report.premium_per_risk,
        m_hat: report.m_hat,
        s_hat: report.s_hat,
        normal_constant: report.normal_constant,
        ci_low: lo,
        ci_high: hi,
        ci_level: ci,
    })
}

/// Estimated normal approximation `m_hat + s_hat R(N(0,1)) / sqrt(n)`.
#[pyfunction]
#[pyo3(signature = (claims, h, n, measure, ci = 0.95))]
fn normal_approx_premium(
    claims: Vec<f64>,
    h: f64,
    n: u32,
    measure: &PyMeasure,
    ci: f64,
) -> PyResult<PyPremiumReport> {
    let sample = core::ClaimSample::new(claims, h).map_err(err)?;
    let report = core::normal_approx_premium(&sample, n, &measure.inner).map_err(err)?;
    convert_report(report, ci)
}

/// Empirical plug-in estimator: risk of the convolved empirical measure.
#[pyfunction]
#[pyo3(signature = (claims, h, n, measure, trunc_eps = 1e-12, ci = 0.95))]
fn plugin_premium(
    claims: Vec<f64>,
    h: f64,
    n: u32,
    measure: &PyMeasure,
    trunc_eps: f64,
    ci: f64,
) -> PyResult<PyPremiumReport> {
    let sample = core::ClaimSample::new(claims, h).map_err(err)?;
    let report = core::plugin_premium(&sample, n, &measure.inner, trunc_eps).map_err(err)?;
    convert_report(report, ci)
}

/// Compound binomial of a severity law with no mass at zero.
#[pyfunction]
fn compound_binomial(severity: &PyLattice, n: u32, p: f64) -> PyResult<PyLattice> {
    Ok(PyLattice { inner: core::compound_binomial(&severity.inner, n, p).map_err(err)? })
}

#[pyfunction]
fn std_normal_cdf(x: f64) -> f64 {
    core::std_normal_cdf(x)
}

#[pyfunction]
fn std_normal_pdf(x: f64) -> f64 {
    core::std_normal_pdf(x)
}

#[pyfunction]
fn std_normal_quantile(alpha: f64) -> PyResult<f64> {
    core::std_normal_quantile(alpha).map_err(err)
}

/// Nonuniform Kolmogorov distance of a standardized law against N(0,1).
#[pyfunction]
#[pyo3(signature = (dist, lam, refine = 8))]
fn nonuniform_kolmogorov(dist: &PyLattice, lam: f64, refine: u32) -> PyResult<f64> {
    core::nonuniform_kolmogorov(&dist.inner, lam, refine).map_err(err)
}

/// Berry-Esseen moment factor and rate exponent `(f, gamma)`.
#[pyfunction]
fn berry_esseen_factor(dist: &PyLattice, lam: f64) -> PyResult<(f64, f64)> {
    core::berry_esseen_factor(&dist.inner, lam).map_err(err)
}

/// Least squares of log(err) on log(n): `(slope, stderr)`.
#[pyfunction]
fn rate_regression(points: Vec<(u32, f64)>) -> PyResult<(f64, f64)> {
    core::rate_regression(&points).map_err(err)
}

/// Hoelder data `(beta, L)` from sampled distortion values near t = 1.
#[pyfunction]
fn holder_exponent_probe(g_values: Vec<(f64, f64)>) -> PyResult<(f64, f64)> {
    core::holder_exponent_probe(&g_values).map_err(err)
}

/// Seeded draws from the discretized claim mixture (stream = path index).
#[pyfunction]
#[pyo3(signature = (p, a, b, h, count, seed, stream = 0))]
fn sample_mixture(
    p: f64,
    a: f64,
    b: f64,
    h: f64,
    count: u32,
    seed: u64,
    stream: u64,
) -> PyResult<Vec<f64>> {
    let spec = core::MixtureSpec::new(p, a, b, h).map_err(err)?;
    let mut rng = core::path_rng(seed, stream);
    let sample = core::sample_mixture(&spec, count, &mut rng).map_err(err)?;
    Ok(sample.values().to_vec())
}

#[pymodule]
fn collrisk_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyLattice>()?;
    m.add_class::<PyConvolution>()?;
    m.add_class::<PyMeasure>()?;
    m.add_class::<PyPremiumReport>()?;
    m.add_function(wrap_pyfunction!(normal_approx_premium, m)?)?;
    m.add_function(wrap_pyfunction!(plugin_premium, m)?)?;
    m.add_function(wrap_pyfunction!(compound_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_pdf, m)?)?;
    m.add_function(wrap_pyfunction!(std_normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(nonuniform_kolmogorov, m)?)?;
    m.add_function(wrap_pyfunction!(berry_esseen_factor, m)?)?;
    m.add_function(wrap_pyfunction!(rate_regression, m)?)?;
    m.add_function(wrap_pyfunction!(holder_exponent_probe, m)?)?;
    m.add_function(wrap_pyfunction!(sample_mixture, m)?)?;
    Ok(())
}
