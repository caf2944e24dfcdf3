//! Python bindings for the main types and operations: threshold classifiers,
//! binned densities, the shift models, the transfer bounds, and the
//! experiment runners (which return their CSV output as text).

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use transferability::bounds;
use transferability::classifiers;
use transferability::distributions;
use transferability::harness;
use transferability::optimizers;
use transferability::shift;

fn err_to_py(e: transferability::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Binary threshold classifier over the raw first coordinate or a linear
/// logistic scorer.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct ThresholdClassifier {
    inner: classifiers::ThresholdClassifier,
}

#[pymethods]
impl ThresholdClassifier {
    /// Raw mode: predict +1 iff x[0] >= tau.
    #[staticmethod]
    fn raw(tau: f64) -> Self {
        Self { inner: classifiers::ThresholdClassifier::raw(tau) }
    }

    /// Squashed mode: predict +1 iff sigmoid(w·x + b) > tau.
    #[staticmethod]
    fn squashed(w: Vec<f64>, b: f64, tau: f64) -> PyResult<Self> {
        let scorer = classifiers::LinearScorer::new(w, b).map_err(err_to_py)?;
        let inner = classifiers::ThresholdClassifier::squashed(scorer, tau).map_err(err_to_py)?;
        Ok(Self { inner })
    }

    fn predict(&self, x: Vec<f64>) -> PyResult<i8> {
        self.inner.predict(&x).map_err(err_to_py)
    }

    fn score(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.score(&x).map_err(err_to_py)
    }

    #[getter]
    fn tau(&self) -> f64 {
        self.inner.tau
    }
}

/// Piecewise-constant density on [lo, hi] with equal-width bins.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct BinnedDensity {
    inner: distributions::BinnedDensity1D,
}

#[pymethods]
impl BinnedDensity {
    #[new]
    fn new(lo: f64, hi: f64, mass: Vec<f64>) -> PyResult<Self> {
        Ok(Self { inner: distributions::BinnedDensity1D::new(lo, hi, mass).map_err(err_to_py)? })
    }

    #[staticmethod]
    fn uniform(lo: f64, hi: f64, k: usize) -> Self {
        Self { inner: distributions::BinnedDensity1D::uniform(lo, hi, k) }
    }

    fn mass(&self) -> Vec<f64> {
        self.inner.mass().to_vec()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.inner.cdf(x)
    }
}

/// Total variation distance between Bernoulli label marginals.
#[pyfunction]
fn tv_binary(p_plus: f64, q_plus: f64) -> f64 {
    distributions::tv_binary(
        &distributions::LabelMarginal::new(p_plus),
        &distributions::LabelMarginal::new(q_plus),
    )
}

/// Total variation distance between aligned binned densities.
#[pyfunction]
fn tv_binned(f: &BinnedDensity, g: &BinnedDensity) -> PyResult<f64> {
    distributions::tv_binned(&f.inner, &g.inner).map_err(err_to_py)
}

/// Importance weight of the strategic response at x.
#[pyfunction]
fn strategic_weight(x: f64, tau: f64, budget: f64) -> PyResult<f64> {
    shift::strategic_weight(x, tau, budget).map_err(err_to_py)
}

/// Closed-form induced density of the strategic response.
#[pyfunction]
fn strategic_induced_density(tau: f64, budget: f64, k: usize) -> PyResult<BinnedDensity> {
    Ok(BinnedDensity { inner: shift::strategic_induced_density(tau, budget, k).map_err(err_to_py)? })
}

/// Replicator update of the qualification rate.
#[pyfunction]
fn replicator_induce(p_s: f64, f_plus: f64, f_minus: f64) -> PyResult<f64> {
    shift::replicator_induce(p_s, f_plus, f_minus).map_err(err_to_py)
}

/// Multiplicative credit-score update truncated into (0, 1].
#[pyfunction]
#[pyo3(signature = (q, decision, outcome, alpha_d=0.01, alpha_y=0.005))]
fn fico_update(q: f64, decision: bool, outcome: bool, alpha_d: f64, alpha_y: f64) -> PyResult<f64> {
    let cfg = shift::FicoConfig { alpha_d, alpha_y, ..Default::default() };
    shift::fico_update(q, decision, outcome, &cfg).map_err(err_to_py)
}

/// Strategic-response upper bound sqrt((2B/3)·err).
#[pyfunction]
fn strategic_ub(budget: f64, err_source_of_ht: f64) -> f64 {
    bounds::strategic_ub(budget, err_source_of_ht)
}

/// Target-shift lower bound |p − p(h)|·(1 − |TPR − FPR|)/2.
#[pyfunction]
fn ts_lb(p: f64, p_h: f64, tpr: f64, fpr: f64) -> f64 {
    bounds::ts_lb(p, p_h, tpr, fpr)
}

/// Target-shift upper bound |Δp| + (1+p)·(TV₊ + TV₋).
#[pyfunction]
#[allow(clippy::too_many_arguments)]
fn ts_ub(
    p_source: f64,
    p_of_hs: f64,
    p_of_ht: f64,
    tpr_hs: f64,
    tpr_ht: f64,
    fpr_hs: f64,
    fpr_ht: f64,
) -> f64 {
    bounds::ts_ub(p_source, p_of_hs, p_of_ht, tpr_hs, tpr_ht, fpr_hs, fpr_ht)
}

/// Closed-form replicator induced risk of the raw threshold `theta` under
/// identity-reward fitness.
#[pyfunction]
#[pyo3(signature = (theta, p0, mu_plus=0.7, mu_minus=0.3, sigma=0.15))]
fn replicator_closed_form_risk(
    theta: f64,
    p0: f64,
    mu_plus: f64,
    mu_minus: f64,
    sigma: f64,
) -> PyResult<f64> {
    let cfg = shift::ReplicatorConfig::new(
        p0,
        mu_plus,
        mu_minus,
        sigma,
        shift::UtilityMatrix::identity_reward(),
    )
    .map_err(err_to_py)?;
    optimizers::replicator_closed_form_risk(theta, &cfg).map_err(err_to_py)
}

/// Run an experiment from a JSON configuration and return its CSV output.
#[pyfunction]
fn run_experiment(config_json: &str) -> PyResult<String> {
    let cfg = harness::ExperimentConfig::parse(config_json).map_err(err_to_py)?;
    match &cfg {
        harness::ExperimentConfig::Fico(c) => {
            Ok(harness::run_fico_sequence(c).map_err(err_to_py)?.csv)
        }
        harness::ExperimentConfig::Bandit(c) => {
            Ok(harness::run_bandit(c).map_err(err_to_py)?.csv)
        }
        _ => Ok(harness::run_shift_experiment(&cfg).map_err(err_to_py)?.csv),
    }
}

#[pymodule]
fn transferability_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<ThresholdClassifier>()?;
    m.add_class::<BinnedDensity>()?;
    m.add_function(wrap_pyfunction!(tv_binary, m)?)?;
    m.add_function(wrap_pyfunction!(tv_binned, m)?)?;
    m.add_function(wrap_pyfunction!(strategic_weight, m)?)?;
    m.add_function(wrap_pyfunction!(strategic_induced_density, m)?)?;
    m.add_function(wrap_pyfunction!(replicator_induce, m)?)?;
    m.add_function(wrap_pyfunction!(fico_update, m)?)?;
    m.add_function(wrap_pyfunction!(strategic_ub, m)?)?;
    m.add_function(wrap_pyfunction!(ts_lb, m)?)?;
    m.add_function(wrap_pyfunction!(ts_ub, m)?)?;
    m.add_function(wrap_pyfunction!(replicator_closed_form_risk, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
