//! Python bindings: exact-rational Bell functionals, canonical boxes,
//! certified linear programming, and the monogamy verification harness.
//!
//! Rationals cross the language boundary as `"num/den"` strings (Python's
//! `fractions.Fraction` parses them directly), verification reports as JSON
//! strings, so no exactness is lost to floats anywhere.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use bellmono::error::Error;
use bellmono::lp::LpSense;
use bellmono::monogamy::VerifyConfig;
use bellmono::rational::{format as fmt_q, parse as parse_q};

fn to_py(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(format!("JSON error: {e}"))
}

fn config(max_lp_vars: Option<usize>) -> VerifyConfig {
    let mut c = VerifyConfig::default();
    if let Some(v) = max_lp_vars {
        c.max_lp_vars = v;
    }
    c
}

fn report_json(r: &bellmono::monogamy::MonogamyReport) -> PyResult<String> {
    serde_json::to_string(r).map_err(json_err)
}

/// A linear expression in the joint outcome probabilities of a scenario.
#[pyclass(name = "BellFunctional", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBellFunctional {
    inner: bellmono::bell::BellFunctional,
}

#[pymethods]
impl PyBellFunctional {
    /// Human-readable family label.
    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    /// `(N, M, d)`: parties, settings per party, outcomes per measurement.
    #[getter]
    fn scenario(&self) -> (usize, usize, usize) {
        let s = self.inner.scenario();
        (s.parties(), s.settings(), s.outcomes())
    }

    /// Known bound over local (classical) behaviors, as `"num/den"`,
    /// when the builder recorded one.
    #[getter]
    fn classical_bound(&self) -> Option<String> {
        self.inner.metadata().map(|m| fmt_q(&m.classical_bound))
    }

    /// Certified optimum over no-signaling behaviors, as `"num/den"`,
    /// when the builder recorded one.
    #[getter]
    fn ns_optimum(&self) -> Option<String> {
        self.inner.metadata().map(|m| fmt_q(&m.ns_optimum))
    }

    /// Exact value on a behavior, as `"num/den"`.
    fn value(&self, behavior: &PyBehavior) -> PyResult<String> {
        self.inner
            .value(&behavior.inner)
            .map(|v| fmt_q(&v))
            .map_err(to_py)
    }

    /// Equality modulo per-setting normalization (the representation-free
    /// comparison used for structural identities).
    fn eq_canonical(&self, other: &PyBellFunctional) -> bool {
        self.inner.eq_canonical(&other.inner)
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(json_err)?;
        Ok(PyBellFunctional { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "BellFunctional({:?} on {})",
            self.inner.label(),
            self.inner.scenario()
        )
    }
}

/// A joint conditional probability table `p(outcomes | settings)`.
#[pyclass(name = "Behavior", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyBehavior {
    inner: bellmono::behavior::Behavior,
}

#[pymethods]
impl PyBehavior {
    /// `(N, M, d)`: parties, settings per party, outcomes per measurement.
    #[getter]
    fn scenario(&self) -> (usize, usize, usize) {
        let s = self.inner.scenario();
        (s.parties(), s.settings(), s.outcomes())
    }

    /// How this behavior was constructed, when recorded.
    #[getter]
    fn provenance(&self) -> Option<String> {
        self.inner.provenance().map(str::to_string)
    }

    /// One table entry `p(outcomes | settings)`, as `"num/den"`.
    fn prob(&self, settings: Vec<usize>, outcomes: Vec<usize>) -> PyResult<String> {
        self.inner
            .get(&settings, &outcomes)
            .map(fmt_q)
            .map_err(to_py)
    }

    /// Nonnegativity/normalization failures, empty when the table is a
    /// valid probability distribution for every setting combination.
    fn validation_failures(&self) -> Vec<String> {
        self.inner
            .validate()
            .iter()
            .map(|f| format!("{f:?}"))
            .collect()
    }

    /// True when every party's marginal is independent of the other
    /// parties' settings.
    fn is_no_signaling(&self) -> bool {
        self.inner.check_no_signaling().is_empty()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(json_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = serde_json::from_str(text).map_err(json_err)?;
        Ok(PyBehavior { inner })
    }

    fn __repr__(&self) -> String {
        format!("Behavior(on {})", self.inner.scenario())
    }
}

/// The two-party chained functional with M settings and d outcomes.
#[pyfunction]
fn build_bkp(m: usize, d: usize) -> PyResult<PyBellFunctional> {
    bellmono::bell::build_bkp(m, d)
        .map(|inner| PyBellFunctional { inner })
        .map_err(to_py)
}

/// The N-party chained functional.
#[pyfunction]
fn build_bkp_multipartite(n: usize, m: usize, d: usize) -> PyResult<PyBellFunctional> {
    bellmono::bell::build_bkp_multipartite(n, m, d)
        .map(|inner| PyBellFunctional { inner })
        .map_err(to_py)
}

/// The modified three-setting chain used as the pair-sum counterexample.
#[pyfunction]
fn build_i_prime() -> PyBellFunctional {
    PyBellFunctional {
        inner: bellmono::bell::build_i_prime(),
    }
}

/// The three-setting correlator functional.
#[pyfunction]
fn build_i3322() -> PyBellFunctional {
    PyBellFunctional {
        inner: bellmono::bell::build_i3322(),
    }
}

/// Four-term pieces of the chained functional plus the recombination
/// constant: `(pieces, constant)` with the constant as `"num/den"`.
#[pyfunction]
fn decompose_bkp_cglmp(m: usize, d: usize) -> PyResult<(Vec<PyBellFunctional>, String)> {
    let (parts, constant) = bellmono::bell::decompose_bkp_cglmp(m, d).map_err(to_py)?;
    let wrapped = parts
        .into_iter()
        .map(|inner| PyBellFunctional { inner })
        .collect();
    Ok((wrapped, fmt_q(&constant)))
}

/// The two-party extremal no-signaling box that floors the chained
/// functional.
#[pyfunction]
fn nl_box(m: usize, d: usize) -> PyResult<PyBehavior> {
    bellmono::boxes::nl_box_bipartite(m, d)
        .map(|inner| PyBehavior { inner })
        .map_err(to_py)
}

/// The N-party extremal no-signaling box.
#[pyfunction]
fn nl_box_multipartite(n: usize, m: usize, d: usize) -> PyResult<PyBehavior> {
    bellmono::boxes::nl_box_multipartite(n, m, d)
        .map(|inner| PyBehavior { inner })
        .map_err(to_py)
}

/// The all-zeros deterministic box.
#[pyfunction]
fn local_box(n: usize, m: usize, d: usize) -> PyResult<PyBehavior> {
    bellmono::boxes::local_box(n, m, d)
        .map(|inner| PyBehavior { inner })
        .map_err(to_py)
}

/// Uniform noise on every setting combination.
#[pyfunction]
fn uniform_box(n: usize, m: usize, d: usize) -> PyResult<PyBehavior> {
    let scenario = bellmono::scenario::Scenario::new(n, m, d).map_err(to_py)?;
    Ok(PyBehavior {
        inner: bellmono::boxes::uniform_box(scenario),
    })
}

/// `q * extremal + (1 - q) * local`, with `q` as `"num/den"`.
#[pyfunction]
fn mix(q: &str, extremal: &PyBehavior, local: &PyBehavior) -> PyResult<PyBehavior> {
    let q = parse_q(q).map_err(to_py)?;
    let spec = bellmono::boxes::MixtureSpec::new(q, extremal.inner.clone(), local.inner.clone())
        .map_err(to_py)?;
    Ok(PyBehavior {
        inner: bellmono::boxes::mix(&spec),
    })
}

/// Certified optimum of a functional over the no-signaling polytope.
///
/// `sense` is `"min"` or `"max"`. Returns `(optimum, certificate_ok)` with
/// the optimum as `"num/den"`; the certificate is re-verified from the
/// problem data before returning.
#[pyfunction]
fn optimize(functional: &PyBellFunctional, sense: &str) -> PyResult<(String, bool)> {
    let sense = match sense {
        "min" => LpSense::Minimize,
        "max" => LpSense::Maximize,
        other => {
            return Err(PyValueError::new_err(format!(
                "sense must be \"min\" or \"max\", got {other:?}"
            )))
        }
    };
    let optimum = bellmono::lp::optimize_bell(&functional.inner, sense, &[])
        .map_err(to_py)?
        .into_optimal()
        .map_err(to_py)?;
    let problem = bellmono::lp::bell_lp_problem(&functional.inner, sense, &[]).map_err(to_py)?;
    let certified = bellmono::lp::verify_certificate(&problem, &optimum.solution);
    Ok((fmt_q(&optimum.optimum), certified))
}

/// Weighted pair relation for (M, d): both orders, as two report JSON
/// strings.
#[pyfunction]
#[pyo3(signature = (m, d, max_lp_vars=None))]
fn verify_theorem1(m: usize, d: usize, max_lp_vars: Option<usize>) -> PyResult<(String, String)> {
    let (a, b) = bellmono::monogamy::verify_theorem1(m, d, &config(max_lp_vars)).map_err(to_py)?;
    Ok((report_json(&a)?, report_json(&b)?))
}

/// Unweighted pair relation with its feasibility scan, as report JSON.
#[pyfunction]
#[pyo3(signature = (m, d, max_lp_vars=None))]
fn verify_observation1(m: usize, d: usize, max_lp_vars: Option<usize>) -> PyResult<String> {
    report_json(&bellmono::monogamy::verify_observation1(m, d, &config(max_lp_vars)).map_err(to_py)?)
}

/// One Alice against M Bobs, as report JSON.
#[pyfunction]
#[pyo3(signature = (m, d, max_lp_vars=None))]
fn verify_pb(m: usize, d: usize, max_lp_vars: Option<usize>) -> PyResult<String> {
    report_json(&bellmono::monogamy::verify_pb(m, d, &config(max_lp_vars)).map_err(to_py)?)
}

/// Multipartite weighted pair relation, both orders, as two report JSON
/// strings.
#[pyfunction]
#[pyo3(signature = (n, m, d, max_lp_vars=None))]
fn verify_theorem2(
    n: usize,
    m: usize,
    d: usize,
    max_lp_vars: Option<usize>,
) -> PyResult<(String, String)> {
    let (a, b) =
        bellmono::monogamy::verify_theorem2(n, m, d, &config(max_lp_vars)).map_err(to_py)?;
    Ok((report_json(&a)?, report_json(&b)?))
}

/// The modified-chain counterexample, as report JSON.
#[pyfunction]
#[pyo3(signature = (max_lp_vars=None))]
fn counterexample_iprime(max_lp_vars: Option<usize>) -> PyResult<String> {
    report_json(&bellmono::monogamy::counterexample_iprime(&config(max_lp_vars)).map_err(to_py)?)
}

/// The three-setting correlator counterexample, as report JSON. Its
/// `verified` field is honest: the additivity claim it probes is false.
#[pyfunction]
#[pyo3(signature = (max_lp_vars=None))]
fn counterexample_i3322(max_lp_vars: Option<usize>) -> PyResult<String> {
    report_json(&bellmono::monogamy::counterexample_i3322(&config(max_lp_vars)).map_err(to_py)?)
}

/// Eavesdropper guessing-probability bound at pinned functional value
/// `value` (as `"num/den"`), as report JSON.
#[pyfunction]
#[pyo3(signature = (d, x, value, max_lp_vars=None))]
fn guessing_bound(d: usize, x: usize, value: &str, max_lp_vars: Option<usize>) -> PyResult<String> {
    let v = parse_q(value).map_err(to_py)?;
    report_json(&bellmono::monogamy::guessing_bound(d, x, &v, &config(max_lp_vars)).map_err(to_py)?)
}

/// Agreement-vs-value tradeoff for setting pair `(i, j)`, as report JSON.
#[pyfunction]
#[pyo3(signature = (d, i, j, max_lp_vars=None))]
fn correlation_monogamy(
    d: usize,
    i: usize,
    j: usize,
    max_lp_vars: Option<usize>,
) -> PyResult<String> {
    report_json(&bellmono::monogamy::correlation_monogamy(d, i, j, &config(max_lp_vars)).map_err(to_py)?)
}

/// Witness-family table of the weighted pair relation over a grid of
/// mixture weights (each `"num/den"`), as CSV text.
#[pyfunction]
fn sweep_csv(m: usize, d: usize, grid: Vec<String>) -> PyResult<String> {
    let grid = grid
        .iter()
        .map(|s| parse_q(s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(to_py)?;
    bellmono::monogamy::sweep_csv(m, d, &grid).map_err(to_py)
}

#[pymodule]
fn bellmono_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBellFunctional>()?;
    m.add_class::<PyBehavior>()?;
    m.add_function(wrap_pyfunction!(build_bkp, m)?)?;
    m.add_function(wrap_pyfunction!(build_bkp_multipartite, m)?)?;
    m.add_function(wrap_pyfunction!(build_i_prime, m)?)?;
    m.add_function(wrap_pyfunction!(build_i3322, m)?)?;
    m.add_function(wrap_pyfunction!(decompose_bkp_cglmp, m)?)?;
    m.add_function(wrap_pyfunction!(nl_box, m)?)?;
    m.add_function(wrap_pyfunction!(nl_box_multipartite, m)?)?;
    m.add_function(wrap_pyfunction!(local_box, m)?)?;
    m.add_function(wrap_pyfunction!(uniform_box, m)?)?;
    m.add_function(wrap_pyfunction!(mix, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem1, m)?)?;
    m.add_function(wrap_pyfunction!(verify_observation1, m)?)?;
    m.add_function(wrap_pyfunction!(verify_pb, m)?)?;
    m.add_function(wrap_pyfunction!(verify_theorem2, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_iprime, m)?)?;
    m.add_function(wrap_pyfunction!(counterexample_i3322, m)?)?;
    m.add_function(wrap_pyfunction!(guessing_bound, m)?)?;
    m.add_function(wrap_pyfunction!(correlation_monogamy, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_csv, m)?)?;
    Ok(())
}
