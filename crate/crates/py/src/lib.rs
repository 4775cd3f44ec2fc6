//! Python bindings: name normalization, the scarcity test, q-values, the
//! logit diagnostic and the synthetic roster generator.

use std::fs::File;
use std::io::BufReader;

use namescarcity_core::diagnostics::logit_regression as core_logit;
use namescarcity_core::multiplicity::{classify, qvalues_for_results, QValueConfig};
use namescarcity_core::roster::{ingest_roster, write_roster, IngestOptions};
use namescarcity_core::scarcity::{exact_pvalue as core_exact, mc_pvalue as core_mc, NamePool};
use namescarcity_core::strata::{analyze_stratum, restrict_gender, PoolChoice};
use namescarcity_core::synthlab::{generate as core_generate, SynthConfig};
use namescarcity_core::{Error, Gender, NameField, NormalizationPolicy, Roster, Schema, TestConfig};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

fn policy(name: &str) -> PyResult<NormalizationPolicy> {
    match name {
        "uk" => Ok(NormalizationPolicy::uk()),
        "italian" => Ok(NormalizationPolicy::italian()),
        other => Err(PyValueError::new_err(format!("unknown policy `{other}`, expected `uk` or `italian`"))),
    }
}

fn field(name: &str) -> PyResult<NameField> {
    match name {
        "last" => Ok(NameField::LastName),
        "first" => Ok(NameField::FirstName),
        other => Err(PyValueError::new_err(format!("unknown field `{other}`, expected `last` or `first`"))),
    }
}

/// Canonical form of a raw name under the `uk` or `italian` policy.
#[pyfunction]
#[pyo3(signature = (raw, policy = "uk"))]
fn normalize_name(raw: &str, policy: &str) -> PyResult<String> {
    namescarcity_core::normalize_name(raw, &self::policy(policy)?).map_err(to_py)
}

#[pyfunction]
fn distinct_count(names: Vec<String>) -> usize {
    namescarcity_core::distinct_count(names.iter())
}

/// Exact `P(L' <= l_obs)` for samples of `n` from a pool with the given
/// name multiplicities.
#[pyfunction]
fn exact_pvalue(multiplicities: Vec<usize>, n: usize, l_obs: usize) -> PyResult<f64> {
    core_exact(&multiplicities, n, l_obs).map_err(to_py)
}

/// Monte Carlo estimate `(1 + hits) / (1 + n_sims)` for a pool of names.
#[pyfunction]
#[pyo3(signature = (pool, n, l_obs, n_sims = 100_000, seed = 0, workers = 0))]
fn mc_pvalue(
    py: Python<'_>,
    pool: Vec<String>,
    n: usize,
    l_obs: usize,
    n_sims: usize,
    seed: u64,
    workers: usize,
) -> PyResult<f64> {
    let pool = NamePool::from_names(pool.iter().map(String::as_str));
    let cfg = TestConfig { n_sims, min_group_size: 1, seed, workers };
    let result = py.detach(|| core_mc(&pool, n, l_obs, &cfg)).map_err(to_py)?;
    Ok(result.p_hat.expect("min_group_size 1 always tests"))
}

/// q-values in input order and the `pi0` used. With `pi0 = 1` these are
/// Benjamini–Hochberg adjusted p-values.
#[pyfunction]
#[pyo3(signature = (pvalues, pi0 = None, n_bootstrap = 100, seed = 0))]
fn qvalues(pvalues: Vec<f64>, pi0: Option<f64>, n_bootstrap: usize, seed: u64) -> PyResult<(Vec<f64>, f64)> {
    let labelled: Vec<(String, f64)> = pvalues.iter().enumerate().map(|(i, &p)| (i.to_string(), p)).collect();
    let cfg = QValueConfig { n_bootstrap, seed, fixed_pi0: pi0, ..QValueConfig::default() };
    let report = namescarcity_core::qvalues(&labelled, &cfg).map_err(to_py)?;
    Ok((report.q_values(), report.pi0_hat))
}

/// Least-squares line through `(covariate, logit(clamp(p)))`.
#[pyfunction]
#[pyo3(signature = (covariates, pvalues, clamp = 1e-6))]
fn logit_regression<'py>(
    py: Python<'py>,
    covariates: Vec<f64>,
    pvalues: Vec<f64>,
    clamp: f64,
) -> PyResult<Bound<'py, PyDict>> {
    if covariates.len() != pvalues.len() {
        return Err(PyValueError::new_err("covariates and pvalues differ in length"));
    }
    let points: Vec<(f64, f64)> = covariates.into_iter().zip(pvalues).collect();
    let fit = core_logit(&points, clamp).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("slope", fit.slope)?;
    d.set_item("intercept", fit.intercept)?;
    d.set_item("r_squared", fit.r_squared)?;
    d.set_item("logits", fit.points.iter().map(|p| p.logit).collect::<Vec<_>>())?;
    Ok(d)
}

/// A roster of persons grouped by label.
#[pyclass(name = "Roster", frozen)]
struct PyRoster {
    inner: Roster,
}

#[pymethods]
impl PyRoster {
    /// Reads a CSV roster. `schema` maps fields to columns, e.g.
    /// `"last_name=surname,group=sector"`.
    #[staticmethod]
    #[pyo3(signature = (path, field = "last", policy = "uk", schema = None, delimiter = ','))]
    fn from_csv(path: &str, field: &str, policy: &str, schema: Option<&str>, delimiter: char) -> PyResult<Self> {
        let schema = match schema {
            Some(m) => Schema::default().with_mapping(m).map_err(to_py)?,
            None => Schema::default(),
        };
        if !delimiter.is_ascii() {
            return Err(PyValueError::new_err("delimiter must be ASCII"));
        }
        let options = IngestOptions { delimiter: delimiter as u8, field: self::field(field)? };
        let file = File::open(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        let (inner, _) =
            ingest_roster(BufReader::new(file), &self::policy(policy)?, &schema, &options).map_err(to_py)?;
        Ok(Self { inner })
    }

    fn to_csv(&self, path: &str) -> PyResult<()> {
        let file = File::create(path).map_err(|e| PyOSError::new_err(format!("{path}: {e}")))?;
        write_roster(&self.inner, file).map_err(to_py)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn groups(&self) -> Vec<String> {
        self.inner.groups().map(str::to_string).collect()
    }

    fn group_size(&self, group: &str) -> usize {
        self.inner.group_size(group)
    }

    fn group_distinct(&self, group: &str) -> usize {
        self.inner.group_distinct(group)
    }

    fn names(&self) -> Vec<String> {
        self.inner.names().map(str::to_string).collect()
    }

    /// Tests every group against the roster's own pool (or only women or
    /// men, with `gender = "F"` or `"M"`). Returns one dict per group.
    #[allow(clippy::too_many_arguments)]
    #[pyo3(signature = (n_sims = 100_000, min_size = 50, seed = 0, workers = 0, alpha = 0.05, gender = None))]
    fn analyze<'py>(
        &self,
        py: Python<'py>,
        n_sims: usize,
        min_size: usize,
        seed: u64,
        workers: usize,
        alpha: f64,
        gender: Option<&str>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let cfg = TestConfig { n_sims, min_group_size: min_size, seed, workers };
        cfg.validate().map_err(to_py)?;
        let subset = match gender {
            None => None,
            Some(g) => match Gender::parse(g) {
                Some(g @ (Gender::F | Gender::M)) => Some(restrict_gender(&self.inner, g)),
                _ => return Err(PyValueError::new_err(format!("gender must be `F` or `M`, got `{g}`"))),
            },
        };
        let roster = subset.as_ref().unwrap_or(&self.inner);
        let classified = py
            .detach(|| {
                let results = analyze_stratum(roster, PoolChoice::Stratum, &cfg)?;
                let report = qvalues_for_results(&results, &QValueConfig::default())?;
                classify(&results, report.as_ref(), alpha)
            })
            .map_err(to_py)?;
        classified
            .into_iter()
            .map(|c| {
                let d = PyDict::new(py);
                d.set_item("group", &c.result.group)?;
                d.set_item("n_people", c.result.n_people)?;
                d.set_item("n_distinct", c.result.n_distinct)?;
                d.set_item("p", c.result.p_hat)?;
                d.set_item("q", c.q)?;
                d.set_item("highly_significant", c.highly_significant)?;
                d.set_item("skipped", c.result.skipped)?;
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Roster(persons={}, groups={})", self.inner.len(), self.inner.group_index().len())
    }
}

/// Synthetic roster from `key = value` configuration text (empty text uses
/// the defaults).
#[pyfunction]
#[pyo3(signature = (config = "", seed = None))]
fn generate(py: Python<'_>, config: &str, seed: Option<u64>) -> PyResult<PyRoster> {
    let mut cfg = SynthConfig::parse(config.as_bytes()).map_err(to_py)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let inner = py.detach(|| core_generate(&cfg)).map_err(to_py)?;
    Ok(PyRoster { inner })
}

#[pymodule]
fn namescarcity(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_name, m)?)?;
    m.add_function(wrap_pyfunction!(distinct_count, m)?)?;
    m.add_function(wrap_pyfunction!(exact_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(mc_pvalue, m)?)?;
    m.add_function(wrap_pyfunction!(qvalues, m)?)?;
    m.add_function(wrap_pyfunction!(logit_regression, m)?)?;
    m.add_function(wrap_pyfunction!(generate, m)?)?;
    m.add_class::<PyRoster>()?;
    Ok(())
}
