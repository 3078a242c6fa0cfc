//! Python bindings: single trials, sweeps, the inequality statistics and
//! built-in referee challenges.

use epr_sim::hv::{class_index, saturate};
use epr_sim::montecarlo::ChshOutcome;
use epr_sim::referee::{referee_session, LocalStations, SessionConfig, SessionScore};
use epr_sim::report::sweep_csv;
use epr_sim::stats::{self, Tally};
use epr_sim::{Bit, HvModel, HvTriple, ModelSpec, SweepOptions, SweepReport, SweepRow};
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_model(name: &str) -> PyResult<ModelSpec> {
    name.parse().map_err(value_err)
}

fn bit(v: u8) -> PyResult<Bit> {
    Bit::try_from(v).map_err(value_err)
}

/// Statistics of one simulated experiment.
#[pyclass(name = "TrialResult", frozen)]
struct PyTrialResult {
    inner: epr_sim::TrialResult,
}

#[pymethods]
impl PyTrialResult {
    /// `(N₁(U), N₂(E), N₃(U))`.
    #[getter]
    fn bell_counts(&self) -> (u64, u64, u64) {
        let b = self.inner.bell;
        (b.n1u, b.n2e, b.n3u)
    }

    #[getter]
    fn bell_violated(&self) -> bool {
        self.inner.bell.violated
    }

    /// CHSH S, or None when a configuration had no pairs.
    #[getter]
    fn s(&self) -> Option<f64> {
        self.inner.chsh.result().map(|c| c.s)
    }

    #[getter]
    fn chsh_violated(&self) -> Option<bool> {
        self.inner.chsh.result().map(|c| c.violated)
    }

    #[getter]
    fn correlations(&self) -> Option<[f64; 4]> {
        self.inner.chsh.result().map(|c| c.e)
    }

    #[getter]
    fn anticorr_percent(&self) -> Option<f64> {
        self.inner.anticorr.map(|a| a.percent)
    }

    /// `[(N_d, N_d(E), N_d(U)) for d in 0..3]`.
    #[getter]
    fn counts(&self) -> Vec<(u64, u64, u64)> {
        self.inner
            .tally
            .configs()
            .iter()
            .map(|c| (c.total, c.equal, c.unequal))
            .collect()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("trial serializes")
    }

    fn __repr__(&self) -> String {
        let (a, b, c) = self.bell_counts();
        let s = match self.inner.chsh {
            ChshOutcome::Computed(r) => format!("{:.5}", r.s),
            ChshOutcome::Indeterminate { .. } => "None".into(),
        };
        let v = if self.bell_violated() {
            "True"
        } else {
            "False"
        };
        format!("TrialResult(bell=({a}, {b}, {c}), violated={v}, S={s})")
    }
}

#[pyclass(name = "SweepRow", frozen, get_all)]
struct PySweepRow {
    model: String,
    pairs: u64,
    trials: u64,
    bell_obeyed: u64,
    chsh_obeyed: u64,
    chsh_indeterminate: u64,
    mean_s: Option<f64>,
    mean_anticorr_pct: Option<f64>,
}

impl PySweepRow {
    fn new(model: &ModelSpec, r: &SweepRow) -> Self {
        PySweepRow {
            model: model.name().into(),
            pairs: r.n,
            trials: r.trials,
            bell_obeyed: r.bell_obeyed,
            chsh_obeyed: r.chsh_obeyed,
            chsh_indeterminate: r.chsh_indeterminate,
            mean_s: r.mean_s,
            mean_anticorr_pct: r.mean_anticorr_pct,
        }
    }
}

#[pymethods]
impl PySweepRow {
    fn __repr__(&self) -> String {
        format!(
            "SweepRow(model={:?}, pairs={}, bell_obeyed={}, chsh_obeyed={})",
            self.model, self.pairs, self.bell_obeyed, self.chsh_obeyed
        )
    }
}

#[pyclass(name = "SessionScore", frozen)]
struct PySessionScore {
    inner: SessionScore,
}

#[pymethods]
impl PySessionScore {
    #[getter]
    fn bell_violation_rate(&self) -> f64 {
        self.inner.bell_violation_rate
    }

    #[getter]
    fn chsh_violation_rate(&self) -> f64 {
        self.inner.chsh_violation_rate
    }

    #[getter]
    fn mean_anticorr_pct(&self) -> Option<f64> {
        self.inner.mean_anticorr_pct
    }

    #[getter]
    fn verdict(&self) -> &'static str {
        self.inner.verdict.text()
    }

    fn to_json(&self) -> String {
        serde_json::to_string(&self.inner).expect("score serializes")
    }
}

/// Simulate one experiment of `pairs` photon pairs.
#[pyfunction]
#[pyo3(signature = (model, pairs=800, seed=0))]
fn run_trial(py: Python<'_>, model: &str, pairs: u64, seed: u64) -> PyResult<PyTrialResult> {
    let model = parse_model(model)?;
    let inner = py
        .detach(|| epr_sim::run_trial(&model, pairs, seed))
        .map_err(value_err)?;
    Ok(PyTrialResult { inner })
}

fn run_sweep(
    py: Python<'_>,
    model: &str,
    pairs: Vec<u64>,
    trials: u64,
    seed: u64,
    workers: usize,
) -> PyResult<SweepReport> {
    let model = parse_model(model)?;
    let opts = SweepOptions { workers };
    py.detach(|| epr_sim::sweep(&model, &pairs, trials, seed, opts))
        .map_err(value_err)
}

/// Non-violation counts over `trials` experiments for each pair count.
#[pyfunction]
#[pyo3(signature = (model, pairs, trials=1000, seed=0, workers=1))]
fn sweep(
    py: Python<'_>,
    model: &str,
    pairs: Vec<u64>,
    trials: u64,
    seed: u64,
    workers: usize,
) -> PyResult<Vec<PySweepRow>> {
    let report = run_sweep(py, model, pairs, trials, seed, workers)?;
    Ok(report
        .rows
        .iter()
        .map(|r| PySweepRow::new(&report.model, r))
        .collect())
}

/// Same as `sweep`, rendered as the command-line tool's CSV.
#[pyfunction]
#[pyo3(signature = (model, pairs, trials=1000, seed=0, workers=1))]
fn sweep_to_csv(
    py: Python<'_>,
    model: &str,
    pairs: Vec<u64>,
    trials: u64,
    seed: u64,
    workers: usize,
) -> PyResult<String> {
    Ok(sweep_csv(&[run_sweep(
        py, model, pairs, trials, seed, workers,
    )?]))
}

/// Whether `N₁(U) > N₂(E) + N₃(U)`.
#[pyfunction]
fn bell_violated(n1u: u64, n2e: u64, n3u: u64) -> bool {
    stats::BellResult::from_counts(n1u, n2e, n3u).violated
}

/// CHSH S from `[(N_d(E), N_d(U)) for d in 0..3]`.
#[pyfunction]
fn chsh_s(counts: [(u64, u64); 4]) -> PyResult<f64> {
    stats::chsh(&Tally::from_counts(counts))
        .map(|r| r.s)
        .map_err(value_err)
}

#[pyfunction(name = "class_index")]
fn py_class_index(a3: u8, b0: u8, b2: u8) -> PyResult<u8> {
    Ok(class_index(HvTriple::new(bit(a3)?, bit(b0)?, bit(b2)?)))
}

/// The saturating transformation on a triple `(A₃, B₀, B₂)`.
#[pyfunction(name = "saturate")]
fn py_saturate(a3: u8, b0: u8, b2: u8) -> PyResult<(u8, u8, u8)> {
    let s = saturate(HvTriple::new(bit(a3)?, bit(b0)?, bit(b2)?));
    Ok((s.a3.value(), s.b0.value(), s.b2.value()))
}

/// Score a built-in hidden-variable model through the referee, with the
/// three stations on loopback threads.
#[pyfunction]
#[pyo3(signature = (model, pairs=800, runs=100, seed=0))]
fn challenge(
    py: Python<'_>,
    model: &str,
    pairs: u64,
    runs: u64,
    seed: u64,
) -> PyResult<PySessionScore> {
    let hv = HvModel::try_from(parse_model(model)?).map_err(value_err)?;
    let inner = py.detach(|| {
        let stations = LocalStations::spawn(hv, seed).map_err(|e| e.to_string())?;
        let cfg = SessionConfig::new(pairs, runs, seed, stations.endpoints.clone());
        let score = referee_session(&cfg, None).map_err(|f| f.to_string());
        stations.join();
        score
    });
    inner
        .map(|inner| PySessionScore { inner })
        .map_err(PyRuntimeError::new_err)
}

#[pymodule]
fn eprsim(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTrialResult>()?;
    m.add_class::<PySweepRow>()?;
    m.add_class::<PySessionScore>()?;
    m.add_function(wrap_pyfunction!(run_trial, m)?)?;
    m.add_function(wrap_pyfunction!(sweep, m)?)?;
    m.add_function(wrap_pyfunction!(sweep_to_csv, m)?)?;
    m.add_function(wrap_pyfunction!(bell_violated, m)?)?;
    m.add_function(wrap_pyfunction!(chsh_s, m)?)?;
    m.add_function(wrap_pyfunction!(py_class_index, m)?)?;
    m.add_function(wrap_pyfunction!(py_saturate, m)?)?;
    m.add_function(wrap_pyfunction!(challenge, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
