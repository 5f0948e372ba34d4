//! Python bindings. Configs and reports cross the boundary as plain
//! dicts/lists (via JSON), records as the `Record` class.

use num_complex::Complex64;
use pyo3::create_exception;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use serde::de::DeserializeOwned;
use serde::Serialize;

use protrans_core::detector::{cdf_scan, ed_scan, DetectorConfig};
use protrans_core::features::{
    ar_fit as core_ar_fit, dwt_unchecked, extract, max_level as core_max_level, ExtensionMode, FeatureConfig,
    FilterBank,
};
use protrans_core::learn::{balanced_accuracy as core_ba, TrainerConfig};
use protrans_core::relay::{
    ar_direction as core_direction, ar_zone as core_zone, build_cascade, classify_event, in_zone as core_in_zone,
    measure_impedance as core_measure, ArRelayConfig, CascadeConfig, CascadeModel, ImpedanceParams, Zone,
};
use protrans_core::select::mutual_information as core_mi;
use protrans_core::txmodel::{generate_corpus as core_corpus, CorpusSpec};
use protrans_core::waveform::{read_csv as core_read, write_csv as core_write, RecordKind, SamplingSpec, ThreePhaseRecord};

create_exception!(protrans, ProtransError, PyValueError);
create_exception!(protrans, ModelError, ProtransError);

fn err(e: protrans_core::Error) -> PyErr {
    match e {
        protrans_core::Error::Model(_) => ModelError::new_err(e.to_string()),
        _ => ProtransError::new_err(e.to_string()),
    }
}

fn to_py<T: Serialize>(py: Python<'_>, v: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(v).map_err(|e| ProtransError::new_err(e.to_string()))?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

fn from_py<T: DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = py.import("json")?.call_method1("dumps", (obj,))?.extract()?;
    serde_json::from_str(&text).map_err(|e| ProtransError::new_err(format!("invalid config: {e}")))
}

fn sampling(sample_rate_hz: f64, nominal_freq_hz: f64) -> PyResult<SamplingSpec> {
    SamplingSpec::new(sample_rate_hz, nominal_freq_hz).map_err(err)
}

/// A labelled three-phase record.
#[pyclass(module = "protrans", frozen)]
#[derive(Clone)]
struct Record {
    inner: ThreePhaseRecord,
}

#[pymethods]
impl Record {
    #[new]
    #[pyo3(signature = (pa, pb, pc, sample_rate_hz = 10_000.0, nominal_freq_hz = 60.0, kind = "current", label = None))]
    fn new(
        pa: Vec<f64>,
        pb: Vec<f64>,
        pc: Vec<f64>,
        sample_rate_hz: f64,
        nominal_freq_hz: f64,
        kind: &str,
        label: Option<&str>,
    ) -> PyResult<Self> {
        let kind = match kind {
            "current" => RecordKind::Current,
            "voltage" => RecordKind::Voltage,
            other => return Err(ProtransError::new_err(format!("kind must be 'current' or 'voltage', got {other:?}"))),
        };
        let label = label.map(str::parse).transpose().map_err(err)?;
        let inner = ThreePhaseRecord::new([pa, pb, pc], kind, sampling(sample_rate_hz, nominal_freq_hz)?)
            .map_err(err)?
            .with_label(label);
        Ok(Self { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        format!(
            "Record(len={}, kind={:?}, label={:?})",
            self.inner.len(),
            self.inner.kind().as_str(),
            self.inner.label().map(|l| l.to_string())
        )
    }

    #[getter]
    fn phases(&self) -> Vec<Vec<f64>> {
        self.inner.phases().to_vec()
    }

    #[getter]
    fn label(&self) -> Option<String> {
        self.inner.label().map(|l| l.to_string())
    }

    #[getter]
    fn kind(&self) -> &'static str {
        self.inner.kind().as_str()
    }

    #[getter]
    fn samples_per_cycle(&self) -> usize {
        self.inner.sampling().samples_per_cycle()
    }

    fn window(&self, start: usize, length: usize) -> PyResult<Self> {
        Ok(Self { inner: self.inner.window(start, length).map_err(err)? })
    }

    fn scaled(&self, factor: f64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.scaled(factor).map_err(err)? })
    }

    fn add_noise(&self, snr_db: f64, seed: u64) -> PyResult<Self> {
        Ok(Self { inner: self.inner.add_noise(snr_db, seed).map_err(err)? })
    }
}

fn unwrap_records(records: Vec<Record>) -> Vec<ThreePhaseRecord> {
    records.into_iter().map(|r| r.inner).collect()
}

#[pyfunction]
fn read_csv(path: &str) -> PyResult<Vec<Record>> {
    Ok(core_read(path.as_ref()).map_err(err)?.into_iter().map(|inner| Record { inner }).collect())
}

#[pyfunction]
fn write_csv(records: Vec<Record>, path: &str) -> PyResult<()> {
    core_write(&unwrap_records(records), path.as_ref()).map_err(err)
}

/// The 12-class synthetic differential-relay corpus.
#[pyfunction]
#[pyo3(signature = (per_class, n_cycles = 6, snr_db = None, seed = 0, sample_rate_hz = 10_000.0, nominal_freq_hz = 60.0))]
fn generate_corpus(
    py: Python<'_>,
    per_class: usize,
    n_cycles: usize,
    snr_db: Option<f64>,
    seed: u64,
    sample_rate_hz: f64,
    nominal_freq_hz: f64,
) -> PyResult<Vec<Record>> {
    let spec = sampling(sample_rate_hz, nominal_freq_hz)?;
    let cs = CorpusSpec { per_class, n_cycles, snr_db, seed };
    let recs = py.detach(|| core_corpus(&spec, &cs)).map_err(err)?;
    Ok(recs.into_iter().map(|inner| Record { inner }).collect())
}

/// Event detection; `method` is "ed" or "cdf". Returns a dict with
/// `triggered`, `trigger_index`, `trigger_phase`.
#[pyfunction]
#[pyo3(signature = (record, method = "cdf", config = None))]
fn detect(py: Python<'_>, record: &Record, method: &str, config: Option<&Bound<'_, PyAny>>) -> PyResult<Py<PyAny>> {
    let cfg: DetectorConfig = match config {
        Some(c) => from_py(py, c)?,
        None => DetectorConfig::default(),
    };
    let r = match method {
        "ed" => ed_scan(&record.inner, &cfg),
        "cdf" => cdf_scan(&record.inner, &cfg),
        other => return Err(ProtransError::new_err(format!("method must be 'ed' or 'cdf', got {other:?}"))),
    }
    .map_err(err)?;
    to_py(
        py,
        &serde_json::json!({
            "triggered": r.triggered,
            "trigger_index": r.trigger_index,
            "trigger_phase": r.trigger_phase,
        }),
    )
}

/// Named feature configuration as a dict: td5, we6, swing6, ar_relay.
#[pyfunction]
fn feature_preset(py: Python<'_>, name: &str) -> PyResult<Py<PyAny>> {
    let cfg = match name {
        "td5" => FeatureConfig::td5(),
        "we6" => FeatureConfig::we6(),
        "swing6" => FeatureConfig::swing6(),
        "ar_relay" => FeatureConfig::ar_relay(2),
        other => return Err(ProtransError::new_err(format!("unknown preset {other:?}"))),
    };
    to_py(py, &cfg)
}

/// Feature names and values for a record under a feature config dict.
#[pyfunction]
fn extract_features(py: Python<'_>, record: &Record, config: &Bound<'_, PyAny>) -> PyResult<(Vec<String>, Vec<f64>)> {
    let cfg: FeatureConfig = from_py(py, config)?;
    let fv = extract(&record.inner, &cfg).map_err(err)?;
    Ok((fv.names, fv.values))
}

/// Least-squares AR(k) fit: returns (intercept, [φ₁..φ_k]).
#[pyfunction]
#[pyo3(signature = (signal, k, intercept = false))]
fn ar_fit(signal: Vec<f64>, k: usize, intercept: bool) -> PyResult<(f64, Vec<f64>)> {
    let f = core_ar_fit(&signal, k, intercept).map_err(err)?;
    Ok((f.phi0, f.phi))
}

/// Multilevel DWT: returns (approximation, [detail level 1, ..., level L]).
#[pyfunction]
#[pyo3(signature = (signal, wavelet, level, mode = "symmetric"))]
fn dwt(signal: Vec<f64>, wavelet: &str, level: usize, mode: &str) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let bank = FilterBank::by_name(wavelet).map_err(err)?;
    let mode = match mode {
        "symmetric" => ExtensionMode::Symmetric,
        "periodization" => ExtensionMode::Periodization,
        other => return Err(ProtransError::new_err(format!("unknown mode {other:?}"))),
    };
    let d = dwt_unchecked(&signal, &bank, level, mode).map_err(err)?;
    Ok((d.approx, d.details))
}

#[pyfunction]
fn max_level(signal_len: usize, filter_len: usize) -> PyResult<usize> {
    core_max_level(signal_len, filter_len).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (x, y, bins = 16))]
fn mutual_information(x: Vec<f64>, y: Vec<usize>, bins: usize) -> PyResult<f64> {
    core_mi(&x, &y, bins).map_err(err)
}

/// Mean per-class recall of a square confusion matrix (rows = truth).
#[pyfunction]
fn balanced_accuracy(confusion: Vec<Vec<u64>>) -> PyResult<f64> {
    core_ba(&confusion).map_err(err)
}

/// Compensated ground-fault impedance in secondary ohms.
#[pyfunction]
#[pyo3(signature = (v_a, i_a, i_0, params = None))]
fn measure_impedance(
    py: Python<'_>,
    v_a: Complex64,
    i_a: Complex64,
    i_0: Complex64,
    params: Option<&Bound<'_, PyAny>>,
) -> PyResult<Complex64> {
    let p = impedance_params(py, params)?;
    core_measure(v_a, i_a, i_0, &p).map_err(err)
}

fn impedance_params(py: Python<'_>, params: Option<&Bound<'_, PyAny>>) -> PyResult<ImpedanceParams> {
    match params {
        Some(p) => from_py(py, p),
        None => Ok(ImpedanceParams::example_line()),
    }
}

/// Whether `z` lies inside zone 1 or 2.
#[pyfunction]
#[pyo3(signature = (z, zone, params = None))]
fn in_zone(py: Python<'_>, z: Complex64, zone: u8, params: Option<&Bound<'_, PyAny>>) -> PyResult<bool> {
    let p = impedance_params(py, params)?;
    p.validate().map_err(err)?;
    let zone = match zone {
        1 => Zone::Zone1,
        2 => Zone::Zone2,
        other => return Err(ProtransError::new_err(format!("zone must be 1 or 2, got {other}"))),
    };
    Ok(core_in_zone(z, &p, zone))
}

/// Autoregressive direction ("dfig_fed" / "grid_fed") and zone verdicts.
#[pyfunction]
fn ar_verdicts(py: Python<'_>, record: &Record) -> PyResult<(Py<PyAny>, Py<PyAny>)> {
    let cfg = ArRelayConfig::default();
    let d = core_direction(&record.inner, &cfg).map_err(err)?;
    let z = core_zone(&record.inner, &cfg).map_err(err)?;
    Ok((to_py(py, &d)?, to_py(py, &z)?))
}

/// A trained relay cascade.
#[pyclass(module = "protrans", frozen)]
struct Cascade {
    inner: CascadeModel,
}

#[pymethods]
impl Cascade {
    /// Trains on labelled current records. `preset` is "differential" or
    /// "three_stage"; `config` (a full cascade dict) overrides it.
    #[staticmethod]
    #[pyo3(signature = (records, preset = "differential", trainer = None, cv_folds = 5, seed = 0, config = None))]
    fn train(
        py: Python<'_>,
        records: Vec<Record>,
        preset: &str,
        trainer: Option<&Bound<'_, PyAny>>,
        cv_folds: usize,
        seed: u64,
        config: Option<&Bound<'_, PyAny>>,
    ) -> PyResult<Self> {
        let cfg: CascadeConfig = match config {
            Some(c) => from_py(py, c)?,
            None => {
                let trainer: TrainerConfig = match trainer {
                    Some(t) => from_py(py, t)?,
                    None => TrainerConfig::Boosted(Default::default()),
                };
                let mut cfg = match preset {
                    "differential" => CascadeConfig::differential(trainer),
                    "three_stage" => CascadeConfig::three_stage(trainer),
                    other => return Err(ProtransError::new_err(format!("unknown preset {other:?}"))),
                };
                cfg.cv_folds = cv_folds;
                cfg.seed = seed;
                cfg
            }
        };
        let records = unwrap_records(records);
        let inner = py.detach(|| build_cascade(&records, &cfg)).map_err(err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Ok(Self { inner: CascadeModel::from_json(text).map_err(err)? })
    }

    fn to_json(&self) -> PyResult<String> {
        self.inner.to_json().map_err(err)
    }

    #[getter]
    fn stage_names(&self) -> Vec<String> {
        self.inner.stages.iter().map(|s| s.spec.name.clone()).collect()
    }

    #[getter]
    fn cv_scores(&self) -> Vec<Option<f64>> {
        self.inner.stages.iter().map(|s| s.cv_score).collect()
    }

    /// Decision dict for one current record.
    fn classify(&self, py: Python<'_>, record: &Record) -> PyResult<Py<PyAny>> {
        let d = classify_event(&self.inner, &record.inner).map_err(err)?;
        to_py(py, &d)
    }

    /// Per-stage confusion matrices and balanced accuracies.
    fn evaluate(&self, py: Python<'_>, records: Vec<Record>) -> PyResult<Py<PyAny>> {
        let records = unwrap_records(records);
        let ev = py.detach(|| self.inner.evaluate(&records)).map_err(err)?;
        to_py(py, &ev)
    }
}

#[pymodule]
fn protrans(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("ProtransError", m.py().get_type::<ProtransError>())?;
    m.add("ModelError", m.py().get_type::<ModelError>())?;
    m.add_class::<Record>()?;
    m.add_class::<Cascade>()?;
    m.add_function(wrap_pyfunction!(read_csv, m)?)?;
    m.add_function(wrap_pyfunction!(write_csv, m)?)?;
    m.add_function(wrap_pyfunction!(generate_corpus, m)?)?;
    m.add_function(wrap_pyfunction!(detect, m)?)?;
    m.add_function(wrap_pyfunction!(feature_preset, m)?)?;
    m.add_function(wrap_pyfunction!(extract_features, m)?)?;
    m.add_function(wrap_pyfunction!(ar_fit, m)?)?;
    m.add_function(wrap_pyfunction!(dwt, m)?)?;
    m.add_function(wrap_pyfunction!(max_level, m)?)?;
    m.add_function(wrap_pyfunction!(mutual_information, m)?)?;
    m.add_function(wrap_pyfunction!(balanced_accuracy, m)?)?;
    m.add_function(wrap_pyfunction!(measure_impedance, m)?)?;
    m.add_function(wrap_pyfunction!(in_zone, m)?)?;
    m.add_function(wrap_pyfunction!(ar_verdicts, m)?)?;
    Ok(())
}
