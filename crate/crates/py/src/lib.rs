//! Python bindings for the `risran` simulator.
//!
//! The module exposes the scenario catalog, whole-run simulation, the RIS
//! optimiser on user-supplied channels, link adaptation helpers and the E2
//! codec. Complex channel gains travel as Python `complex` values.

use std::collections::BTreeMap;

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyBytes, PyDict, PyList};

use risran_core::channel::{ChannelSet, UeChannel};
use risran_core::e2::{self, ControlRequest, E2Message, Payload, Subscription};
use risran_core::mac::{cqi_from_snr, mcs_from_cqi, snr_from_gain, tbs, SYSTEM_BANDWIDTH_HZ};
use risran_core::metrics::Metric;
use risran_core::ris::{brute_force_phase_search, optimize_ris, ue_gains, RisConfiguration, RisOptimizer};
use risran_core::scenario::ScenarioConfig;
use risran_core::sim::{link_state, simulate as run_simulation, RunOptions};
use risran_core::{SchedulingPolicy, Slice};

fn value_error<E: std::fmt::Display>(e: E) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn scenario(config_id: &str, seed: u64, duration_s: u64) -> PyResult<ScenarioConfig> {
    Ok(ScenarioConfig::catalog(config_id)
        .map_err(value_error)?
        .with_seed(seed)
        .with_duration(duration_s))
}

fn channel_set(
    direct: Vec<Complex64>,
    ue_to_ris: Vec<Vec<Complex64>>,
    ris_to_bs: Vec<Complex64>,
) -> PyResult<ChannelSet> {
    if direct.len() != ue_to_ris.len() {
        return Err(PyValueError::new_err(format!(
            "{} direct gains but {} UE→RIS vectors",
            direct.len(),
            ue_to_ris.len()
        )));
    }
    let ues = direct
        .into_iter()
        .zip(ue_to_ris)
        .enumerate()
        .map(|(i, (direct, ue_to_ris))| UeChannel {
            ue_id: i as u32 + 1,
            direct,
            ue_to_ris,
        })
        .collect();
    let set = ChannelSet { ris_to_bs, ues };
    set.validate().map_err(value_error)?;
    Ok(set)
}

/// The eight catalog configurations as a list of dicts.
#[pyfunction]
fn catalog(py: Python<'_>) -> PyResult<Bound<'_, PyList>> {
    let rows = PyList::empty(py);
    for c in ScenarioConfig::catalog_all() {
        let d = PyDict::new(py);
        d.set_item("config_id", &c.config_id)?;
        d.set_item("embb_ues", &c.embb_ues)?;
        d.set_item("urllc_ues", &c.urllc_ues)?;
        d.set_item("embb_bandwidth_mhz", c.embb_bandwidth_mhz)?;
        d.set_item("urllc_bandwidth_mhz", c.urllc_bandwidth_mhz)?;
        d.set_item("ris_elements", c.ris_elements)?;
        d.set_item("xapp_enabled", c.xapp_enabled)?;
        d.set_item("embb_policy", c.embb_policy.as_str())?;
        d.set_item("urllc_policy", c.urllc_policy.as_str())?;
        rows.append(d)?;
    }
    Ok(rows)
}

/// Per-UE power gains `{ue_id: (direct, with_ris)}` for a catalog scenario.
#[pyfunction]
#[pyo3(signature = (config_id, seed = 1))]
fn link_gains(config_id: &str, seed: u64) -> PyResult<BTreeMap<u32, (f64, f64)>> {
    let link = link_state(&scenario(config_id, seed, 0)?).map_err(value_error)?;
    Ok(link
        .direct_gains
        .iter()
        .map(|(id, &d)| (*id, (d, link.gains[id])))
        .collect())
}

/// Runs a catalog scenario and returns its summary:
/// `{(slice, metric): {"median", "p25", "p75", "mean"}}` plus run counters.
#[pyfunction]
#[pyo3(signature = (config_id, seed = 1, duration_s = 60))]
fn simulate<'py>(
    py: Python<'py>,
    config_id: &str,
    seed: u64,
    duration_s: u64,
) -> PyResult<Bound<'py, PyDict>> {
    let cfg = scenario(config_id, seed, duration_s)?;
    let out = py
        .detach(|| run_simulation(&cfg, RunOptions::default()))
        .map_err(value_error)?;
    let summary = PyDict::new(py);
    for row in &out.summary {
        let s = PyDict::new(py);
        s.set_item("median", row.stats.median)?;
        s.set_item("p25", row.stats.p25)?;
        s.set_item("p75", row.stats.p75)?;
        s.set_item("mean", row.stats.mean)?;
        summary.set_item((row.slice.as_str(), row.metric.as_str()), s)?;
    }
    let d = PyDict::new(py);
    d.set_item("config_id", &out.config.config_id)?;
    d.set_item("seed", out.config.seed)?;
    d.set_item("summary", summary)?;
    d.set_item("records", out.records.len())?;
    d.set_item("indications", out.indications.len())?;
    d.set_item("applied_controls", out.applied_controls.len())?;
    Ok(d)
}

/// Median of one summary metric, e.g. `median("VI", 1, "eMBB", "throughput_bps")`.
#[pyfunction]
#[pyo3(signature = (config_id, seed, slice, metric, duration_s = 60))]
fn median(config_id: &str, seed: u64, slice: &str, metric: &str, duration_s: u64) -> PyResult<Option<f64>> {
    let slice: Slice = slice.parse().map_err(value_error)?;
    let metric = Metric::ALL
        .into_iter()
        .find(|m| m.as_str() == metric)
        .ok_or_else(|| PyValueError::new_err(format!("unknown metric `{metric}`")))?;
    let cfg = scenario(config_id, seed, duration_s)?;
    let out = run_simulation(&cfg, RunOptions::default()).map_err(value_error)?;
    Ok(out.median(slice, metric))
}

/// Optimises RIS phases for the given channels (UE `i` is `direct[i]`,
/// `ue_to_ris[i]`). Returns `(phases, aggregate_gain, per_ue_gains)`.
#[pyfunction]
fn optimize(
    direct: Vec<Complex64>,
    ue_to_ris: Vec<Vec<Complex64>>,
    ris_to_bs: Vec<Complex64>,
) -> PyResult<(Vec<f64>, f64, Vec<f64>)> {
    let set = channel_set(direct, ue_to_ris, ris_to_bs)?;
    let sol = optimize_ris(&set, &RisOptimizer::default()).map_err(value_error)?;
    let gains = ue_gains(&set, &sol.configuration).map_err(value_error)?;
    Ok((sol.configuration.phases().to_vec(), sol.aggregate_gain, gains))
}

/// Exhaustive search over quantised phases. Returns `(phases, aggregate_gain)`.
#[pyfunction]
fn brute_force(
    direct: Vec<Complex64>,
    ue_to_ris: Vec<Vec<Complex64>>,
    ris_to_bs: Vec<Complex64>,
    step: f64,
) -> PyResult<(Vec<f64>, f64)> {
    let set = channel_set(direct, ue_to_ris, ris_to_bs)?;
    let (cfg, gain) = brute_force_phase_search(&set, step).map_err(value_error)?;
    Ok((cfg.phases().to_vec(), gain))
}

/// Per-UE power gains under an explicit phase configuration.
#[pyfunction]
fn gains_for(
    direct: Vec<Complex64>,
    ue_to_ris: Vec<Vec<Complex64>>,
    ris_to_bs: Vec<Complex64>,
    phases: Vec<f64>,
) -> PyResult<Vec<f64>> {
    let set = channel_set(direct, ue_to_ris, ris_to_bs)?;
    let cfg = RisConfiguration::new(phases).map_err(value_error)?;
    ue_gains(&set, &cfg).map_err(value_error)
}

/// Link adaptation for a power gain: `(snr_db, cqi, mcs, bytes_per_prb)`.
#[pyfunction]
#[pyo3(signature = (gain, tx_power_dbm = risran_core::scenario::DEFAULT_TX_POWER_DBM))]
fn link_adaptation(gain: f64, tx_power_dbm: f64) -> PyResult<(f64, u8, u8, u64)> {
    let snr = snr_from_gain(gain, tx_power_dbm, SYSTEM_BANDWIDTH_HZ).map_err(value_error)?;
    let cqi = cqi_from_snr(snr);
    let mcs = mcs_from_cqi(cqi).map_err(value_error)?;
    Ok((snr, cqi, mcs, tbs(mcs, 1).map_err(value_error)?))
}

/// Encodes a CONTROL_REQ frame setting both slices' policies.
#[pyfunction]
fn encode_control<'py>(
    py: Python<'py>,
    correlation_id: u32,
    embb: &str,
    urllc: &str,
) -> PyResult<Bound<'py, PyBytes>> {
    let embb: SchedulingPolicy = embb.parse().map_err(value_error)?;
    let urllc: SchedulingPolicy = urllc.parse().map_err(value_error)?;
    let msg = E2Message::new(
        correlation_id,
        Payload::ControlRequest(ControlRequest::pair(embb, urllc)),
    );
    Ok(PyBytes::new(py, &e2::encode(&msg)))
}

/// Encodes a SUB_REQ frame.
#[pyfunction]
#[pyo3(signature = (correlation_id, kpm_period_ms, slice = None))]
fn encode_subscription<'py>(
    py: Python<'py>,
    correlation_id: u32,
    kpm_period_ms: u32,
    slice: Option<&str>,
) -> PyResult<Bound<'py, PyBytes>> {
    let slice_filter = slice.map(str::parse::<Slice>).transpose().map_err(value_error)?;
    let msg = E2Message::new(
        correlation_id,
        Payload::SubscriptionRequest(Subscription {
            kpm_period_ms,
            slice_filter,
        }),
    );
    Ok(PyBytes::new(py, &e2::encode(&msg)))
}

/// Decodes one complete frame into a dict with `type`, `correlation_id` and
/// type-specific fields.
#[pyfunction]
fn decode<'py>(py: Python<'py>, frame: &[u8]) -> PyResult<Bound<'py, PyDict>> {
    let msg = e2::decode(frame).map_err(value_error)?;
    let d = PyDict::new(py);
    d.set_item("type", msg.msg_type().as_str())?;
    d.set_item("correlation_id", msg.correlation_id)?;
    match msg.payload {
        Payload::SubscriptionRequest(s) => {
            d.set_item("kpm_period_ms", s.kpm_period_ms)?;
            d.set_item("slice", s.slice_filter.map(Slice::as_str))?;
        }
        Payload::SubscriptionResponse { status } => d.set_item("status", status)?,
        Payload::Indication {
            window_end_ms,
            records,
        } => {
            d.set_item("window_end_ms", window_end_ms)?;
            d.set_item("records", records.len())?;
        }
        Payload::ControlRequest(req) => {
            let policies: BTreeMap<&str, &str> = req
                .policies
                .iter()
                .map(|(s, p)| (s.as_str(), p.as_str()))
                .collect();
            d.set_item("policies", policies)?;
        }
        Payload::ControlAck(status) => d.set_item("status", status as u8)?,
    }
    Ok(d)
}

#[pymodule]
fn risran(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_function(wrap_pyfunction!(catalog, m)?)?;
    m.add_function(wrap_pyfunction!(link_gains, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(median, m)?)?;
    m.add_function(wrap_pyfunction!(optimize, m)?)?;
    m.add_function(wrap_pyfunction!(brute_force, m)?)?;
    m.add_function(wrap_pyfunction!(gains_for, m)?)?;
    m.add_function(wrap_pyfunction!(link_adaptation, m)?)?;
    m.add_function(wrap_pyfunction!(encode_control, m)?)?;
    m.add_function(wrap_pyfunction!(encode_subscription, m)?)?;
    m.add_function(wrap_pyfunction!(decode, m)?)?;
    Ok(())
}
