//! End-to-end experiment runner: channels → RIS optimisation → TTI loop
//! with traffic, scheduling and the E2 control loop → metrics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::channel::{
    derive_seed, generate_channels, ChannelModel, ChannelSet, NodeGeometry, CATALOG_CARRIER_HZ,
    STREAM_OPTIMIZER, STREAM_TRAFFIC,
};
use crate::e2::{duplex, AppliedControl, ControlRequest, RanAgent, RicEndpoint, Subscription};
use crate::mac::{LinkBudget, MacState, Slice, UeContext, SYSTEM_BANDWIDTH_HZ};
use crate::metrics::{
    format_sig6, summarize, write_csv, write_kpm_csv, write_summary_csv, KpmCollector, KpmRecord,
    Metric, Stats, SummaryRow,
};
use crate::ris::{optimize_ris, ue_gains, RisOptimizer, RisSolution, WeightSearch};
use crate::scenario::ScenarioConfig;
use crate::traffic::{TrafficGenerator, TrafficProfile};
use crate::{Error, Result};

pub const RIS_GAINS_HEADER: [&str; 7] = [
    "ue_id",
    "slice",
    "gain_no_ris_db",
    "gain_ris_db",
    "snr_db",
    "cqi",
    "mcs",
];
pub const TRACE_HEADER: [&str; 7] = [
    "tti",
    "slice",
    "ue_id",
    "granted_prbs",
    "requested_prbs",
    "mcs",
    "served_bytes",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Keep the per-TTI allocation trace (one row per UE per TTI).
    pub record_trace: bool,
}

/// Channels and the resulting static per-UE power gains of one scenario.
#[derive(Debug, Clone)]
pub struct LinkState {
    pub channels: ChannelSet,
    /// `None` when the scenario has no RIS.
    pub solution: Option<RisSolution>,
    /// Direct-path power gain per UE.
    pub direct_gains: BTreeMap<u32, f64>,
    /// Overall power gain per UE under the optimised RIS (direct gain when
    /// there is no RIS).
    pub gains: BTreeMap<u32, f64>,
}

/// Generates the scenario's channels and optimises the RIS for all its UEs.
pub fn link_state(cfg: &ScenarioConfig) -> Result<LinkState> {
    let ids = cfg.ue_ids();
    let geometry = NodeGeometry::catalog(&ids, cfg.ris_elements, cfg.seed)?;
    let channels = generate_channels(&ChannelModel::new(CATALOG_CARRIER_HZ), &geometry, cfg.seed)?;
    let direct_gains: BTreeMap<u32, f64> =
        channels.ues.iter().map(|u| (u.ue_id, u.direct.norm_sqr())).collect();
    if cfg.ris_elements == 0 {
        return Ok(LinkState {
            gains: direct_gains.clone(),
            direct_gains,
            channels,
            solution: None,
        });
    }
    let optimizer = RisOptimizer {
        weight_search: WeightSearch {
            seed: derive_seed(cfg.seed, STREAM_OPTIMIZER),
            ..WeightSearch::default()
        },
        ..RisOptimizer::default()
    };
    let solution = optimize_ris(&channels, &optimizer)?;
    let gains = channels
        .ues
        .iter()
        .map(|u| u.ue_id)
        .zip(ue_gains(&channels, &solution.configuration)?)
        .collect();
    Ok(LinkState {
        channels,
        solution: Some(solution),
        direct_gains,
        gains,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisGainRow {
    pub ue_id: u32,
    pub slice: Slice,
    pub gain_no_ris_db: f64,
    pub gain_ris_db: f64,
    pub snr_db: f64,
    pub cqi: u8,
    pub mcs: u8,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRow {
    pub tti: u64,
    pub slice: Slice,
    pub ue_id: u32,
    pub granted_prbs: u32,
    pub requested_prbs: u32,
    pub mcs: u8,
    pub served_bytes: u64,
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub config: ScenarioConfig,
    pub link: LinkState,
    /// UE link state at the start of the run.
    pub ues: Vec<UeContext>,
    pub records: Vec<KpmRecord>,
    pub summary: Vec<SummaryRow>,
    pub ris_gains: Vec<RisGainRow>,
    pub trace: Vec<TraceRow>,
    /// Controls applied by the RAN agent, in order.
    pub applied_controls: Vec<AppliedControl>,
    /// Controls sent by the RIC: `(sent_at_ms, correlation_id, request)`.
    pub sent_controls: Vec<(u64, u32, ControlRequest)>,
    /// Indications received by the RIC: `(window_end_ms, record count)`.
    pub indications: Vec<(u64, usize)>,
}

/// Runs one scenario to completion.
pub fn simulate(cfg: &ScenarioConfig, options: RunOptions) -> Result<SimulationOutput> {
    cfg.validate()?;
    let link = link_state(cfg)?;
    let budget = LinkBudget {
        tx_power_dbm: cfg.tx_power_dbm,
        noise_bandwidth_hz: SYSTEM_BANDWIDTH_HZ,
    };
    let slices = cfg.ue_slices();
    let ues = slices
        .iter()
        .map(|(&id, &slice)| UeContext::new(id, slice, link.gains[&id], &budget))
        .collect::<Result<Vec<_>>>()?;
    let initial_ues = ues.clone();
    let mut mac = MacState::new(ues, cfg.slicing()?, cfg.default_policies())?;
    let mut sources: Vec<(u32, TrafficGenerator)> = slices
        .iter()
        .map(|(&id, &slice)| {
            let seed = derive_seed(cfg.seed, STREAM_TRAFFIC + u64::from(id));
            (id, TrafficGenerator::new(TrafficProfile::for_slice(slice), seed))
        })
        .collect();

    let (ric_end, ran_end) = duplex();
    let mut ric = RicEndpoint::new(ric_end, cfg.xapp_enabled);
    let mut agent = RanAgent::new(ran_end);
    ric.subscribe(Subscription {
        kpm_period_ms: cfg.kpm_period_ms,
        slice_filter: None,
    });

    let mut collector = KpmCollector::new(cfg.kpm_period_ms)?;
    let mut records = Vec::new();
    let mut trace = Vec::new();
    let total_ttis = cfg.duration_s * 1000;
    for t in 0..total_ttis {
        // Messages that arrived during TTI t−1 apply from TTI t.
        agent.poll(&mut mac)?;
        // The RIC acts at the start of TTI t; its requests land mid-TTI.
        ric.step(t)?;
        for (id, source) in &mut sources {
            let bytes = source.arrivals(t)?;
            mac.ue_mut(*id)
                .ok_or_else(|| Error::ContractViolation(format!("UE {id} missing")))?
                .buffer
                .enqueue(bytes);
        }
        let allocation = mac.run_tti()?;
        allocation.check_invariants()?;
        if options.record_trace {
            trace.extend(allocation.grants.values().map(|g| TraceRow {
                tti: t,
                slice: g.slice,
                ue_id: g.ue_id,
                granted_prbs: g.granted_prbs,
                requested_prbs: g.requested_prbs,
                mcs: g.mcs,
                served_bytes: g.served_bytes,
            }));
        }
        let window = collector.observe(&allocation);
        agent.report(t + 1, &window);
        records.extend(window);
    }
    let tail = collector.finish(total_ttis);
    agent.report(total_ttis, &tail);
    records.extend(tail);
    ric.drain()?;

    let ris_gains = initial_ues
        .iter()
        .map(|u| RisGainRow {
            ue_id: u.ue_id,
            slice: u.slice,
            gain_no_ris_db: 10.0 * link.direct_gains[&u.ue_id].log10(),
            gain_ris_db: 10.0 * link.gains[&u.ue_id].log10(),
            snr_db: u.snr_db,
            cqi: u.cqi,
            mcs: u.mcs,
        })
        .collect();
    Ok(SimulationOutput {
        summary: summarize(&cfg.config_id, &records)?,
        config: cfg.clone(),
        link,
        ues: initial_ues,
        records,
        ris_gains,
        trace,
        applied_controls: agent.applied().to_vec(),
        sent_controls: ric.sent_controls().to_vec(),
        indications: ric
            .indications()
            .iter()
            .map(|(end, recs)| (*end, recs.len()))
            .collect(),
    })
}

/// `<root>/<config_id>-seed<seed>`.
pub fn run_dir(root: &Path, cfg: &ScenarioConfig) -> PathBuf {
    root.join(format!("{}-seed{}", cfg.config_id, cfg.seed))
}

impl SimulationOutput {
    /// Writes `kpm.csv`, `summary.csv`, `ris_gains.csv`, `scenario.toml` and,
    /// if recorded, `trace.csv` into `dir`. Returns the written paths.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let kpm = dir.join("kpm.csv");
        write_kpm_csv(&kpm, &self.records)?;
        let summary = dir.join("summary.csv");
        write_summary_csv(&summary, &self.summary)?;
        let gains = dir.join("ris_gains.csv");
        write_csv(
            &gains,
            &RIS_GAINS_HEADER,
            self.ris_gains.iter().map(|r| {
                vec![
                    r.ue_id.to_string(),
                    r.slice.to_string(),
                    format_sig6(r.gain_no_ris_db),
                    format_sig6(r.gain_ris_db),
                    format_sig6(r.snr_db),
                    r.cqi.to_string(),
                    r.mcs.to_string(),
                ]
            }),
        )?;
        let scenario = dir.join("scenario.toml");
        std::fs::write(&scenario, self.config.to_toml()).map_err(|e| Error::io(&scenario, e))?;
        let mut written = vec![kpm, summary, gains, scenario];
        if !self.trace.is_empty() {
            let path = dir.join("trace.csv");
            write_csv(
                &path,
                &TRACE_HEADER,
                self.trace.iter().map(|r| {
                    vec![
                        r.tti.to_string(),
                        r.slice.to_string(),
                        r.ue_id.to_string(),
                        r.granted_prbs.to_string(),
                        r.requested_prbs.to_string(),
                        r.mcs.to_string(),
                        r.served_bytes.to_string(),
                    ]
                }),
            )?;
            written.push(path);
        }
        Ok(written)
    }

    /// Median of one summary metric for `slice`, if present.
    pub fn median(&self, slice: Slice, metric: Metric) -> Option<f64> {
        self.summary
            .iter()
            .find(|r| r.slice == slice && r.metric == metric)
            .map(|r| r.stats.median)
    }
}

/// Per-config medians across seeds of each run's per-slice metric medians.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub config_ids: Vec<String>,
    pub seeds: Vec<u64>,
    /// `(config_id, slice, metric)` → median over seeds.
    pub medians: BTreeMap<(String, Slice, Metric), f64>,
}

impl Comparison {
    pub fn median(&self, config_id: &str, slice: Slice, metric: Metric) -> Option<f64> {
        self.medians
            .get(&(config_id.to_string(), slice, metric))
            .copied()
    }

    /// `(b − a) / |a| × 100`; `None` if either value is missing or `a = 0`
    /// while `b ≠ 0`. Equal values give 0.
    pub fn delta_percent(&self, a: &str, b: &str, slice: Slice, metric: Metric) -> Option<f64> {
        let (x, y) = (self.median(a, slice, metric)?, self.median(b, slice, metric)?);
        if x == y {
            Some(0.0)
        } else if x == 0.0 {
            None
        } else {
            Some((y - x) / x.abs() * 100.0)
        }
    }

    /// Rows `config_id,slice,metric,median` followed by pairwise deltas.
    pub fn table(&self) -> Vec<Vec<String>> {
        let mut rows = Vec::new();
        for ((id, slice, metric), v) in &self.medians {
            rows.push(vec![id.clone(), slice.to_string(), metric.as_str().into(), format_sig6(*v), String::new()]);
        }
        for (i, a) in self.config_ids.iter().enumerate() {
            for b in &self.config_ids[i + 1..] {
                for slice in Slice::ALL {
                    for metric in Metric::ALL {
                        if let Some(d) = self.delta_percent(a, b, slice, metric) {
                            rows.push(vec![
                                format!("{b} vs {a}"),
                                slice.to_string(),
                                metric.as_str().into(),
                                String::new(),
                                format_sig6(d),
                            ]);
                        }
                    }
                }
            }
        }
        rows
    }
}

pub const COMPARISON_HEADER: [&str; 5] = ["config", "slice", "metric", "median", "delta_percent"];

/// Runs every (config, seed) pair in parallel and reduces to medians.
pub fn compare(configs: &[ScenarioConfig], seeds: &[u64]) -> Result<Comparison> {
    use rayon::prelude::*;

    if seeds.is_empty() {
        return Err(Error::invalid("compare needs at least one seed"));
    }
    let jobs: Vec<ScenarioConfig> = configs
        .iter()
        .flat_map(|c| seeds.iter().map(move |&s| c.clone().with_seed(s)))
        .collect();
    let summaries = jobs
        .par_iter()
        .map(|cfg| simulate(cfg, RunOptions::default()).map(|o| o.summary))
        .collect::<Result<Vec<_>>>()?;

    let mut samples: BTreeMap<(String, Slice, Metric), Vec<f64>> = BTreeMap::new();
    for row in summaries.into_iter().flatten() {
        samples
            .entry((row.config_id, row.slice, row.metric))
            .or_default()
            .push(row.stats.median);
    }
    let medians = samples
        .into_iter()
        .filter_map(|(k, v)| Some((k, Stats::from_samples(&v)?.median)))
        .collect();
    Ok(Comparison {
        config_ids: configs.iter().map(|c| c.config_id.clone()).collect(),
        seeds: seeds.to_vec(),
        medians,
    })
}
