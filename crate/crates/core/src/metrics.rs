//! KPM windows, evaluation metrics and CSV export.

use std::collections::BTreeMap;
use std::path::Path;

use crate::channel::csv_error;
use crate::mac::{Slice, TtiAllocation, TTI_SECONDS};
use crate::{Error, Result};

pub const DEFAULT_KPM_PERIOD_MS: u32 = 100;

pub const KPM_HEADER: [&str; 9] = [
    "timestamp_ms",
    "ue_id",
    "slice",
    "throughput_bps",
    "buffer_bytes",
    "cqi",
    "mcs",
    "granted_prbs",
    "requested_prbs",
];
pub const SUMMARY_HEADER: [&str; 7] = ["config_id", "slice", "metric", "median", "p25", "p75", "mean"];

/// One UE's measurements over one KPM window ending at `timestamp_ms`.
#[derive(Debug, Clone, PartialEq)]
pub struct KpmRecord {
    pub timestamp_ms: u64,
    pub ue_id: u32,
    pub slice: Slice,
    /// Served bits over the window divided by the window length.
    pub throughput_bps: f64,
    /// Backlog at the end of the window.
    pub buffer_bytes: u64,
    pub cqi: u8,
    pub mcs: u8,
    /// PRBs granted over the window.
    pub granted_prbs: u32,
    /// Quota-capped PRBs requested over the window.
    pub requested_prbs: u32,
}

/// `granted / requested`, with an idle slice (0/0) counted as fully served.
pub fn prb_ratio(granted_sum: u64, requested_sum: u64) -> Result<f64> {
    if granted_sum > requested_sum {
        return Err(Error::ContractViolation(format!(
            "granted {granted_sum} PRBs exceeds requested {requested_sum}"
        )));
    }
    if requested_sum == 0 {
        return Ok(1.0);
    }
    Ok(granted_sum as f64 / requested_sum as f64)
}

#[derive(Debug, Default, Clone)]
struct UeWindow {
    slice: Option<Slice>,
    served_bytes: u64,
    granted: u32,
    requested: u32,
    buffer: u64,
    cqi: u8,
    mcs: u8,
}

/// Folds per-TTI allocations into fixed-length KPM windows.
#[derive(Debug, Clone)]
pub struct KpmCollector {
    period_ms: u32,
    window_start_ms: u64,
    ues: BTreeMap<u32, UeWindow>,
}

impl KpmCollector {
    pub fn new(period_ms: u32) -> Result<Self> {
        if period_ms == 0 {
            return Err(Error::invalid("KPM period must be at least 1 ms"));
        }
        Ok(Self {
            period_ms,
            window_start_ms: 0,
            ues: BTreeMap::new(),
        })
    }

    pub fn period_ms(&self) -> u32 {
        self.period_ms
    }

    /// Adds one TTI (ending at `tti_index + 1` ms). Returns the window's
    /// records when the TTI closes a window.
    pub fn observe(&mut self, allocation: &TtiAllocation) -> Vec<KpmRecord> {
        for g in allocation.grants.values() {
            let w = self.ues.entry(g.ue_id).or_default();
            w.slice = Some(g.slice);
            w.served_bytes += g.served_bytes;
            w.granted += g.granted_prbs;
            w.requested += g.requested_prbs;
            w.buffer = g.buffer_bytes;
            w.cqi = g.cqi;
            w.mcs = g.mcs;
        }
        let end = allocation.tti_index + 1;
        if end % u64::from(self.period_ms) == 0 {
            self.flush(end)
        } else {
            Vec::new()
        }
    }

    /// Emits a final partial window ending at `end_ms`, if any TTIs are
    /// pending.
    pub fn finish(&mut self, end_ms: u64) -> Vec<KpmRecord> {
        if end_ms > self.window_start_ms {
            self.flush(end_ms)
        } else {
            Vec::new()
        }
    }

    fn flush(&mut self, end_ms: u64) -> Vec<KpmRecord> {
        let seconds = (end_ms - self.window_start_ms) as f64 * TTI_SECONDS;
        self.window_start_ms = end_ms;
        std::mem::take(&mut self.ues)
            .into_iter()
            .filter_map(|(ue_id, w)| {
                Some(KpmRecord {
                    timestamp_ms: end_ms,
                    ue_id,
                    slice: w.slice?,
                    throughput_bps: w.served_bytes as f64 * 8.0 / seconds,
                    buffer_bytes: w.buffer,
                    cqi: w.cqi,
                    mcs: w.mcs,
                    granted_prbs: w.granted,
                    requested_prbs: w.requested,
                })
            })
            .collect()
    }
}

/// Lower-interpolation quantile `s[floor((n−1)q)]` of sorted samples.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() || !(0.0..=1.0).contains(&q) {
        return None;
    }
    let idx = ((sorted.len() - 1) as f64 * q).floor() as usize;
    Some(sorted[idx])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stats {
    pub median: f64,
    pub p25: f64,
    pub p75: f64,
    pub mean: f64,
}

impl Stats {
    /// `None` for an empty sample.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        let mut s = samples.to_vec();
        s.sort_by(f64::total_cmp);
        Some(Self {
            median: quantile(&s, 0.5)?,
            p25: quantile(&s, 0.25)?,
            p75: quantile(&s, 0.75)?,
            mean: s.iter().sum::<f64>() / s.len() as f64,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Metric {
    ThroughputBps,
    BufferBytes,
    Cqi,
    Mcs,
    PrbRatio,
}

impl Metric {
    pub const ALL: [Metric; 5] = [
        Metric::ThroughputBps,
        Metric::BufferBytes,
        Metric::Cqi,
        Metric::Mcs,
        Metric::PrbRatio,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Metric::ThroughputBps => "throughput_bps",
            Metric::BufferBytes => "buffer_bytes",
            Metric::Cqi => "cqi",
            Metric::Mcs => "mcs",
            Metric::PrbRatio => "prb_ratio",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub config_id: String,
    pub slice: Slice,
    pub metric: Metric,
    pub stats: Stats,
}

/// Per-slice samples of every metric. UE metrics take one sample per
/// (UE, window); the PRB ratio takes one sample per window from the slice's
/// summed grants and requests.
pub fn slice_samples(records: &[KpmRecord]) -> Result<BTreeMap<(Slice, Metric), Vec<f64>>> {
    let mut out: BTreeMap<(Slice, Metric), Vec<f64>> = BTreeMap::new();
    let mut windows: BTreeMap<(Slice, u64), (u64, u64)> = BTreeMap::new();
    for r in records {
        let mut push = |m, v| out.entry((r.slice, m)).or_default().push(v);
        push(Metric::ThroughputBps, r.throughput_bps);
        push(Metric::BufferBytes, r.buffer_bytes as f64);
        push(Metric::Cqi, f64::from(r.cqi));
        push(Metric::Mcs, f64::from(r.mcs));
        let w = windows.entry((r.slice, r.timestamp_ms)).or_default();
        w.0 += u64::from(r.granted_prbs);
        w.1 += u64::from(r.requested_prbs);
    }
    for ((slice, _), (granted, requested)) in windows {
        out.entry((slice, Metric::PrbRatio))
            .or_default()
            .push(prb_ratio(granted, requested)?);
    }
    Ok(out)
}

/// Summary rows per slice and metric; slices without records are omitted.
/// The result does not depend on record order.
pub fn summarize(config_id: &str, records: &[KpmRecord]) -> Result<Vec<SummaryRow>> {
    Ok(slice_samples(records)?
        .into_iter()
        .filter_map(|((slice, metric), samples)| {
            Some(SummaryRow {
                config_id: config_id.to_string(),
                slice,
                metric,
                stats: Stats::from_samples(&samples)?,
            })
        })
        .collect())
}

/// Formats with 6 significant digits, dropping trailing zeros.
pub fn format_sig6(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    rounded.to_string()
}

/// Writes a header then `rows` to `path`.
pub fn write_csv<I>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = Vec<String>>,
{
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_kpm_csv(path: &Path, records: &[KpmRecord]) -> Result<()> {
    write_csv(
        path,
        &KPM_HEADER,
        records.iter().map(|r| {
            vec![
                r.timestamp_ms.to_string(),
                r.ue_id.to_string(),
                r.slice.to_string(),
                format_sig6(r.throughput_bps),
                r.buffer_bytes.to_string(),
                r.cqi.to_string(),
                r.mcs.to_string(),
                r.granted_prbs.to_string(),
                r.requested_prbs.to_string(),
            ]
        }),
    )
}

pub fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    write_csv(
        path,
        &SUMMARY_HEADER,
        rows.iter().map(|r| {
            vec![
                r.config_id.clone(),
                r.slice.to_string(),
                r.metric.as_str().to_string(),
                format_sig6(r.stats.median),
                format_sig6(r.stats.p25),
                format_sig6(r.stats.p75),
                format_sig6(r.stats.mean),
            ]
        }),
    )
}

/// Parses a KPM CSV written by [`write_kpm_csv`].
pub fn read_kpm_csv(path: &Path) -> Result<Vec<KpmRecord>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let bad = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    let mut out = Vec::new();
    for row in r.records() {
        let row = row.map_err(|e| csv_error(path, e))?;
        if row.len() != KPM_HEADER.len() {
            return Err(bad(format!("expected {} columns, found {}", KPM_HEADER.len(), row.len())));
        }
        let field = |i: usize| row[i].to_string();
        macro_rules! num {
            ($i:expr) => {
                field($i)
                    .parse()
                    .map_err(|e| bad(format!("column {}: {e}", KPM_HEADER[$i])))?
            };
        }
        out.push(KpmRecord {
            timestamp_ms: num!(0),
            ue_id: num!(1),
            slice: field(2).parse().map_err(|e: Error| bad(e.to_string()))?,
            throughput_bps: num!(3),
            buffer_bytes: num!(4),
            cqi: num!(5),
            mcs: num!(6),
            granted_prbs: num!(7),
            requested_prbs: num!(8),
        });
    }
    Ok(out)
}
