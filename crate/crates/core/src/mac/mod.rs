//! TTI-stepped MAC: link adaptation, slice PRB quotas and intra-slice
//! scheduling.

mod link;
mod sched;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

pub use link::{
    cqi_from_snr, cqi_threshold_db, mcs_from_cqi, snr_from_gain, spectral_efficiency, tbs,
    DATA_SHARE, MAX_CQI, MAX_MCS, MCS_TABLE, NOISE_FIGURE_DB, PRB_BANDWIDTH_HZ,
    SYSTEM_BANDWIDTH_HZ, THERMAL_NOISE_DBM_PER_HZ, TOTAL_PRBS, TTI_SECONDS,
};
pub use sched::{
    schedule, schedule_pf, schedule_rr, schedule_wf, update_ewma, Grants, SchedUe, PF_ALPHA,
    PF_EWMA_FLOOR,
};

use crate::traffic::RlcBuffer;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Slice {
    Embb,
    Urllc,
}

impl Slice {
    pub const ALL: [Slice; 2] = [Slice::Embb, Slice::Urllc];

    /// Wire code used by the E2 protocol.
    pub fn code(self) -> u8 {
        match self {
            Slice::Embb => 0,
            Slice::Urllc => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Slice::Embb),
            1 => Some(Slice::Urllc),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Slice::Embb => "eMBB",
            Slice::Urllc => "URLLC",
        }
    }
}

impl fmt::Display for Slice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Slice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "embb" => Ok(Slice::Embb),
            "urllc" => Ok(Slice::Urllc),
            _ => Err(Error::invalid(format!("unknown slice {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SchedulingPolicy {
    RoundRobin,
    WaterFilling,
    ProportionalFair,
}

impl SchedulingPolicy {
    /// In cycle order RR < WF < PF.
    pub const ALL: [SchedulingPolicy; 3] = [
        SchedulingPolicy::RoundRobin,
        SchedulingPolicy::WaterFilling,
        SchedulingPolicy::ProportionalFair,
    ];

    pub fn code(self) -> u8 {
        match self {
            SchedulingPolicy::RoundRobin => 0,
            SchedulingPolicy::WaterFilling => 1,
            SchedulingPolicy::ProportionalFair => 2,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code)).copied()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulingPolicy::RoundRobin => "RR",
            SchedulingPolicy::WaterFilling => "WF",
            SchedulingPolicy::ProportionalFair => "PF",
        }
    }
}

impl fmt::Display for SchedulingPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulingPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "RR" => Ok(SchedulingPolicy::RoundRobin),
            "WF" => Ok(SchedulingPolicy::WaterFilling),
            "PF" => Ok(SchedulingPolicy::ProportionalFair),
            _ => Err(Error::invalid(format!("unknown scheduling policy {s:?}"))),
        }
    }
}

/// Per-slice PRB quotas out of the 50-PRB carrier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlicingConfig {
    quotas: BTreeMap<Slice, u32>,
}

impl SlicingConfig {
    pub fn new(embb: u32, urllc: u32) -> Result<Self> {
        if embb + urllc > TOTAL_PRBS {
            return Err(Error::invalid(format!(
                "slice quotas {embb} + {urllc} exceed {TOTAL_PRBS} PRBs"
            )));
        }
        Ok(Self {
            quotas: BTreeMap::from([(Slice::Embb, embb), (Slice::Urllc, urllc)]),
        })
    }

    pub fn quota(&self, slice: Slice) -> u32 {
        self.quotas[&slice]
    }
}

/// Transmit side of the link budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_bandwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UeContext {
    pub ue_id: u32,
    pub slice: Slice,
    /// Linear overall channel power gain.
    pub channel_power_gain: f64,
    pub snr_db: f64,
    pub cqi: u8,
    pub mcs: u8,
    /// PF throughput average, bit/s.
    pub ewma_throughput_bps: f64,
    pub buffer: RlcBuffer,
}

impl UeContext {
    pub fn new(ue_id: u32, slice: Slice, gain: f64, budget: &LinkBudget) -> Result<Self> {
        let snr_db = snr_from_gain(gain, budget.tx_power_dbm, budget.noise_bandwidth_hz)?;
        let cqi = cqi_from_snr(snr_db);
        Ok(Self {
            ue_id,
            slice,
            channel_power_gain: gain,
            snr_db,
            cqi,
            mcs: mcs_from_cqi(cqi)?,
            ewma_throughput_bps: PF_EWMA_FLOOR,
            buffer: RlcBuffer::new(),
        })
    }

    /// Bytes carried by one PRB at the current MCS. CQI 0 still maps to
    /// MCS 0, so even the weakest link carries a few bytes per PRB.
    pub fn bytes_per_prb(&self) -> u64 {
        tbs(self.mcs, 1).expect("MCS from table")
    }

    /// PRBs needed to empty the buffer at the current MCS.
    pub fn demand_prbs(&self) -> u32 {
        let per = self.bytes_per_prb();
        u32::try_from(self.buffer.queued_bytes().div_ceil(per)).unwrap_or(u32::MAX)
    }
}

/// Outcome of one TTI for one UE.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UeGrant {
    pub ue_id: u32,
    pub slice: Slice,
    pub granted_prbs: u32,
    /// Demand capped at the slice quota.
    pub requested_prbs: u32,
    /// Raw backlog demand.
    pub demand_prbs: u32,
    pub served_bytes: u64,
    pub cqi: u8,
    pub mcs: u8,
    /// Backlog after service.
    pub buffer_bytes: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SliceTotals {
    pub quota: u32,
    pub requested_prbs: u32,
    pub demand_prbs: u32,
    pub granted_prbs: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TtiAllocation {
    pub tti_index: u64,
    pub grants: BTreeMap<u32, UeGrant>,
    pub slices: BTreeMap<Slice, SliceTotals>,
}

impl TtiAllocation {
    /// Conservation checks: per-slice grants within quota and within
    /// requests, and no more than the carrier's PRBs in total.
    pub fn check_invariants(&self) -> Result<()> {
        let mut total = 0;
        for (slice, t) in &self.slices {
            let sum: u32 = self
                .grants
                .values()
                .filter(|g| g.slice == *slice)
                .map(|g| g.granted_prbs)
                .sum();
            if sum != t.granted_prbs || sum > t.quota || sum > t.requested_prbs {
                return Err(Error::ContractViolation(format!(
                    "TTI {}: {slice} granted {sum} (quota {}, requested {})",
                    self.tti_index, t.quota, t.requested_prbs
                )));
            }
            total += sum;
        }
        if total > TOTAL_PRBS {
            return Err(Error::ContractViolation(format!(
                "TTI {}: {total} PRBs granted",
                self.tti_index
            )));
        }
        Ok(())
    }
}

/// Full RAN-side MAC state.
#[derive(Debug, Clone)]
pub struct MacState {
    ues: Vec<UeContext>,
    slicing: SlicingConfig,
    policies: BTreeMap<Slice, SchedulingPolicy>,
    cursors: BTreeMap<Slice, usize>,
    tti: u64,
}

impl MacState {
    pub fn new(
        mut ues: Vec<UeContext>,
        slicing: SlicingConfig,
        policies: BTreeMap<Slice, SchedulingPolicy>,
    ) -> Result<Self> {
        ues.sort_by_key(|u| u.ue_id);
        if ues.windows(2).any(|w| w[0].ue_id == w[1].ue_id) {
            return Err(Error::invalid("duplicate UE id"));
        }
        if let Some(s) = Slice::ALL.iter().find(|s| !policies.contains_key(s)) {
            return Err(Error::invalid(format!("no scheduling policy for {s}")));
        }
        Ok(Self {
            ues,
            slicing,
            policies,
            cursors: Slice::ALL.iter().map(|&s| (s, 0)).collect(),
            tti: 0,
        })
    }

    pub fn ues(&self) -> &[UeContext] {
        &self.ues
    }

    pub fn ue_mut(&mut self, ue_id: u32) -> Option<&mut UeContext> {
        self.ues.iter_mut().find(|u| u.ue_id == ue_id)
    }

    pub fn slicing(&self) -> &SlicingConfig {
        &self.slicing
    }

    pub fn policies(&self) -> &BTreeMap<Slice, SchedulingPolicy> {
        &self.policies
    }

    pub fn set_policy(&mut self, slice: Slice, policy: SchedulingPolicy) {
        self.policies.insert(slice, policy);
    }

    /// Index of the next TTI to run.
    pub fn tti(&self) -> u64 {
        self.tti
    }

    /// Schedules one TTI on the current buffers and drains what was served.
    pub fn run_tti(&mut self) -> Result<TtiAllocation> {
        let mut grants = BTreeMap::new();
        let mut slices = BTreeMap::new();
        for slice in Slice::ALL {
            let quota = self.slicing.quota(slice);
            let members: Vec<usize> = (0..self.ues.len())
                .filter(|&i| self.ues[i].slice == slice)
                .collect();
            let view: Vec<SchedUe> = members
                .iter()
                .map(|&i| {
                    let u = &self.ues[i];
                    SchedUe {
                        ue_id: u.ue_id,
                        demand: u.demand_prbs().min(quota),
                        snr_linear: 10f64.powf(u.snr_db / 10.0),
                        rate_bps: u.bytes_per_prb() as f64 * 8.0 / TTI_SECONDS,
                        ewma_bps: u.ewma_throughput_bps,
                    }
                })
                .collect();
            let cursor = self.cursors[&slice];
            let (slice_grants, cursor) = schedule(self.policies[&slice], &view, quota, cursor);
            self.cursors.insert(slice, cursor);

            let mut totals = SliceTotals {
                quota,
                ..SliceTotals::default()
            };
            for (&i, v) in members.iter().zip(&view) {
                let u = &mut self.ues[i];
                let granted = slice_grants[&u.ue_id];
                let demand = u.demand_prbs();
                let capacity = u.bytes_per_prb() * u64::from(granted);
                let served = capacity.min(u.buffer.queued_bytes());
                u.buffer.drain(served)?;
                u.ewma_throughput_bps = update_ewma(u.ewma_throughput_bps, served as f64 * 8.0 / TTI_SECONDS);
                totals.requested_prbs += v.demand;
                totals.demand_prbs = totals.demand_prbs.saturating_add(demand);
                totals.granted_prbs += granted;
                grants.insert(
                    u.ue_id,
                    UeGrant {
                        ue_id: u.ue_id,
                        slice,
                        granted_prbs: granted,
                        requested_prbs: v.demand,
                        demand_prbs: demand,
                        served_bytes: served,
                        cqi: u.cqi,
                        mcs: u.mcs,
                        buffer_bytes: u.buffer.queued_bytes(),
                    },
                );
            }
            slices.insert(slice, totals);
        }
        let allocation = TtiAllocation {
            tti_index: self.tti,
            grants,
            slices,
        };
        self.tti += 1;
        Ok(allocation)
    }
}
