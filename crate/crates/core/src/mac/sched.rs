//! Intra-slice PRB schedulers. Every scheduler hands out PRBs one at a time
//! and never grants a UE more than its demand, so leftover PRBs stay idle.

use std::collections::BTreeMap;

use super::SchedulingPolicy;

/// PF throughput average smoothing factor.
pub const PF_ALPHA: f64 = 0.01;
/// Floor on the PF average (bit/s) to avoid dividing by zero.
pub const PF_EWMA_FLOOR: f64 = 1.0;

/// Scheduler view of one UE for one TTI.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedUe {
    pub ue_id: u32,
    /// PRBs needed to empty the buffer, capped at the slice quota.
    pub demand: u32,
    pub snr_linear: f64,
    /// Instantaneous per-PRB rate in bit/s.
    pub rate_bps: f64,
    pub ewma_bps: f64,
}

pub type Grants = BTreeMap<u32, u32>;

fn empty_grants(ues: &[SchedUe]) -> Grants {
    ues.iter().map(|u| (u.ue_id, 0)).collect()
}

/// Round robin. `cursor` is the position in `ues` where dealing starts; the
/// returned cursor points just past the last UE served (unchanged if nothing
/// was dealt).
pub fn schedule_rr(ues: &[SchedUe], quota: u32, cursor: usize) -> (Grants, usize) {
    let mut grants = empty_grants(ues);
    let n = ues.len();
    if n == 0 {
        return (grants, 0);
    }
    let mut remaining: Vec<u32> = ues.iter().map(|u| u.demand).collect();
    let mut pos = cursor % n;
    let mut next_cursor = pos;
    let mut left = quota;
    while left > 0 && remaining.iter().any(|&r| r > 0) {
        if remaining[pos] > 0 {
            remaining[pos] -= 1;
            *grants.get_mut(&ues[pos].ue_id).expect("ue present") += 1;
            left -= 1;
            next_cursor = (pos + 1) % n;
        }
        pos = (pos + 1) % n;
    }
    (grants, next_cursor)
}

/// Greedy water-filling: each PRB goes to the UE with the largest marginal
/// gain in `log(1 + n·snr)`, `n` being its PRB count so far. Ties go to the
/// lowest UE id.
pub fn schedule_wf(ues: &[SchedUe], quota: u32) -> Grants {
    let mut grants = empty_grants(ues);
    for _ in 0..quota {
        let mut best: Option<(f64, u32)> = None;
        for u in ues {
            let n = f64::from(grants[&u.ue_id]);
            if grants[&u.ue_id] >= u.demand {
                continue;
            }
            let marginal = (1.0 + (n + 1.0) * u.snr_linear).ln() - (1.0 + n * u.snr_linear).ln();
            if best.is_none_or(|(b, id)| marginal > b || (marginal == b && u.ue_id < id)) {
                best = Some((marginal, u.ue_id));
            }
        }
        match best {
            Some((_, id)) => *grants.get_mut(&id).expect("ue present") += 1,
            None => break,
        }
    }
    grants
}

/// Proportional fair: each PRB goes to the UE maximising
/// `rate / ewma`, ties to the lowest UE id.
pub fn schedule_pf(ues: &[SchedUe], quota: u32) -> Grants {
    let mut grants = empty_grants(ues);
    for _ in 0..quota {
        let mut best: Option<(f64, u32)> = None;
        for u in ues {
            if grants[&u.ue_id] >= u.demand {
                continue;
            }
            let metric = u.rate_bps / u.ewma_bps.max(PF_EWMA_FLOOR);
            if best.is_none_or(|(b, id)| metric > b || (metric == b && u.ue_id < id)) {
                best = Some((metric, u.ue_id));
            }
        }
        match best {
            Some((_, id)) => *grants.get_mut(&id).expect("ue present") += 1,
            None => break,
        }
    }
    grants
}

/// `T̄ ← (1−α)T̄ + α·served`, floored at [`PF_EWMA_FLOOR`].
pub fn update_ewma(ewma_bps: f64, served_bps: f64) -> f64 {
    ((1.0 - PF_ALPHA) * ewma_bps + PF_ALPHA * served_bps).max(PF_EWMA_FLOOR)
}

/// Dispatches to the scheduler for `policy`. The RR cursor is only moved by
/// the RR scheduler.
pub fn schedule(policy: SchedulingPolicy, ues: &[SchedUe], quota: u32, cursor: usize) -> (Grants, usize) {
    match policy {
        SchedulingPolicy::RoundRobin => schedule_rr(ues, quota, cursor),
        SchedulingPolicy::WaterFilling => (schedule_wf(ues, quota), cursor),
        SchedulingPolicy::ProportionalFair => (schedule_pf(ues, quota), cursor),
    }
}
