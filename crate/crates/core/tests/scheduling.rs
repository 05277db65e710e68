//! Scheduler, traffic and end-to-end simulation properties.

mod common;

use std::collections::BTreeMap;

use risran_core::mac::{MacState, SchedulingPolicy, SlicingConfig, UeContext};
use risran_core::scenario::ScenarioConfig;
use risran_core::sim::{simulate, RunOptions};
use risran_core::traffic::{
    cbr_bytes_until, TrafficGenerator, TrafficKind, TrafficProfile, URLLC_RATE_BPS,
};
use risran_core::Slice;

const FULL: u64 = 1 << 40;

fn mac(snrs: &[f64], quota: u32, policy: SchedulingPolicy) -> MacState {
    let ues = snrs
        .iter()
        .enumerate()
        .map(|(i, &snr)| {
            let mut ue = UeContext::new(i as u32 + 1, Slice::Embb, common::gain_for(snr), &common::BUDGET).unwrap();
            ue.buffer.enqueue(FULL);
            ue
        })
        .collect();
    MacState::new(ues, SlicingConfig::new(quota, 0).unwrap(), common::same_policy(policy)).unwrap()
}

#[test]
fn round_robin_totals_differ_by_at_most_one() {
    for n in 1..=5usize {
        for quota in [1u32, 3, 7, 18, 25, 50] {
            let mut m = mac(&vec![15.0; n], quota, SchedulingPolicy::RoundRobin);
            let mut totals = vec![0u32; n];
            for k in 1..=40u32 {
                let a = m.run_tti().unwrap();
                a.check_invariants().unwrap();
                for (id, g) in &a.grants {
                    totals[*id as usize - 1] += g.granted_prbs;
                }
                let (lo, hi) = (totals.iter().min().unwrap(), totals.iter().max().unwrap());
                assert!(hi - lo <= 1, "n={n} quota={quota} after {k} TTIs: {totals:?}");
                assert_eq!(totals.iter().sum::<u32>(), quota * k);
            }
        }
    }
}

#[test]
fn proportional_fair_never_starves() {
    let mut m = mac(&[25.0, -4.0, 8.0], 2, SchedulingPolicy::ProportionalFair);
    let mut last = BTreeMap::from([(1u32, 0u64), (2, 0), (3, 0)]);
    let mut worst_gap = 0;
    for t in 1..=20_000u64 {
        let a = m.run_tti().unwrap();
        for (id, g) in &a.grants {
            if g.granted_prbs > 0 {
                worst_gap = worst_gap.max(t - last[id]);
                last.insert(*id, t);
            }
        }
    }
    for (id, t) in &last {
        worst_gap = worst_gap.max(20_000 - t);
        assert!(*t > 19_000, "UE {id} last served at TTI {t}");
    }
    assert!(worst_gap < 10_000, "longest service gap {worst_gap} TTIs");
}

#[test]
fn water_filling_favours_the_stronger_link() {
    let mut m = mac(&[20.0, 0.0], 10, SchedulingPolicy::WaterFilling);
    let a = m.run_tti().unwrap();
    assert!(a.grants[&1].granted_prbs >= 5);
    assert_eq!(a.grants[&1].granted_prbs + a.grants[&2].granted_prbs, 10);
}

#[test]
fn cbr_is_exact_per_second() {
    assert_eq!(cbr_bytes_until(4e6, 1000), 500_000);
    let mut g = TrafficGenerator::new(TrafficProfile::new(TrafficKind::ConstantBitrate, 4e6).unwrap(), 1);
    let total: u64 = (0..10_000).map(|t| g.arrivals(t).unwrap()).sum();
    assert_eq!(total, 5_000_000);
}

#[test]
fn poisson_mean_matches_rate() {
    let profile = TrafficProfile::new(TrafficKind::Poisson, URLLC_RATE_BPS).unwrap();
    let mut g = TrafficGenerator::new(profile, 77);
    for t in 0..1_000_000 {
        g.arrivals(t).unwrap();
    }
    let per_second = g.total_bytes() as f64 / 1000.0;
    let want = URLLC_RATE_BPS / 8.0;
    assert!((per_second / want - 1.0).abs() < 0.02, "{per_second} vs {want}");
}

#[test]
fn simulated_trace_respects_quotas_and_backlog() {
    for id in ["V", "VIII"] {
        let cfg = ScenarioConfig::catalog(id).unwrap().with_duration(3).with_seed(4);
        let out = simulate(&cfg, RunOptions { record_trace: true }).unwrap();
        assert_eq!(out.trace.len(), 3000 * 5);
        let slicing = cfg.slicing().unwrap();
        let mut per_tti: BTreeMap<(u64, Slice), u32> = BTreeMap::new();
        for row in &out.trace {
            assert!(row.granted_prbs <= row.requested_prbs);
            *per_tti.entry((row.tti, row.slice)).or_default() += row.granted_prbs;
        }
        for ((_, slice), granted) in per_tti {
            assert!(granted <= slicing.quota(slice));
        }
        let served: u64 = out.trace.iter().map(|r| r.served_bytes).sum();
        let throughput_bits: f64 = out.records.iter().map(|r| r.throughput_bps * 0.1).sum();
        assert!((served as f64 * 8.0 - throughput_bits).abs() < 1e-3 * throughput_bits.max(1.0));
    }
}

#[test]
fn xapp_cycles_all_nine_pairs_in_nine_seconds() {
    let cfg = ScenarioConfig::catalog("VII").unwrap().with_duration(9);
    let out = simulate(&cfg, RunOptions::default()).unwrap();
    let pairs: std::collections::BTreeSet<_> = out
        .applied_controls
        .iter()
        .map(|c| (c.request.policies[&Slice::Embb], c.request.policies[&Slice::Urllc]))
        .collect();
    assert_eq!(pairs.len(), 9);
    for (c, (sent_ms, corr, _)) in out.applied_controls.iter().zip(&out.sent_controls) {
        assert_eq!(c.correlation_id, *corr);
        assert_eq!(c.effective_tti, sent_ms + 1);
    }
}

#[test]
fn ris_never_hurts_the_aggregate_gain() {
    for seed in 1..=5 {
        for (without, with) in [("I", "II"), ("III", "IV"), ("V", "VI"), ("VII", "VIII")] {
            let a = risran_core::sim::link_state(&ScenarioConfig::catalog(without).unwrap().with_seed(seed)).unwrap();
            let b = risran_core::sim::link_state(&ScenarioConfig::catalog(with).unwrap().with_seed(seed)).unwrap();
            let sa: f64 = a.gains.values().sum();
            let sb: f64 = b.gains.values().sum();
            assert!(sb >= sa * (1.0 - 1e-12), "{with} seed {seed}: {sb} < {sa}");
        }
    }
}
