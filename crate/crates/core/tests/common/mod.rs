//! Helpers shared by the integration tests and the acceptance runner.
#![allow(dead_code)]

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use risran_core::channel::{ChannelSet, UeChannel};
use risran_core::e2::{AckStatus, ControlRequest, E2Message, Payload, Subscription};
use risran_core::mac::SchedulingPolicy;
use risran_core::metrics::KpmRecord;
use risran_core::Slice;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn complex(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random channel set with `ues` UEs and `elements` RIS elements.
pub fn channels(rng: &mut impl Rng, ues: usize, elements: usize) -> ChannelSet {
    ChannelSet {
        ris_to_bs: (0..elements).map(|_| complex(rng)).collect(),
        ues: (0..ues)
            .map(|i| UeChannel {
                ue_id: i as u32 + 1,
                direct: complex(rng),
                ue_to_ris: (0..elements).map(|_| complex(rng)).collect(),
            })
            .collect(),
    }
}

fn slice(rng: &mut impl Rng) -> Slice {
    Slice::ALL[rng.random_range(0..Slice::ALL.len())]
}

fn policy(rng: &mut impl Rng) -> SchedulingPolicy {
    SchedulingPolicy::ALL[rng.random_range(0..SchedulingPolicy::ALL.len())]
}

pub fn record(rng: &mut impl Rng) -> KpmRecord {
    KpmRecord {
        timestamp_ms: rng.random(),
        ue_id: rng.random(),
        slice: slice(rng),
        throughput_bps: rng.random_range(0.0..1e9),
        buffer_bytes: rng.random(),
        cqi: rng.random_range(0..=15),
        mcs: rng.random_range(0..=28),
        granted_prbs: rng.random(),
        requested_prbs: rng.random(),
    }
}

/// Message of type `kind` (0..5 in wire order) with random content.
pub fn message(rng: &mut impl Rng, kind: usize) -> E2Message {
    let payload = match kind {
        0 => Payload::SubscriptionRequest(Subscription {
            kpm_period_ms: rng.random(),
            slice_filter: rng.random_bool(0.5).then(|| slice(rng)),
        }),
        1 => Payload::SubscriptionResponse {
            status: rng.random(),
        },
        2 => {
            let n = rng.random_range(0..12);
            Payload::Indication {
                window_end_ms: rng.random(),
                records: (0..n).map(|_| record(rng)).collect(),
            }
        }
        3 => {
            let mut policies = BTreeMap::new();
            for s in Slice::ALL {
                if rng.random_bool(0.8) {
                    policies.insert(s, policy(rng));
                }
            }
            Payload::ControlRequest(ControlRequest { policies })
        }
        _ => Payload::ControlAck(
            [AckStatus::Ok, AckStatus::UnknownSlice, AckStatus::Malformed][rng.random_range(0..3)],
        ),
    };
    E2Message::new(rng.random(), payload)
}

use risran_core::mac::{LinkBudget, SYSTEM_BANDWIDTH_HZ};

/// 0 dBm over the full carrier: SNR = 97 dB + 10·log10(gain).
pub const BUDGET: LinkBudget = LinkBudget {
    tx_power_dbm: 0.0,
    noise_bandwidth_hz: SYSTEM_BANDWIDTH_HZ,
};

/// Power gain giving `snr_db` under [`BUDGET`].
pub fn gain_for(snr_db: f64) -> f64 {
    10f64.powf((snr_db - 97.0) / 10.0)
}

pub fn same_policy(p: SchedulingPolicy) -> BTreeMap<Slice, SchedulingPolicy> {
    Slice::ALL.iter().map(|&s| (s, p)).collect()
}
