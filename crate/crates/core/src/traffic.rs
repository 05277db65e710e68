//! Slice traffic sources and RLC buffer accounting.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::mac::{Slice, TTI_SECONDS};
use crate::{Error, Result};

/// Fixed packet size of the Poisson source.
pub const POISSON_PACKET_BYTES: u64 = 125;
pub const EMBB_RATE_BPS: f64 = 4e6;
pub const URLLC_RATE_BPS: f64 = 89.3e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrafficKind {
    ConstantBitrate,
    Poisson,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrafficProfile {
    kind: TrafficKind,
    rate_bps: f64,
}

impl TrafficProfile {
    pub fn new(kind: TrafficKind, rate_bps: f64) -> Result<Self> {
        if !(rate_bps > 0.0 && rate_bps.is_finite()) {
            return Err(Error::invalid(format!("traffic rate {rate_bps} must be positive")));
        }
        Ok(Self { kind, rate_bps })
    }

    /// eMBB: 4 Mbit/s constant bitrate. URLLC: 89.3 kbit/s Poisson.
    pub fn for_slice(slice: Slice) -> Self {
        match slice {
            Slice::Embb => Self {
                kind: TrafficKind::ConstantBitrate,
                rate_bps: EMBB_RATE_BPS,
            },
            Slice::Urllc => Self {
                kind: TrafficKind::Poisson,
                rate_bps: URLLC_RATE_BPS,
            },
        }
    }

    pub fn kind(&self) -> TrafficKind {
        self.kind
    }

    pub fn rate_bps(&self) -> f64 {
        self.rate_bps
    }
}

/// Stateful arrival process producing bytes per TTI, in TTI order.
#[derive(Debug, Clone)]
pub struct TrafficGenerator {
    profile: TrafficProfile,
    rng: ChaCha8Rng,
    next_tti: u64,
    /// Poisson: absolute time of the next packet, seconds.
    next_arrival: f64,
    total_bytes: u64,
}

impl TrafficGenerator {
    pub fn new(profile: TrafficProfile, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let next_arrival = match profile.kind {
            TrafficKind::ConstantBitrate => 0.0,
            TrafficKind::Poisson => packet_gap(&profile, &mut rng),
        };
        Self {
            profile,
            rng,
            next_tti: 0,
            next_arrival,
            total_bytes: 0,
        }
    }

    /// Bytes arriving in TTI `tti_index`. TTIs must be requested in order
    /// starting from 0.
    pub fn arrivals(&mut self, tti_index: u64) -> Result<u64> {
        if tti_index != self.next_tti {
            return Err(Error::ContractViolation(format!(
                "traffic requested for TTI {tti_index}, expected {}",
                self.next_tti
            )));
        }
        self.next_tti += 1;
        let bytes = match self.profile.kind {
            TrafficKind::ConstantBitrate => {
                // Cumulative floor keeps the total exact: no drift.
                let due = cbr_bytes_until(self.profile.rate_bps, self.next_tti);
                due - self.total_bytes
            }
            TrafficKind::Poisson => {
                let end = self.next_tti as f64 * TTI_SECONDS;
                let mut packets = 0;
                while self.next_arrival < end {
                    packets += 1;
                    self.next_arrival += packet_gap(&self.profile, &mut self.rng);
                }
                packets * POISSON_PACKET_BYTES
            }
        };
        self.total_bytes += bytes;
        Ok(bytes)
    }

    pub fn total_bytes(&self) -> u64 {
        self.total_bytes
    }
}

/// Bytes a CBR source at `rate_bps` has emitted after `ttis` TTIs.
pub fn cbr_bytes_until(rate_bps: f64, ttis: u64) -> u64 {
    // bit/s × ms / 8000 = bytes, avoiding the inexact 1e-3 factor.
    (rate_bps * ttis as f64 / 8000.0).floor() as u64
}

fn packet_gap(profile: &TrafficProfile, rng: &mut ChaCha8Rng) -> f64 {
    let packets_per_s = profile.rate_bps / (POISSON_PACKET_BYTES * 8) as f64;
    Exp::new(packets_per_s)
        .expect("rate validated positive")
        .sample(rng)
}

/// Unbounded RLC queue with a high-water mark.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RlcBuffer {
    queued_bytes: u64,
    high_water_mark: u64,
}

impl RlcBuffer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn queued_bytes(&self) -> u64 {
        self.queued_bytes
    }

    pub fn high_water_mark(&self) -> u64 {
        self.high_water_mark
    }

    pub fn enqueue(&mut self, bytes: u64) {
        self.queued_bytes += bytes;
        self.high_water_mark = self.high_water_mark.max(self.queued_bytes);
    }

    pub fn drain(&mut self, bytes: u64) -> Result<()> {
        if bytes > self.queued_bytes {
            return Err(Error::ContractViolation(format!(
                "draining {bytes} bytes from a buffer holding {}",
                self.queued_bytes
            )));
        }
        self.queued_bytes -= bytes;
        Ok(())
    }

    /// `queued + arrived − served`, checked before any change is made.
    pub fn apply(&mut self, arrived: u64, served: u64) -> Result<()> {
        if served > self.queued_bytes + arrived {
            return Err(Error::ContractViolation(format!(
                "serving {served} bytes with only {} available",
                self.queued_bytes + arrived
            )));
        }
        self.enqueue(arrived);
        self.drain(served)
    }
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn cbr_is_exact() {
        let mut g = TrafficGenerator::new(TrafficProfile::for_slice(Slice::Embb), 1);
        let mut total = 0;
        for t in 0..1000 {
            let b = g.arrivals(t).unwrap();
            assert_eq!(b, 500);
            total += b;
        }
        assert_eq!(total, 500_000);
    }

    #[test]
    fn cbr_fractional_rates_do_not_drift() {
        let p = TrafficProfile::new(TrafficKind::ConstantBitrate, 89.3e3).unwrap();
        let mut g = TrafficGenerator::new(p, 0);
        for t in 0..10_000 {
            g.arrivals(t).unwrap();
        }
        assert_eq!(g.total_bytes(), 111_625);
    }

    #[test]
    fn arrivals_must_be_sequential() {
        let mut g = TrafficGenerator::new(TrafficProfile::for_slice(Slice::Urllc), 1);
        assert!(g.arrivals(1).is_err());
        assert!(g.arrivals(0).is_ok());
    }

    #[test]
    fn poisson_is_deterministic_and_packetised() {
        let run = |seed| {
            let mut g = TrafficGenerator::new(TrafficProfile::for_slice(Slice::Urllc), seed);
            (0..5000).map(|t| g.arrivals(t).unwrap()).collect::<Vec<_>>()
        };
        let a = run(3);
        assert_eq!(a, run(3));
        assert_ne!(a, run(4));
        assert!(a.iter().all(|b| b % POISSON_PACKET_BYTES == 0));
    }

    #[test]
    fn profile_validation() {
        assert!(TrafficProfile::new(TrafficKind::Poisson, 0.0).is_err());
        assert!(TrafficProfile::new(TrafficKind::Poisson, f64::INFINITY).is_err());
    }

    #[test]
    fn buffer_examples() {
        let mut b = RlcBuffer::new();
        b.apply(100, 100).unwrap();
        assert_eq!(b.queued_bytes(), 0);
        assert_eq!(b.high_water_mark(), 100);
        let mut b = RlcBuffer::new();
        b.enqueue(50);
        b.apply(0, 0).unwrap();
        assert_eq!(b.queued_bytes(), 50);
        assert!(b.apply(10, 61).is_err());
        assert_eq!(b.queued_bytes(), 50);
        assert!(b.drain(51).is_err());
    }

    proptest! {
        #[test]
        fn bytes_are_conserved(steps in prop::collection::vec((0u64..1000, 0u64..1000), 0..200)) {
            let mut b = RlcBuffer::new();
            let (mut arrived, mut served) = (0, 0);
            for (a, s) in steps {
                let s = s.min(b.queued_bytes() + a);
                b.apply(a, s).unwrap();
                arrived += a;
                served += s;
            }
            prop_assert_eq!(arrived - served, b.queued_bytes());
            prop_assert!(b.high_water_mark() >= b.queued_bytes());
        }
    }
}
