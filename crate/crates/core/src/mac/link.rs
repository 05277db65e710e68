//! Link adaptation: channel power gain → SNR → CQI → MCS → transport block.

use crate::{Error, Result};

pub const TTI_SECONDS: f64 = 1e-3;
pub const PRB_BANDWIDTH_HZ: f64 = 180e3;
pub const TOTAL_PRBS: u32 = 50;
/// Carrier bandwidth over which the noise floor is integrated.
pub const SYSTEM_BANDWIDTH_HZ: f64 = 10e6;
pub const THERMAL_NOISE_DBM_PER_HZ: f64 = -174.0;
pub const NOISE_FIGURE_DB: f64 = 7.0;
/// Fraction of PRB resource elements carrying data.
pub const DATA_SHARE: f64 = 0.9;
pub const MAX_CQI: u8 = 15;
pub const MAX_MCS: u8 = 28;

const MIN_SE: f64 = 0.15;
const MAX_SE: f64 = 5.4;

/// CQI index → MCS index.
pub const MCS_TABLE: [u8; 16] = [0, 2, 4, 6, 7, 9, 11, 13, 15, 17, 19, 21, 22, 24, 26, 28];

/// `tx_power + 10 log10(gain) − (−174 + 10 log10(bandwidth) + NF)`.
/// A zero gain yields `-∞`, which maps to CQI 0.
pub fn snr_from_gain(gain: f64, tx_power_dbm: f64, bandwidth_hz: f64) -> Result<f64> {
    if !(gain >= 0.0) || !gain.is_finite() {
        return Err(Error::invalid(format!("channel gain {gain} must be finite and ≥ 0")));
    }
    if !(bandwidth_hz > 0.0) {
        return Err(Error::invalid(format!("bandwidth {bandwidth_hz} must be positive")));
    }
    let noise = THERMAL_NOISE_DBM_PER_HZ + 10.0 * bandwidth_hz.log10() + NOISE_FIGURE_DB;
    Ok(tx_power_dbm + 10.0 * gain.log10() - noise)
}

/// Lower edge of CQI `k` (1..=15): 15 uniform 2 dB steps from −6 dB.
pub fn cqi_threshold_db(k: u8) -> f64 {
    -6.0 + 2.0 * (f64::from(k) - 1.0)
}

/// Largest CQI whose threshold does not exceed `snr_db` (inclusive lower
/// bound); 0 below the first threshold or for NaN.
pub fn cqi_from_snr(snr_db: f64) -> u8 {
    (1..=MAX_CQI)
        .take_while(|&k| snr_db >= cqi_threshold_db(k))
        .last()
        .unwrap_or(0)
}

pub fn mcs_from_cqi(cqi: u8) -> Result<u8> {
    MCS_TABLE
        .get(usize::from(cqi))
        .copied()
        .ok_or_else(|| Error::invalid(format!("CQI {cqi} outside 0..=15")))
}

/// Linear ramp from 0.15 b/s/Hz at MCS 0 to 5.4 b/s/Hz at MCS 28.
pub fn spectral_efficiency(mcs: u8) -> Result<f64> {
    if mcs > MAX_MCS {
        return Err(Error::invalid(format!("MCS {mcs} outside 0..=28")));
    }
    Ok(MIN_SE + f64::from(mcs) / f64::from(MAX_MCS) * (MAX_SE - MIN_SE))
}

/// Transport block size in bytes for one TTI.
pub fn tbs(mcs: u8, prb_count: u32) -> Result<u64> {
    let se = spectral_efficiency(mcs)?;
    let per_prb = (se * PRB_BANDWIDTH_HZ * TTI_SECONDS * DATA_SHARE / 8.0).floor() as u64;
    Ok(per_prb * u64::from(prb_count))
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;

    use super::*;

    #[test]
    fn snr_examples() {
        let snr = snr_from_gain(1.0, 0.0, 10e6).unwrap();
        assert!((snr - 97.0).abs() < 1e-12);
        assert_eq!(snr_from_gain(0.0, 0.0, 10e6).unwrap(), f64::NEG_INFINITY);
        let a = snr_from_gain(1e-9, 13.0, 10e6).unwrap();
        let b = snr_from_gain(2e-9, 13.0, 10e6).unwrap();
        assert!((b - a - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((b - a - 3.0103).abs() < 1e-4);
        assert!(snr_from_gain(-1.0, 0.0, 10e6).is_err());
        assert!(snr_from_gain(1.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn cqi_examples() {
        assert_eq!(cqi_from_snr(f64::NEG_INFINITY), 0);
        assert_eq!(cqi_from_snr(f64::NAN), 0);
        assert_eq!(cqi_from_snr(60.0), 15);
        assert_eq!(cqi_from_snr(cqi_threshold_db(9)), 9);
        assert_eq!(cqi_from_snr(cqi_threshold_db(9) - 1e-9), 8);
        assert_eq!(cqi_from_snr(-6.0), 1);
        assert_eq!(cqi_from_snr(22.0), 15);
        assert_eq!(cqi_from_snr(21.999), 14);
    }

    #[test]
    fn mcs_examples() {
        assert_eq!(mcs_from_cqi(0).unwrap(), 0);
        assert_eq!(mcs_from_cqi(15).unwrap(), 28);
        assert_eq!(mcs_from_cqi(8).unwrap(), 15);
        assert!(mcs_from_cqi(16).is_err());
        for k in 1..=15 {
            assert!(mcs_from_cqi(k).unwrap() >= mcs_from_cqi(k - 1).unwrap());
        }
    }

    #[test]
    fn tbs_examples() {
        for m in 0..=28 {
            assert_eq!(tbs(m, 0).unwrap(), 0);
        }
        assert_eq!(tbs(28, 1).unwrap(), 109);
        // 50 PRBs at the top MCS for one second.
        let bps = tbs(28, 50).unwrap() as f64 * 8.0 * 1000.0;
        assert!((bps - 43.6e6).abs() < 1.0);
        assert!(tbs(29, 1).is_err());
        assert_eq!(tbs(0, 1).unwrap(), 3);
    }

    proptest! {
        #[test]
        fn tbs_is_linear(m in 0u8..=28, k in 0u32..200) {
            prop_assert_eq!(tbs(m, 2 * k).unwrap(), 2 * tbs(m, k).unwrap());
        }

        #[test]
        fn gain_to_mcs_is_monotone(a in 1e-16f64..1e-3, b in 1e-16f64..1e-3) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let m = |g: f64| mcs_from_cqi(cqi_from_snr(snr_from_gain(g, 13.0, 10e6).unwrap())).unwrap();
            prop_assert!(m(lo) <= m(hi));
        }
    }
}
