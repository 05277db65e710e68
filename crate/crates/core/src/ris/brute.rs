use std::f64::consts::TAU;

use num_complex::Complex64;

use super::{Cascade, RisConfiguration};
use crate::channel::ChannelSet;
use crate::{Error, Result};

/// Upper bound on the number of phase combinations the exhaustive search
/// will enumerate.
pub const BRUTE_FORCE_LIMIT: f64 = 1e7;

/// Exhaustive search over the uniform phase grid `{0, step, 2·step, …}` on
/// every element. Returns the best configuration and its aggregate gain;
/// ties keep the first combination in odometer order (element 0 fastest).
pub fn brute_force_phase_search(
    channels: &ChannelSet,
    step: f64,
) -> Result<(RisConfiguration, f64)> {
    if !(step > 0.0 && step <= TAU) {
        return Err(Error::invalid(format!("phase step {step} outside (0, 2π]")));
    }
    let cascade = Cascade::new(channels)?;
    let m = channels.element_count();
    let levels = ((TAU / step).round() as usize).max(1);
    let points = (levels as f64).powi(m as i32);
    if points > BRUTE_FORCE_LIMIT {
        return Err(Error::SearchSpaceTooLarge {
            points,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let grid: Vec<Complex64> = (0..levels)
        .map(|l| Complex64::from_polar(1.0, l as f64 * step))
        .collect();
    let mut index = vec![0usize; m];
    let mut refl = vec![grid[0]; m];
    let mut best_gain = f64::NEG_INFINITY;
    let mut best_index = index.clone();
    loop {
        let gain: f64 = cascade.amplitudes(&refl).iter().map(Complex64::norm_sqr).sum();
        if gain > best_gain {
            best_gain = gain;
            best_index.clone_from(&index);
        }
        let mut k = 0;
        while k < m {
            index[k] += 1;
            if index[k] < levels {
                refl[k] = grid[index[k]];
                break;
            }
            index[k] = 0;
            refl[k] = grid[0];
            k += 1;
        }
        if k == m {
            break;
        }
    }
    let configuration =
        RisConfiguration::new(best_index.iter().map(|&l| l as f64 * step).collect())?;
    Ok((configuration, best_gain))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::ris::testutil::random_channels;
    use crate::ris::{aggregate_gain, optimize_ris, RisOptimizer};

    #[test]
    fn rejects_bad_step_and_huge_spaces() {
        let ch = random_channels(0, 1, 3);
        assert!(brute_force_phase_search(&ch, 0.0).is_err());
        assert!(brute_force_phase_search(&ch, -1.0).is_err());
        let big = random_channels(0, 1, 10);
        assert!(matches!(
            brute_force_phase_search(&big, PI / 8.0),
            Err(Error::SearchSpaceTooLarge { .. })
        ));
    }

    #[test]
    fn reported_gain_matches_configuration() {
        let ch = random_channels(4, 2, 3);
        let (cfg, g) = brute_force_phase_search(&ch, PI / 4.0).unwrap();
        let again = aggregate_gain(&ch, &cfg).unwrap();
        assert!((again - g).abs() <= 1e-12 * g);
    }

    #[test]
    fn finer_grid_contains_coarser() {
        for seed in 0..5 {
            let ch = random_channels(seed, 2, 3);
            let (_, coarse) = brute_force_phase_search(&ch, PI / 2.0).unwrap();
            let (_, fine) = brute_force_phase_search(&ch, PI / 4.0).unwrap();
            assert!(fine >= coarse);
        }
    }

    #[test]
    fn single_element_single_ue_aligned() {
        let one = Complex64::new(1.0, 0.0);
        let ch = ChannelSet {
            ris_to_bs: vec![one],
            ues: vec![crate::channel::UeChannel {
                ue_id: 1,
                direct: one,
                ue_to_ris: vec![one],
            }],
        };
        let (cfg, g) = brute_force_phase_search(&ch, PI / 8.0).unwrap();
        assert_eq!(cfg.phases(), &[0.0]);
        assert!((g - 4.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_reaches_oracle_on_small_instances() {
        for seed in 0..10 {
            let ch = random_channels(seed + 500, 3, 4);
            let (_, bf) = brute_force_phase_search(&ch, PI / 8.0).unwrap();
            let sol = optimize_ris(&ch, &RisOptimizer::default()).unwrap();
            assert!(sol.aggregate_gain >= bf, "seed {seed}");
        }
    }
}
