//! Seeded statistical multipath generator.
//!
//! Each link realization is a set of multipath components whose total mean
//! power follows a log-distance path-loss law. LoS links carry one dominant
//! component with a geometric phase plus Rayleigh scatter (Rician, K-factor
//! configurable); NLoS links are pure Rayleigh scatter.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{LinkKind, SPEED_OF_LIGHT};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MultipathComponent {
    /// Linear amplitude.
    pub magnitude: f64,
    /// Radians in `[0, 2π)`.
    pub phase: f64,
}

impl MultipathComponent {
    pub fn new(magnitude: f64, phase: f64) -> Self {
        Self {
            magnitude,
            phase: wrap_phase(phase),
        }
    }

    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Reduces an angle into `[0, 2π)`.
pub fn wrap_phase(phase: f64) -> f64 {
    let r = phase.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// `PL(d) = PL(d0) + 10 n log10(d / d0)` with free-space loss at `d0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathLossModel {
    pub reference_distance: f64,
    pub wavelength: f64,
    pub los_exponent: f64,
    pub nlos_exponent: f64,
}

impl PathLossModel {
    pub fn new(carrier_frequency: f64) -> Self {
        Self {
            reference_distance: 1.0,
            wavelength: SPEED_OF_LIGHT / carrier_frequency,
            los_exponent: 2.0,
            nlos_exponent: 3.2,
        }
    }

    pub fn reference_loss_db(&self) -> f64 {
        20.0 * (4.0 * std::f64::consts::PI * self.reference_distance / self.wavelength).log10()
    }

    pub fn loss_db(&self, distance: f64, los: bool) -> f64 {
        let n = if los { self.los_exponent } else { self.nlos_exponent };
        self.reference_loss_db() + 10.0 * n * (distance / self.reference_distance).log10()
    }

    /// Mean linear power gain, `10^(-PL/10)`.
    pub fn power_gain(&self, distance: f64, los: bool) -> f64 {
        10f64.powf(-self.loss_db(distance, los) / 10.0)
    }
}

/// How per-realization gains are reduced to a single link gain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AveragingMode {
    /// Arithmetic mean of the complex gains.
    #[default]
    Complex,
    /// Mean magnitude, carrying the phase of the complex mean.
    Magnitude,
}

/// One link to be realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSpec {
    pub kind: LinkKind,
    pub distance: f64,
    pub los: bool,
    pub mpc_count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub path_loss: PathLossModel,
    pub k_factor_db: f64,
    pub los_mpc_count: usize,
    pub nlos_mpc_count: usize,
    pub realization_count: usize,
    pub averaging: AveragingMode,
}

impl ChannelModel {
    pub fn new(carrier_frequency: f64) -> Self {
        Self {
            path_loss: PathLossModel::new(carrier_frequency),
            k_factor_db: 10.0,
            los_mpc_count: 8,
            nlos_mpc_count: 8,
            realization_count: 100,
            averaging: AveragingMode::Complex,
        }
    }

    pub fn k_factor(&self) -> f64 {
        10f64.powf(self.k_factor_db / 10.0)
    }

    /// Link description with the default MPC count for its LoS state.
    pub fn link(&self, kind: LinkKind, distance: f64, los: bool) -> LinkSpec {
        let mpc_count = if los {
            self.los_mpc_count
        } else {
            self.nlos_mpc_count
        };
        LinkSpec {
            kind,
            distance,
            los,
            mpc_count,
        }
    }

    pub fn generate_mpcs(
        &self,
        kind: LinkKind,
        distance: f64,
        los: bool,
        mpc_count: usize,
        seed: u64,
    ) -> Result<Vec<MultipathComponent>> {
        let link = LinkSpec {
            kind,
            distance,
            los,
            mpc_count,
        };
        check_link(&link)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok(self.draw_mpcs(&mut rng, &link))
    }

    fn draw_mpcs<R: Rng>(&self, rng: &mut R, link: &LinkSpec) -> Vec<MultipathComponent> {
        let power = self.path_loss.power_gain(link.distance, link.los);
        let mut out = Vec::with_capacity(link.mpc_count);

        let (scatter_power, scatter_count) = if link.los {
            let dominant_share = if link.mpc_count == 1 {
                1.0
            } else {
                let k = self.k_factor();
                k / (k + 1.0)
            };
            let phase = -TAU * link.distance / self.path_loss.wavelength;
            out.push(MultipathComponent::new((power * dominant_share).sqrt(), phase));
            (power * (1.0 - dominant_share), link.mpc_count - 1)
        } else {
            (power, link.mpc_count)
        };

        if scatter_count > 0 {
            let sigma = (scatter_power / scatter_count as f64 / 2.0).sqrt();
            for _ in 0..scatter_count {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                let g = Complex64::new(sigma * re, sigma * im);
                out.push(MultipathComponent::new(g.norm(), g.arg()));
            }
        }
        out
    }

    /// Averages `realization_count` independent combined gains drawn from a
    /// single seeded stream. The first realization equals
    /// `combine_mpcs(generate_mpcs(.., seed))`.
    pub fn average_realizations(
        &self,
        link: &LinkSpec,
        realization_count: usize,
        seed: u64,
    ) -> Result<Complex64> {
        check_link(link)?;
        if realization_count == 0 {
            return Err(Error::invalid("realization count must be at least 1"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sum = Complex64::new(0.0, 0.0);
        let mut magnitude_sum = 0.0;
        for _ in 0..realization_count {
            let g = combine_mpcs(&self.draw_mpcs(&mut rng, link))?;
            sum += g;
            magnitude_sum += g.norm();
        }
        let n = realization_count as f64;
        let mean = sum / n;
        Ok(match self.averaging {
            AveragingMode::Complex => mean,
            AveragingMode::Magnitude => {
                let phase = if mean.norm() > 0.0 { mean.arg() } else { 0.0 };
                Complex64::from_polar(magnitude_sum / n, phase)
            }
        })
    }
}

fn check_link(link: &LinkSpec) -> Result<()> {
    if !(link.distance > 0.0) || !link.distance.is_finite() {
        return Err(Error::invalid(format!(
            "link distance must be positive and finite, got {}",
            link.distance
        )));
    }
    if link.mpc_count == 0 {
        return Err(Error::invalid("MPC count must be at least 1"));
    }
    Ok(())
}

/// Coherent sum of the components: `Σ |h'| e^{jφ'}`.
pub fn combine_mpcs(mpcs: &[MultipathComponent]) -> Result<Complex64> {
    if mpcs.is_empty() {
        return Err(Error::invalid("cannot combine an empty MPC list"));
    }
    Ok(mpcs.iter().map(MultipathComponent::gain).sum())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::channel::CATALOG_CARRIER_HZ;

    fn model() -> ChannelModel {
        ChannelModel::new(CATALOG_CARRIER_HZ)
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn reference_loss_is_free_space() {
        let pl = PathLossModel::new(CATALOG_CARRIER_HZ);
        let lambda = SPEED_OF_LIGHT / CATALOG_CARRIER_HZ;
        let fspl = 20.0 * (4.0 * PI / lambda).log10();
        assert!((pl.loss_db(1.0, true) - fspl).abs() < 1e-12);
        assert!((pl.loss_db(10.0, true) - (fspl + 20.0)).abs() < 1e-12);
        assert!((pl.loss_db(10.0, false) - (fspl + 32.0)).abs() < 1e-12);
    }

    #[test]
    fn single_los_component_carries_full_power() {
        let m = model();
        let mpcs = m.generate_mpcs(LinkKind::UeToRis, 20.0, true, 1, 7).unwrap();
        assert_eq!(mpcs.len(), 1);
        let want = m.path_loss.power_gain(20.0, true).sqrt();
        assert!((mpcs[0].magnitude / want - 1.0).abs() < 1e-12);
    }

    #[test]
    fn los_dominant_component_holds_rician_share() {
        let m = model();
        let mpcs = m.generate_mpcs(LinkKind::UeToRis, 20.0, true, 8, 3).unwrap();
        assert_eq!(mpcs.len(), 8);
        let p = m.path_loss.power_gain(20.0, true);
        let k = m.k_factor();
        assert!((mpcs[0].magnitude.powi(2) / (p * k / (k + 1.0)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn generation_is_deterministic() {
        let m = model();
        let a = m.generate_mpcs(LinkKind::UeToBs, 30.0, false, 8, 1).unwrap();
        let b = m.generate_mpcs(LinkKind::UeToBs, 30.0, false, 8, 1).unwrap();
        assert_eq!(a, b);
        let c = m.generate_mpcs(LinkKind::UeToBs, 30.0, false, 8, 2).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn nlos_mean_power_matches_path_loss() {
        // Monte-Carlo estimate of E[Σ|h'|²] over 1e5 seeds.
        let m = model();
        let n = 100_000u64;
        let total: f64 = (0..n)
            .map(|seed| {
                m.generate_mpcs(LinkKind::UeToBs, 30.0, false, 8, seed)
                    .unwrap()
                    .iter()
                    .map(|c| c.magnitude * c.magnitude)
                    .sum::<f64>()
            })
            .sum();
        let mean = total / n as f64;
        let want = m.path_loss.power_gain(30.0, false);
        assert!((mean / want - 1.0).abs() < 0.02, "mean {mean:e} vs {want:e}");
    }

    #[test]
    fn invalid_arguments() {
        let m = model();
        assert!(m.generate_mpcs(LinkKind::UeToBs, 0.0, false, 8, 1).is_err());
        assert!(m.generate_mpcs(LinkKind::UeToBs, -3.0, false, 8, 1).is_err());
        assert!(m.generate_mpcs(LinkKind::UeToBs, 3.0, false, 0, 1).is_err());
        assert!(combine_mpcs(&[]).is_err());
        let link = m.link(LinkKind::UeToBs, 10.0, false);
        assert!(m.average_realizations(&link, 0, 1).is_err());
    }

    #[test]
    fn combine_examples() {
        let one = combine_mpcs(&[MultipathComponent::new(0.5, PI / 3.0)]).unwrap();
        assert!(close(one, Complex64::from_polar(0.5, PI / 3.0), 1e-15));
        let cancel =
            combine_mpcs(&[MultipathComponent::new(1.0, 0.0), MultipathComponent::new(1.0, PI)])
                .unwrap();
        assert!(cancel.norm() < 1e-15);
        let three = combine_mpcs(&[MultipathComponent::new(1.0, 0.0); 3]).unwrap();
        assert!(close(three, Complex64::new(3.0, 0.0), 1e-15));
    }

    #[test]
    fn single_realization_equals_one_draw() {
        let m = model();
        let link = m.link(LinkKind::UeToBs, 42.0, false);
        let avg = m.average_realizations(&link, 1, 99).unwrap();
        let draw = combine_mpcs(&m.generate_mpcs(LinkKind::UeToBs, 42.0, false, 8, 99).unwrap())
            .unwrap();
        assert_eq!(avg, draw);
    }

    #[test]
    fn los_average_keeps_dominant_component() {
        // |mean| ≥ dominant magnitude · K/(K+1) with the default 100 realizations.
        let m = model();
        let link = m.link(LinkKind::UeToRis, 37.0, true);
        let p = m.path_loss.power_gain(37.0, true);
        let k = m.k_factor();
        let dominant = (p * k / (k + 1.0)).sqrt();
        for seed in 0..50 {
            let g = m.average_realizations(&link, 100, seed).unwrap();
            assert!(g.norm() >= dominant * k / (k + 1.0), "seed {seed}");
        }
    }

    #[test]
    fn independent_seeds_agree_within_standard_error() {
        let m = model();
        let link = m.link(LinkKind::UeToRis, 27.0, true);
        let count = 10_000;
        // Per-realization spread estimated from a separate stream.
        let mut rng = ChaCha8Rng::seed_from_u64(1234);
        let draws: Vec<Complex64> = (0..count)
            .map(|_| combine_mpcs(&m.draw_mpcs(&mut rng, &link)).unwrap())
            .collect();
        let mean: Complex64 = draws.iter().sum::<Complex64>() / count as f64;
        let var = draws.iter().map(|d| (d - mean).norm_sqr()).sum::<f64>() / (count - 1) as f64;
        let se_diff = (2.0 * var / count as f64).sqrt();

        let a = m.average_realizations(&link, count, 1).unwrap();
        let b = m.average_realizations(&link, count, 2).unwrap();
        assert!((a - b).norm() <= 3.0 * se_diff, "{a} vs {b}, se {se_diff:e}");
    }

    #[test]
    fn magnitude_averaging_is_not_shrunk_by_phase() {
        let mut m = model();
        let link = m.link(LinkKind::UeToBs, 30.0, false);
        let complex = m.average_realizations(&link, 100, 5).unwrap();
        m.averaging = AveragingMode::Magnitude;
        let magnitude = m.average_realizations(&link, 100, 5).unwrap();
        assert!(magnitude.norm() > complex.norm());
        assert!((magnitude.arg() - complex.arg()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn combine_is_linear_in_the_list(
            a in prop::collection::vec((0.0f64..10.0, 0.0f64..TAU), 1..12),
            b in prop::collection::vec((0.0f64..10.0, 0.0f64..TAU), 1..12),
        ) {
            let la: Vec<_> = a.iter().map(|&(m, p)| MultipathComponent::new(m, p)).collect();
            let lb: Vec<_> = b.iter().map(|&(m, p)| MultipathComponent::new(m, p)).collect();
            let mut joined = la.clone();
            joined.extend_from_slice(&lb);
            let lhs = combine_mpcs(&joined).unwrap();
            let rhs = combine_mpcs(&la).unwrap() + combine_mpcs(&lb).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn phases_are_wrapped(m in 0.0f64..1.0, p in -100.0f64..100.0) {
            let c = MultipathComponent::new(m, p);
            prop_assert!(c.phase >= 0.0 && c.phase < TAU);
        }
    }
}
