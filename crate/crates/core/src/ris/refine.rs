use num_complex::Complex64;

use super::weights::WeightObjective;
use super::{optimize_weights, Cascade, RisConfiguration, WeightSearch, WeightVector};
use crate::channel::{wrap_phase, ChannelSet};
use crate::Result;

/// Full RIS optimisation pipeline: simplex weight search followed by an
/// optional element-wise polish.
#[derive(Debug, Clone, PartialEq)]
pub struct RisOptimizer {
    pub weight_search: WeightSearch,
    pub polish: bool,
    pub max_sweeps: usize,
}

impl Default for RisOptimizer {
    fn default() -> Self {
        Self {
            weight_search: WeightSearch::default(),
            polish: true,
            max_sweeps: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RisSolution {
    pub weights: WeightVector,
    /// Aggregate gain of `θ = ∠(Σ w_i v_i)` before polishing.
    pub weighted_gain: f64,
    pub configuration: RisConfiguration,
    pub aggregate_gain: f64,
}

/// Coordinate ascent on the phases: each `θ_m` is set to its exact
/// maximiser given the others, `θ_m = -∠Σ_i conj(b_i) c_im` where `b_i` is
/// UE `i`'s amplitude without element `m`. The aggregate never decreases.
pub fn polish_phases(
    channels: &ChannelSet,
    start: &RisConfiguration,
    max_sweeps: usize,
) -> Result<(RisConfiguration, f64)> {
    let cascade = Cascade::new(channels)?;
    if start.len() != cascade.element_count() && cascade.ue_count() > 0 {
        return Err(crate::Error::invalid(format!(
            "start has {} phases for {} elements",
            start.len(),
            cascade.element_count()
        )));
    }
    Ok(polish(&cascade, start.phases().to_vec(), max_sweeps))
}

fn polish(cascade: &Cascade, mut phases: Vec<f64>, max_sweeps: usize) -> (RisConfiguration, f64) {
    let mut refl: Vec<Complex64> = phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
    let mut amps = cascade.amplitudes(&refl);
    let mut current: f64 = amps.iter().map(Complex64::norm_sqr).sum();

    for _ in 0..max_sweeps {
        for m in 0..phases.len() {
            let mut z = Complex64::new(0.0, 0.0);
            for (s, t) in amps.iter().zip(&cascade.terms) {
                let b = s - t[m] * refl[m];
                z += b.conj() * t[m];
            }
            if z.norm_sqr() == 0.0 {
                continue;
            }
            let theta = wrap_phase(-z.arg());
            let e = Complex64::from_polar(1.0, theta);
            for (s, t) in amps.iter_mut().zip(&cascade.terms) {
                *s += t[m] * (e - refl[m]);
            }
            phases[m] = theta;
            refl[m] = e;
        }
        // Recompute from scratch to keep incremental updates from drifting.
        amps = cascade.amplitudes(&refl);
        let next: f64 = amps.iter().map(Complex64::norm_sqr).sum();
        let done = next - current <= 1e-12 * current.abs();
        current = current.max(next);
        if done {
            break;
        }
    }
    (RisConfiguration { phases }, current)
}

/// Weight search, then (if enabled) polishing from the weighted solution and
/// from every single-UE alignment, keeping the best.
pub fn optimize_ris(channels: &ChannelSet, optimizer: &RisOptimizer) -> Result<RisSolution> {
    let weighted = optimize_weights(channels, &optimizer.weight_search)?;
    let mut solution = RisSolution {
        weights: weighted.weights.clone(),
        weighted_gain: weighted.aggregate_gain,
        configuration: weighted.configuration.clone(),
        aggregate_gain: weighted.aggregate_gain,
    };
    if !optimizer.polish || channels.element_count() == 0 {
        return Ok(solution);
    }

    let cascade = Cascade::new(channels)?;
    let n = cascade.ue_count();
    let objective = WeightObjective::new(cascade);
    let mut starts = vec![weighted.configuration.phases().to_vec()];
    starts.extend((0..n).map(|i| objective.phases(WeightVector::vertex(n, i).weights())));

    for start in starts {
        let (cfg, gain) = polish(objective.cascade(), start, optimizer.max_sweeps);
        if gain > solution.aggregate_gain {
            solution.configuration = cfg;
            solution.aggregate_gain = gain;
        }
    }
    Ok(solution)
}
