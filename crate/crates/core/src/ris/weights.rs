use std::cmp::Ordering;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use super::{angle, Cascade, RisConfiguration, WeightVector};
use crate::channel::ChannelSet;
use crate::{Error, Result};

/// Settings for the simplex weight search.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightSearch {
    /// Lattice step of the exhaustive grid.
    pub grid_step: f64,
    /// Largest UE count searched on the grid; above it projected-gradient
    /// ascent with random restarts is used.
    pub grid_max_ues: usize,
    /// Number of ten-fold lattice refinements around the grid incumbent.
    pub refine_levels: u32,
    pub restarts: usize,
    pub max_iterations: usize,
    pub seed: u64,
}

impl Default for WeightSearch {
    fn default() -> Self {
        Self {
            grid_step: 0.01,
            grid_max_ues: 3,
            refine_levels: 2,
            restarts: 16,
            max_iterations: 200,
            seed: 0,
        }
    }
}

impl WeightSearch {
    /// Plain grid at `step`, no refinement. Used as an exhaustive oracle.
    pub fn exhaustive(step: f64) -> Self {
        Self {
            grid_step: step,
            grid_max_ues: usize::MAX,
            refine_levels: 0,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightSolution {
    pub weights: WeightVector,
    /// `θ = ∠(Σ w_i v_i)`.
    pub configuration: RisConfiguration,
    pub aggregate_gain: f64,
}

/// Objective `f(w) = Σ_i |h_iA + Σ_m c_im e^{j∠v_m(w)}|²` over the simplex.
pub(crate) struct WeightObjective {
    cascade: Cascade,
    vectors: Vec<Vec<Complex64>>,
}

impl WeightObjective {
    pub fn new(cascade: Cascade) -> Self {
        let vectors = cascade.per_ue_vectors();
        Self { cascade, vectors }
    }

    pub fn cascade(&self) -> &Cascade {
        &self.cascade
    }

    pub fn combined(&self, w: &[f64]) -> Vec<Complex64> {
        let m = self.cascade.element_count();
        let mut v = vec![Complex64::new(0.0, 0.0); m];
        for (vi, &wi) in self.vectors.iter().zip(w) {
            if wi == 0.0 {
                continue;
            }
            for (e, x) in v.iter_mut().zip(vi) {
                *e += x * wi;
            }
        }
        v
    }

    pub fn phases(&self, w: &[f64]) -> Vec<f64> {
        self.combined(w).into_iter().map(angle).collect()
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        self.cascade.aggregate(&self.phases(w))
    }

    /// Analytic gradient, using `∂∠v_m/∂w_k = Im(v_km / v_m)` and
    /// `∂f/∂θ_m = -2 Σ_i Im(conj(s_i) c_im e^{jθ_m})`. Elements with
    /// `v_m = 0` contribute nothing.
    pub fn gradient(&self, w: &[f64]) -> Vec<f64> {
        let v = self.combined(w);
        let theta: Vec<f64> = v.iter().map(|&e| angle(e)).collect();
        let refl: Vec<Complex64> = theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        let amps = self.cascade.amplitudes(&refl);

        let mut grad = vec![0.0; w.len()];
        for (m, vm) in v.iter().enumerate() {
            if vm.norm_sqr() == 0.0 {
                continue;
            }
            let d_theta: f64 = amps
                .iter()
                .zip(&self.cascade.terms)
                .map(|(s, t)| -2.0 * (s.conj() * t[m] * refl[m]).im)
                .sum();
            for (k, g) in grad.iter_mut().enumerate() {
                *g += d_theta * (self.vectors[k][m] / vm).im;
            }
        }
        grad
    }
}

/// Larger gain wins; equal gains go to the lexicographically smaller weights.
fn better(gain: f64, w: &[f64], best_gain: f64, best_w: &[f64]) -> bool {
    match gain.partial_cmp(&best_gain) {
        Some(Ordering::Greater) => true,
        Some(Ordering::Equal) => w.partial_cmp(best_w) == Some(Ordering::Less),
        _ => false,
    }
}

struct Incumbent {
    gain: f64,
    weights: Vec<f64>,
}

impl Incumbent {
    fn offer(&mut self, gain: f64, w: &[f64]) -> bool {
        if self.weights.is_empty() || better(gain, w, self.gain, &self.weights) {
            self.gain = gain;
            self.weights = w.to_vec();
            true
        } else {
            false
        }
    }
}

/// Maximises the aggregate power gain over the weight simplex.
pub fn optimize_weights(channels: &ChannelSet, search: &WeightSearch) -> Result<WeightSolution> {
    if channels.ues.is_empty() {
        return Err(Error::invalid("weight optimisation needs at least one UE"));
    }
    if !(search.grid_step > 0.0 && search.grid_step <= 1.0) {
        return Err(Error::invalid(format!("grid step {} outside (0, 1]", search.grid_step)));
    }
    let objective = WeightObjective::new(Cascade::new(channels)?);
    let n = channels.ues.len();

    let mut best = Incumbent {
        gain: f64::NEG_INFINITY,
        weights: Vec::new(),
    };
    if n == 1 {
        best.offer(objective.value(&[1.0]), &[1.0]);
    } else if n <= search.grid_max_ues {
        grid_search(&objective, n, search, &mut best);
    } else {
        gradient_search(&objective, n, search, &mut best);
    }

    let configuration = RisConfiguration {
        phases: objective.phases(&best.weights),
    };
    Ok(WeightSolution {
        weights: WeightVector::new(best.weights)?,
        configuration,
        aggregate_gain: best.gain,
    })
}

fn grid_search(objective: &WeightObjective, n: usize, search: &WeightSearch, best: &mut Incumbent) {
    let divisions = (1.0 / search.grid_step).round().max(1.0) as u64;
    let mut counts = vec![0u64; n];
    compositions(&mut counts, 0, divisions, &mut |c| {
        let w = to_weights(c, divisions);
        best.offer(objective.value(&w), &w);
    });

    // Successive ten-fold refinements within one coarse step of the incumbent.
    let mut scale = divisions;
    for _ in 0..search.refine_levels {
        let fine = scale * 10;
        let center: Vec<i64> = best
            .weights
            .iter()
            .map(|w| (w * fine as f64).round() as i64)
            .collect();
        let free = n - 1;
        let mut offsets = vec![-10i64; free];
        loop {
            let mut c: Vec<i64> = center[..free].iter().zip(&offsets).map(|(a, b)| a + b).collect();
            let last = fine as i64 - c.iter().sum::<i64>();
            if c.iter().all(|&x| x >= 0) && last >= 0 {
                c.push(last);
                let counts: Vec<u64> = c.iter().map(|&x| x as u64).collect();
                let w = to_weights(&counts, fine);
                best.offer(objective.value(&w), &w);
            }
            // odometer over [-10, 10]^free
            let mut k = 0;
            while k < free {
                offsets[k] += 1;
                if offsets[k] <= 10 {
                    break;
                }
                offsets[k] = -10;
                k += 1;
            }
            if k == free {
                break;
            }
        }
        scale = fine;
    }
}

fn to_weights(counts: &[u64], total: u64) -> Vec<f64> {
    let mut w: Vec<f64> = counts.iter().map(|&c| c as f64 / total as f64).collect();
    // Put the rounding residue on the last coordinate so Σw is exactly 1
    // within floating point.
    let head: f64 = w[..w.len() - 1].iter().sum();
    let last = w.len() - 1;
    w[last] = (1.0 - head).max(0.0);
    w
}

/// Enumerates all `counts` with `Σ counts = remaining` over positions `i..`.
fn compositions(counts: &mut [u64], i: usize, remaining: u64, visit: &mut dyn FnMut(&[u64])) {
    if i == counts.len() - 1 {
        counts[i] = remaining;
        visit(counts);
        return;
    }
    for c in 0..=remaining {
        counts[i] = c;
        compositions(counts, i + 1, remaining - c, visit);
    }
}

fn gradient_search(
    objective: &WeightObjective,
    n: usize,
    search: &WeightSearch,
    best: &mut Incumbent,
) {
    let mut starts: Vec<Vec<f64>> = (0..n).map(|i| WeightVector::vertex(n, i).weights).collect();
    starts.push(vec![1.0 / n as f64; n]);
    let mut rng = ChaCha8Rng::seed_from_u64(search.seed);
    for _ in 0..search.restarts {
        let draws: Vec<f64> = (0..n).map(|_| Exp1.sample(&mut rng)).collect();
        let total: f64 = draws.iter().sum();
        starts.push(draws.iter().map(|d| d / total).collect());
    }

    for start in starts {
        let mut w = project_simplex(&start);
        let mut f = objective.value(&w);
        best.offer(f, &w);
        let mut step = 0.25;
        for _ in 0..search.max_iterations {
            let g = objective.gradient(&w);
            let scale = g.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if scale == 0.0 || !scale.is_finite() {
                break;
            }
            let trial: Vec<f64> = w.iter().zip(&g).map(|(wi, gi)| wi + step * gi / scale).collect();
            let trial = project_simplex(&trial);
            let ft = objective.value(&trial);
            if ft > f {
                w = trial;
                f = ft;
                best.offer(f, &w);
                step = (step * 1.5).min(1.0);
            } else {
                step *= 0.5;
                if step < 1e-6 {
                    break;
                }
            }
        }
    }
}

/// Euclidean projection onto the probability simplex.
pub(crate) fn project_simplex(x: &[f64]) -> Vec<f64> {
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    let mut cumulative = 0.0;
    let mut tau = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if uj - t > 0.0 {
            tau = t;
        }
    }
    let mut w: Vec<f64> = x.iter().map(|&xi| (xi - tau).max(0.0)).collect();
    let sum: f64 = w.iter().sum();
    if sum > 0.0 {
        w.iter_mut().for_each(|wi| *wi /= sum);
    }
    w
}
