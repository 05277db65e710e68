//! RIS phase-shift optimisation.
//!
//! For a single UE the optimum is closed form: rotate every cascaded term so
//! that it lands on the phase of the direct path. With several UEs each UE's
//! unit-modulus reflection vector `v_i` is combined as `v = Σ w_i v_i`, the
//! RIS uses `θ = ∠v`, and the weights are searched over the simplex
//! ([`optimize_weights`]). [`optimize_ris`] additionally polishes the result
//! element by element; [`brute_force_phase_search`] is the exhaustive oracle.

mod brute;
mod refine;
mod weights;

use num_complex::Complex64;

pub use brute::{brute_force_phase_search, BRUTE_FORCE_LIMIT};
pub use refine::{optimize_ris, polish_phases, RisOptimizer, RisSolution};
pub use weights::{optimize_weights, WeightSearch, WeightSolution};

use crate::channel::{wrap_phase, ChannelSet, NodeGeometry};
use crate::{Error, Result};

/// Per-element phase shifts in `[0, 2π)`. The reflection matrix is
/// `diag(e^{jθ_m})` and is never materialised.
#[derive(Debug, Clone, PartialEq)]
pub struct RisConfiguration {
    phases: Vec<f64>,
}

impl RisConfiguration {
    pub fn new(phases: Vec<f64>) -> Result<Self> {
        if let Some(p) = phases.iter().find(|p| !p.is_finite()) {
            return Err(Error::invalid(format!("non-finite phase {p}")));
        }
        Ok(Self {
            phases: phases.into_iter().map(wrap_phase).collect(),
        })
    }

    pub fn zeros(element_count: usize) -> Self {
        Self {
            phases: vec![0.0; element_count],
        }
    }

    /// `θ_m = ∠v_m`, with `∠0 = 0`.
    pub fn from_reflection(v: &ReflectionCoefficientVector) -> Self {
        Self {
            phases: v.entries.iter().map(|&e| angle(e)).collect(),
        }
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Diagonal of the reflection matrix.
    pub fn reflection(&self) -> Vec<Complex64> {
        self.phases
            .iter()
            .map(|&t| Complex64::from_polar(1.0, t))
            .collect()
    }
}

pub(crate) fn angle(z: Complex64) -> f64 {
    if z.re == 0.0 && z.im == 0.0 {
        0.0
    } else {
        wrap_phase(z.arg())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReflectionCoefficientVector {
    entries: Vec<Complex64>,
}

impl ReflectionCoefficientVector {
    pub fn new(entries: Vec<Complex64>) -> Self {
        Self { entries }
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Result of [`per_ue_reflection`].
#[derive(Debug, Clone, PartialEq)]
pub struct PerUeReflection {
    pub vector: ReflectionCoefficientVector,
    /// The cascaded channel vanished on every element; `vector` is all ones.
    pub degenerate: bool,
}

/// Simplex-constrained UE weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    weights: Vec<f64>,
}

pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if let Some(w) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
            return Err(Error::invalid(format!("weight {w} outside [0, 1]")));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self { weights })
    }

    /// The `i`-th simplex vertex.
    pub fn vertex(len: usize, i: usize) -> Self {
        let mut weights = vec![0.0; len];
        weights[i] = 1.0;
        Self { weights }
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

/// Closed-form single-UE phases for channels built from steering vectors:
/// `θ_m = ∠h_iA − ω_m + ∠g_RA − (2π/λ) d m φ_RA` (0-based `m`), where `ω_m`
/// is the phase of `h_iR[m]` and `g_RA` the averaged RIS→BS gain before
/// steering. Every cascaded term then carries the phase of the direct path.
pub fn single_ue_phases(
    direct_phase: f64,
    ue_to_ris_phases: &[f64],
    ris_to_bs_phase: f64,
    geometry: &NodeGeometry,
    ris_to_bs_cosine: f64,
) -> RisConfiguration {
    let k = std::f64::consts::TAU / geometry.wavelength() * geometry.element_separation;
    let phases = ue_to_ris_phases
        .iter()
        .enumerate()
        .map(|(m, &omega)| {
            wrap_phase(direct_phase - omega + ris_to_bs_phase - k * m as f64 * ris_to_bs_cosine)
        })
        .collect();
    RisConfiguration { phases }
}

/// Reflection vector aligning every cascaded term `conj(h_RA[m]) h_iR[m]`
/// with the direct path.
pub fn per_ue_reflection(
    direct: Complex64,
    ue_to_ris: &[Complex64],
    ris_to_bs: &[Complex64],
) -> Result<PerUeReflection> {
    if ue_to_ris.len() != ris_to_bs.len() {
        return Err(Error::invalid(format!(
            "ue_to_ris has {} elements, ris_to_bs has {}",
            ue_to_ris.len(),
            ris_to_bs.len()
        )));
    }
    let target = angle(direct);
    let terms: Vec<Complex64> = ris_to_bs
        .iter()
        .zip(ue_to_ris)
        .map(|(a, r)| a.conj() * r)
        .collect();
    let degenerate = !terms.is_empty() && terms.iter().all(|t| t.norm_sqr() == 0.0);
    let entries = if degenerate {
        vec![Complex64::new(1.0, 0.0); terms.len()]
    } else {
        terms
            .iter()
            .map(|&t| Complex64::from_polar(1.0, target - angle(t)))
            .collect()
    };
    Ok(PerUeReflection {
        vector: ReflectionCoefficientVector { entries },
        degenerate,
    })
}

/// `v = Σ_i w_i v_i`.
pub fn combine_reflections(
    per_ue: &[ReflectionCoefficientVector],
    weights: &WeightVector,
) -> Result<ReflectionCoefficientVector> {
    if per_ue.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} reflection vectors but {} weights",
            per_ue.len(),
            weights.len()
        )));
    }
    let m = per_ue.first().map_or(0, |v| v.len());
    if per_ue.iter().any(|v| v.len() != m) {
        return Err(Error::invalid("reflection vectors differ in length"));
    }
    let mut entries = vec![Complex64::new(0.0, 0.0); m];
    for (v, &w) in per_ue.iter().zip(weights.weights()) {
        for (e, x) in entries.iter_mut().zip(&v.entries) {
            *e += x * w;
        }
    }
    Ok(ReflectionCoefficientVector { entries })
}

/// Precomputed cascaded terms `c_im = conj(h_RA[m]) h_iR[m]` for repeated
/// objective evaluations.
#[derive(Debug, Clone)]
pub(crate) struct Cascade {
    pub direct: Vec<Complex64>,
    pub terms: Vec<Vec<Complex64>>,
}

impl Cascade {
    pub fn new(channels: &ChannelSet) -> Result<Self> {
        channels.validate()?;
        let terms = channels
            .ues
            .iter()
            .map(|ue| {
                channels
                    .ris_to_bs
                    .iter()
                    .zip(&ue.ue_to_ris)
                    .map(|(a, r)| a.conj() * r)
                    .collect()
            })
            .collect();
        Ok(Self {
            direct: channels.ues.iter().map(|u| u.direct).collect(),
            terms,
        })
    }

    pub fn ue_count(&self) -> usize {
        self.direct.len()
    }

    pub fn element_count(&self) -> usize {
        self.terms.first().map_or(0, Vec::len)
    }

    /// Received amplitude `s_i` for every UE under `reflection`.
    pub fn amplitudes(&self, reflection: &[Complex64]) -> Vec<Complex64> {
        self.direct
            .iter()
            .zip(&self.terms)
            .map(|(d, t)| d + t.iter().zip(reflection).map(|(c, e)| c * e).sum::<Complex64>())
            .collect()
    }

    pub fn gains(&self, phases: &[f64]) -> Vec<f64> {
        let reflection: Vec<Complex64> =
            phases.iter().map(|&t| Complex64::from_polar(1.0, t)).collect();
        self.amplitudes(&reflection)
            .iter()
            .map(Complex64::norm_sqr)
            .collect()
    }

    pub fn aggregate(&self, phases: &[f64]) -> f64 {
        self.gains(phases).iter().sum()
    }

    /// Per-UE closed-form reflection vectors.
    pub fn per_ue_vectors(&self) -> Vec<Vec<Complex64>> {
        self.direct
            .iter()
            .zip(&self.terms)
            .map(|(&d, t)| {
                let target = angle(d);
                if !t.is_empty() && t.iter().all(|c| c.norm_sqr() == 0.0) {
                    vec![Complex64::new(1.0, 0.0); t.len()]
                } else {
                    t.iter()
                        .map(|&c| Complex64::from_polar(1.0, target - angle(c)))
                        .collect()
                }
            })
            .collect()
    }
}

/// `Σ_i G_i` under `configuration`.
pub fn aggregate_gain(channels: &ChannelSet, configuration: &RisConfiguration) -> Result<f64> {
    Ok(ue_gains(channels, configuration)?.iter().sum())
}

/// Per-UE overall power gain under `configuration`, in channel-set order.
pub fn ue_gains(channels: &ChannelSet, configuration: &RisConfiguration) -> Result<Vec<f64>> {
    if configuration.len() != channels.element_count() {
        return Err(Error::invalid(format!(
            "configuration has {} phases for {} elements",
            configuration.len(),
            channels.element_count()
        )));
    }
    Ok(Cascade::new(channels)?.gains(configuration.phases()))
}
