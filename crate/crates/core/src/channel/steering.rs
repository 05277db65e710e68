use std::f64::consts::TAU;

use num_complex::Complex64;

use crate::ris::RisConfiguration;
use crate::{Error, Result};

/// Unit-modulus array response of a uniform linear RIS.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector {
    entries: Vec<Complex64>,
    direction_cosine: f64,
}

impl SteeringVector {
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn direction_cosine(&self) -> f64 {
        self.direction_cosine
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Entry `m` (0-based) is `exp(-j (2π/λ) m d φ)`.
pub fn steering_vector(
    element_count: usize,
    separation: f64,
    wavelength: f64,
    direction_cosine: f64,
) -> SteeringVector {
    let step = TAU / wavelength * separation * direction_cosine;
    let entries = (0..element_count)
        .map(|m| {
            if m == 0 {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::from_polar(1.0, -step * m as f64)
            }
        })
        .collect();
    SteeringVector {
        entries,
        direction_cosine,
    }
}

pub fn apply_steering(averaged_gain: Complex64, steering: &SteeringVector) -> Vec<Complex64> {
    steering.entries.iter().map(|s| averaged_gain * s).collect()
}

/// Overall channel power gain `|h_direct + h_ris_bsᴴ Θ h_ue_ris|²`.
pub fn overall_gain(
    direct: Complex64,
    ris_to_bs: &[Complex64],
    configuration: &RisConfiguration,
    ue_to_ris: &[Complex64],
) -> Result<f64> {
    let phases = configuration.phases();
    if ris_to_bs.len() != ue_to_ris.len() || phases.len() != ue_to_ris.len() {
        return Err(Error::invalid(format!(
            "length mismatch: ris_to_bs {}, configuration {}, ue_to_ris {}",
            ris_to_bs.len(),
            phases.len(),
            ue_to_ris.len()
        )));
    }
    let cascaded: Complex64 = ris_to_bs
        .iter()
        .zip(phases)
        .zip(ue_to_ris)
        .map(|((a, &theta), r)| a.conj() * Complex64::from_polar(1.0, theta) * r)
        .sum();
    Ok((direct + cascaded).norm_sqr())
}
