use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use super::SPEED_OF_LIGHT;
use crate::{Error, Result};

/// A point in the deployment's Cartesian frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Base station, RIS reference element and UE positions plus the radio
/// parameters needed to build steering vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeGeometry {
    pub bs_position: Point3,
    pub ris_reference_position: Point3,
    /// `(ue_id, position)` pairs, sorted by id.
    pub ue_positions: Vec<(u32, Point3)>,
    pub carrier_frequency: f64,
    pub element_separation: f64,
    pub ris_element_count: usize,
}

/// BS position used by the built-in scenarios.
pub const CATALOG_BS: Point3 = Point3::new(25.0, 50.0, 25.0);
/// RIS reference element position used by the built-in scenarios.
pub const CATALOG_RIS: Point3 = Point3::new(30.0, 40.0, 20.0);
/// UE-to-RIS distances for UE ids 1..=5.
pub const CATALOG_UE_RIS_DISTANCES: [f64; 5] = [20.0, 27.0, 37.0, 58.0, 66.0];
pub const CATALOG_CARRIER_HZ: f64 = 5.9e9;

impl NodeGeometry {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_frequency
    }

    /// Builds the catalog deployment: every catalog UE sits at its listed
    /// distance from the RIS reference point, at RIS height, with a seeded
    /// uniform azimuth. Positions of all five UEs are drawn regardless of
    /// which ids are kept, so a UE lands on the same spot for a given seed
    /// in every scenario.
    pub fn catalog(ue_ids: &[u32], ris_element_count: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(super::derive_seed(seed, super::STREAM_PLACEMENT));
        let azimuths: Vec<f64> = CATALOG_UE_RIS_DISTANCES
            .iter()
            .map(|_| rng.random::<f64>() * std::f64::consts::TAU)
            .collect();

        let mut ids = ue_ids.to_vec();
        ids.sort_unstable();
        let mut ue_positions = Vec::with_capacity(ids.len());
        for id in ids {
            let idx = (id as usize)
                .checked_sub(1)
                .filter(|i| *i < CATALOG_UE_RIS_DISTANCES.len())
                .ok_or_else(|| Error::invalid(format!("catalog has no UE with id {id}")))?;
            let (r, az) = (CATALOG_UE_RIS_DISTANCES[idx], azimuths[idx]);
            let pos = Point3::new(
                CATALOG_RIS.x + r * az.cos(),
                CATALOG_RIS.y + r * az.sin(),
                CATALOG_RIS.z,
            );
            ue_positions.push((id, pos));
        }

        let wavelength = SPEED_OF_LIGHT / CATALOG_CARRIER_HZ;
        let geometry = Self {
            bs_position: CATALOG_BS,
            ris_reference_position: CATALOG_RIS,
            ue_positions,
            carrier_frequency: CATALOG_CARRIER_HZ,
            element_separation: wavelength / 2.0,
            ris_element_count,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.carrier_frequency > 0.0) {
            return Err(Error::invalid("carrier frequency must be positive"));
        }
        if !(self.element_separation > 0.0) {
            return Err(Error::invalid("element separation must be positive"));
        }
        let mut nodes = vec![("BS".to_string(), self.bs_position), ("RIS".to_string(), self.ris_reference_position)];
        nodes.extend(self.ue_positions.iter().map(|(id, p)| (format!("UE {id}"), *p)));
        for (i, (na, a)) in nodes.iter().enumerate() {
            for (nb, b) in &nodes[i + 1..] {
                if !(a.distance(b) > 0.0) {
                    return Err(Error::invalid(format!("{na} and {nb} are co-located")));
                }
            }
        }
        Ok(())
    }

    pub fn ris_to_bs_distance(&self) -> f64 {
        self.ris_reference_position.distance(&self.bs_position)
    }

    /// Cosine of the angle between the RIS array axis (+x) and the
    /// direction from the RIS reference element toward `target`.
    pub fn direction_cosine(&self, target: &Point3) -> f64 {
        let d = self.ris_reference_position.distance(target);
        ((target.x - self.ris_reference_position.x) / d).clamp(-1.0, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_distances_are_exact() {
        let g = NodeGeometry::catalog(&[1, 2, 3, 4, 5], 100, 3).unwrap();
        for ((id, p), want) in g.ue_positions.iter().zip(CATALOG_UE_RIS_DISTANCES) {
            let d = p.distance(&CATALOG_RIS);
            assert!((d - want).abs() < 1e-9, "UE {id}: {d}");
            assert_eq!(p.z, CATALOG_RIS.z);
        }
        assert!((g.ris_to_bs_distance() - 150f64.sqrt()).abs() < 1e-12);
        assert!((g.element_separation - g.wavelength() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn placement_is_independent_of_the_selected_subset() {
        let all = NodeGeometry::catalog(&[1, 2, 3, 4, 5], 0, 11).unwrap();
        let one = NodeGeometry::catalog(&[5], 0, 11).unwrap();
        assert_eq!(one.ue_positions[0], all.ue_positions[4]);
    }

    #[test]
    fn unknown_ue_is_rejected() {
        assert!(NodeGeometry::catalog(&[6], 0, 0).is_err());
        assert!(NodeGeometry::catalog(&[0], 0, 0).is_err());
    }

    #[test]
    fn co_located_nodes_are_rejected() {
        let mut g = NodeGeometry::catalog(&[1], 10, 0).unwrap();
        g.ue_positions[0].1 = g.bs_position;
        assert!(g.validate().is_err());
    }

    #[test]
    fn direction_cosine_points_along_axis() {
        let mut g = NodeGeometry::catalog(&[1], 10, 0).unwrap();
        g.ris_reference_position = Point3::new(0.0, 0.0, 0.0);
        assert!((g.direction_cosine(&Point3::new(5.0, 0.0, 0.0)) - 1.0).abs() < 1e-15);
        assert!(g.direction_cosine(&Point3::new(0.0, 3.0, 0.0)).abs() < 1e-15);
        assert!((g.direction_cosine(&Point3::new(-2.0, 0.0, 0.0)) + 1.0).abs() < 1e-15);
    }
}
