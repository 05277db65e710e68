//! Per-link channel generation for a single RIS, single BS topology.
//!
//! Every link goes through the same flow: draw multipath components, combine
//! them coherently, average over independent realizations, and (for the two
//! RIS-touching links) spread the averaged gain across the elements with the
//! array steering vector. UE→BS links are NLoS; UE→RIS and RIS→BS are LoS.

mod geometry;
mod mpc;
mod steering;

use std::fmt;
use std::path::Path;

use num_complex::Complex64;

pub use geometry::{
    NodeGeometry, Point3, CATALOG_BS, CATALOG_CARRIER_HZ, CATALOG_RIS, CATALOG_UE_RIS_DISTANCES,
};
pub use mpc::{
    combine_mpcs, wrap_phase, AveragingMode, ChannelModel, LinkSpec, MultipathComponent,
    PathLossModel,
};
pub use steering::{apply_steering, overall_gain, steering_vector, SteeringVector};

use crate::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub(crate) const STREAM_PLACEMENT: u64 = 0x01;
const STREAM_RIS_TO_BS: u64 = 0x02;
const STREAM_DIRECT: u64 = 0x100;
const STREAM_UE_TO_RIS: u64 = 0x200;
pub(crate) const STREAM_TRAFFIC: u64 = 0x300;
pub(crate) const STREAM_OPTIMIZER: u64 = 0x400;

/// Mixes a run seed with a stream tag (splitmix64 finalizer) so that every
/// link and traffic source gets an independent, reproducible RNG stream.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkKind {
    UeToBs,
    UeToRis,
    RisToBs,
}

impl LinkKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinkKind::UeToBs => "UE_to_BS",
            LinkKind::UeToRis => "UE_to_RIS",
            LinkKind::RisToBs => "RIS_to_BS",
        }
    }

    pub fn touches_ris(&self) -> bool {
        !matches!(self, LinkKind::UeToBs)
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LinkGain {
    Scalar(Complex64),
    Elements(Vec<Complex64>),
}

/// Final gain of one link. UE→BS carries a scalar, RIS-touching links carry
/// one entry per RIS element.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkChannel {
    pub kind: LinkKind,
    pub ue_id: Option<u32>,
    pub gain: LinkGain,
    pub los: bool,
}

/// Channels seen by one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeChannel {
    pub ue_id: u32,
    /// `h_iA`, the direct UE→BS gain.
    pub direct: Complex64,
    /// `h_iR`, per-element UE→RIS gains.
    pub ue_to_ris: Vec<Complex64>,
}

/// The per-UE channel set for one deployment: a shared RIS→BS vector plus
/// each UE's direct and UE→RIS gains.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelSet {
    /// `h_RA`, per-element RIS→BS gains.
    pub ris_to_bs: Vec<Complex64>,
    pub ues: Vec<UeChannel>,
}

impl ChannelSet {
    pub fn element_count(&self) -> usize {
        self.ris_to_bs.len()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.element_count();
        for ue in &self.ues {
            if ue.ue_to_ris.len() != m {
                return Err(Error::invalid(format!(
                    "UE {} has {} RIS element gains, expected {m}",
                    ue.ue_id,
                    ue.ue_to_ris.len()
                )));
            }
        }
        Ok(())
    }

    /// Flattens the set into [`LinkChannel`] values (RIS→BS first).
    pub fn links(&self) -> Vec<LinkChannel> {
        let mut out = vec![LinkChannel {
            kind: LinkKind::RisToBs,
            ue_id: None,
            gain: LinkGain::Elements(self.ris_to_bs.clone()),
            los: true,
        }];
        for ue in &self.ues {
            out.push(LinkChannel {
                kind: LinkKind::UeToBs,
                ue_id: Some(ue.ue_id),
                gain: LinkGain::Scalar(ue.direct),
                los: false,
            });
            out.push(LinkChannel {
                kind: LinkKind::UeToRis,
                ue_id: Some(ue.ue_id),
                gain: LinkGain::Elements(ue.ue_to_ris.clone()),
                los: true,
            });
        }
        out
    }

    /// Writes `link_kind,ue_id,element_index,real,imag`. Scalar links use
    /// element index 0; the shared RIS→BS link has an empty `ue_id`.
    pub fn export_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
        w.write_record(["link_kind", "ue_id", "element_index", "real", "imag"])
            .map_err(|e| csv_error(path, e))?;
        for link in self.links() {
            let ue = link.ue_id.map(|u| u.to_string()).unwrap_or_default();
            let gains: Vec<Complex64> = match &link.gain {
                LinkGain::Scalar(g) => vec![*g],
                LinkGain::Elements(v) => v.clone(),
            };
            for (m, g) in gains.iter().enumerate() {
                w.write_record([
                    link.kind.as_str().to_string(),
                    ue.clone(),
                    m.to_string(),
                    format!("{:e}", g.re),
                    format!("{:e}", g.im),
                ])
                .map_err(|e| csv_error(path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

pub(crate) fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Format {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Runs the full generation flow for every UE in `geometry`.
pub fn generate_channels(
    model: &ChannelModel,
    geometry: &NodeGeometry,
    seed: u64,
) -> Result<ChannelSet> {
    geometry.validate()?;
    let m = geometry.ris_element_count;
    let wavelength = geometry.wavelength();
    let d = geometry.element_separation;
    let realizations = model.realization_count;

    let ris_to_bs = if m > 0 {
        let link = model.link(LinkKind::RisToBs, geometry.ris_to_bs_distance(), true);
        let avg = model.average_realizations(&link, realizations, derive_seed(seed, STREAM_RIS_TO_BS))?;
        let cosine = geometry.direction_cosine(&geometry.bs_position);
        apply_steering(avg, &steering_vector(m, d, wavelength, cosine))
    } else {
        Vec::new()
    };

    let mut ues = Vec::with_capacity(geometry.ue_positions.len());
    for (ue_id, pos) in &geometry.ue_positions {
        let id = u64::from(*ue_id);
        let direct_link = model.link(LinkKind::UeToBs, pos.distance(&geometry.bs_position), false);
        let direct =
            model.average_realizations(&direct_link, realizations, derive_seed(seed, STREAM_DIRECT + id))?;

        let ue_to_ris = if m > 0 {
            let link = model.link(
                LinkKind::UeToRis,
                pos.distance(&geometry.ris_reference_position),
                true,
            );
            let avg =
                model.average_realizations(&link, realizations, derive_seed(seed, STREAM_UE_TO_RIS + id))?;
            let cosine = geometry.direction_cosine(pos);
            apply_steering(avg, &steering_vector(m, d, wavelength, cosine))
        } else {
            Vec::new()
        };
        ues.push(UeChannel {
            ue_id: *ue_id,
            direct,
            ue_to_ris,
        });
    }
    Ok(ChannelSet { ris_to_bs, ues })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(m: usize, seed: u64) -> ChannelSet {
        let g = NodeGeometry::catalog(&[1, 2, 3, 4, 5], m, seed).unwrap();
        generate_channels(&ChannelModel::new(CATALOG_CARRIER_HZ), &g, seed).unwrap()
    }

    #[test]
    fn shapes_follow_element_count() {
        for m in [0, 10, 100] {
            let set = catalog(m, 1);
            assert_eq!(set.ris_to_bs.len(), m);
            assert!(set.ues.iter().all(|u| u.ue_to_ris.len() == m));
            set.validate().unwrap();
        }
    }

    #[test]
    fn identical_seeds_reproduce_bit_for_bit() {
        assert_eq!(catalog(100, 9), catalog(100, 9));
        assert_ne!(catalog(100, 9), catalog(100, 10));
    }

    #[test]
    fn direct_links_do_not_depend_on_element_count() {
        let a = catalog(0, 4);
        let b = catalog(1000, 4);
        for (x, y) in a.ues.iter().zip(&b.ues) {
            assert_eq!(x.direct, y.direct);
        }
    }

    #[test]
    fn element_gains_have_constant_magnitude() {
        let set = catalog(64, 2);
        let mag = set.ris_to_bs[0].norm();
        assert!(set.ris_to_bs.iter().all(|g| (g.norm() / mag - 1.0).abs() < 1e-12));
    }

    #[test]
    fn link_kinds_carry_expected_shapes() {
        let set = catalog(8, 3);
        let links = set.links();
        assert_eq!(links.len(), 1 + 2 * 5);
        for l in links {
            match (&l.gain, l.kind.touches_ris()) {
                (LinkGain::Scalar(_), false) => assert!(!l.los),
                (LinkGain::Elements(v), true) => {
                    assert_eq!(v.len(), 8);
                    assert!(l.los);
                }
                _ => panic!("unexpected shape for {}", l.kind),
            }
        }
    }

    #[test]
    fn export_writes_one_row_per_entry() {
        let set = catalog(4, 5);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("channels.csv");
        set.export_csv(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "link_kind,ue_id,element_index,real,imag");
        assert_eq!(lines.len(), 1 + 4 + 5 * (1 + 4));
        assert!(lines[1].starts_with("RIS_to_BS,,0,"));
    }

    #[test]
    fn derived_seeds_differ_per_stream() {
        let a = derive_seed(42, STREAM_DIRECT + 1);
        let b = derive_seed(42, STREAM_DIRECT + 2);
        let c = derive_seed(43, STREAM_DIRECT + 1);
        assert!(a != b && a != c && b != c);
    }
}
