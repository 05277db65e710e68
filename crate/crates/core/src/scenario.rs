//! Scenario configuration and the built-in catalog of configurations I–VIII.
//!
//! Scenario files are flat TOML key/value tables, for example:
//!
//! ```toml
//! config_id = "custom"
//! embb_ues = [1, 2]
//! urllc_ues = [3]
//! embb_bandwidth_mhz = 8.0
//! urllc_bandwidth_mhz = 2.0
//! ris_elements = 100
//! xapp_enabled = false
//! duration_s = 60
//! seed = 7
//! embb_policy = "WF"
//! urllc_policy = "RR"
//! kpm_period_ms = 100
//! tx_power_dbm = 12.0
//! ```
//!
//! Only `embb_ues` (or `urllc_ues`) and the matching bandwidth are required;
//! the rest default as in [`ScenarioFile`].

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::CATALOG_UE_RIS_DISTANCES;
use crate::mac::{SchedulingPolicy, Slice, SlicingConfig, TOTAL_PRBS};
use crate::metrics::DEFAULT_KPM_PERIOD_MS;
use crate::{Error, Result};

pub const CATALOG_IDS: [&str; 8] = ["I", "II", "III", "IV", "V", "VI", "VII", "VIII"];
pub const DEFAULT_DURATION_S: u64 = 60;
pub const DEFAULT_SEED: u64 = 1;
/// UE transmit power. Chosen so that the catalog spans the CQI range where
/// the RIS changes link adaptation (see the README).
pub const DEFAULT_TX_POWER_DBM: f64 = 12.0;
/// Largest RIS accepted in custom scenarios.
pub const MAX_RIS_ELEMENTS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub config_id: String,
    pub embb_ues: Vec<u32>,
    pub urllc_ues: Vec<u32>,
    pub embb_bandwidth_mhz: f64,
    pub urllc_bandwidth_mhz: f64,
    pub ris_elements: usize,
    pub xapp_enabled: bool,
    pub duration_s: u64,
    pub seed: u64,
    pub embb_policy: SchedulingPolicy,
    pub urllc_policy: SchedulingPolicy,
    pub kpm_period_ms: u32,
    pub tx_power_dbm: f64,
}

/// On-disk form of [`ScenarioConfig`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default = "default_config_id")]
    pub config_id: String,
    #[serde(default)]
    pub embb_ues: Vec<u32>,
    #[serde(default)]
    pub urllc_ues: Vec<u32>,
    #[serde(default)]
    pub embb_bandwidth_mhz: f64,
    #[serde(default)]
    pub urllc_bandwidth_mhz: f64,
    #[serde(default)]
    pub ris_elements: usize,
    #[serde(default)]
    pub xapp_enabled: bool,
    #[serde(default = "default_duration")]
    pub duration_s: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_policy")]
    pub embb_policy: String,
    #[serde(default = "default_policy")]
    pub urllc_policy: String,
    #[serde(default = "default_kpm_period")]
    pub kpm_period_ms: u32,
    #[serde(default = "default_tx_power")]
    pub tx_power_dbm: f64,
}

fn default_config_id() -> String {
    "custom".into()
}
fn default_duration() -> u64 {
    DEFAULT_DURATION_S
}
fn default_seed() -> u64 {
    DEFAULT_SEED
}
fn default_policy() -> String {
    "RR".into()
}
fn default_kpm_period() -> u32 {
    DEFAULT_KPM_PERIOD_MS
}
fn default_tx_power() -> f64 {
    DEFAULT_TX_POWER_DBM
}

/// `round(bandwidth / 10 MHz × 50)`.
pub fn prb_quota(bandwidth_mhz: f64) -> u32 {
    (bandwidth_mhz / 10.0 * f64::from(TOTAL_PRBS)).round() as u32
}

fn field(field: &'static str, message: impl Into<String>) -> Error {
    Error::Scenario {
        field,
        message: message.into(),
    }
}

impl ScenarioConfig {
    /// A row of the built-in catalog.
    pub fn catalog(id: &str) -> Result<Self> {
        use SchedulingPolicy::{RoundRobin as RR, WaterFilling as WF};
        let id = id.to_ascii_uppercase();
        let (embb, urllc, bw, m, xapp, embb_policy): (&[u32], &[u32], (f64, f64), usize, bool, _) =
            match id.as_str() {
                "I" => (&[5], &[], (3.6, 0.0), 0, false, RR),
                "II" => (&[5], &[], (3.6, 0.0), 100, false, RR),
                "III" => (&[1], &[], (3.6, 0.0), 10, false, RR),
                "IV" => (&[1], &[], (3.6, 0.0), 1000, false, RR),
                "V" => (&[1, 2], &[3, 4, 5], (5.0, 5.0), 0, false, WF),
                "VI" => (&[1, 2], &[3, 4, 5], (5.0, 5.0), 100, false, WF),
                "VII" => (&[1, 2], &[3, 4, 5], (9.0, 1.0), 0, true, RR),
                "VIII" => (&[1, 2], &[3, 4, 5], (9.0, 1.0), 100, true, RR),
                _ => return Err(field("config_id", format!("{id:?} is not one of I..VIII"))),
            };
        Ok(Self {
            config_id: id,
            embb_ues: embb.to_vec(),
            urllc_ues: urllc.to_vec(),
            embb_bandwidth_mhz: bw.0,
            urllc_bandwidth_mhz: bw.1,
            ris_elements: m,
            xapp_enabled: xapp,
            duration_s: DEFAULT_DURATION_S,
            seed: DEFAULT_SEED,
            embb_policy,
            urllc_policy: RR,
            kpm_period_ms: DEFAULT_KPM_PERIOD_MS,
            tx_power_dbm: DEFAULT_TX_POWER_DBM,
        })
    }

    pub fn catalog_all() -> Vec<Self> {
        CATALOG_IDS
            .iter()
            .map(|id| Self::catalog(id).expect("catalog id"))
            .collect()
    }

    /// A catalog id (case-insensitive) or the path of a scenario file.
    pub fn load(spec: &str) -> Result<Self> {
        if CATALOG_IDS.contains(&spec.to_ascii_uppercase().as_str()) {
            return Self::catalog(spec);
        }
        let path = Path::new(spec);
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Format { message, .. } => Error::Format {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Format {
            path: "<scenario>".into(),
            message: e.to_string(),
        })?;
        Self::try_from(file)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&ScenarioFile::from(self)).expect("scenario serialises")
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_duration(mut self, duration_s: u64) -> Self {
        self.duration_s = duration_s;
        self
    }

    pub fn slicing(&self) -> Result<SlicingConfig> {
        SlicingConfig::new(prb_quota(self.embb_bandwidth_mhz), prb_quota(self.urllc_bandwidth_mhz))
    }

    /// Every UE id in ascending order with its slice.
    pub fn ue_slices(&self) -> BTreeMap<u32, Slice> {
        self.embb_ues
            .iter()
            .map(|&u| (u, Slice::Embb))
            .chain(self.urllc_ues.iter().map(|&u| (u, Slice::Urllc)))
            .collect()
    }

    pub fn ue_ids(&self) -> Vec<u32> {
        self.ue_slices().into_keys().collect()
    }

    pub fn default_policies(&self) -> BTreeMap<Slice, SchedulingPolicy> {
        BTreeMap::from([(Slice::Embb, self.embb_policy), (Slice::Urllc, self.urllc_policy)])
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_id.trim().is_empty() {
            return Err(field("config_id", "must not be empty"));
        }
        for (name, bw) in [
            ("embb_bandwidth_mhz", self.embb_bandwidth_mhz),
            ("urllc_bandwidth_mhz", self.urllc_bandwidth_mhz),
        ] {
            if !(bw >= 0.0 && bw.is_finite()) {
                return Err(field(name, format!("{bw} MHz must be finite and ≥ 0")));
            }
        }
        let total = prb_quota(self.embb_bandwidth_mhz) + prb_quota(self.urllc_bandwidth_mhz);
        if total > TOTAL_PRBS {
            return Err(field(
                "urllc_bandwidth_mhz",
                format!("slice quotas total {total} PRBs, more than {TOTAL_PRBS}"),
            ));
        }
        let max_id = CATALOG_UE_RIS_DISTANCES.len() as u32;
        let mut seen = std::collections::BTreeSet::new();
        for (name, ids) in [("embb_ues", &self.embb_ues), ("urllc_ues", &self.urllc_ues)] {
            for &id in ids {
                if !(1..=max_id).contains(&id) {
                    return Err(field(name, format!("UE id {id} outside 1..={max_id}")));
                }
                if !seen.insert(id) {
                    return Err(field(name, format!("UE id {id} listed twice")));
                }
            }
        }
        if seen.is_empty() {
            return Err(field("embb_ues", "scenario has no UEs"));
        }
        if self.ris_elements > MAX_RIS_ELEMENTS {
            return Err(field(
                "ris_elements",
                format!("{} exceeds {MAX_RIS_ELEMENTS}", self.ris_elements),
            ));
        }
        if self.kpm_period_ms == 0 {
            return Err(field("kpm_period_ms", "must be at least 1 ms"));
        }
        if !self.tx_power_dbm.is_finite() {
            return Err(field("tx_power_dbm", "must be finite"));
        }
        Ok(())
    }
}

impl TryFrom<ScenarioFile> for ScenarioConfig {
    type Error = Error;

    fn try_from(f: ScenarioFile) -> Result<Self> {
        let policy = |name: &'static str, s: &str| {
            s.parse::<SchedulingPolicy>()
                .map_err(|_| field(name, format!("{s:?} is not RR, WF or PF")))
        };
        let cfg = Self {
            embb_policy: policy("embb_policy", &f.embb_policy)?,
            urllc_policy: policy("urllc_policy", &f.urllc_policy)?,
            config_id: f.config_id,
            embb_ues: f.embb_ues,
            urllc_ues: f.urllc_ues,
            embb_bandwidth_mhz: f.embb_bandwidth_mhz,
            urllc_bandwidth_mhz: f.urllc_bandwidth_mhz,
            ris_elements: f.ris_elements,
            xapp_enabled: f.xapp_enabled,
            duration_s: f.duration_s,
            seed: f.seed,
            kpm_period_ms: f.kpm_period_ms,
            tx_power_dbm: f.tx_power_dbm,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl From<&ScenarioConfig> for ScenarioFile {
    fn from(c: &ScenarioConfig) -> Self {
        Self {
            config_id: c.config_id.clone(),
            embb_ues: c.embb_ues.clone(),
            urllc_ues: c.urllc_ues.clone(),
            embb_bandwidth_mhz: c.embb_bandwidth_mhz,
            urllc_bandwidth_mhz: c.urllc_bandwidth_mhz,
            ris_elements: c.ris_elements,
            xapp_enabled: c.xapp_enabled,
            duration_s: c.duration_s,
            seed: c.seed,
            embb_policy: c.embb_policy.to_string(),
            urllc_policy: c.urllc_policy.to_string(),
            kpm_period_ms: c.kpm_period_ms,
            tx_power_dbm: c.tx_power_dbm,
        }
    }
}

/// One line of the catalog table.
impl fmt::Display for ScenarioConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let ids = |v: &[u32]| {
            if v.is_empty() {
                "-".to_string()
            } else {
                v.iter().map(u32::to_string).collect::<Vec<_>>().join(",")
            }
        };
        write!(
            f,
            "{:<6} {:<10} {:<10} {:>5} / {:<5} {:>6} / {:<6} {:>6} {:<5}",
            self.config_id,
            ids(&self.embb_ues),
            ids(&self.urllc_ues),
            self.embb_bandwidth_mhz,
            self.urllc_bandwidth_mhz,
            prb_quota(self.embb_bandwidth_mhz),
            prb_quota(self.urllc_bandwidth_mhz),
            self.ris_elements,
            if self.xapp_enabled { "yes" } else { "no" },
        )
    }
}
