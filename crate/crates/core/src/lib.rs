//! Deterministic system-level simulator of a RIS-assisted, sliced radio access
//! network with a near-real-time control loop.
//!
//! The crate is organised bottom-up:
//!
//! - [`channel`]: seeded multipath generation, steering vectors and the
//!   cascaded UE→RIS→BS power gain.
//! - [`ris`]: RIS phase-shift optimisation (closed-form alignment, weighted
//!   multi-UE combination, brute-force oracle).
//! - [`traffic`]: slice traffic sources and RLC buffer accounting.
//! - [`mac`]: link adaptation and the RR / WF / PF sliced PRB scheduler.
//! - [`e2`]: the E2-lite wire protocol, the RAN agent and the `Sched` xApp.
//! - [`metrics`]: KPM windows, PRB ratio, summaries and CSV export.
//! - [`scenario`] and [`sim`]: the configuration catalog and the experiment
//!   runner used by the `risran` binary.

pub mod channel;
pub mod e2;
mod error;
pub mod mac;
pub mod metrics;
pub mod ris;
pub mod scenario;
pub mod sim;
pub mod traffic;

pub use error::{Error, Result};
pub use mac::{SchedulingPolicy, Slice};
