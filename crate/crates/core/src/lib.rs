//! Simulation of simultaneous transmit and receive (full duplex) in
//! 802.11 WLANs.
//!
//! Stations contend with legacy CSMA/CA or with CSMA/ECA, whose
//! deterministic post-success backoff lets the AP predict a station's next
//! uplink frame and pre-arm a concurrent downlink frame: back to the same
//! station (BFD) or to a station that cannot hear the sender (UFD). Stations
//! that can hear the sender may be made eligible for UFD by temporarily
//! raising their carrier-sense threshold.
//!
//! The [`engine`] runs slot-synchronous multi-cell simulations in legacy
//! and STR mode over the same drop; [`metrics`] reduces paired runs to the
//! STR gain `throughput(STR) / throughput(legacy)`.

pub mod channel;
pub mod config;
pub mod duplex;
pub mod engine;
pub mod error;
pub mod mac;
pub mod metrics;
pub mod sensitivity;
pub mod sweep;
pub mod topology;

pub use config::{load_config, parse_config};
pub use engine::{monte_carlo, run, run_paired, Mode, SimConfig, SimLength, SimResult};
pub use error::{Error, Result};
