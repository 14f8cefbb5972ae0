//! Energy-efficient uplink power control for DS/CDMA: receiver SINR models,
//! EE-optimal SINR targets, Verhulst power control with outage removal,
//! EE-SE trade-off sweeps and Monte Carlo studies.

pub mod channel;
pub mod control;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod optimizer;
pub mod spreading;
pub mod tradeoff;

pub use control::{Algorithm, ControlConfig, ControlOutcome, PowerState, Scenario};
pub use error::{Error, Result};
pub use metrics::EEParams;
pub use spreading::Receiver;
