//! Cycle-stepped model of the clustered core: an out-of-order primary cluster,
//! an in-order I-pipe for instructions tagged ineffectual, and the misspeculation
//! detection and recovery engine that verifies them window by window.

mod config;
mod sim;
mod stats;

pub use config::{ConfigError, Latencies, Mode, PipelineConfig, Resources};
pub use sim::{simulate, SimError, SimResult, Simulator};
pub use stats::{kind_index, Cause, CycleRecord, Event, SimStats};
