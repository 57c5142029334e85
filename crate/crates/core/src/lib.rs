//! Simulation of a core that detects ineffectual instructions after commit and
//! executes them in a separate in-order pipe.

pub mod detect;
pub mod fixtures;
pub mod harness;
pub mod oracle;
pub mod pipeline;
pub mod predictor;
pub mod trace;
