//! Trace-driven simulator of a phase-change main memory under bit-flip
//! reducing write encodings: plain write, differential write, Flip-N-Write
//! and WIRE (frequent-value codebook plus per-partition rotation), with
//! optional wear leveling, and reports of flips, energy, intra-block wear
//! variation and lifetime.

pub mod array;
pub mod bits;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod mfv;
pub mod schemes;
pub mod sim;
pub mod trace;
pub mod wearlevel;

pub use array::{MetadataCache, PcmBlock, WriteOutcome};
pub use config::{FnwConfig, MfvConfig, PcmConfig, SimConfig, WearConfig, WireConfig};
pub use error::{Result, SimError};
pub use metrics::RunReport;
pub use schemes::SchemeId;
pub use sim::Simulation;
pub use trace::TraceEvent;
