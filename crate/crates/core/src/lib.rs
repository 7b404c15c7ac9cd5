//! Link-level simulation of an asynchronous SCMA uplink.
//!
//! Users transmit a zero-tailed random pilot followed by SCMA codewords and
//! arrive at the receiver with unknown integer delays. The receiver recovers
//! the delays per resource element by solving a complex LASSO over a
//! dictionary of shifted pilots, then aligns the received samples and runs a
//! multiuser detector (max-log MPA or parallel MCMC).
//!
//! Module map:
//!
//! * [`graph`], [`codebook`]: factor graph and per-user sparse codebooks.
//! * [`txchain`]: pilots, frames and delay padding.
//! * [`channel`]: AWGN / Rayleigh channel draws and the per-RE received signal.
//! * [`delayest`]: shift dictionaries, forward-backward LASSO, delay extraction.
//! * [`decode`]: sample alignment, log-MPA, MCMC and exhaustive max-log detectors.
//! * [`ripcheck`]: Gram/Gershgorin/RIP checks and concentration-bound Monte-Carlo.
//! * [`sim`]: experiment configuration, seeded sweeps and CSV output.
//! * [`selftest`]: the acceptance criteria as runnable checks.

pub mod channel;
pub mod codebook;
pub mod decode;
pub mod delayest;
mod error;
pub mod graph;
pub mod random;
pub mod ripcheck;
pub mod selftest;
pub mod sim;
mod serde_complex;
pub mod txchain;

pub use num_complex::Complex64 as C64;

pub use channel::{ChannelModel, ChannelRealization, ReceivedFrame};
pub use codebook::{Codebook, CodebookSet};
pub use decode::{AlignmentSchedule, LlrTable, McmcParams};
pub use delayest::{FbOptions, SelectionEstimate, ShiftMatrix};
pub use error::{Error, Result};
pub use graph::FactorGraph;
pub use ripcheck::{GramReport, RipEstimate};
pub use sim::{ExperimentConfig, TrialResult};
pub use txchain::{DelayProfile, UserFrame};
