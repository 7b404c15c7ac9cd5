//! Multiuser detection of aligned asynchronous samples.
//!
//! Once delays are known every received sample `n` is a noisy sum of one
//! symbol from each user active at `n`. Pilot symbols are known and are
//! cancelled; the remaining data symbols form a small detection problem
//! ([`ActiveContext`]) solved per sample by one of three detectors:
//!
//! * [`log_mpa`]: max-log message passing on the reduced factor graph,
//! * [`mcmc_decode`]: the parallel-chain MCMC sampler,
//! * [`map_oracle`]: exhaustive max-log reference.
//!
//! Bit convention throughout: bit 0 maps to +1, and an LLR is positive when
//! bit 0 is more likely.

mod align;
mod frame;
mod mcmc;
mod mpa;
mod oracle;
mod problem;

pub use align::{align, AlignmentSchedule, Phase, ScheduleEntry};
pub use frame::{decode_frame, llrs_to_bits, Detector, LlrTable};
pub use mcmc::{mcmc_decode, McmcParams};
pub use mpa::{log_mpa, MpaOutput, DEFAULT_MPA_ITERATIONS};
pub use oracle::{map_oracle, ORACLE_GUARD};
pub use problem::{ActiveContext, ActiveUser, SampleLlrs};

/// `1 / sigma^2`, or 1 when the noise variance is zero so that metrics
/// degrade to plain negative squared distances.
pub(crate) fn metric_scale(sigma2: f64) -> f64 {
    if sigma2 > 0.0 {
        1.0 / sigma2
    } else {
        1.0
    }
}
