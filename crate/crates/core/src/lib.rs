//! Sparse IDMA for unsourced random access over the Gaussian multiple access
//! channel.
//!
//! Each active user splits its message into a preamble, sent as a column of a
//! partial-DFT sensing matrix, and a payload, LDPC encoded, repeated, zero
//! padded and interleaved over the remaining channel uses. The receiver
//! detects preambles by orthogonal matching pursuit and decodes all payloads
//! jointly on one Tanner graph whose MAC nodes marginalise the superposition.
//!
//! Besides the transceiver the crate carries a Gaussian-approximation density
//! evolution for the multi-user ensemble, a differential-evolution code
//! optimiser and a Monte Carlo harness that searches the minimum Eb/N0 meeting
//! a per-user error target.

pub mod cs;
pub mod de;
pub mod decoder;
pub mod error;
pub mod ldpc;
pub mod optimizer;
pub mod presets;
pub mod rng;
pub mod sim;
pub mod tx;

pub use error::{Error, Result};
