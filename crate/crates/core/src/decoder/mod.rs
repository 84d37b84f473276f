//! Joint message-passing decoder.

pub mod bp;
pub mod graph;
pub mod kernels;

pub use bp::{decode_joint, write_trace_csv, BranchOutcome, DecodeParams, DecodeResult, TraceRow};
pub use graph::{Branch, JointGraph};
pub use kernels::{check_node_update, mac_node_update, pairwise_h, variable_node_update, DEFAULT_DP_MAX_DEGREE};
