//! Monte Carlo harness: trials, PUPE estimation, minimum Eb/N0 search and
//! result tables.

pub mod config;
pub mod pupe;
pub mod report;
pub mod search;
pub mod trial;

pub use config::{default_k_b, GridSpec, SimConfig};
pub use pupe::{estimate_pupe, wilson, PupeEstimate, Z95};
pub use report::{
    curve_from_rows, curve_is_monotone, merge_results, read_results_csv, write_curve_csv, write_results_csv,
    CurvePoint, ResultRow, SchemeLabel, CURVE_HEADER, RESULT_HEADER,
};
pub use search::{find_min_ebn0, split_ratios, MonteCarlo, PointEvaluator, PointResult, SweepOutcome};
pub use trial::{count_collisions, count_misses, run_messages, run_trial, sample_messages, Scheme, TrialOutcome};
