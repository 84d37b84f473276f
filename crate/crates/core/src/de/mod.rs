//! Density evolution under the Gaussian approximation.

pub mod evolve;
pub mod functions;
pub mod profile;
pub mod quadrature;

pub use evolve::{
    de_evolve, de_threshold, write_threshold_csv, DeOutcome, NoiseMap, Threshold, ThresholdConfig, ThresholdRow,
    DEFAULT_TARGET,
};
pub use functions::{j_fun, j_inv, phi_fun, tables, Tables};
pub use profile::{mac_degree_profile, LoadModel, MacDegreeProfile};
