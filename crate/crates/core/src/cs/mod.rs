//! Compressed-sensing preamble codebook and detector.

pub mod omp;
pub mod sensing;

pub use omp::{cs_detect, cs_encode, CsDetection, Detection};
pub use sensing::SensingMatrix;
