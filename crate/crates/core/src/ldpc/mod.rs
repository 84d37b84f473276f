//! Protograph LDPC codes: validation, PEG lifting, encoding and parity checks.

pub mod cache;
pub mod code;
pub mod gf2;
pub mod peg;
pub mod protograph;

pub use cache::CodeCache;
pub use code::{build_code, lift_code, LiftedCode};
pub use peg::{lift_peg, Lift};
pub use protograph::{EdgeType, Protograph};
