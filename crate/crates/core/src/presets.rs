//! Frozen code ensembles and the rate and repetition tables.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::ldpc::{build_code, CodeCache, LiftedCode, Protograph};
use crate::tx::repetition::RepetitionDD;

/// A protograph with the lift that realises it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodePreset {
    pub rate: f64,
    pub base_matrix: &'static [&'static [i64]],
    pub z: usize,
    pub lift_seed: u64,
}

impl CodePreset {
    pub fn protograph(&self) -> Result<Protograph> {
        let rows: Vec<Vec<i64>> = self.base_matrix.iter().map(|r| r.to_vec()).collect();
        Protograph::new(&rows)
    }

    pub fn n(&self) -> usize {
        self.z * self.base_matrix[0].len()
    }

    /// Lifts the code, through `cache` when given.
    pub fn build(&self, message_bits: usize, cache: Option<&CodeCache>) -> Result<Arc<LiftedCode>> {
        let proto = self.protograph()?;
        let code = match cache {
            Some(c) => c.get_or_build(&proto, self.z, self.lift_seed, message_bits)?,
            None => build_code(&proto, self.z, self.lift_seed, message_bits)?,
        };
        Ok(Arc::new(code))
    }
}

/// Rate 1/8, N = 680. Tail-biting accumulator over columns 1..8 with a
/// degree-3 information column.
pub const RATE_0125: CodePreset = CodePreset {
    rate: 0.125,
    base_matrix: &[
        &[1, 1, 0, 0, 0, 0, 0, 1],
        &[0, 1, 1, 0, 0, 0, 0, 0],
        &[1, 0, 1, 1, 0, 0, 0, 0],
        &[0, 0, 0, 1, 1, 0, 0, 0],
        &[1, 0, 0, 0, 1, 1, 0, 0],
        &[0, 0, 0, 0, 0, 1, 1, 0],
        &[0, 0, 0, 0, 0, 0, 1, 1],
    ],
    z: 85,
    lift_seed: 1,
};

/// Rate 1/4, N = 340.
pub const RATE_025: CodePreset = CodePreset {
    rate: 0.25,
    base_matrix: &[&[1, 1, 0, 1], &[1, 1, 1, 0], &[1, 0, 1, 1]],
    z: 85,
    lift_seed: 1,
};

/// Rate 2/5, N = 215 with one shortened information bit.
pub const RATE_04: CodePreset = CodePreset {
    rate: 0.4,
    base_matrix: &[&[1, 1, 1, 0, 1], &[1, 1, 1, 1, 0], &[1, 1, 0, 1, 1]],
    z: 43,
    lift_seed: 1,
};

pub const CODE_PRESETS: [CodePreset; 3] = [RATE_0125, RATE_025, RATE_04];

/// Code for an exact rate from [`CODE_PRESETS`].
pub fn code_for_rate(rate: f64) -> Result<CodePreset> {
    CODE_PRESETS
        .iter()
        .copied()
        .find(|p| (p.rate - rate).abs() < 1e-9)
        .ok_or_else(|| invalid(format!("no code preset of rate {rate}")))
}

/// Code rate used for `k_a` active users.
pub fn rate_for_users(k_a: usize) -> Result<f64> {
    match k_a {
        0..=125 => Ok(0.125),
        126..=200 => Ok(0.25),
        201..=300 => Ok(0.4),
        _ => Err(invalid(format!("no rate configured beyond 300 users (K_a = {k_a})"))),
    }
}

/// Repetition distribution used for `k_a` active users.
pub fn nu_for_users(k_a: usize) -> RepetitionDD {
    match k_a {
        225 => RepetitionDD::new(vec![0.12, 0.88]).expect("valid"),
        275 | 300 => RepetitionDD::new(vec![0.18, 0.82]).expect("valid"),
        _ => RepetitionDD::regular(2),
    }
}

/// Transmission scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    /// Rate and repetition from the tables above.
    #[default]
    Sparse,
    /// Rate-1/4 code, every bit repeated 75 times.
    Idma75,
}

impl Preset {
    /// Default `(rate, nu)` for `k_a` users.
    pub fn defaults(self, k_a: usize) -> Result<(f64, RepetitionDD)> {
        match self {
            Preset::Sparse => Ok((rate_for_users(k_a)?, nu_for_users(k_a))),
            Preset::Idma75 => Ok((0.25, RepetitionDD::regular(75))),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Sparse => "sparse",
            Preset::Idma75 => "idma75",
        })
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sparse" => Ok(Preset::Sparse),
            "idma75" => Ok(Preset::Idma75),
            other => Err(Error::Parse(format!("unknown preset {other:?}"))),
        }
    }
}
