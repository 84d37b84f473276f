//! Experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::decoder::DecodeParams;
use crate::error::{invalid, Error, Result};
use crate::presets::Preset;
use crate::tx::channel::ChannelMode;
use crate::tx::layout::FrameLayout;

/// Eb/N0 grid searched for the minimum operating point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub lo_db: f64,
    pub hi_db: f64,
    pub coarse_db: f64,
    pub fine_db: f64,
    /// `P1 / P2` ratios tried.
    pub splits: Vec<f64>,
    /// Search every `(P1, P2)` pair on the coarse grid instead of fixed ratios.
    pub full_2d: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            lo_db: 0.0,
            hi_db: 8.0,
            coarse_db: 0.5,
            fine_db: 0.25,
            splits: vec![1.0, 2.0, 4.0],
            full_2d: false,
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.lo_db <= self.hi_db) || !(self.coarse_db > 0.0) || !(self.fine_db > 0.0) {
            return Err(invalid("grid needs lo <= hi and positive steps"));
        }
        if self.splits.is_empty() || self.splits.iter().any(|&s| !(s > 0.0)) {
            return Err(invalid("split ratios must be positive"));
        }
        Ok(())
    }

    /// Coarse points `lo, lo + step, ...` up to `hi`.
    pub fn coarse_points(&self) -> Vec<f64> {
        let n = ((self.hi_db - self.lo_db) / self.coarse_db + 1e-9).floor() as usize;
        (0..=n).map(|k| self.lo_db + k as f64 * self.coarse_db).collect()
    }
}

/// Everything needed to run trials at one or more operating points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub layout: FrameLayout,
    pub k_a: usize,
    /// Nominal population; only checked against `k_a`.
    pub k_tot: Option<usize>,
    /// Detector list size, `ceil(1.1 k_a)` when absent.
    pub k_b: Option<usize>,
    /// PUPE target, 0.05 in AWGN and 0.1 with fading when absent.
    pub epsilon: Option<f64>,
    pub channel: ChannelMode,
    pub preset: Preset,
    /// Overrides the rate table.
    pub rate: Option<f64>,
    /// Overrides the repetition table, e.g. `[0.12, 0.88]`.
    pub nu: Option<Vec<f64>>,
    pub seed: u64,
    pub trials: usize,
    pub ebn0_db: f64,
    /// `P1 / P2` at a single operating point.
    pub split_ratio: f64,
    pub grid: GridSpec,
    pub decoder: DecodeParams,
    pub sensing_seed: u64,
    pub interleaver_seed: u64,
    /// Directory for lifted codes.
    pub code_cache: Option<PathBuf>,
    /// Stop a point once it provably misses the target.
    pub early_abort: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            layout: FrameLayout::default(),
            k_a: 25,
            k_tot: None,
            k_b: None,
            epsilon: None,
            channel: ChannelMode::Awgn,
            preset: Preset::Sparse,
            rate: None,
            nu: None,
            seed: 1,
            trials: 200,
            ebn0_db: 3.0,
            split_ratio: 1.0,
            grid: GridSpec::default(),
            decoder: DecodeParams::default(),
            sensing_seed: 0x5EED,
            interleaver_seed: 0x1D3A,
            code_cache: None,
            early_abort: true,
        }
    }
}

impl SimConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: SimConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn k_b(&self) -> usize {
        self.k_b.unwrap_or_else(|| default_k_b(self.k_a))
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon.unwrap_or(match self.channel {
            ChannelMode::Awgn => 0.05,
            ChannelMode::Rayleigh => 0.1,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.layout.validate()?;
        self.grid.validate()?;
        if let Some(k_tot) = self.k_tot {
            if self.k_a > k_tot {
                return Err(invalid(format!("K_a = {} exceeds K_tot = {k_tot}", self.k_a)));
            }
        }
        let eps = self.epsilon();
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(invalid(format!("epsilon must lie in (0, 1], got {eps}")));
        }
        if self.trials == 0 {
            return Err(invalid("at least one trial is needed"));
        }
        if u64::try_from(self.k_b()).map_or(true, |k| k > self.layout.m_p()) {
            return Err(invalid("K_b exceeds the number of preambles"));
        }
        if !(self.split_ratio > 0.0) {
            return Err(invalid("split ratio must be positive"));
        }
        Ok(())
    }
}

/// `ceil(1.1 k_a)` in exact integer arithmetic.
pub fn default_k_b(k_a: usize) -> usize {
    (11 * k_a).div_ceil(10)
}
