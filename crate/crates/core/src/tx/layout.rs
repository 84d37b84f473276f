//! Frame layout, message split and energy accounting.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Scalar frame parameters shared by every user.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameLayout {
    /// Message bits `B`.
    pub b: u32,
    /// Preamble bits `B_p`.
    pub b_p: u32,
    /// Channel uses `N_t`.
    pub n_t: usize,
    /// Preamble channel uses `N_p`.
    pub n_p: usize,
    /// Per-use preamble power `P1`.
    pub p1: f64,
    /// Average per-use power over the coding segment `P2`.
    pub p2: f64,
}

impl Default for FrameLayout {
    fn default() -> Self {
        Self {
            b: 100,
            b_p: 15,
            n_t: 30_000,
            n_p: 2_000,
            p1: 0.0,
            p2: 0.0,
        }
    }
}

impl FrameLayout {
    pub fn validate(&self) -> Result<()> {
        if self.b > 127 || self.b_p == 0 || self.b_p >= self.b {
            return Err(invalid(format!("bad bit split B={} B_p={}", self.b, self.b_p)));
        }
        if self.b_p >= self.b_c() {
            return Err(invalid("preamble must carry fewer bits than the payload"));
        }
        if self.b_p > 30 {
            return Err(invalid("preamble codebooks above 2^30 columns are not supported"));
        }
        if self.n_p == 0 || self.n_p >= self.n_t {
            return Err(invalid(format!("bad use split N_t={} N_p={}", self.n_t, self.n_p)));
        }
        if !(self.p1 >= 0.0 && self.p2 >= 0.0) {
            return Err(invalid("powers must be non-negative"));
        }
        Ok(())
    }

    /// Payload bits `B_c = B - B_p`.
    pub fn b_c(&self) -> u32 {
        self.b - self.b_p
    }

    /// Coding-segment channel uses `N_c = N_t - N_p`.
    pub fn n_c(&self) -> usize {
        self.n_t - self.n_p
    }

    /// Preamble codebook size `M_p = 2^B_p`.
    pub fn m_p(&self) -> u64 {
        1u64 << self.b_p
    }

    /// Payload codebook size `M_c = 2^B_c`.
    pub fn m_c(&self) -> u128 {
        1u128 << self.b_c()
    }

    /// Energy spent by one user over the frame.
    pub fn energy_per_user(&self) -> f64 {
        self.n_p as f64 * self.p1 + self.n_c() as f64 * self.p2
    }

    /// Linear Eb/N0 under unit noise variance per real dimension.
    pub fn ebn0_linear(&self) -> Result<f64> {
        let e = self.energy_per_user();
        if !(e > 0.0) {
            return Err(invalid("Eb/N0 undefined for zero transmit power"));
        }
        Ok(e / (2.0 * f64::from(self.b)))
    }

    pub fn ebn0_db(&self) -> Result<f64> {
        Ok(10.0 * self.ebn0_linear()?.log10())
    }

    /// Powers `(P1, P2)` reaching `ebn0_db` with `P1 = split_ratio * P2`.
    pub fn powers_for_ebn0(&self, ebn0_db: f64, split_ratio: f64) -> Result<(f64, f64)> {
        if !(split_ratio >= 0.0) || !ebn0_db.is_finite() {
            return Err(invalid("split ratio must be non-negative and Eb/N0 finite"));
        }
        let total = 2.0 * f64::from(self.b) * 10f64.powf(ebn0_db / 10.0);
        let p2 = total / (split_ratio * self.n_p as f64 + self.n_c() as f64);
        Ok((split_ratio * p2, p2))
    }

    /// Copy of the layout operating at `ebn0_db` with the given split.
    pub fn at_ebn0(&self, ebn0_db: f64, split_ratio: f64) -> Result<Self> {
        let (p1, p2) = self.powers_for_ebn0(ebn0_db, split_ratio)?;
        Ok(Self { p1, p2, ..*self })
    }
}

/// Message index `w = w_p * M_c + w_c`; the high `B_p` bits form the preamble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Message {
    pub w_p: u64,
    pub w_c: u128,
}

impl Message {
    pub fn new(w_p: u64, w_c: u128, layout: &FrameLayout) -> Result<Self> {
        if w_p >= layout.m_p() {
            return Err(Error::IndexOutOfRange {
                index: w_p,
                size: layout.m_p(),
            });
        }
        if w_c >= layout.m_c() {
            return Err(invalid(format!("payload index {w_c} exceeds 2^{}", layout.b_c())));
        }
        Ok(Self { w_p, w_c })
    }

    pub fn from_index(w: u128, layout: &FrameLayout) -> Result<Self> {
        if w >> layout.b != 0 {
            return Err(invalid(format!("message index {w} exceeds 2^{}", layout.b)));
        }
        Ok(Self {
            w_p: (w >> layout.b_c()) as u64,
            w_c: w & (layout.m_c() - 1),
        })
    }

    pub fn index(&self, layout: &FrameLayout) -> u128 {
        (u128::from(self.w_p) << layout.b_c()) | self.w_c
    }

    /// Payload bits, most significant first.
    pub fn payload_bits(&self, layout: &FrameLayout) -> Vec<u8> {
        let bc = layout.b_c();
        (0..bc).map(|i| ((self.w_c >> (bc - 1 - i)) & 1) as u8).collect()
    }

    pub fn payload_from_bits(bits: &[u8]) -> u128 {
        bits.iter().fold(0u128, |acc, &b| (acc << 1) | u128::from(b & 1))
    }
}
