//! J, J^-1 and phi: exact quadrature versions and interpolated tables used
//! inside the recursion.

use std::sync::OnceLock;

use crate::de::quadrature::{j_exact, phi_exact};
use crate::error::{invalid, Result};

/// Mutual information of a consistent Gaussian LLR with standard deviation
/// `sigma`.
pub fn j_fun(sigma: f64) -> f64 {
    j_exact(sigma)
}

/// Residual MMSE of a BPSK symbol given a consistent Gaussian LLR.
pub fn phi_fun(sigma: f64) -> f64 {
    phi_exact(sigma)
}

/// Inverse of [`j_fun`] by bisection to `1e-12`.
pub fn j_inv(info: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&info) {
        return Err(invalid(format!("J^-1 needs I in [0, 1), got {info}")));
    }
    if info == 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while j_exact(hi) <= info {
        hi *= 2.0;
        if hi > 1e3 {
            return Err(invalid(format!("J^-1({info}) beyond numerical range")));
        }
    }
    while hi - lo > 1e-12 * hi.max(1.0) {
        let mid = 0.5 * (lo + hi);
        if j_exact(mid) < info {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const STEP: f64 = 0.01;
const SIGMA_MAX: f64 = 64.0;

/// Cubic-interpolated tables of `J` and `phi` on `[0, 64]`.
#[derive(Debug)]
pub struct Tables {
    j: Vec<f64>,
    phi: Vec<f64>,
    /// Largest `sigma` whose `J` is still below one.
    sigma_cap: f64,
}

impl Tables {
    fn build() -> Self {
        let n = (SIGMA_MAX / STEP).round() as usize;
        let mut j = Vec::with_capacity(n + 4);
        let mut phi = Vec::with_capacity(n + 4);
        for k in 0..=n + 2 {
            let s = k as f64 * STEP;
            j.push(j_exact(s));
            phi.push(phi_exact(s));
        }
        let cap_idx = j.iter().position(|&v| v >= 1.0).unwrap_or(n);
        Self {
            j,
            phi,
            sigma_cap: (cap_idx.saturating_sub(1)) as f64 * STEP,
        }
    }

    fn interp(table: &[f64], sigma: f64, hi_value: f64) -> f64 {
        if sigma <= 0.0 {
            return table[0];
        }
        if sigma >= SIGMA_MAX {
            return hi_value;
        }
        let x = sigma / STEP;
        let k = (x.floor() as usize).clamp(1, table.len() - 3);
        let t = x - k as f64;
        let (p0, p1, p2, p3) = (table[k - 1], table[k], table[k + 1], table[k + 2]);
        // four-point Lagrange on nodes -1, 0, 1, 2
        let w0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
        let w1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
        let w2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
        let w3 = (t + 1.0) * t * (t - 1.0) / 6.0;
        let v = w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3;
        // stay between the bracketing nodes so monotone data stays monotone
        let i = x.floor() as usize;
        let (a, b) = (table[i], table[i + 1]);
        v.clamp(a.min(b), a.max(b))
    }

    pub fn j(&self, sigma: f64) -> f64 {
        Self::interp(&self.j, sigma, 1.0).clamp(0.0, 1.0)
    }

    pub fn phi(&self, sigma: f64) -> f64 {
        Self::interp(&self.phi, sigma, 0.0).clamp(0.0, 1.0)
    }

    /// `J^-1`, saturating at the largest representable `sigma`.
    pub fn j_inv(&self, info: f64) -> f64 {
        if info <= 0.0 {
            return 0.0;
        }
        let cap = self.sigma_cap;
        if info >= self.j(cap) {
            return cap;
        }
        // bracket on the grid, then bisect the interpolant
        let idx = self.j.partition_point(|&v| v < info);
        let mut lo = (idx.saturating_sub(1)) as f64 * STEP;
        let mut hi = (idx as f64 * STEP).min(cap);
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.j(mid) < info {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn sigma_cap(&self) -> f64 {
        self.sigma_cap
    }
}

/// Process-wide tables, built on first use.
pub fn tables() -> &'static Tables {
    static TABLES: OnceLock<Tables> = OnceLock::new();
    TABLES.get_or_init(Tables::build)
}
