//! Partial-DFT sensing matrix.
//!
//! `N_p / 2` rows `s_k` of the `M_p`-point DFT are drawn without replacement.
//! In AWGN mode the real and imaginary parts of each row are stacked into an
//! `N_p x M_p` real matrix
//!
//! ```text
//! a_j[k]         =  c * cos(2 pi s_k j / M_p)
//! a_j[N_p/2 + k] = -c * sin(2 pi s_k j / M_p)
//! ```
//!
//! and in Rayleigh mode the complex rows are kept, `a_j[k] = c * exp(-2 pi i
//! s_k j / M_p)`. Both use `c = sqrt(2 P1)` so that `|a_j|^2 = N_p P1`.
//!
//! The matrix is never materialised: columns come from a cosine table and
//! `A^T r` (or `A^H r`) is one `M_p`-point FFT of `r` scattered onto the
//! selected rows.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Error, Result};
use crate::tx::channel::{ChannelMode, Samples};
use crate::tx::interleaver::interleaver_prefix;

/// Philox stream reserved for row selection.
const ROW_STREAM: u64 = 0x5253_454C_0000_0000;

#[derive(Clone)]
pub struct SensingMatrix {
    mode: ChannelMode,
    n_p: usize,
    m_p: usize,
    rows: Vec<u32>,
    scale: f64,
    cos_table: Arc<Vec<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for SensingMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SensingMatrix")
            .field("mode", &self.mode)
            .field("n_p", &self.n_p)
            .field("m_p", &self.m_p)
            .field("scale", &self.scale)
            .finish_non_exhaustive()
    }
}

impl SensingMatrix {
    pub fn new(b_p: u32, n_p: usize, p1: f64, seed: u64, mode: ChannelMode) -> Result<Self> {
        if !n_p.is_multiple_of(2) {
            return Err(invalid(format!("N_p = {n_p} must be even")));
        }
        if b_p == 0 || b_p > 30 {
            return Err(invalid(format!("B_p = {b_p} out of range")));
        }
        let m_p = 1usize << b_p;
        if n_p / 2 > m_p {
            return Err(invalid(format!("N_p / 2 = {} exceeds M_p = {m_p}", n_p / 2)));
        }
        if !(p1 >= 0.0) {
            return Err(invalid("P1 must be non-negative"));
        }
        let mut rows = interleaver_prefix(ROW_STREAM, m_p, seed, n_p / 2);
        rows.sort_unstable();
        let cos_table: Vec<f64> = (0..m_p).map(|m| (2.0 * PI * m as f64 / m_p as f64).cos()).collect();
        let mut planner = FftPlanner::new();
        Ok(Self {
            mode,
            n_p,
            m_p,
            rows,
            scale: (2.0 * p1).sqrt(),
            cos_table: Arc::new(cos_table),
            forward: planner.plan_fft_forward(m_p),
            inverse: planner.plan_fft_inverse(m_p),
        })
    }

    /// Same rows and FFT plans at a different preamble power.
    pub fn with_power(&self, p1: f64) -> Self {
        Self {
            scale: (2.0 * p1).sqrt(),
            ..self.clone()
        }
    }

    pub fn mode(&self) -> ChannelMode {
        self.mode
    }

    /// `(rows, columns)`; complex rows in Rayleigh mode.
    pub fn shape(&self) -> (usize, usize) {
        (self.measurement_len(), self.m_p)
    }

    pub fn measurement_len(&self) -> usize {
        match self.mode {
            ChannelMode::Awgn => self.n_p,
            ChannelMode::Rayleigh => self.n_p / 2,
        }
    }

    pub fn num_columns(&self) -> usize {
        self.m_p
    }

    /// Selected DFT row indices, ascending.
    pub fn row_selection(&self) -> &[u32] {
        &self.rows
    }

    pub fn column_norm(&self) -> f64 {
        self.scale * ((self.n_p / 2) as f64).sqrt()
    }

    #[inline]
    fn phase(&self, k: usize, j: usize) -> (f64, f64) {
        let m = (self.rows[k] as usize * j) & (self.m_p - 1);
        let c = self.cos_table[m];
        // sin(x) = cos(x - pi/2)
        let s = self.cos_table[(m + 3 * self.m_p / 4) & (self.m_p - 1)];
        (c, s)
    }

    /// Calls `f(position, value)` for each entry of column `j`.
    pub fn for_each_entry(&self, j: usize, mut f: impl FnMut(usize, Complex64)) {
        let h = self.n_p / 2;
        for k in 0..h {
            let (c, s) = self.phase(k, j);
            match self.mode {
                ChannelMode::Awgn => {
                    f(k, Complex64::new(self.scale * c, 0.0));
                    f(h + k, Complex64::new(-self.scale * s, 0.0));
                }
                ChannelMode::Rayleigh => f(k, Complex64::new(self.scale * c, -self.scale * s)),
            }
        }
    }

    /// Column `j`.
    pub fn column(&self, j: usize) -> Result<Samples> {
        if j >= self.m_p {
            return Err(Error::IndexOutOfRange {
                index: j as u64,
                size: self.m_p as u64,
            });
        }
        let mut out = Samples::zeros(self.measurement_len(), self.mode.is_complex());
        let one = Complex64::new(1.0, 0.0);
        self.for_each_entry(j, |i, v| out.add_scaled(i, v, one));
        Ok(out)
    }

    /// `A^T r` (AWGN) or `A^H r` (Rayleigh) for all columns.
    pub fn correlate(&self, r: &Samples) -> Result<Vec<Complex64>> {
        if r.len() != self.measurement_len() || r.is_complex() != self.mode.is_complex() {
            return Err(Error::LengthMismatch {
                expected: self.measurement_len(),
                actual: r.len(),
            });
        }
        let h = self.n_p / 2;
        let mut buf = vec![Complex64::new(0.0, 0.0); self.m_p];
        match r {
            Samples::Real(v) => {
                for k in 0..h {
                    buf[self.rows[k] as usize] = Complex64::new(v[k], -v[h + k]);
                }
                self.forward.process(&mut buf);
                for x in buf.iter_mut() {
                    *x = Complex64::new(self.scale * x.re, 0.0);
                }
            }
            Samples::Complex(v) => {
                for k in 0..h {
                    buf[self.rows[k] as usize] = v[k];
                }
                self.inverse.process(&mut buf);
                for x in buf.iter_mut() {
                    *x *= self.scale;
                }
            }
        }
        Ok(buf)
    }
}
