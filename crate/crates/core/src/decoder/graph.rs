//! Joint Tanner graph: one LDPC branch per detected preamble, tied together
//! by one MAC node per coding-segment channel use.

use num_complex::Complex64;

use crate::cs::CsDetection;
use crate::error::{Error, Result};
use crate::tx::channel::Samples;
use crate::tx::encoder::{PayloadCode, UserEncoder};

/// One detected preamble as seen by the decoder.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub w_p: u64,
    pub repetition: usize,
    pub amplitude: f64,
    pub gain: Complex64,
}

impl Branch {
    /// Received symbol amplitude `gain * a_l`.
    pub fn mu(&self) -> Complex64 {
        self.gain * self.amplitude
    }
}

#[derive(Debug, Clone)]
pub struct JointGraph {
    code: PayloadCode,
    branches: Vec<Branch>,
    /// MAC edges of channel use `j`: `mac_ptr[j]..mac_ptr[j + 1]`.
    mac_ptr: Vec<u32>,
    /// Global variable `branch * N + position` per MAC edge.
    mac_var: Vec<u32>,
    mac_branch: Vec<u32>,
    /// MAC edges of global variable `v`: `var_mac[var_ptr[v]..var_ptr[v + 1]]`.
    var_ptr: Vec<u32>,
    var_mac: Vec<u32>,
    y: Samples,
    noise_var: f64,
}

impl JointGraph {
    /// Graph for the detector output. AWGN gains are fixed to one.
    pub fn build(detection: &CsDetection, encoder: &UserEncoder, y_c: Samples) -> Result<Self> {
        let complex = encoder.mode().is_complex();
        let mut branches = Vec::with_capacity(detection.len());
        let mut positions = Vec::with_capacity(detection.len());
        for det in &detection.entries {
            let l = encoder.rep_factor(det.index);
            branches.push(Branch {
                w_p: det.index,
                repetition: l,
                amplitude: encoder.amplitude(l),
                gain: if complex { det.gain } else { Complex64::new(1.0, 0.0) },
            });
            positions.push(encoder.positions(det.index));
        }
        Self::from_parts(encoder.code().clone(), branches, &positions, y_c, 1.0)
    }

    /// `positions[b][n * l + r]` is the channel use of repetition `r` of bit
    /// `n` in branch `b`.
    pub fn from_parts(
        code: PayloadCode,
        branches: Vec<Branch>,
        positions: &[Vec<u32>],
        y: Samples,
        noise_var: f64,
    ) -> Result<Self> {
        let n = code.n();
        let n_c = y.len();
        if positions.len() != branches.len() {
            return Err(Error::LengthMismatch {
                expected: branches.len(),
                actual: positions.len(),
            });
        }
        let mut counts = vec![0u32; n_c + 1];
        for (b, pos) in branches.iter().zip(positions) {
            if pos.len() != n * b.repetition {
                return Err(Error::LengthMismatch {
                    expected: n * b.repetition,
                    actual: pos.len(),
                });
            }
            for &p in pos {
                if p as usize >= n_c {
                    return Err(Error::IndexOutOfRange {
                        index: u64::from(p),
                        size: n_c as u64,
                    });
                }
                counts[p as usize + 1] += 1;
            }
        }
        for j in 0..n_c {
            counts[j + 1] += counts[j];
        }
        let mac_ptr = counts;
        let total = mac_ptr[n_c] as usize;
        let mut fill: Vec<u32> = mac_ptr[..n_c].to_vec();
        let mut mac_var = vec![0u32; total];
        let mut mac_branch = vec![0u32; total];
        let mut var_ptr = Vec::with_capacity(branches.len() * n + 1);
        let mut var_mac = vec![0u32; total];
        var_ptr.push(0u32);
        let mut k = 0usize;
        for (bi, (b, pos)) in branches.iter().zip(positions).enumerate() {
            let l = b.repetition;
            for pn in 0..n {
                for r in 0..l {
                    let j = pos[pn * l + r] as usize;
                    let e = fill[j] as usize;
                    fill[j] += 1;
                    mac_var[e] = (bi * n + pn) as u32;
                    mac_branch[e] = bi as u32;
                    var_mac[k] = e as u32;
                    k += 1;
                }
                var_ptr.push(k as u32);
            }
        }
        Ok(Self {
            code,
            branches,
            mac_ptr,
            mac_var,
            mac_branch,
            var_ptr,
            var_mac,
            y,
            noise_var,
        })
    }

    pub fn code(&self) -> &PayloadCode {
        &self.code
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn observation(&self) -> &Samples {
        &self.y
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn is_complex(&self) -> bool {
        self.y.is_complex()
    }

    pub fn num_mac_nodes(&self) -> usize {
        self.mac_ptr.len() - 1
    }

    pub fn num_mac_edges(&self) -> usize {
        self.mac_var.len()
    }

    pub fn mac_edges(&self, j: usize) -> std::ops::Range<usize> {
        self.mac_ptr[j] as usize..self.mac_ptr[j + 1] as usize
    }

    pub fn mac_degree(&self, j: usize) -> usize {
        (self.mac_ptr[j + 1] - self.mac_ptr[j]) as usize
    }

    /// `(branch, position)` of a MAC edge.
    pub fn mac_edge_endpoint(&self, e: usize) -> (usize, usize) {
        let n = self.code.n();
        let v = self.mac_var[e] as usize;
        (v / n, v % n)
    }

    pub fn mac_edge_branch(&self, e: usize) -> usize {
        self.mac_branch[e] as usize
    }

    /// MAC edges of position `pos` in `branch`.
    pub fn var_mac_edges(&self, branch: usize, pos: usize) -> &[u32] {
        let v = branch * self.code.n() + pos;
        &self.var_mac[self.var_ptr[v] as usize..self.var_ptr[v + 1] as usize]
    }

    /// Number of MAC nodes of each degree, indexed by degree.
    pub fn degree_histogram(&self) -> Vec<u64> {
        let mut hist = Vec::new();
        for j in 0..self.num_mac_nodes() {
            let d = self.mac_degree(j);
            if hist.len() <= d {
                hist.resize(d + 1, 0);
            }
            hist[d] += 1;
        }
        hist
    }
}
