//! Multi-user channel `y = sum_i h_i x_i + z`.
//!
//! AWGN mode is real with unit-variance noise and unit gains. Rayleigh mode
//! is complex: gains are circularly-symmetric with unit variance and the noise
//! has unit variance per real dimension, so the Eb/N0 accounting of
//! [`FrameLayout`](crate::tx::FrameLayout) holds in both modes. In Rayleigh
//! mode the preamble's `N_p` real dimensions ride on `N_p / 2` complex uses.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tx::layout::{FrameLayout, Message};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelMode {
    #[default]
    Awgn,
    Rayleigh,
}

impl ChannelMode {
    pub fn is_complex(self) -> bool {
        self == ChannelMode::Rayleigh
    }

    /// Samples in the preamble segment.
    pub fn preamble_len(self, layout: &FrameLayout) -> usize {
        match self {
            ChannelMode::Awgn => layout.n_p,
            ChannelMode::Rayleigh => layout.n_p / 2,
        }
    }

    /// Samples in the whole frame.
    pub fn frame_len(self, layout: &FrameLayout) -> usize {
        self.preamble_len(layout) + layout.n_c()
    }
}

impl fmt::Display for ChannelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChannelMode::Awgn => "awgn",
            ChannelMode::Rayleigh => "rayleigh",
        })
    }
}

impl FromStr for ChannelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "awgn" => Ok(ChannelMode::Awgn),
            "rayleigh" | "fading" => Ok(ChannelMode::Rayleigh),
            other => Err(Error::Parse(format!("unknown channel mode '{other}'"))),
        }
    }
}

/// A real or complex sample sequence.
#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl Samples {
    pub fn zeros(len: usize, complex: bool) -> Self {
        if complex {
            Samples::Complex(vec![Complex64::new(0.0, 0.0); len])
        } else {
            Samples::Real(vec![0.0; len])
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Samples::Real(v) => v.len(),
            Samples::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_complex(&self) -> bool {
        matches!(self, Samples::Complex(_))
    }

    /// Squared Euclidean norm.
    pub fn energy(&self) -> f64 {
        match self {
            Samples::Real(v) => v.iter().map(|x| x * x).sum(),
            Samples::Complex(v) => v.iter().map(|x| x.norm_sqr()).sum(),
        }
    }

    pub fn get(&self, i: usize) -> Complex64 {
        match self {
            Samples::Real(v) => Complex64::new(v[i], 0.0),
            Samples::Complex(v) => v[i],
        }
    }

    /// Adds `gain * value` at position `i`; real sequences keep the real part.
    #[inline]
    pub fn add_scaled(&mut self, i: usize, value: Complex64, gain: Complex64) {
        match self {
            Samples::Real(v) => v[i] += (gain * value).re,
            Samples::Complex(v) => v[i] += gain * value,
        }
    }

    pub fn slice(&self, range: std::ops::Range<usize>) -> Samples {
        match self {
            Samples::Real(v) => Samples::Real(v[range].to_vec()),
            Samples::Complex(v) => Samples::Complex(v[range].to_vec()),
        }
    }

    /// Adds i.i.d. Gaussian noise with variance `scale^2` per real dimension.
    pub fn add_noise<R: Rng + ?Sized>(&mut self, scale: f64, rng: &mut R) {
        if scale == 0.0 {
            return;
        }
        match self {
            Samples::Real(v) => {
                for x in v.iter_mut() {
                    *x += scale * rng.sample::<f64, _>(StandardNormal);
                }
            }
            Samples::Complex(v) => {
                for x in v.iter_mut() {
                    let re: f64 = rng.sample(StandardNormal);
                    let im: f64 = rng.sample(StandardNormal);
                    *x += scale * Complex64::new(re, im);
                }
            }
        }
    }
}

/// Simulation ground truth; never read by the receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub messages: Vec<Message>,
    pub gains: Vec<Complex64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelObservation {
    pub y: Samples,
    pub truth: GroundTruth,
}

/// Unit gains in AWGN mode, `CN(0, 1)` gains in Rayleigh mode.
pub fn draw_gains<R: Rng + ?Sized>(mode: ChannelMode, users: usize, rng: &mut R) -> Vec<Complex64> {
    match mode {
        ChannelMode::Awgn => vec![Complex64::new(1.0, 0.0); users],
        ChannelMode::Rayleigh => (0..users)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
            })
            .collect(),
    }
}

/// Superimposes dense user signals with their gains and adds noise of standard
/// deviation `noise_scale` per real dimension.
pub fn apply_channel<R: Rng + ?Sized>(
    signals: &[Samples],
    gains: &[Complex64],
    messages: Vec<Message>,
    mode: ChannelMode,
    len: usize,
    noise_scale: f64,
    rng: &mut R,
) -> Result<ChannelObservation> {
    if signals.len() != gains.len() {
        return Err(Error::LengthMismatch {
            expected: signals.len(),
            actual: gains.len(),
        });
    }
    let mut y = Samples::zeros(len, mode.is_complex());
    for (x, &h) in signals.iter().zip(gains) {
        if x.len() != len {
            return Err(Error::LengthMismatch {
                expected: len,
                actual: x.len(),
            });
        }
        for i in 0..len {
            y.add_scaled(i, x.get(i), h);
        }
    }
    y.add_noise(noise_scale, rng);
    Ok(ChannelObservation {
        y,
        truth: GroundTruth {
            messages,
            gains: gains.to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::trial_rng;

    #[test]
    fn noiseless_single_user_passes_through() {
        let mut rng = trial_rng(1, 0);
        let x = Samples::Real(vec![1.0, -2.0, 0.5]);
        let obs = apply_channel(
            std::slice::from_ref(&x),
            &[Complex64::new(1.0, 0.0)],
            vec![],
            ChannelMode::Awgn,
            3,
            0.0,
            &mut rng,
        )
        .unwrap();
        assert_eq!(obs.y, x);
    }

    #[test]
    fn empty_channel_has_unit_variance() {
        let mut rng = trial_rng(2, 0);
        let obs = apply_channel(&[], &[], vec![], ChannelMode::Awgn, 30_000, 1.0, &mut rng).unwrap();
        let var = obs.y.energy() / 30_000.0;
        // chi-square with 30000 dof: relative sd ~0.8%
        assert!((var - 1.0).abs() < 0.05, "{var}");
        let obs = apply_channel(&[], &[], vec![], ChannelMode::Rayleigh, 30_000, 1.0, &mut rng).unwrap();
        let var = obs.y.energy() / 60_000.0;
        assert!((var - 1.0).abs() < 0.05, "{var}");
    }

    #[test]
    fn pinned_fading_gain_reduces_to_awgn() {
        let x = Samples::Real(vec![0.3; 4000]);
        let one = Complex64::new(1.0, 0.0);
        let mut r1 = trial_rng(3, 0);
        let a = apply_channel(std::slice::from_ref(&x), &[one], vec![], ChannelMode::Awgn, 4000, 1.0, &mut r1).unwrap();
        let mut r2 = trial_rng(3, 1);
        let b = apply_channel(&[x], &[one], vec![], ChannelMode::Rayleigh, 4000, 1.0, &mut r2).unwrap();
        let stats = |s: &Samples| {
            let v: Vec<f64> = (0..s.len()).map(|i| s.get(i).re).collect();
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
            (m, var)
        };
        let (ma, va) = stats(&a.y);
        let (mb, vb) = stats(&b.y);
        assert!((ma - 0.3).abs() < 0.06 && (mb - 0.3).abs() < 0.06);
        assert!((va - 1.0).abs() < 0.1 && (vb - 1.0).abs() < 0.1);
    }

    #[test]
    fn fading_gains_unit_variance() {
        let mut rng = trial_rng(4, 0);
        let g = draw_gains(ChannelMode::Rayleigh, 20_000, &mut rng);
        let p = g.iter().map(|h| h.norm_sqr()).sum::<f64>() / 20_000.0;
        assert!((p - 1.0).abs() < 0.05);
        assert!(draw_gains(ChannelMode::Awgn, 3, &mut rng)
            .iter()
            .all(|h| *h == Complex64::new(1.0, 0.0)));
    }
}
