//! Per-user encoder.
//!
//! The payload is LDPC encoded, mapped to BPSK (bit 0 -> `+a`), each coded
//! bit is repeated `l` times in place (padded position `n * l + r` carries bit
//! `n`), the word is zero padded to `N_c` and interleaved. Only the `N * l`
//! occupied channel uses are materialised.

use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;

use crate::cs::sensing::SensingMatrix;
use crate::error::{invalid, Error, Result};
use crate::ldpc::LiftedCode;
use crate::tx::channel::{ChannelMode, ChannelObservation, GroundTruth, Samples};
use crate::tx::interleaver::interleaver_prefix;
use crate::tx::layout::{FrameLayout, Message};
use crate::tx::repetition::RepetitionDD;

/// A lifted code carrying `message_bits` payload bits.
///
/// Information positions beyond the payload are shortened (always zero).
#[derive(Debug, Clone)]
pub struct PayloadCode {
    code: Arc<LiftedCode>,
    message_bits: usize,
}

impl PayloadCode {
    pub fn new(code: Arc<LiftedCode>, message_bits: usize) -> Result<Self> {
        if code.dimension() < message_bits {
            return Err(Error::RankDeficient {
                available: code.dimension(),
                required: message_bits,
            });
        }
        Ok(Self { code, message_bits })
    }

    pub fn code(&self) -> &LiftedCode {
        &self.code
    }

    pub fn shared_code(&self) -> Arc<LiftedCode> {
        Arc::clone(&self.code)
    }

    pub fn n(&self) -> usize {
        self.code.n()
    }

    pub fn message_bits(&self) -> usize {
        self.message_bits
    }

    /// Codeword positions fixed to zero.
    pub fn shortened_positions(&self) -> &[usize] {
        &self.code.info_positions()[self.message_bits..]
    }

    /// Encodes `B_c` payload bits (most significant first).
    pub fn encode_bits(&self, bits: &[u8]) -> Result<Vec<u8>> {
        if bits.len() != self.message_bits {
            return Err(Error::LengthMismatch {
                expected: self.message_bits,
                actual: bits.len(),
            });
        }
        let mut full = bits.to_vec();
        full.resize(self.code.dimension(), 0);
        self.code.encode(&full)
    }

    pub fn encode_payload(&self, w_c: u128) -> Result<Vec<u8>> {
        let k = self.message_bits;
        if k < 128 && w_c >> k != 0 {
            return Err(invalid(format!("payload {w_c} exceeds 2^{k}")));
        }
        let bits: Vec<u8> = (0..k).map(|i| ((w_c >> (k - 1 - i)) & 1) as u8).collect();
        self.encode_bits(&bits)
    }

    /// Payload of a hard-decision word, if it is a codeword with all
    /// shortened bits zero.
    pub fn decode(&self, word: &[u8]) -> Option<u128> {
        if !self.code.check_parity(word).ok()? {
            return None;
        }
        let msg = self.code.extract_message(word);
        if msg[self.message_bits..].iter().any(|&b| b != 0) {
            return None;
        }
        Some(Message::payload_from_bits(&msg[..self.message_bits]))
    }
}

/// Non-zero part of one user's transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseSignal {
    pub message: Message,
    pub repetition: usize,
    pub amplitude: f64,
    /// `(coding-segment channel use, symbol)`, `N * l` entries.
    pub payload: Vec<(u32, f64)>,
}

/// Everything a transmitter (or the receiver rebuilding a branch) needs.
#[derive(Debug, Clone)]
pub struct UserEncoder {
    layout: FrameLayout,
    dd: RepetitionDD,
    code: PayloadCode,
    sensing: Arc<SensingMatrix>,
    interleaver_seed: u64,
}

impl UserEncoder {
    pub fn new(
        layout: FrameLayout,
        dd: RepetitionDD,
        code: PayloadCode,
        sensing: Arc<SensingMatrix>,
        interleaver_seed: u64,
    ) -> Result<Self> {
        layout.validate()?;
        dd.check_fits(code.n(), layout.n_c())?;
        if code.message_bits() != layout.b_c() as usize {
            return Err(invalid(format!(
                "code carries {} bits, layout needs B_c = {}",
                code.message_bits(),
                layout.b_c()
            )));
        }
        if sensing.num_columns() as u64 != layout.m_p() {
            return Err(invalid("sensing matrix width differs from M_p"));
        }
        Ok(Self {
            layout,
            dd,
            code,
            sensing,
            interleaver_seed,
        })
    }

    pub fn layout(&self) -> &FrameLayout {
        &self.layout
    }

    pub fn repetition(&self) -> &RepetitionDD {
        &self.dd
    }

    pub fn code(&self) -> &PayloadCode {
        &self.code
    }

    pub fn sensing(&self) -> &SensingMatrix {
        &self.sensing
    }

    pub fn mode(&self) -> ChannelMode {
        self.sensing.mode()
    }

    pub fn interleaver_seed(&self) -> u64 {
        self.interleaver_seed
    }

    pub fn rep_factor(&self, w_p: u64) -> usize {
        self.dd.rep_factor(w_p, self.layout.m_p())
    }

    /// Per-symbol amplitude `sqrt(N_c P2 / (N l))`.
    pub fn amplitude(&self, l: usize) -> f64 {
        (self.layout.n_c() as f64 * self.layout.p2 / (self.code.n() * l) as f64).sqrt()
    }

    /// Channel uses of padded positions `0..N*l` for preamble `w_p`.
    pub fn positions(&self, w_p: u64) -> Vec<u32> {
        let l = self.rep_factor(w_p);
        interleaver_prefix(w_p, self.layout.n_c(), self.interleaver_seed, self.code.n() * l)
    }

    pub fn encode_sparse(&self, msg: Message) -> Result<SparseSignal> {
        let l = self.rep_factor(msg.w_p);
        let n = self.code.n();
        if n * l > self.layout.n_c() {
            return Err(Error::RepetitionOverflow {
                n,
                l,
                slots: self.layout.n_c(),
            });
        }
        let word = self.code.encode_payload(msg.w_c)?;
        let a = self.amplitude(l);
        let positions = self.positions(msg.w_p);
        let payload = positions
            .iter()
            .enumerate()
            .map(|(i, &pos)| (pos, if word[i / l] == 0 { a } else { -a }))
            .collect();
        Ok(SparseSignal {
            message: msg,
            repetition: l,
            amplitude: a,
            payload,
        })
    }

    /// Dense frame: preamble column followed by the coding segment.
    pub fn encode_user(&self, msg: Message) -> Result<Samples> {
        let sparse = self.encode_sparse(msg)?;
        let mode = self.mode();
        let pre = mode.preamble_len(&self.layout);
        let mut x = Samples::zeros(mode.frame_len(&self.layout), mode.is_complex());
        let one = Complex64::new(1.0, 0.0);
        self.write_preamble(msg.w_p, one, &mut x)?;
        for &(pos, v) in &sparse.payload {
            x.add_scaled(pre + pos as usize, Complex64::new(v, 0.0), one);
        }
        Ok(x)
    }

    fn write_preamble(&self, w_p: u64, gain: Complex64, y: &mut Samples) -> Result<()> {
        if w_p >= self.layout.m_p() {
            return Err(Error::IndexOutOfRange {
                index: w_p,
                size: self.layout.m_p(),
            });
        }
        self.sensing
            .for_each_entry(w_p as usize, |i, v| y.add_scaled(i, v, gain));
        Ok(())
    }

    /// Encodes all users and passes them through the channel with fresh gains
    /// and unit-variance noise scaled by `noise_scale`.
    pub fn transmit<R: Rng + ?Sized>(
        &self,
        messages: &[Message],
        gains: &[Complex64],
        noise_scale: f64,
        rng: &mut R,
    ) -> Result<ChannelObservation> {
        if messages.len() != gains.len() {
            return Err(Error::LengthMismatch {
                expected: messages.len(),
                actual: gains.len(),
            });
        }
        let mode = self.mode();
        let pre = mode.preamble_len(&self.layout);
        let mut y = Samples::zeros(mode.frame_len(&self.layout), mode.is_complex());
        for (&msg, &h) in messages.iter().zip(gains) {
            self.write_preamble(msg.w_p, h, &mut y)?;
            let sparse = self.encode_sparse(msg)?;
            for &(pos, v) in &sparse.payload {
                y.add_scaled(pre + pos as usize, Complex64::new(v, 0.0), h);
            }
        }
        y.add_noise(noise_scale, rng);
        Ok(ChannelObservation {
            y,
            truth: GroundTruth {
                messages: messages.to_vec(),
                gains: gains.to_vec(),
            },
        })
    }
}
