//! Deterministic random streams.
//!
//! Interleavers are driven by Philox4x32-10 (Salmon et al., "Parallel random
//! numbers: as easy as 1, 2, 3"), a counter-based generator: draw `i` of the
//! stream `(seed, w_p)` is a pure function of its coordinates, so the encoder
//! and the decoder regenerate identical permutations without sharing state.
//!
//! Everything else (messages, noise, fading, initial populations) uses ChaCha8
//! with one stream per trial index.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const PHILOX_M0: u32 = 0xD251_1F53;
const PHILOX_M1: u32 = 0xCD9E_8D57;
const PHILOX_W0: u32 = 0x9E37_79B9;
const PHILOX_W1: u32 = 0xBB67_AE85;

#[inline]
fn mulhilo(a: u32, b: u32) -> (u32, u32) {
    let p = u64::from(a) * u64::from(b);
    ((p >> 32) as u32, p as u32)
}

/// One Philox4x32 block with 10 rounds.
pub fn philox4x32_10(counter: [u32; 4], key: [u32; 2]) -> [u32; 4] {
    let mut c = counter;
    let [mut k0, mut k1] = key;
    for _ in 0..10 {
        let (hi0, lo0) = mulhilo(PHILOX_M0, c[0]);
        let (hi1, lo1) = mulhilo(PHILOX_M1, c[2]);
        c = [hi1 ^ c[1] ^ k0, lo1, hi0 ^ c[3] ^ k1, lo0];
        k0 = k0.wrapping_add(PHILOX_W0);
        k1 = k1.wrapping_add(PHILOX_W1);
    }
    c
}

/// Counter-based stream of 64-bit words keyed by `seed` and indexed by `stream`.
///
/// Word `i` lives in block `i / 2`; the block counter is
/// `[block_lo, block_hi, stream_lo, stream_hi]` and the key is
/// `[seed_lo, seed_hi]`. Even words are `x1 << 32 | x0`, odd words
/// `x3 << 32 | x2`.
#[derive(Debug, Clone)]
pub struct PhiloxStream {
    key: [u32; 2],
    stream: u64,
    next: u64,
    buffered: Option<u64>,
}

impl PhiloxStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self {
            key: [seed as u32, (seed >> 32) as u32],
            stream,
            next: 0,
            buffered: None,
        }
    }

    /// Word `index` of the stream, independent of the cursor.
    pub fn word_at(&self, index: u64) -> u64 {
        let block = index / 2;
        let x = philox4x32_10(
            [
                block as u32,
                (block >> 32) as u32,
                self.stream as u32,
                (self.stream >> 32) as u32,
            ],
            self.key,
        );
        if index.is_multiple_of(2) {
            (u64::from(x[1]) << 32) | u64::from(x[0])
        } else {
            (u64::from(x[3]) << 32) | u64::from(x[2])
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        if let Some(w) = self.buffered.take() {
            self.next += 1;
            return w;
        }
        let block = self.next / 2;
        let x = philox4x32_10(
            [
                block as u32,
                (block >> 32) as u32,
                self.stream as u32,
                (self.stream >> 32) as u32,
            ],
            self.key,
        );
        let even = (u64::from(x[1]) << 32) | u64::from(x[0]);
        let odd = (u64::from(x[3]) << 32) | u64::from(x[2]);
        if self.next.is_multiple_of(2) {
            self.buffered = Some(odd);
            self.next += 1;
            even
        } else {
            self.next += 1;
            odd
        }
    }

    /// Integer in `[0, n)` by 64x64 multiply-high (bias below 2^-40 for the
    /// sizes used here).
    pub fn below(&mut self, n: u64) -> u64 {
        ((u128::from(self.next_u64()) * u128::from(n)) >> 64) as u64
    }
}

/// ChaCha8 generator for trial `index` of a run seeded by `master`.
pub fn trial_rng(master: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Mixes two integers into a seed (SplitMix64 finalizer).
pub fn mix_seed(a: u64, b: u64) -> u64 {
    let mut z = a ^ b.wrapping_add(0x9E37_79B9_7F4A_7C15).rotate_left(17);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
