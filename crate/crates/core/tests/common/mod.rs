//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// `log P(x = +1)` for a bit with LLR `llr`.
fn log_sigmoid(llr: f64) -> f64 {
    if llr > 0.0 {
        -(-llr).exp().ln_1p()
    } else {
        llr - llr.exp().ln_1p()
    }
}

/// Extrinsic MAC LLRs by enumerating all `2^(d-1)` patterns of the other
/// symbols, in the log domain.
pub fn brute_mac(llrs: &[f64], mus: &[f64], y: f64, nv: f64) -> Vec<f64> {
    let d = llrs.len();
    (0..d)
        .map(|e| {
            let others: Vec<usize> = (0..d).filter(|&k| k != e).collect();
            let mut num = Vec::with_capacity(1 << others.len());
            let mut den = Vec::with_capacity(1 << others.len());
            for mask in 0u32..(1 << others.len()) {
                let mut lp = 0.0;
                let mut s = 0.0;
                for (bit, &k) in others.iter().enumerate() {
                    if mask >> bit & 1 == 1 {
                        lp += log_sigmoid(llrs[k]);
                        s += mus[k];
                    } else {
                        lp += log_sigmoid(-llrs[k]);
                        s -= mus[k];
                    }
                }
                let rp = y - s - mus[e];
                let rm = y - s + mus[e];
                num.push(lp - rp * rp / (2.0 * nv));
                den.push(lp - rm * rm / (2.0 * nv));
            }
            log_sum_exp(&num) - log_sum_exp(&den)
        })
        .collect()
}

/// Two-user extrinsic LLR as the ratio of two-term Gaussian mixtures.
pub fn pairwise_mixture(ell: f64, y: f64, amp: f64, nv: f64) -> f64 {
    let lp = log_sigmoid(ell);
    let lm = log_sigmoid(-ell);
    let g = |r: f64| -r * r / (2.0 * nv);
    let num = log_sum_exp(&[lp + g(y - 2.0 * amp), lm + g(y)]);
    let den = log_sum_exp(&[lp + g(y), lm + g(y + 2.0 * amp)]);
    num - den
}

/// Sampled MAC instance with moderate LLRs and a received value drawn from
/// the model.
pub struct MacInstance {
    pub llrs: Vec<f64>,
    pub amp: f64,
    pub nv: f64,
    pub y: f64,
}

pub fn random_mac_instance<R: Rng>(d: usize, rng: &mut R) -> MacInstance {
    let llrs: Vec<f64> = (0..d).map(|_| rng.random_range(-6.0..6.0)).collect();
    let amp = rng.random_range(0.2..1.5);
    let nv = rng.random_range(0.5..2.0);
    let z: f64 = StandardNormal.sample(rng);
    let s: f64 = (0..d).map(|_| if rng.random_bool(0.5) { amp } else { -amp }).sum();
    MacInstance {
        llrs,
        amp,
        nv,
        y: s + nv.sqrt() * z,
    }
}

const LLR_CLIP: f64 = 50.0;

/// Fraction of negative messages below which a sampled density counts as
/// error-free.
const MC_TARGET: f64 = 1e-6;

/// Sampled (dv, dc)-regular density evolution on the BI-AWGN channel with the
/// all-zero codeword. Returns true when the bit-error fraction of the
/// variable-to-check population falls below the target.
pub fn mc_de_converges(dv: usize, dc: usize, sigma: f64, samples: usize, max_iters: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mean = 2.0 / (sigma * sigma);
    let std = 2.0 / sigma;
    let channel: Vec<f64> = (0..samples)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            mean + std * z
        })
        .collect();
    // tanh(L / 2) of the variable-to-check population
    let mut t: Vec<f64> = channel.iter().map(|&l| (0.5 * l).tanh()).collect();
    let mut c2v = vec![0.0; samples];
    let (mut best, mut best_at) = (usize::MAX, 0);
    for it in 0..max_iters {
        for m in c2v.iter_mut() {
            let mut p = 1.0;
            for _ in 0..dc - 1 {
                p *= t[rng.random_range(0..samples)];
            }
            *m = (2.0 * p.atanh()).clamp(-LLR_CLIP, LLR_CLIP);
        }
        let mut errors = 0usize;
        for (i, ti) in t.iter_mut().enumerate() {
            let mut l = channel[i];
            for _ in 0..dv - 1 {
                l += c2v[rng.random_range(0..samples)];
            }
            if l < 0.0 || (l == 0.0 && rng.random_bool(0.5)) {
                errors += 1;
            }
            *ti = (0.5 * l.clamp(-LLR_CLIP, LLR_CLIP)).tanh();
        }
        if (errors as f64) < MC_TARGET * samples as f64 {
            return true;
        }
        // a stuck fixed point: no 1% improvement in 80 iterations
        if (errors as f64) < 0.99 * best as f64 {
            best = errors;
            best_at = it;
        } else if it - best_at > 80 {
            return false;
        }
    }
    false
}

/// BI-AWGN noise standard deviation at `ebn0_db` for code rate `rate`.
pub fn bpsk_sigma(ebn0_db: f64, rate: f64) -> f64 {
    (1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0))).sqrt()
}

/// Bisection of the sampled-DE threshold in Eb/N0 over `[lo, hi]`.
pub fn mc_de_threshold(dv: usize, dc: usize, lo: f64, hi: f64, resolution: f64, samples: usize, seed: u64) -> f64 {
    let rate = 1.0 - dv as f64 / dc as f64;
    let (mut lo, mut hi) = (lo, hi);
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        if mc_de_converges(dv, dc, bpsk_sigma(mid, rate), samples, 400, seed) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Total variation distance between two distributions on `0..`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    let n = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..n).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

/// Poisson pmf on `0..=kmax`.
pub fn poisson_pmf(mu: f64, kmax: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(kmax + 1);
    let mut p = (-mu).exp();
    for k in 0..=kmax {
        out.push(p);
        p *= mu / (k + 1) as f64;
    }
    out
}
