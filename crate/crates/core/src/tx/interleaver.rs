//! Preamble-indexed interleavers.
//!
//! `pi_{w_p}` is a forward Fisher-Yates shuffle of `[0, N_c)` driven by the
//! Philox stream `(global_seed, w_p)`: step `i` swaps entry `i` with entry
//! `i + floor(u_i * (N_c - i) / 2^64)`. Entry `i` is final after step `i`, so
//! the prefix covering a user's `N * l` non-zero positions costs `O(N * l)`.
//!
//! Position `i` of the zero-padded repeated codeword is sent on channel use
//! `perm[i]` of the coding segment.

use std::collections::HashMap;

use crate::rng::PhiloxStream;

/// Full interleaver for preamble `w_p`.
pub fn make_interleaver(w_p: u64, n_c: usize, global_seed: u64) -> Vec<u32> {
    let mut perm: Vec<u32> = (0..n_c as u32).collect();
    let mut rng = PhiloxStream::new(global_seed, w_p);
    for i in 0..n_c.saturating_sub(1) {
        let j = i + rng.below((n_c - i) as u64) as usize;
        perm.swap(i, j);
    }
    perm
}

/// First `len` entries of [`make_interleaver`].
pub fn interleaver_prefix(w_p: u64, n_c: usize, global_seed: u64, len: usize) -> Vec<u32> {
    assert!(len <= n_c);
    let mut displaced: HashMap<u32, u32> = HashMap::with_capacity(2 * len);
    let mut rng = PhiloxStream::new(global_seed, w_p);
    let mut out = Vec::with_capacity(len);
    for i in 0..len {
        let value_at = |m: &HashMap<u32, u32>, k: u32| *m.get(&k).unwrap_or(&k);
        if i + 1 == n_c {
            out.push(value_at(&displaced, i as u32));
            break;
        }
        let j = (i + rng.below((n_c - i) as u64) as usize) as u32;
        let vi = value_at(&displaced, i as u32);
        let vj = value_at(&displaced, j);
        displaced.insert(j, vi);
        out.push(vj);
    }
    out
}
