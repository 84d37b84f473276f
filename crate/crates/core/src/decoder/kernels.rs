//! Node update rules. LLR convention: positive means bit 0, symbol `+a`.

use num_complex::Complex64;

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// `log(e^a + e^b)`.
#[inline]
pub fn log_add_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + softplus(a.min(b) - m)
}

/// `1 / (1 + e^-x)`.
#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Extrinsic LLR of `x2` from `y = x1 + x2 + z`, `x_i` in `{+-amp}`, prior
/// LLR `ell` on `x1` and noise variance `noise_var`:
///
/// ```text
/// h = log((1 + e^(ell + alpha)) / (e^ell + e^beta))
/// alpha = 2 amp (y - amp) / noise_var,  beta = -2 amp (y + amp) / noise_var
/// ```
///
/// Evaluated as the odd part in `(ell, y)` of that expression, so negating
/// both inputs negates the output exactly.
pub fn pairwise_h(ell: f64, y: f64, amp: f64, noise_var: f64) -> f64 {
    let alpha = 2.0 * amp * (y - amp) / noise_var;
    let beta = -2.0 * amp * (y + amp) / noise_var;
    let g = |l: f64, a: f64, b: f64| softplus(l + a) - log_add_exp(l, b);
    0.5 * (g(ell, alpha, beta) - g(-ell, beta, alpha))
}

/// Reusable buffers for [`mac_equal_dp`].
#[derive(Debug, Default, Clone)]
pub struct MacScratch {
    weights: Vec<f64>,
    back: Vec<f64>,
    pre: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    terms: Vec<f64>,
}

/// Sum whose result is invariant under reversing `terms`.
#[inline]
fn mirror_sum(terms: &[f64]) -> f64 {
    let n = terms.len();
    let mut acc = 0.0;
    for i in 0..n / 2 {
        acc += terms[i] + terms[n - 1 - i];
    }
    if n % 2 == 1 {
        acc += terms[n / 2];
    }
    acc
}

/// Exact MAC update for `d` real symbols of equal amplitude `amp`.
///
/// With `t` the number of `+amp` symbols, `y` only depends on `t`. Backward
/// tables `B_e(j)`, the likelihood given `j` positives before edge `e`, and a
/// running prefix count distribution give every extrinsic output in `O(d^2)`.
pub fn mac_equal_dp(llrs: &[f64], y: f64, amp: f64, noise_var: f64, out: &mut [f64], s: &mut MacScratch) {
    let d = llrs.len();
    debug_assert_eq!(out.len(), d);
    if d == 0 {
        return;
    }
    // Gaussian weights normalised to a unit maximum
    s.weights.clear();
    let mut emax = f64::NEG_INFINITY;
    for t in 0..=d {
        let r = y - amp * (2.0 * t as f64 - d as f64);
        let e = -r * r / (2.0 * noise_var);
        emax = emax.max(e);
        s.weights.push(e);
    }
    for w in s.weights.iter_mut() {
        *w = (*w - emax).exp();
    }
    s.p.clear();
    s.q.clear();
    for &l in llrs {
        s.p.push(sigmoid(l));
        s.q.push(sigmoid(-l));
    }
    // back[e] row has e + 1 entries, rows stored at offset e*(e+1)/2
    let row = |e: usize| e * (e + 1) / 2;
    s.back.clear();
    s.back.resize(row(d + 1), 0.0);
    s.back[row(d)..row(d) + d + 1].copy_from_slice(&s.weights);
    for e in (0..d).rev() {
        let (lo, hi) = s.back.split_at_mut(row(e + 1));
        let next = &hi[..e + 2];
        let cur = &mut lo[row(e)..row(e) + e + 1];
        for j in 0..=e {
            cur[j] = s.q[e] * next[j] + s.p[e] * next[j + 1];
        }
    }
    s.pre.clear();
    s.pre.push(1.0);
    let mut fallback = false;
    for e in 0..d {
        let next = &s.back[row(e + 1)..row(e + 1) + e + 2];
        s.terms.clear();
        s.terms.extend((0..=e).map(|j| s.pre[j] * next[j + 1]));
        let num = mirror_sum(&s.terms);
        s.terms.clear();
        s.terms.extend((0..=e).map(|j| s.pre[j] * next[j]));
        let den = mirror_sum(&s.terms);
        if num > 0.0 && den > 0.0 && num.is_finite() && den.is_finite() {
            out[e] = num.ln() - den.ln();
        } else {
            fallback = true;
            break;
        }
        // fold edge e into the prefix distribution
        s.pre.push(0.0);
        for j in (0..=e + 1).rev() {
            let stay = if j <= e { s.q[e] * s.pre[j] } else { 0.0 };
            let step = if j > 0 { s.p[e] * s.pre[j - 1] } else { 0.0 };
            s.pre[j] = stay + step;
        }
    }
    if fallback {
        mac_equal_dp_log(llrs, y, amp, noise_var, out);
    }
}

/// Log-domain version of [`mac_equal_dp`] for inputs that underflow.
pub fn mac_equal_dp_log(llrs: &[f64], y: f64, amp: f64, noise_var: f64, out: &mut [f64]) {
    let d = llrs.len();
    let lw: Vec<f64> = (0..=d)
        .map(|t| {
            let r = y - amp * (2.0 * t as f64 - d as f64);
            -r * r / (2.0 * noise_var)
        })
        .collect();
    let lp: Vec<f64> = llrs.iter().map(|&l| -softplus(-l)).collect();
    let lq: Vec<f64> = llrs.iter().map(|&l| -softplus(l)).collect();
    let mut back: Vec<Vec<f64>> = vec![Vec::new(); d + 1];
    back[d] = lw;
    for e in (0..d).rev() {
        back[e] = (0..=e)
            .map(|j| log_add_exp(lq[e] + back[e + 1][j], lp[e] + back[e + 1][j + 1]))
            .collect();
    }
    let mut pre = vec![0.0];
    for e in 0..d {
        let next = &back[e + 1];
        let mut num = f64::NEG_INFINITY;
        let mut den = f64::NEG_INFINITY;
        for j in 0..=e {
            num = log_add_exp(num, pre[j] + next[j + 1]);
            den = log_add_exp(den, pre[j] + next[j]);
        }
        out[e] = num - den;
        let mut np = vec![f64::NEG_INFINITY; e + 2];
        for j in 0..=e {
            np[j] = log_add_exp(np[j], lq[e] + pre[j]);
            np[j + 1] = log_add_exp(np[j + 1], lp[e] + pre[j]);
        }
        pre = np;
    }
}

/// Gaussian soft interference cancellation, real symbols `+-mu_k`.
///
/// Each output treats the other symbols as Gaussian with mean
/// `mu_k tanh(l_k / 2)` and variance `mu_k^2 (1 - tanh^2)`.
pub fn mac_sic_real(llrs: &[f64], mus: &[f64], y: f64, noise_var: f64, out: &mut [f64]) {
    let mut mean = 0.0;
    let mut var = noise_var;
    for (&l, &mu) in llrs.iter().zip(mus) {
        let t = (0.5 * l).tanh();
        mean += mu * t;
        var += mu * mu * (1.0 - t * t);
    }
    for ((o, &l), &mu) in out.iter_mut().zip(llrs).zip(mus) {
        let t = (0.5 * l).tanh();
        let r = y - (mean - mu * t);
        let v = (var - mu * mu * (1.0 - t * t)).max(noise_var);
        *o = 2.0 * mu * r / v;
    }
}

/// Complex version of [`mac_sic_real`]; `noise_var` is per real dimension and
/// the interference is treated as circular.
pub fn mac_sic_complex(llrs: &[f64], mus: &[Complex64], y: Complex64, noise_var: f64, out: &mut [f64]) {
    let mut mean = Complex64::new(0.0, 0.0);
    let mut var = 2.0 * noise_var;
    for (&l, &mu) in llrs.iter().zip(mus) {
        let t = (0.5 * l).tanh();
        mean += mu * t;
        var += mu.norm_sqr() * (1.0 - t * t);
    }
    for ((o, &l), &mu) in out.iter_mut().zip(llrs).zip(mus) {
        let t = (0.5 * l).tanh();
        let r = y - (mean - mu * t);
        let v = (var - mu.norm_sqr() * (1.0 - t * t)).max(2.0 * noise_var);
        *o = 4.0 * (mu.conj() * r).re / v;
    }
}

/// Largest MAC degree handled by the exact recursion; denser nodes use SIC.
pub const DEFAULT_DP_MAX_DEGREE: usize = 24;

/// MAC update for arbitrary incoming `(LLR, mu)` pairs.
///
/// Real equal-amplitude nodes up to `dp_max` use the exact recursion, all
/// others Gaussian SIC.
pub fn mac_node_update(
    incoming: &[(f64, Complex64)],
    y: Complex64,
    noise_var: f64,
    complex: bool,
    dp_max: usize,
) -> Vec<f64> {
    let d = incoming.len();
    let mut out = vec![0.0; d];
    if d == 0 {
        return out;
    }
    let llrs: Vec<f64> = incoming.iter().map(|x| x.0).collect();
    if complex {
        let mus: Vec<Complex64> = incoming.iter().map(|x| x.1).collect();
        mac_sic_complex(&llrs, &mus, y, noise_var, &mut out);
        return out;
    }
    let mu0 = incoming[0].1.re;
    let equal = incoming.iter().all(|x| x.1.re == mu0);
    if equal && d <= dp_max {
        mac_equal_dp(&llrs, y.re, mu0, noise_var, &mut out, &mut MacScratch::default());
    } else {
        let mus: Vec<f64> = incoming.iter().map(|x| x.1.re).collect();
        mac_sic_real(&llrs, &mus, y.re, noise_var, &mut out);
    }
    out
}

/// Tanh rule with extrinsic exclusion by prefix and suffix products.
///
/// Magnitudes and signs are combined separately so that negating an input
/// negates the other outputs exactly.
pub fn check_node_update(incoming: &[f64], out: &mut [f64], clip: f64) {
    let d = incoming.len();
    let mut t = [0.0f64; 64];
    let mut heap;
    let t: &mut [f64] = if d <= 64 {
        &mut t[..d]
    } else {
        heap = vec![0.0; d];
        &mut heap
    };
    let mut negatives = 0usize;
    for (ti, &m) in t.iter_mut().zip(incoming) {
        *ti = (0.5 * m.abs()).tanh();
        negatives += usize::from(m < 0.0);
    }
    // out holds prefix products, then multiplied by suffix products
    let mut acc = 1.0;
    for i in 0..d {
        out[i] = acc;
        acc *= t[i];
    }
    acc = 1.0;
    for i in (0..d).rev() {
        let mag = (2.0 * (out[i] * acc).atanh()).min(clip);
        let others_negative = negatives - usize::from(incoming[i] < 0.0);
        out[i] = if others_negative % 2 == 1 { -mag } else { mag };
        acc *= t[i];
    }
}

/// Variable node: every output is the sum of all inputs except its own edge.
///
/// `intrinsic` keeps each MAC edge's own message in what is sent back to it.
pub fn variable_node_update(
    prior: f64,
    check_msgs: &[f64],
    mac_msgs: &[f64],
    intrinsic: bool,
    clip: f64,
    to_checks: &mut [f64],
    to_macs: &mut [f64],
) -> f64 {
    let total = prior + check_msgs.iter().sum::<f64>() + mac_msgs.iter().sum::<f64>();
    for (o, &m) in to_checks.iter_mut().zip(check_msgs) {
        *o = (total - m).clamp(-clip, clip);
    }
    for (o, &m) in to_macs.iter_mut().zip(mac_msgs) {
        let v = if intrinsic { total } else { total - m };
        *o = v.clamp(-clip, clip);
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(x: f64, nv: f64) -> f64 {
        (-x * x / (2.0 * nv)).exp()
    }

    /// Exhaustive marginalisation over the other `d - 1` symbols.
    fn brute_mac(llrs: &[f64], mus: &[f64], y: f64, nv: f64) -> Vec<f64> {
        let d = llrs.len();
        (0..d)
            .map(|e| {
                let others: Vec<usize> = (0..d).filter(|&k| k != e).collect();
                let (mut num, mut den) = (0.0, 0.0);
                for mask in 0u32..(1 << others.len()) {
                    let mut prob = 1.0;
                    let mut s = 0.0;
                    for (bit, &k) in others.iter().enumerate() {
                        let plus = mask >> bit & 1 == 1;
                        let p = 1.0 / (1.0 + (-llrs[k]).exp());
                        prob *= if plus { p } else { 1.0 - p };
                        s += if plus { mus[k] } else { -mus[k] };
                    }
                    num += prob * gauss(y - s - mus[e], nv);
                    den += prob * gauss(y - s + mus[e], nv);
                }
                (num / den).ln()
            })
            .collect()
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(pairwise_h(0.0, 0.0, 1.0, 1.0), 0.0);
        let (y, a, nv) = (0.4, 0.8, 1.3);
        let lim = 2.0 * a * (y - a) / nv;
        assert!((pairwise_h(60.0, y, a, nv) - lim).abs() < 1e-12);
        let p = 1.0 / (1.0 + (-0.5f64).exp());
        let num = p * gauss(0.3 - 2.0, 1.0) + (1.0 - p) * gauss(0.3, 1.0);
        let den = p * gauss(0.3, 1.0) + (1.0 - p) * gauss(0.3 + 2.0, 1.0);
        assert!((pairwise_h(0.5, 0.3, 1.0, 1.0) - (num / den).ln()).abs() < 1e-12);
    }

    #[test]
    fn degree_one_is_channel_llr() {
        let mut out = [0.0];
        mac_equal_dp(&[3.0], 0.7, 1.5, 2.0, &mut out, &mut MacScratch::default());
        assert!((out[0] - 2.0 * 1.5 * 0.7 / 2.0).abs() < 1e-12);
    }

    #[test]
    fn degree_two_equals_pairwise() {
        let mut out = [0.0; 2];
        mac_equal_dp(&[1.3, -0.4], 0.9, 1.1, 0.8, &mut out, &mut MacScratch::default());
        assert!((out[0] - pairwise_h(-0.4, 0.9, 1.1, 0.8)).abs() < 1e-12);
        assert!((out[1] - pairwise_h(1.3, 0.9, 1.1, 0.8)).abs() < 1e-12);
    }

    #[test]
    fn dp_matches_brute_force_degree_four() {
        let llrs = [0.3, -2.0, 4.5, 1.1];
        let mut out = [0.0; 4];
        mac_equal_dp(&llrs, 1.7, 0.9, 1.0, &mut out, &mut MacScratch::default());
        let want = brute_mac(&llrs, &[0.9; 4], 1.7, 1.0);
        for (a, b) in out.iter().zip(&want) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn log_fallback_agrees() {
        let llrs = [30.0, -30.0, 30.0, 30.0, -30.0, 12.0];
        let mut a = [0.0; 6];
        let mut b = [0.0; 6];
        mac_equal_dp(&llrs, -25.0, 3.0, 1.0, &mut a, &mut MacScratch::default());
        mac_equal_dp_log(&llrs, -25.0, 3.0, 1.0, &mut b);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.is_finite() && (x - y).abs() < 1e-8 * (1.0 + y.abs()), "{x} {y}");
        }
    }

    #[test]
    fn sic_single_user_is_exact() {
        let mut out = [0.0];
        mac_sic_real(&[5.0], &[0.7], 1.2, 1.0, &mut out);
        assert!((out[0] - 2.0 * 0.7 * 1.2).abs() < 1e-12);
        let mut out = [0.0];
        let mu = Complex64::new(0.6, -0.3);
        let y = Complex64::new(0.2, 0.9);
        mac_sic_complex(&[5.0], &[mu], y, 1.0, &mut out);
        assert!((out[0] - 2.0 * (mu.conj() * y).re).abs() < 1e-12);
    }

    #[test]
    fn sic_known_interferer_cancels() {
        // a saturated interferer is subtracted exactly
        let mut out = [0.0; 2];
        mac_sic_real(&[0.0, 200.0], &[1.0, 2.0], 2.5, 1.0, &mut out);
        assert!((out[0] - 2.0 * 0.5).abs() < 1e-9);
    }

    #[test]
    fn check_examples() {
        let mut out = [0.0; 2];
        check_node_update(&[1.7, -0.3], &mut out, 30.0);
        assert!((out[0] + 0.3).abs() < 1e-12 && (out[1] - 1.7).abs() < 1e-12);
        let mut out = [0.0; 3];
        check_node_update(&[0.0, 2.0, 5.0], &mut out, 30.0);
        assert_eq!(out[1], 0.0);
        assert_eq!(out[2], 0.0);
        let mut out = [0.0; 3];
        check_node_update(&[2.0, 2.0, 9.0], &mut out, 30.0);
        let want = 2.0 * (1f64.tanh() * 1f64.tanh()).atanh();
        assert!((out[2] - want).abs() < 1e-12);
        let mut out = [0.0; 3];
        check_node_update(&[40.0, 40.0, 40.0], &mut out, 30.0);
        assert!(out.iter().all(|&v| v == 30.0));
    }

    #[test]
    fn variable_examples() {
        let mut tc = [0.0; 2];
        let mut tm = [0.0; 1];
        variable_node_update(0.0, &[1.0, -0.5], &[0.3], false, 30.0, &mut tc, &mut tm);
        assert!((tc[0] + 0.2).abs() < 1e-12);
        let mut tm = [0.0; 1];
        variable_node_update(0.0, &[], &[2.5], false, 30.0, &mut [], &mut tm);
        assert_eq!(tm[0], 0.0);
        let mut tm = [0.0; 2];
        variable_node_update(0.0, &[0.4, 0.6], &[0.4, 0.6], false, 30.0, &mut [0.0; 2], &mut tm);
        assert!((tm[0] - 1.6).abs() < 1e-12);
        let mut tm = [0.0; 2];
        variable_node_update(0.0, &[], &[0.4, 0.6], true, 30.0, &mut [], &mut tm);
        assert!((tm[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dispatch_chooses_sic_for_mixed_amplitudes() {
        let inc = [(0.5, Complex64::new(1.0, 0.0)), (-1.0, Complex64::new(2.0, 0.0))];
        let y = Complex64::new(0.4, 0.0);
        let got = mac_node_update(&inc, y, 1.0, false, 24);
        let mut want = [0.0; 2];
        mac_sic_real(&[0.5, -1.0], &[1.0, 2.0], 0.4, 1.0, &mut want);
        assert_eq!(got, want.to_vec());
    }
}
