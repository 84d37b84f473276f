//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 5, 6, 9 and 10 are full Monte Carlo sweeps taking hours; they run
//! only when `--ignored` or `--include-ignored` is passed. Positional
//! arguments select criteria by number:
//!
//! ```text
//! cargo test --release --test acceptance -- --ignored 5 6
//! ```

mod common;

use std::process::ExitCode;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use sparse_idma::cs::cs_detect;
use sparse_idma::de::{de_threshold, j_fun, j_inv, phi_fun, tables, MacDegreeProfile, NoiseMap, ThresholdConfig};
use sparse_idma::decoder::kernels::{mac_equal_dp, pairwise_h, MacScratch};
use sparse_idma::ldpc::Protograph;
use sparse_idma::presets::Preset;
use sparse_idma::rng::trial_rng;
use sparse_idma::sim::{
    find_min_ebn0, run_trial, sample_messages, GridSpec, MonteCarlo, Scheme, SimConfig, SweepOutcome,
};
use sparse_idma::tx::channel::draw_gains;
use sparse_idma::tx::repetition::RepetitionDD;

use common::{brute_mac, mc_de_threshold, pairwise_mixture, poisson_pmf, random_mac_instance, total_variation};

/// Operating point of the K_a = 100 sparse scheme found by a full sweep
/// (200 trials per point, PUPE 0.032 there).
const OP_EBN0_DB: f64 = 2.5;
const OP_SPLIT: f64 = 2.0;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn criterion_1() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut scratch = MacScratch::default();
    let mut worst_dp = 0.0f64;
    for d in 1..=10 {
        for _ in 0..1000 {
            let inst = random_mac_instance(d, &mut rng);
            let mut out = vec![0.0; d];
            mac_equal_dp(&inst.llrs, inst.y, inst.amp, inst.nv, &mut out, &mut scratch);
            let want = brute_mac(&inst.llrs, &vec![inst.amp; d], inst.y, inst.nv);
            for (a, b) in out.iter().zip(&want) {
                worst_dp = worst_dp.max((a - b).abs());
            }
        }
    }
    let mut worst_pair = 0.0f64;
    for _ in 0..1000 {
        let inst = random_mac_instance(2, &mut rng);
        let got = pairwise_h(inst.llrs[0], inst.y, inst.amp, inst.nv);
        worst_pair = worst_pair.max((got - pairwise_mixture(inst.llrs[0], inst.y, inst.amp, inst.nv)).abs());
    }
    check(
        worst_dp <= 1e-9 && worst_pair <= 1e-12,
        format!("max |DP - brute| = {worst_dp:.2e}, max |h - mixture| = {worst_pair:.2e}"),
    )
}

/// Adaptive Gauss-Kronrod quadrature in mpmath at 30 digits.
const J_REF: [(f64, f64); 5] = [
    (0.5, 0.043_729_962_944_309_45),
    (1.0, 0.160_747_219_796_416_87),
    (2.0, 0.485_944_154_132_935_32),
    (3.0, 0.759_979_007_771_230_96),
    (5.0, 0.975_179_004_313_244_06),
];
const PHI_REF: [(f64, f64); 5] = [
    (0.5, 0.941_054_024_459_408_83),
    (1.0, 0.795_945_734_366_499_69),
    (2.0, 0.449_599_509_206_672_83),
    (3.0, 0.197_242_502_199_441_74),
    (5.0, 0.018_951_846_873_340_763),
];

fn criterion_2() -> Outcome {
    let mut failures = Vec::new();
    if j_fun(0.0) != 0.0 || phi_fun(0.0) != 1.0 {
        failures.push("J(0) or phi(0) not exact".to_string());
    }
    let t = tables();
    let grid: Vec<f64> = (0..1000).map(|k| k as f64 * 0.02).collect();
    let mono = |f: &dyn Fn(f64) -> f64, up: bool| {
        grid.windows(2)
            .all(|w| if up { f(w[1]) >= f(w[0]) } else { f(w[1]) <= f(w[0]) })
    };
    if !mono(&j_fun, true) || !mono(&|s| t.j(s), true) {
        failures.push("J not monotone".into());
    }
    if !mono(&phi_fun, false) || !mono(&|s| t.phi(s), false) {
        failures.push("phi not monotone".into());
    }
    let mut inv_err = 0.0f64;
    for k in 0..1000 {
        let s = 0.01 + (10.0 - 0.01) * k as f64 / 999.0;
        let exact = j_inv(j_fun(s)).map_err(|e| e.to_string())?;
        inv_err = inv_err.max((exact - s).abs()).max((t.j_inv(t.j(s)) - s).abs());
    }
    if inv_err > 1e-6 {
        failures.push(format!("J^-1(J(s)) off by {inv_err:.2e}"));
    }
    let mut ref_err = 0.0f64;
    for &(s, v) in &J_REF {
        ref_err = ref_err.max((j_fun(s) - v).abs());
    }
    for &(s, v) in &PHI_REF {
        ref_err = ref_err.max((phi_fun(s) - v).abs());
    }
    if ref_err > 1e-8 {
        failures.push(format!("reference mismatch {ref_err:.2e}"));
    }
    let detail = format!("inverse error {inv_err:.2e}, reference error {ref_err:.2e}");
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{}; {detail}", failures.join("; ")))
    }
}

fn criterion_3() -> Outcome {
    let proto = Protograph::all_ones(3, 6).map_err(|e| e.to_string())?;
    let mut cfg = ThresholdConfig::new(NoiseMap::SingleUser { rate: 0.5 }, MacDegreeProfile::single_user());
    cfg.resolution_db = 0.01;
    let ga = de_threshold(&proto, &RepetitionDD::regular(1), &cfg).map_err(|e| e.to_string())?;
    let mc = mc_de_threshold(3, 6, 0.6, 1.8, 0.02, 1_000_000, 7);
    let gap = (ga.ebn0_db - mc).abs();
    check(
        gap <= 0.25,
        format!("GA {:.3} dB, sampled DE {mc:.3} dB, gap {gap:.3} dB", ga.ebn0_db),
    )
}

fn criterion_4() -> Outcome {
    let cfg = SimConfig {
        k_a: 50,
        rate: Some(0.125),
        nu: Some(vec![0.0, 1.0]),
        ..Default::default()
    };
    let scheme = Scheme::from_config(&cfg).map_err(|e| e.to_string())?;
    let enc = scheme.encoder_at(15.0, 1.0).map_err(|e| e.to_string())?;
    let (mut misses, mut used, mut skipped) = (0, 0, 0);
    for i in 0..20 {
        let out = run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, 4, i).map_err(|e| e.to_string())?;
        if out.collisions > 0 {
            skipped += 1;
            continue;
        }
        used += 1;
        misses += out.misses;
    }
    check(
        misses == 0,
        format!("{misses} misses over {used} trials ({skipped} collision trials excluded)"),
    )
}

fn sweep(cfg: &SimConfig) -> Result<SweepOutcome, String> {
    let scheme = Scheme::from_config(cfg).map_err(|e| e.to_string())?;
    let eval = MonteCarlo {
        config: cfg,
        scheme: &scheme,
    };
    let out = find_min_ebn0(&eval, &cfg.grid, cfg.epsilon(), &cfg.layout).map_err(|e| e.to_string())?;
    for p in &out.points {
        eprintln!(
            "  K_a={} rate={} {:.2} dB split {:.2}: Pe {:.4} [{:.4}, {:.4}] over {} trials{}",
            cfg.k_a,
            scheme.rate,
            p.ebn0_db,
            p.split_ratio,
            p.estimate.pe,
            p.estimate.ci_lo,
            p.estimate.ci_hi,
            p.estimate.trials,
            if p.estimate.aborted { " (aborted)" } else { "" }
        );
    }
    Ok(out)
}

fn sweep_config(k_a: usize, rate: f64, nu: Vec<f64>) -> SimConfig {
    SimConfig {
        k_a,
        rate: Some(rate),
        nu: Some(nu),
        trials: 200,
        grid: GridSpec {
            fine_db: 0.25,
            ..Default::default()
        },
        ..Default::default()
    }
}

fn criterion_5() -> Outcome {
    let out = sweep(&sweep_config(125, 0.125, vec![0.0, 1.0]))?;
    let db = out.min_ebn0_db;
    check((1.72..=3.22).contains(&db), format!("required Eb/N0 {db:.2} dB"))
}

fn criterion_6() -> Outcome {
    let low = sweep(&sweep_config(125, 0.125, vec![0.0, 1.0]))?.min_ebn0_db;
    let high = sweep(&sweep_config(125, 0.4, vec![0.0, 1.0]))?.min_ebn0_db;
    check(
        high > low && (2.5..=4.0).contains(&high),
        format!("rate 0.4 {high:.2} dB, rate 0.125 {low:.2} dB"),
    )
}

fn criterion_7() -> Outcome {
    let cfg = SimConfig {
        k_a: 100,
        rate: Some(0.125),
        nu: Some(vec![0.0, 1.0]),
        ..Default::default()
    };
    let scheme = Scheme::from_config(&cfg).map_err(|e| e.to_string())?;
    let enc = scheme.encoder_at(3.0, 1.0).map_err(|e| e.to_string())?;
    let n_c = cfg.layout.n_c();
    let mut hist = vec![0u64; 64];
    for i in 0..100 {
        let msgs = sample_messages(cfg.k_a, &cfg.layout, &mut trial_rng(7, i));
        let mut load = vec![0u32; n_c];
        for m in &msgs {
            for p in enc.positions(m.w_p) {
                load[p as usize] += 1;
            }
        }
        for &d in &load {
            hist[d as usize] += 1;
        }
    }
    let total: u64 = hist.iter().sum();
    let emp: Vec<f64> = hist.iter().map(|&h| h as f64 / total as f64).collect();
    let mu = (cfg.k_a * scheme.code.n() * 2) as f64 / n_c as f64;
    let tv = total_variation(&emp, &poisson_pmf(mu, hist.len() - 1));
    check(
        tv < 0.02 && scheme.code.n() == 680,
        format!("N = {}, TV to Poisson({mu:.3}) = {tv:.4}", scheme.code.n()),
    )
}

fn criterion_8() -> Outcome {
    let cfg = SimConfig {
        k_a: 100,
        rate: Some(0.125),
        nu: Some(vec![0.0, 1.0]),
        ..Default::default()
    };
    let k_b = cfg.k_b();
    let scheme = Scheme::from_config(&cfg).map_err(|e| e.to_string())?;
    let enc = scheme.encoder_at(OP_EBN0_DB, OP_SPLIT).map_err(|e| e.to_string())?;
    let pre = enc.mode().preamble_len(&cfg.layout);
    let (mut missed, mut users) = (0usize, 0usize);
    for i in 0..500 {
        let mut rng = trial_rng(8, i);
        let msgs = sample_messages(cfg.k_a, &cfg.layout, &mut rng);
        let gains = draw_gains(enc.mode(), msgs.len(), &mut rng);
        let obs = enc.transmit(&msgs, &gains, 1.0, &mut rng).map_err(|e| e.to_string())?;
        let det = cs_detect(&obs.y.slice(0..pre), enc.sensing(), k_b).map_err(|e| e.to_string())?;
        missed += msgs.iter().filter(|m| !det.contains(m.w_p)).count();
        users += msgs.len();
    }
    let rate = missed as f64 / users as f64;
    check(
        k_b == 110 && rate <= 0.02,
        format!("K_b = {k_b}, {OP_EBN0_DB} dB split {OP_SPLIT}: missed detection {rate:.4} ({missed}/{users})"),
    )
}

fn criterion_9() -> Outcome {
    let irregular = sweep(&sweep_config(225, 0.4, vec![0.12, 0.88]))?.min_ebn0_db;
    let regular = sweep(&sweep_config(225, 0.4, vec![0.0, 1.0]))?.min_ebn0_db;
    check(
        irregular.is_finite() && irregular <= regular + 0.1,
        format!("0.12x+0.88x^2 {irregular:.2} dB, x^2 {regular:.2} dB"),
    )
}

fn criterion_10() -> Outcome {
    let sparse = sweep(&SimConfig {
        k_a: 100,
        trials: 200,
        ..Default::default()
    })?;
    let dense_cfg = SimConfig {
        k_a: 100,
        trials: 200,
        preset: Preset::Idma75,
        ..Default::default()
    };
    let dense = sweep(&dense_cfg)?;
    check(
        sparse.feasible && dense.min_ebn0_db > sparse.min_ebn0_db,
        format!(
            "idma75 {:.2} dB, sparse {:.2} dB",
            dense.min_ebn0_db, sparse.min_ebn0_db
        ),
    )
}

type Criterion = (u32, bool, fn() -> Outcome);

const CRITERIA: [Criterion; 10] = [
    (1, false, criterion_1),
    (2, false, criterion_2),
    (3, false, criterion_3),
    (4, false, criterion_4),
    (5, true, criterion_5),
    (6, true, criterion_6),
    (7, false, criterion_7),
    (8, false, criterion_8),
    (9, true, criterion_9),
    (10, true, criterion_10),
];

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let only_long = args.iter().any(|a| a == "--ignored");
    let with_long = only_long || args.iter().any(|a| a == "--include-ignored");
    let picked: Vec<u32> = args.iter().filter_map(|a| a.parse().ok()).collect();
    if args.iter().any(|a| a == "--list") {
        for (n, long, _) in CRITERIA {
            println!("criterion_{n}: test{}", if long { " (long)" } else { "" });
        }
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    for (n, long, run) in CRITERIA {
        if !picked.is_empty() && !picked.contains(&n) {
            continue;
        }
        if long && !with_long {
            println!("criterion {n}: SKIPPED (long-running, pass --ignored {n})");
            continue;
        }
        if !long && only_long && picked.is_empty() {
            continue;
        }
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(d) => println!("criterion {n}: PASS {d} [{secs:.1} s]"),
            Err(d) => {
                failed += 1;
                println!("criterion {n}: FAIL {d} [{secs:.1} s]");
            }
        }
    }
    if failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
