use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sparse_idma::decoder::DecodeParams;
use sparse_idma::presets::Preset;
use sparse_idma::rng::trial_rng;
use sparse_idma::sim::{
    count_collisions, estimate_pupe, run_messages, run_trial, sample_messages, PupeEstimate, Scheme, SimConfig,
    TrialOutcome,
};
use sparse_idma::tx::layout::{FrameLayout, Message};

#[test]
fn collision_fraction_matches_birthday_rate() {
    let layout = FrameLayout::default();
    let k_a = 100;
    let trials = 10_000;
    let expected = 1.0 - (1.0 - 1.0 / layout.m_p() as f64).powi(k_a as i32 - 1);
    let fractions: Vec<f64> = (0..trials)
        .map(|i| count_collisions(&sample_messages(k_a, &layout, &mut trial_rng(21, i))) as f64 / k_a as f64)
        .collect();
    let mean = fractions.iter().sum::<f64>() / trials as f64;
    let var = fractions.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (trials - 1) as f64;
    let se = (var / trials as f64).sqrt();
    assert!((expected - 0.003).abs() < 5e-4);
    assert!(
        (mean - expected).abs() <= 3.0 * se,
        "mean {mean}, expected {expected}, se {se}"
    );
}

fn synthetic(index: u64, k_a: usize, rate: f64, seed: u64) -> TrialOutcome {
    let mut rng = trial_rng(seed, index);
    let misses = (0..k_a).filter(|_| rng.random_bool(rate)).count();
    TrialOutcome {
        index,
        transmitted: vec![Message { w_p: 0, w_c: 0 }; k_a],
        decoded: Vec::new(),
        misses,
        collisions: 0,
        missed_detections: 0,
        false_alarms: 0,
        iterations: 0,
    }
}

#[test]
fn wilson_interval_covers_true_rate() {
    let covered = (0..200u64)
        .filter(|&r| {
            let est = estimate_pupe(200, 25, None, |i| Ok(synthetic(i, 25, 0.05, 1000 + r))).unwrap();
            est.ci_lo <= 0.05 && 0.05 <= est.ci_hi
        })
        .count();
    assert!(covered >= 186, "covered {covered} of 200");
}

#[test]
fn false_alarms_do_not_change_pupe() {
    let mut a = synthetic(0, 25, 0.1, 3);
    let base = PupeEstimate::from_outcomes(std::slice::from_ref(&a), false);
    a.false_alarms = 7;
    a.decoded.push(Message { w_p: 9, w_c: 9 });
    let with = PupeEstimate::from_outcomes(&[a], false);
    assert_eq!(base.pe, with.pe);
    assert_eq!(with.false_alarms, 7);
}

fn small_config(k_a: usize) -> SimConfig {
    SimConfig {
        k_a,
        trials: 4,
        ..Default::default()
    }
}

#[test]
fn trials_are_reproducible() {
    let cfg = small_config(10);
    let scheme = Scheme::from_config(&cfg).unwrap();
    let enc = scheme.encoder_at(6.0, 1.0).unwrap();
    let a = run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, 5, 3).unwrap();
    let b = run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, 5, 3).unwrap();
    assert_eq!(a, b);
    let run = |i| run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, 5, i);
    assert_eq!(
        estimate_pupe(4, cfg.k_a, None, run).unwrap(),
        estimate_pupe(4, cfg.k_a, None, run).unwrap()
    );
}

#[test]
fn lone_user_at_high_snr_is_decoded() {
    let cfg = small_config(1);
    let scheme = Scheme::from_config(&cfg).unwrap();
    let enc = scheme.encoder_at(20.0, 1.0).unwrap();
    for i in 0..5 {
        let out = run_trial(&enc, 1, cfg.k_b(), &cfg.decoder, 9, i).unwrap();
        assert_eq!(out.misses, 0);
        assert_eq!(out.missed_detections, 0);
    }
}

#[test]
fn identical_messages_are_both_served_by_one_entry() {
    let cfg = small_config(2);
    let scheme = Scheme::from_config(&cfg).unwrap();
    let enc = scheme.encoder_at(20.0, 1.0).unwrap();
    let msg = Message::new(1234, 0xABCDEF, &cfg.layout).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let out = run_messages(&enc, vec![msg, msg], cfg.k_b(), &DecodeParams::default(), &mut rng).unwrap();
    assert_eq!(out.collisions, 2);
    assert!(out.decoded.iter().filter(|&&m| m == msg).count() <= 1);
    assert_eq!(out.misses, 0);
}

#[test]
fn dense_preset_runs_through_the_same_pipeline() {
    let cfg = SimConfig {
        preset: Preset::Idma75,
        ..small_config(3)
    };
    let scheme = Scheme::from_config(&cfg).unwrap();
    assert_eq!(scheme.rate, 0.25);
    assert_eq!(scheme.dd.max_repetition(), 75);
    assert!(scheme.code.n() * 75 <= cfg.layout.n_c());
    let enc = scheme.encoder_at(15.0, 1.0).unwrap();
    let out = run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, 1, 0).unwrap();
    assert_eq!(out.misses, 0);
}

#[test]
fn config_round_trips_through_toml() {
    let cfg = SimConfig {
        k_a: 125,
        nu: Some(vec![0.12, 0.88]),
        ..Default::default()
    };
    let back = SimConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
    assert_eq!(back, cfg);
}
