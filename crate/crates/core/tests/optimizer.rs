use sparse_idma::optimizer::{optimize_ensemble, optimize_ensemble_resumable, EnsembleSearch, EnsembleTarget};

fn rate_half_search() -> EnsembleSearch {
    let mut s = EnsembleSearch::new(3, 6, 64, EnsembleTarget::SingleUser);
    s.nu_support = vec![1];
    s.min_var_degree = 2;
    s.de_iters = 300;
    s.init_density = Some(0.6);
    s.pop_size = Some(40);
    s
}

#[test]
fn search_beats_regular_three_six() {
    let s = rate_half_search();
    let baseline = s.cost(&s.encode(&vec![vec![1; 6]; 3], &[1.0]));
    assert!(baseline.is_finite());
    let res = optimize_ensemble(&s, 800, 3, &[]).unwrap();
    assert!(
        res.best.threshold_db <= baseline,
        "best {} dB, all-ones {baseline} dB",
        res.best.threshold_db
    );
    assert_eq!(res.best.base_matrix.len(), 3);
    assert!(res.best.base_matrix.iter().flatten().all(|&e| (0..=3).contains(&e)));
    assert!(res.history.windows(2).all(|w| w[1] <= w[0]));
    assert!(res.history.iter().all(|&h| res.best.threshold_db <= h));
}

#[test]
fn search_is_deterministic() {
    let mut s = rate_half_search();
    s.z = 16;
    let a = optimize_ensemble(&s, 120, 9, &[]).unwrap();
    let b = optimize_ensemble(&s, 120, 9, &[]).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.history, b.history);
}

#[test]
fn finished_checkpoint_resumes_without_new_work() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("search.json");
    let mut s = rate_half_search();
    s.z = 16;
    let a = optimize_ensemble_resumable(&s, 120, 2, &[], Some(&path)).unwrap();
    assert!(path.exists());
    let b = optimize_ensemble_resumable(&s, 120, 2, &[], Some(&path)).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.evaluations, b.evaluations);

    let mut other = s.clone();
    other.cols = 5;
    assert!(optimize_ensemble_resumable(&other, 120, 2, &[], Some(&path)).is_err());
}

#[test]
fn joint_search_keeps_nu_on_simplex() {
    let mut s = EnsembleSearch::new(
        2,
        4,
        20,
        EnsembleTarget::System {
            layout: Default::default(),
            k_users: 25,
            split_ratio: 1.0,
        },
    );
    s.de_iters = 200;
    s.init_density = Some(0.7);
    s.pop_size = Some(20);
    let res = optimize_ensemble(&s, 60, 1, &[]).unwrap();
    let sum: f64 = res.best.nu.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9);
    assert!(res.best.nu.iter().all(|&v| v >= 0.0));
}
