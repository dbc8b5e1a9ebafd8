use super::*;
use crate::observables::snapshot_pair;
use crate::rds_sim::NoisyLinear;
use rand::{Rng, SeedableRng};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn series(m: DMatrix<Complex64>) -> SeriesMatrix {
    SeriesMatrix::new(m, 0, "test").unwrap()
}

/// Noiseless orbit of the reference linear map from (1, 1, 1, 1).
fn linear_orbit(n: usize) -> SeriesMatrix {
    let a = NoisyLinear::REFERENCE_A;
    let mut x = [1.0; 4];
    let mut m = DMatrix::zeros(4, n);
    for t in 0..n {
        for i in 0..4 {
            m[(i, t)] = c(x[i], 0.0);
        }
        let next: Vec<f64> = (0..4).map(|i| (0..4).map(|j| a[i][j] * x[j]).sum()).collect();
        x.copy_from_slice(&next);
    }
    series(m)
}

fn linear_truth() -> Vec<Complex64> {
    vec![c(-0.85, 0.0), c(0.2, 0.8), c(0.2, -0.8), c(0.75, 0.0)]
}

fn random_series(rows: usize, cols: usize, seed: u64) -> SeriesMatrix {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    series(DMatrix::from_fn(rows, cols, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))))
}

fn max_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max)
}

#[test]
fn standard_dmd_recovers_linear_spectrum() {
    let (x, y) = snapshot_pair(&linear_orbit(200)).unwrap();
    let r = dmd_standard(&x, &y, &DmdOptions::default()).unwrap();
    assert!(max_gap(&r.eigenvalues, &linear_truth()) < 1e-8, "{:?}", r.eigenvalues);
    let resid = (&r.operator * x.view() - y.view()).norm() / y.view().norm();
    assert!(resid < 1e-8);
    assert_eq!(r.algorithm, Algorithm::Standard);
    assert!(r.singular_values.is_empty());
}

#[test]
fn eigenfunctions_are_left_vectors_times_data() {
    let (x, y) = snapshot_pair(&linear_orbit(50)).unwrap();
    let r = dmd_standard(&x, &y, &DmdOptions::default()).unwrap();
    assert_eq!(r.eigenfunctions.shape(), (4, 49));
    let eig = linalg::eig_left_right(&r.operator, 1e12).unwrap();
    let direct = &eig.left * x.view();
    assert!((&r.eigenfunctions - direct).norm() < 1e-12 * r.eigenfunctions.norm());
    // φ(t+1) = λ φ(t) on exact data.
    for (i, lam) in r.eigenvalues.iter().enumerate() {
        for t in 0..10 {
            let lhs = r.eigenfunctions[(i, t + 1)];
            let rhs = lam * r.eigenfunctions[(i, t)];
            assert!((lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
        }
    }
    let normed = r.normalized_eigenfunctions();
    let rms = (normed.row(0).norm_squared() / 49.0).sqrt();
    assert!((rms - 1.0).abs() < 1e-12);
}

#[test]
fn fixed_point_has_unit_eigenvalues() {
    let x = series(DMatrix::identity(3, 3));
    let r = dmd_standard(&x, &x.clone(), &DmdOptions::default()).unwrap();
    assert!(r.eigenvalues.iter().all(|v| (v - c(1.0, 0.0)).norm() < 1e-12));
}

#[test]
fn svd_variant_matches_standard_at_full_rank() {
    for seed in 0..5 {
        let f = random_series(6, 40, seed);
        let (x, y) = snapshot_pair(&f).unwrap();
        let a = dmd_standard(&x, &y, &DmdOptions::default()).unwrap();
        let b = dmd_svd(&x, &y, &DmdOptions::with_rank(6)).unwrap();
        assert!(max_gap(&a.eigenvalues, &b.eigenvalues) < 1e-8);
        assert_eq!(b.singular_values.len(), 6);
        assert_eq!(b.modes.shape(), (6, 6));
        assert_eq!(b.eigenfunctions.shape(), (6, 39));
    }
}

#[test]
fn svd_variant_on_low_rank_data() {
    // Two oscillating latent signals mixed into ten rows.
    let core = [c(0.9, 0.3), c(0.5, -0.6)];
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mix = DMatrix::from_fn(10, 2, |_, _| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)));
    let latent = DMatrix::from_fn(2, 30, |i, t| core[i].powu(t as u32));
    let (x, y) = snapshot_pair(&series(&mix * latent)).unwrap();
    let r = dmd_svd(&x, &y, &DmdOptions::with_rank(2)).unwrap();
    let mut expect = core.to_vec();
    expect.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    assert!(max_gap(&r.eigenvalues, &expect) < 1e-10);

    match dmd_svd(&x, &y, &DmdOptions::with_rank(3)) {
        Err(Error::Rank { requested: 3, admissible: 2 }) => {}
        other => panic!("expected rank error, got {other:?}"),
    }
}

#[test]
fn rank_one_series() {
    let f = series(DMatrix::from_fn(1, 20, |_, t| c(0.9f64.powi(t as i32), 0.0)));
    let (x, y) = snapshot_pair(&f).unwrap();
    let r = dmd_svd(&x, &y, &DmdOptions::with_rank(1)).unwrap();
    assert!((r.eigenvalues[0] - c(0.9, 0.0)).norm() < 1e-10);
}

#[test]
fn energy_rank_selection() {
    let opts = DmdOptions { rank: RankSelection::Energy(0.9), ..DmdOptions::default() };
    assert_eq!(opts.resolve_rank(&[10.0, 1.0, 0.1], 1e-12).unwrap(), 1);
    let opts = DmdOptions { rank: RankSelection::Energy(0.999), ..DmdOptions::default() };
    assert_eq!(opts.resolve_rank(&[10.0, 1.0, 0.1], 1e-12).unwrap(), 2);
    let bad = DmdOptions { rank: RankSelection::Energy(1.5), ..DmdOptions::default() };
    assert!(bad.validate().is_err());
    assert!(DmdOptions::with_rank(0).validate().is_err());
}

#[test]
fn noise_resistant_with_self_dual_equals_standard() {
    for seed in 0..5 {
        let (x, y) = snapshot_pair(&random_series(5, 60, 10 + seed)).unwrap();
        let a = dmd_standard(&x, &y, &DmdOptions::default()).unwrap();
        let b = dmd_noise_resistant(&x, &y, &x, &DmdOptions::default()).unwrap();
        assert!(max_gap(&a.eigenvalues, &b.eigenvalues) < 1e-8);
        assert!(b.singular_values.is_empty());
    }
}

#[test]
fn noise_resistant_svd_matches_at_full_rank() {
    for seed in 0..5 {
        let f = random_series(4, 80, 20 + seed);
        let (x, y) = snapshot_pair(&f).unwrap();
        let z = random_series(7, 79, 40 + seed);
        let a = dmd_noise_resistant(&x, &y, &z, &DmdOptions::default()).unwrap();
        let b = dmd_noise_resistant_svd(&x, &y, &z, &DmdOptions::with_rank(4)).unwrap();
        assert!(max_gap(&a.eigenvalues, &b.eigenvalues) < 1e-8);
        assert_eq!(b.singular_values.len(), 4);
        assert_eq!(b.eigenfunctions.shape(), (4, 79));
    }
}

#[test]
fn conditioning_error_on_deficient_dual() {
    let (x, y) = snapshot_pair(&random_series(3, 50, 1)).unwrap();
    let row = random_series(1, 49, 2).to_matrix();
    let z = series(DMatrix::from_fn(3, 49, |_, j| row[(0, j)]));
    match dmd_noise_resistant(&x, &y, &z, &DmdOptions::default()) {
        Err(Error::Conditioning { rank: 1, rows: 3 }) => {}
        other => panic!("expected conditioning error, got {other:?}"),
    }
    assert!(dmd_noise_resistant_svd(&x, &y, &z, &DmdOptions::with_rank(1)).is_ok());
}

#[test]
fn conjugate_closed_on_real_data() {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let f = series(DMatrix::from_fn(6, 100, |_, _| c(rng.random_range(-1.0..1.0), 0.0)));
    let (x, y) = snapshot_pair(&f).unwrap();
    let r = dmd_standard(&x, &y, &DmdOptions::default()).unwrap();
    for lam in &r.eigenvalues {
        let gap = r.eigenvalues.iter().map(|m| (m - lam.conj()).norm()).fold(f64::INFINITY, f64::min);
        assert!(gap < 1e-8);
    }
}

#[test]
fn shape_and_alignment_errors() {
    let (x, y) = snapshot_pair(&random_series(3, 20, 1)).unwrap();
    let short = random_series(3, 10, 2);
    assert!(matches!(dmd_standard(&x, &short, &DmdOptions::default()), Err(Error::Shape(_))));
    let z = random_series(3, 19, 2).window(0, 19).unwrap();
    let shifted = SeriesMatrix::new(z.to_matrix(), 1, "z").unwrap();
    assert!(matches!(dmd_noise_resistant(&x, &y, &shifted, &DmdOptions::default()), Err(Error::Shape(_))));
    assert!(run(Algorithm::NoiseResistant, &x, &y, None, &DmdOptions::default()).is_err());
}

#[test]
fn algorithm_tags_parse() {
    for alg in [Algorithm::Standard, Algorithm::Svd, Algorithm::NoiseResistant, Algorithm::NoiseResistantSvd] {
        assert_eq!(alg.tag().parse::<Algorithm>().unwrap(), alg);
        let json = serde_json::to_string(&alg).unwrap();
        assert_eq!(json, format!("\"{}\"", alg.tag()));
    }
    assert!("alg5".parse::<Algorithm>().is_err());
}

#[test]
fn report_roundtrip() {
    let (x, y) = snapshot_pair(&linear_orbit(30)).unwrap();
    let opts = DmdOptions::default();
    let r = dmd_standard(&x, &y, &opts).unwrap();
    let report = DmdReport::new(&r, &opts).with_modes(&r).with_eigenfunctions(&r);
    let json = report.to_json().unwrap();
    let back: DmdReport = serde_json::from_str(&json).unwrap();
    assert_eq!(back, report);
    assert_eq!(read_result_eigenvalues(&json).unwrap(), r.eigenvalues);
    assert_eq!(back.modes.unwrap().len(), 4);
    assert_eq!(back.eigenfunction_samples.unwrap()[0].len(), 29);
}
