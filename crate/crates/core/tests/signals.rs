use hankelx_core::hankel::{weights, wmap, HankelShape};
use hankelx_core::sampling::{
    sample_pattern, sparsify_residual_weighted, sparsity_level, Mode, ObservationPattern,
};
use hankelx_core::synth::{condition_number, doa_signal, inject_outliers, spectral_signal, OutlierSpec};
use hankelx_core::{seed, C64};
use rand::Rng;

#[test]
fn spectral_signals_have_exact_rank() {
    for trial in 0..20 {
        let r = 1 + trial % 6;
        let (z, _) = spectral_signal(255, r, 10.0, trial as u64).unwrap();
        let c = condition_number(&z, r).unwrap();
        assert!(c.rank_gap <= 1e-10, "trial {trial}: {:e}", c.rank_gap);
    }
}

#[test]
fn amplitude_ratio_drives_conditioning() {
    for trial in 0..50 {
        let (z, _) = spectral_signal(255, 2, 10.0, trial).unwrap();
        let kappa = condition_number(&z, 2).unwrap().kappa;
        assert!((5.0..=20.0).contains(&kappa), "trial {trial}: {kappa}");
    }
}

#[test]
fn equal_amplitudes_are_well_conditioned() {
    for trial in 0..50 {
        let (z, _) = spectral_signal(255, 5, 1.0, 100 + trial).unwrap();
        let kappa = condition_number(&z, 5).unwrap().kappa;
        assert!((1.0..=3.0).contains(&kappa), "trial {trial}: {kappa}");
    }
}

#[test]
fn single_exponential_has_unit_condition() {
    let (z, _) = spectral_signal(63, 1, 1.0, 4).unwrap();
    let c = condition_number(&z, 1).unwrap();
    assert_eq!(c.kappa, 1.0);
    assert!((c.sigma_1 - z.norm()).abs() <= 1e-8 * z.norm());
}

#[test]
fn doa_snapshot_is_rank_three() {
    let shape = HankelShape::square(4096).unwrap();
    let gains = [C64::new(1.0, 0.0); 3];
    let z = doa_signal(4096, &[87.0, 87.1, 87.3], &gains, shape).unwrap();
    let c = condition_number(&z, 3).unwrap();
    assert!(c.rank_gap <= 1e-10);
    assert!(c.kappa > 1.0 && c.kappa.is_finite());
    // |x_j| <= sum of gains
    assert!(wmap(&z).iter().all(|x| x.norm() <= 3.0 + 1e-12));
}

#[test]
fn generators_are_deterministic() {
    let a = spectral_signal(511, 4, 3.0, 77).unwrap();
    let b = spectral_signal(511, 4, 3.0, 77).unwrap();
    assert_eq!(a, b);
    let p = sample_pattern(511, 200, Mode::WithoutReplacement, 1).unwrap();
    let x = inject_outliers(&a.0, &p, OutlierSpec::new(0.2, 5)).unwrap();
    let y = inject_outliers(&a.0, &p, OutlierSpec::new(0.2, 5)).unwrap();
    assert_eq!(x, y);
}

/// Chi-square test that single outliers land uniformly on the observed set.
#[test]
fn outlier_positions_are_uniform() {
    let (z, _) = spectral_signal(101, 2, 2.0, 0).unwrap();
    let pattern = sample_pattern(101, 20, Mode::WithoutReplacement, 3).unwrap();
    let draws = 10_000;
    let mut counts = vec![0usize; 101];
    for trial in 0..draws {
        let c = inject_outliers(&z, &pattern, OutlierSpec::new(0.05, trial)).unwrap();
        assert_eq!(c.s_star.nnz(), 1);
        counts[c.s_star.support[0]] += 1;
    }
    let expected = draws as f64 / 20.0;
    let chi2: f64 = pattern
        .distinct()
        .iter()
        .map(|&i| (counts[i] as f64 - expected).powi(2) / expected)
        .sum();
    // 0.999 quantile of chi-square with 19 degrees of freedom
    assert!(chi2 <= 43.82, "chi2 = {chi2}");
    assert_eq!(pattern.distinct().iter().map(|&i| counts[i]).sum::<usize>(), draws as usize);
}

/// Hard thresholding in the raw domain misplaces no outlier by more than
/// twice the largest raw error of the current estimate.
#[test]
fn weighted_sparsification_bound() {
    let mut rng = seed::rng(99);
    for trial in 0..100u64 {
        let n = [64, 101, 255][trial as usize % 3];
        let shape = HankelShape::square(n).unwrap();
        let (z_star, _) = spectral_signal(n, 3, 5.0, trial).unwrap();
        let m = rng.random_range(n / 4..=n);
        let pattern = if m == n {
            ObservationPattern::full(n)
        } else {
            sample_pattern(n, m, Mode::WithoutReplacement, trial).unwrap()
        };
        let alpha = rng.random_range(0.0..0.3);
        let corrupted = inject_outliers(&z_star, &pattern, OutlierSpec::new(alpha, trial)).unwrap();
        let perturb = rng.random_range(1e-4..0.5);
        let z: Vec<C64> = z_star
            .z
            .iter()
            .map(|v| v + C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * perturb)
            .collect();
        let gamma = rng.random_range(1.0..1.5);
        let k = sparsity_level(gamma, alpha, pattern.m(), n);
        let sq = weights(shape).sqrt();
        let est = sparsify_residual_weighted(&corrupted.f, &z, &pattern, k, &sq).unwrap();

        let lhs = (0..n)
            .map(|i| {
                let observed = if pattern.contains(i) { corrupted.s_star.s[i] } else { C64::new(0.0, 0.0) };
                ((observed - est.s[i]) / sq[i]).norm()
            })
            .fold(0.0, f64::max);
        let rhs = pattern
            .distinct()
            .iter()
            .map(|&i| ((z_star.z[i] - z[i]) / sq[i]).norm())
            .fold(0.0, f64::max);
        assert!(lhs <= 2.0 * rhs, "trial {trial}: {lhs:e} > 2 * {rhs:e}");
    }
}
