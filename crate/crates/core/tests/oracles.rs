mod common;

use common::{brute_dbcv, brute_mean_shift, reference_fences, reference_quantile, t_cdf_series};
use egoshift_core::cohort::{iqr_outlier_fences, quantile_sorted};
use egoshift_core::dbcv::{dbcv_score, LabeledPointSet, Metric};
use egoshift_core::meanshift::{mean_shift_1d, MeanShiftConfig};
use egoshift_core::stats::{confidence_interval, one_sided_t_test, student_t, Hypothesis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

#[test]
fn t_cdf_matches_series_on_a_grid() {
    for dof in [1u64, 2, 3, 4, 5, 7, 10, 29, 30, 100, 999, 4999] {
        for i in -400..=400 {
            let t = i as f64 * 0.05;
            let got = student_t::cdf(t, dof as f64);
            let want = t_cdf_series(t, dof);
            assert!((got - want).abs() < 1e-12, "dof={dof} t={t}: {got} vs {want}");
        }
    }
}

#[test]
fn t_tails_keep_relative_precision() {
    // Far tails: the series loses digits, so compare against the leading
    // asymptotic term for dof = 1, P(T > t) ~ 1 / (pi t).
    for t in [1e3, 1e5, 1e8] {
        let sf = student_t::sf(t, 1.0);
        let approx = 1.0 / (std::f64::consts::PI * t);
        assert!((sf / approx - 1.0).abs() < 1e-5, "t={t}: {sf}");
    }
}

#[test]
fn quantile_round_trips_through_series() {
    for dof in [1u64, 3, 8, 40, 500] {
        for p in [0.001, 0.01, 0.05, 0.25, 0.6, 0.9, 0.975, 0.995] {
            let q = student_t::quantile(p, dof as f64);
            assert!((t_cdf_series(q, dof) - p).abs() < 1e-10, "dof={dof} p={p} q={q}");
        }
    }
}

#[test]
fn known_critical_values() {
    // Two-sided 99% and 95% critical values from standard tables.
    let cases = [(1.0, 0.995, 63.656741), (10.0, 0.995, 3.169273), (30.0, 0.975, 2.042272), (120.0, 0.975, 1.979930)];
    for (dof, p, want) in cases {
        let got = student_t::quantile(p, dof);
        assert!((got - want).abs() < 1e-5, "dof={dof}: {got}");
    }
}

#[test]
fn ttest_p_values_against_series() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let n = rng.random_range(3..400usize);
        let shift = rng.random_range(-2.0..2.0) / (n as f64).sqrt();
        let x: Vec<f64> = (0..n).map(|_| shift + rng.sample::<f64, _>(StandardNormal)).collect();
        let m = x.iter().sum::<f64>() / n as f64;
        let s2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64;
        let t = m / (s2 / n as f64).sqrt();
        let neg = one_sided_t_test(&x, Hypothesis::NonPositive, 0.05).unwrap();
        let pos = one_sided_t_test(&x, Hypothesis::NonNegative, 0.05).unwrap();
        assert!((neg.p_value - (1.0 - t_cdf_series(t, n as u64 - 1))).abs() < 1e-9);
        assert!((pos.p_value - t_cdf_series(t, n as u64 - 1)).abs() < 1e-9);
    }
}

#[test]
fn interval_half_width_uses_the_t_quantile() {
    let x = [2.0, 4.0, 4.0, 5.0, 7.0, 9.0];
    let ci = confidence_interval(&x, 0.95).unwrap();
    let m = 31.0 / 6.0;
    let s2 = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / 5.0;
    // t_{0.975, 5} = 2.570582.
    let half = 2.570582 * (s2 / 6.0_f64).sqrt();
    assert!((ci.mean - m).abs() < 1e-12);
    assert!((ci.upper - (m + half)).abs() < 1e-5);
    assert!((ci.lower - (m - half)).abs() < 1e-5);
}

#[test]
fn fences_match_reference_quantiles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..500 {
        let n = rng.random_range(1..60);
        let v: Vec<f64> = (0..n).map(|_| rng.random_range(-50.0..50.0)).collect();
        let mut sorted = v.clone();
        sorted.sort_by(f64::total_cmp);
        for p in [0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 1.0] {
            assert!((quantile_sorted(&sorted, p) - reference_quantile(&v, p)).abs() < 1e-12);
        }
        let (lo, hi) = iqr_outlier_fences(&v, 1.5).unwrap();
        let (rlo, rhi) = reference_fences(&v, 1.5);
        assert!((lo - rlo).abs() < 1e-12 && (hi - rhi).abs() < 1e-12);
    }
}

#[test]
fn mean_shift_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let config = MeanShiftConfig::default();
    for _ in 0..200 {
        let k = rng.random_range(1..5);
        let centers: Vec<f64> = (0..k).map(|i| 20.0 * i as f64 + rng.random_range(0.0..2.0)).collect();
        let n = rng.random_range(2..80);
        let values: Vec<f64> = (0..n).map(|_| centers[rng.random_range(0..k)] + rng.random_range(-1.0..1.0)).collect();
        let fast = mean_shift_1d(&values, &config).unwrap();
        let (labels, modes) = brute_mean_shift(&values, 0.3, config.merge_fraction, config.tolerance);
        assert_eq!(fast.labels, labels, "values {values:?}");
        for (a, b) in fast.modes.iter().zip(&modes) {
            assert!((a - b).abs() < 1e-6);
        }
    }
}

#[test]
fn dbcv_matches_brute_force_with_noise_and_duplicates() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for case in 0..150 {
        let dim = rng.random_range(1..=3);
        let k = rng.random_range(1..=4);
        let n = rng.random_range(2 * k..=40);
        let mut labels: Vec<i64> = (0..n).map(|i| if i < 2 * k { (i / 2) as i64 } else { rng.random_range(-1..k as i64) }).collect();
        labels.rotate_left(rng.random_range(0..n));
        let mut points: Vec<Vec<f64>> = labels
            .iter()
            .map(|&l| (0..dim).map(|_| 5.0 * l.max(0) as f64 + rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        if case % 5 == 0 {
            // Exact duplicates exercise the distance floor.
            let first = labels.iter().position(|&l| l == 0).unwrap();
            let second = labels.iter().rposition(|&l| l == 0).unwrap();
            points[second] = points[first].clone();
        }
        let manhattan = case % 3 == 0;
        let metric = if manhattan { Metric::Manhattan } else { Metric::Euclidean };
        let data = LabeledPointSet::new(points.concat(), labels.clone(), dim).unwrap();
        let fast = dbcv_score(&data, metric).unwrap().overall;
        let slow = brute_dbcv(&points, &labels, manhattan);
        assert!((fast - slow).abs() < 1e-9, "case {case}: {fast} vs {slow}");
    }
}

#[test]
fn normal_sample_sanity() {
    // Guards the oracle generator itself.
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    let x: Vec<f64> = (0..20000).map(|_| StandardNormal.sample(&mut rng)).collect();
    let m = x.iter().sum::<f64>() / x.len() as f64;
    assert!(m.abs() < 0.05);
}
