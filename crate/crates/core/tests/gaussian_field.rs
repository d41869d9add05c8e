#![allow(clippy::excessive_precision)]

use approx::assert_relative_eq;
use lrwave_core::gaussian_field::{
    asymptotic_r, fgn_covariance, field_covariance, increment_field_covariance, renorm_c2, renorm_c2_integral,
    synthesize_fgn, synthesize_mfield, CirculantFgn, FreqGridSpec, SpectralField, SpectralWeight,
};
use lrwave_core::rng::derive;
use lrwave_core::stats::{mean, std_dev};
use lrwave_core::Error;
use proptest::prelude::*;

// Reference values from 30-digit arithmetic.
const C2_TABLE: [(f64, f64); 5] = [
    (0.3, 8.692009780350466),
    (0.5, std::f64::consts::TAU),
    (0.6, 5.9961127816233121),
    (0.75, 6.684342065682668),
    (0.9, 12.128199521080816),
];

#[test]
fn renorm_constant_matches_reference() {
    for (h, want) in C2_TABLE {
        assert_relative_eq!(renorm_c2(h).unwrap(), want, max_relative = 1e-13);
    }
}

#[test]
fn renorm_integral_matches_closed_form() {
    for (h, want) in C2_TABLE {
        let (v, err) = renorm_c2_integral(h).unwrap();
        assert!((v - want).abs() < 1e-9 * want, "H = {h}: {v} vs {want}");
        assert!(err < 1e-9 * want);
    }
}

#[test]
fn renorm_rejects_closed_interval_ends() {
    for h in [0.0, 1.0, -0.2, f64::NAN] {
        assert!(matches!(renorm_c2(h), Err(Error::Domain(_))));
    }
}

#[test]
fn fgn_covariance_reference_values() {
    assert_relative_eq!(fgn_covariance(0.75, 1), 0.41421356237309505, max_relative = 1e-14);
    assert_relative_eq!(fgn_covariance(0.75, 10), 0.11865974527090585, max_relative = 1e-12);
    assert_relative_eq!(fgn_covariance(0.6, 3), 0.050521357696271532, max_relative = 1e-12);
    // Large lag goes through the series branch.
    assert_relative_eq!(fgn_covariance(0.9, 100), 0.28663773608629706, max_relative = 1e-12);
}

#[test]
fn asymptotic_constant_reference_values() {
    assert_relative_eq!(asymptotic_r(0.75, 0.75).unwrap(), 0.375, max_relative = 1e-13);
    assert_relative_eq!(asymptotic_r(0.6, 0.8).unwrap(), 0.26145380106747254, max_relative = 1e-12);
    assert_relative_eq!(asymptotic_r(0.55, 0.95).unwrap(), 0.21685248442201449, max_relative = 1e-12);
    assert!(asymptotic_r(0.4, 0.7).is_err());
}

#[test]
fn increment_field_reference_values() {
    assert_relative_eq!(increment_field_covariance(0.0, 0.7, 0.7).unwrap(), 1.0, max_relative = 1e-13);
    assert_relative_eq!(increment_field_covariance(0.0, 0.6, 0.8).unwrap(), 0.93376357524097328, max_relative = 1e-12);
    assert_relative_eq!(increment_field_covariance(2.5, 0.6, 0.8).unwrap(), 0.15291521848072775, max_relative = 1e-12);
}

#[test]
fn quadrature_route_agrees_with_closed_form() {
    for (z1, z2, h1, h2) in [(0.0, 0.0, 0.7, 0.7), (0.0, 2.5, 0.6, 0.8), (1.0, 1.3, 0.55, 0.9), (0.0, 40.0, 0.75, 0.75)] {
        let c = field_covariance(z1, z2, h1, h2, SpectralWeight::Increment).unwrap();
        let closed = c.closed_form.unwrap();
        assert!((c.quadrature - closed).abs() < 1e-8, "{z1} {z2} {h1} {h2}: {} vs {closed}", c.quadrature);
    }
}

#[test]
fn flat_weight_covariance_diverges() {
    assert!(matches!(field_covariance(0.0, 1.0, 0.7, 0.7, SpectralWeight::Flat), Err(Error::Domain(_))));
}

#[test]
fn fgn_is_deterministic_in_seed() {
    let a = synthesize_fgn(0.7, 1000, 5).unwrap();
    let b = synthesize_fgn(0.7, 1000, 5).unwrap();
    let c = synthesize_fgn(0.7, 1000, 6).unwrap();
    assert_eq!(a.values, b.values);
    assert_ne!(a.values, c.values);
    assert_eq!(a.len(), 1000);
}

#[test]
fn fgn_embedding_is_nonnegative_across_range() {
    for h in [0.05, 0.3, 0.5, 0.75, 0.95, 0.99] {
        let g = CirculantFgn::new(h, 4096).unwrap();
        assert!(g.embedding_len() >= 2 * 4096);
    }
    assert!(CirculantFgn::new(0.7, 1).is_err());
}

#[test]
fn aliasing_grid_is_a_config_error() {
    let spec = FreqGridSpec { dx_factor: 1, ..FreqGridSpec::default() };
    assert!(matches!(SpectralField::new(64, 1.0, SpectralWeight::Increment, spec), Err(Error::Config(_))));
    let spec = FreqGridSpec { x_max_factor: 1.0, ..FreqGridSpec::default() };
    assert!(matches!(SpectralField::new(64, 1.0, SpectralWeight::Increment, spec), Err(Error::Config(_))));
    assert!(matches!(
        SpectralField::new(0, 1.0, SpectralWeight::Increment, FreqGridSpec::default()),
        Err(Error::Config(_))
    ));
}

#[test]
fn discretized_variance_within_one_percent() {
    let field = SpectralField::new(2048, 1.0, SpectralWeight::Increment, FreqGridSpec::default()).unwrap();
    for h in [0.55, 0.7, 0.9] {
        let v = field.grid_covariance(0.0, h, h).unwrap();
        assert!((v - 1.0).abs() < 0.01, "H = {h}: variance {v}");
        let c = field.grid_covariance(3.0, h, h).unwrap();
        let want = fgn_covariance(h, 3);
        assert!((c - want).abs() < 0.01, "H = {h}: lag-3 covariance {c} vs {want}");
    }
}

#[test]
fn columns_and_along_agree_for_constant_index() {
    let field = SpectralField::new(512, 1.0, SpectralWeight::Increment, FreqGridSpec::default()).unwrap();
    let col = field.columns(&[0.7], 9).unwrap().remove(0);
    let along = field.along(&vec![0.7; 512], 9).unwrap();
    for (a, b) in col.iter().zip(&along) {
        assert!((a - b).abs() < 1e-10, "{a} vs {b}");
    }
}

#[test]
fn columns_share_noise_and_are_deterministic() {
    let field = SpectralField::new(256, 1.0, SpectralWeight::Increment, FreqGridSpec::default()).unwrap();
    let a = field.columns(&[0.6, 0.8], 3).unwrap();
    let b = field.columns(&[0.6, 0.8], 3).unwrap();
    assert_eq!(a, b);
    // Coupled columns: nearby indices give strongly correlated paths.
    let c = field.columns(&[0.6, 0.61], 3).unwrap();
    let dot: f64 = c[0].iter().zip(&c[1]).map(|(x, y)| x * y).sum();
    let n0: f64 = c[0].iter().map(|x| x * x).sum();
    let n1: f64 = c[1].iter().map(|x| x * x).sum();
    assert!(dot / (n0 * n1).sqrt() > 0.99);
}

#[test]
fn along_rejects_mismatched_profile() {
    let field = SpectralField::new(64, 1.0, SpectralWeight::Increment, FreqGridSpec::default()).unwrap();
    assert!(matches!(field.along(&[0.7; 10], 1), Err(Error::GridMismatch(_))));
}

/// Per-path mean of x_i·y_{i+lag}; returns (mean over paths, standard error).
fn lag_product(paths: &[(Vec<f64>, Vec<f64>)], lag: usize) -> (f64, f64) {
    let v: Vec<f64> = paths
        .iter()
        .map(|(x, y)| (0..x.len() - lag).map(|i| x[i] * y[i + lag]).sum::<f64>() / (x.len() - lag) as f64)
        .collect();
    (mean(&v), std_dev(&v) / (v.len() as f64).sqrt())
}

fn fgn_paths(h: f64, n: usize, m: u64, base: u64) -> Vec<(Vec<f64>, Vec<f64>)> {
    (0..m)
        .map(|i| {
            let v = synthesize_fgn(h, n, derive(base, i)).unwrap().values;
            (v.clone(), v)
        })
        .collect()
}

#[test]
fn brownian_increments_are_uncorrelated() {
    let paths = fgn_paths(0.5, 1024, 1, 3);
    let (c, _) = lag_product(&paths, 1);
    assert!(c.abs() < 3.0 / 1023f64.sqrt(), "lag-1 covariance {c}");
}

#[test]
fn fgn_ensemble_matches_target_covariance() {
    let paths = fgn_paths(0.75, 1 << 14, 200, 11);
    let (c, se) = lag_product(&paths, 1);
    assert!((c - fgn_covariance(0.75, 1)).abs() < 3.0 * se, "{c} ± {se}");
    // χ²-style check over lags 0..=10 (99.9% quantile of χ²₁₁ is 31.26).
    let chi2: f64 = (0..=10)
        .map(|l| {
            let (c, se) = lag_product(&paths, l);
            ((c - fgn_covariance(0.75, l as i64)) / se).powi(2)
        })
        .sum();
    assert!(chi2 < 31.26, "χ² = {chi2}");
}

#[test]
fn field_column_matches_increment_covariance() {
    let h = 0.7;
    let grid = FreqGridSpec::default();
    let paths: Vec<(Vec<f64>, Vec<f64>)> = (0..200)
        .map(|i| {
            let f = synthesize_mfield(&[h, 0.9], 1024, 1.0, SpectralWeight::Increment, &grid, derive(5, i)).unwrap();
            (f.samples[0].clone(), f.samples[1].clone())
        })
        .collect();
    let col: Vec<(Vec<f64>, Vec<f64>)> = paths.iter().map(|(x, _)| (x.clone(), x.clone())).collect();
    let (c, se) = lag_product(&col, 5);
    let want = increment_field_covariance(5.0, h, h).unwrap();
    assert!((c - want).abs() < 3.0 * se + 0.01, "{c} ± {se} vs {want}");
    // Cross-column covariance at lag 0 against the two-index closed form.
    let (c, se) = lag_product(&paths, 0);
    let want = increment_field_covariance(0.0, h, 0.9).unwrap();
    assert!((c - want).abs() < 3.0 * se + 0.01, "{c} ± {se} vs {want}");
}

#[test]
fn equal_indices_give_identical_columns() {
    let f = synthesize_mfield(&[0.8, 0.8], 256, 1.0, SpectralWeight::Increment, &FreqGridSpec::default(), 2).unwrap();
    assert_eq!(f.samples[0], f.samples[1]);
    assert!(synthesize_mfield(&[0.4], 256, 1.0, SpectralWeight::Increment, &FreqGridSpec::default(), 2).is_err());
}

#[test]
fn flat_weight_variance_is_the_truncated_spectral_mass() {
    // (1/C²)∫_{|x|<X} |x|^{1−2H} dx = 2X^{2−2H}/((2 − 2H)C²)
    let grid = FreqGridSpec::default();
    let field = SpectralField::new(64, 1.0, SpectralWeight::Flat, grid.clone()).unwrap();
    for h in [0.6, 0.8] {
        let x = grid.x_max_factor;
        let want = 2.0 * x.powf(2.0 - 2.0 * h) / ((2.0 - 2.0 * h) * renorm_c2(h).unwrap());
        let got = field.grid_covariance(0.0, h, h).unwrap();
        assert!((got / want - 1.0).abs() < 1e-3, "H = {h}: {got} vs {want}");
    }
}

#[test]
fn scaled_covariance_approaches_asymptotic_constant() {
    for (h1, h2) in [(0.75, 0.75), (0.6, 0.9)] {
        let r = asymptotic_r(h1, h2).unwrap();
        let resid: Vec<f64> = [10.0f64, 100.0, 1000.0]
            .iter()
            .map(|&d| (d.powf(2.0 - h1 - h2) * increment_field_covariance(d, h1, h2).unwrap() - r).abs())
            .collect();
        assert!(resid[1] < resid[0] && resid[2] < resid[1], "{resid:?}");
        assert!(resid[2] < 1e-3 * r);
    }
}

proptest! {
    #[test]
    fn fgn_covariance_is_even_with_unit_variance(h in 0.01f64..0.99, k in 0i64..5000) {
        prop_assert!((fgn_covariance(h, 0) - 1.0).abs() < 1e-15);
        prop_assert_eq!(fgn_covariance(h, k), fgn_covariance(h, -k));
        prop_assert!(fgn_covariance(h, k).abs() <= 1.0 + 1e-15);
    }

    #[test]
    fn long_memory_covariance_is_positive_and_decreasing(h in 0.51f64..0.99, k in 1i64..2000) {
        let a = fgn_covariance(h, k);
        let b = fgn_covariance(h, k + 1);
        prop_assert!(a > 0.0 && b > 0.0 && b < a);
    }

    #[test]
    fn asymptotic_constant_diagonal(h in 0.501f64..0.999) {
        // R(H, H) = H(2H − 1).
        let r = asymptotic_r(h, h).unwrap();
        prop_assert!((r - h * (2.0 * h - 1.0)).abs() < 1e-12);
    }

    #[test]
    fn asymptotic_constant_is_symmetric(h1 in 0.501f64..0.999, h2 in 0.501f64..0.999) {
        let a = asymptotic_r(h1, h2).unwrap();
        let b = asymptotic_r(h2, h1).unwrap();
        prop_assert!((a - b).abs() < 1e-14 * a.abs().max(1.0));
        prop_assert!(a > 0.0);
    }

    #[test]
    fn increment_covariance_is_symmetric(d in 0.0f64..100.0, h1 in 0.05f64..0.95, h2 in 0.05f64..0.95) {
        let a = increment_field_covariance(d, h1, h2).unwrap();
        let b = increment_field_covariance(-d, h2, h1).unwrap();
        prop_assert!((a - b).abs() < 1e-12);
    }
}
