use approx::assert_relative_eq;
use lrwave_core::gaussian_field::fgn_covariance;
use lrwave_core::hermite::{Truncation, TruncationKind};
use lrwave_core::medium::{
    build_medium, check_a2, check_a3, check_a3_points, check_field_index, field_index, v_triple, A2Options, CovPoint,
    DiagnosticStatus, MediumModel, MediumRealization, MediumSpec,
};
use lrwave_core::profile::Profile;
use lrwave_core::rng::derive;
use lrwave_core::stats::{mean, variance};
use lrwave_core::Error;
use proptest::prelude::*;

fn identity() -> Truncation {
    Truncation::new(TruncationKind::Identity)
}

fn ensemble(spec: &MediumSpec, n: usize, base: u64) -> Vec<MediumRealization> {
    (0..n)
        .map(|i| {
            let mut s = spec.clone();
            s.seed = derive(base, i as u64);
            build_medium(&s).unwrap()
        })
        .collect()
}

fn constant_medium(c: f64, n: usize) -> MediumRealization {
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 0);
    MediumRealization::from_values(spec, vec![c; n]).unwrap()
}

#[test]
fn slab_count_and_grid() {
    let spec = MediumSpec::long_range_gamma(0.1, 2.0, 0.6, identity(), 1);
    assert_eq!(spec.n_slabs(), 200);
    let m = build_medium(&spec).unwrap();
    assert_eq!(m.n_slabs(), 200);
    assert_relative_eq!(m.dz, 0.01, max_relative = 1e-14);
    let z = m.z_grid();
    assert_eq!(z.len(), 201);
    assert_relative_eq!(*z.last().unwrap(), 2.0, max_relative = 1e-14);
}

#[test]
fn same_seed_same_medium() {
    let spec = MediumSpec::long_range_h(0.05, 1.0, Profile::Linear { start: 0.6, slope: 0.2 }, identity(), 11);
    let a = build_medium(&spec).unwrap();
    let b = build_medium(&spec).unwrap();
    assert_eq!(a.nu, b.nu);
    let mut other = spec.clone();
    other.seed = 12;
    assert_ne!(build_medium(&other).unwrap().nu, a.nu);
}

#[test]
fn zero_truncation_gives_zero_medium() {
    for spec in [
        MediumSpec::long_range_gamma(0.1, 1.0, 0.6, Truncation::new(TruncationKind::Zero), 3),
        MediumSpec {
            truncation: Truncation::new(TruncationKind::Zero),
            ..MediumSpec::short_range(0.1, 1.0, 1.0, 3)
        },
    ] {
        let m = build_medium(&spec).unwrap();
        assert!(m.nu.iter().all(|&v| v == 0.0));
    }
}

#[test]
fn inconsistent_profiles_name_the_constraint() {
    let mut spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 0);
    spec.model = MediumModel::LongRange { h: Some(Profile::constant(0.8)), gamma: Some(Profile::constant(0.6)) };
    let e = build_medium(&spec).unwrap_err();
    assert!(matches!(e, Error::Config(_)));
    assert!(e.to_string().contains("(2 − γK)/2"), "{e}");

    // Consistent pair is accepted.
    spec.model = MediumModel::LongRange { h: Some(Profile::constant(0.7)), gamma: Some(Profile::constant(0.6)) };
    assert!(spec.validate().is_ok());

    // γK ≥ 1 leaves the long-range regime.
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, Truncation::new(TruncationKind::Hermite2), 0);
    let e = spec.validate().unwrap_err();
    assert!(matches!(e, Error::Config(_)));

    let spec = MediumSpec::long_range_h(0.1, 1.0, Profile::Linear { start: 0.6, slope: 0.5 }, identity(), 0);
    let e = spec.validate().unwrap_err();
    assert!(e.to_string().contains("0 < γK < 1"), "{e}");
}

#[test]
fn kappa_must_match_tau_minus_gamma_k() {
    let mut spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 0);
    spec.kappa = Some(0.4);
    assert!(spec.validate().is_ok());
    spec.kappa = Some(0.5);
    let e = spec.validate().unwrap_err();
    assert!(e.to_string().contains("τ − κ = γK"), "{e}");
}

#[test]
fn slab_budget_is_enforced() {
    let mut spec = MediumSpec::long_range_gamma(0.001, 1.0, 0.6, identity(), 0);
    spec.max_slabs = 1000;
    assert!(matches!(spec.validate(), Err(Error::Budget(_))));
    assert!(matches!(build_medium(&spec), Err(Error::Budget(_))));
}

#[test]
fn field_index_values() {
    assert_eq!(field_index(0.8, 1), 0.8);
    assert_relative_eq!(field_index(0.8, 2), 0.9, max_relative = 1e-15);
    assert_relative_eq!(field_index(0.55, 3), 0.85, max_relative = 1e-15);
    assert!(check_field_index(0.7, 2).is_ok());
    assert!(check_field_index(0.5, 1).is_err());
}

#[test]
fn v_triple_on_constant_medium() {
    let c = 1.7;
    let m = constant_medium(c, 400);
    let et = 0.1;

    let v = v_triple(&m, 0.0).unwrap();
    for (j, (&a, &b)) in v.v1.iter().zip(&v.v2).enumerate() {
        let z = j as f64 * m.dz;
        assert!((a - c * z).abs() < 1e-12);
        assert!((b - c * z).abs() < 1e-12);
    }

    let w = 2.5;
    let v = v_triple(&m, w).unwrap();
    for j in [0, 1, 57, 200, 400] {
        let z = j as f64 * m.dz;
        let s = c * et * (2.0 * w * z / et).sin() / (2.0 * w);
        let k = c * et * (1.0 - (2.0 * w * z / et).cos()) / (2.0 * w);
        assert!((v.v2[j] - s).abs() < 1e-12, "v2 at z = {z}: {} vs {s}", v.v2[j]);
        assert!((v.v3[j] - k).abs() < 1e-12, "v3 at z = {z}: {} vs {k}", v.v3[j]);
    }
}

#[test]
fn v_triple_rejects_under_resolved_phase() {
    let m = constant_medium(1.0, 100);
    // ω·Δz/ε = ω·0.1 must stay below π/8.
    assert!(v_triple(&m, 3.9).is_ok());
    assert!(matches!(v_triple(&m, 4.0), Err(Error::Integration(_))));
}

/// Var[∫₀^Z ν^ε(z) g(z) dz] for the Gaussian K = 1 medium from the fGn covariance.
fn exact_variance(eps: f64, h: f64, slab_weights: &[f64]) -> f64 {
    let n = slab_weights.len();
    let rho: Vec<f64> = (0..n as i64).map(|l| fgn_covariance(h, l)).collect();
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            s += rho[i.abs_diff(j)] * slab_weights[i] * slab_weights[j];
        }
    }
    eps.powf(4.0 * h - 4.0) * s
}

#[test]
fn oscillatory_integrals_vanish_as_epsilon_shrinks() {
    let (omega, h, m) = (1.0, 0.7, 100);
    let mut exact = vec![];
    for eps in [0.1, 0.05, 0.025] {
        let spec = MediumSpec::long_range_gamma(eps, 1.0, 0.6, identity(), 0);
        let n = spec.n_slabs();
        let dz = 1.0 / n as f64;
        let k = 2.0 * omega / eps;
        let w_cos: Vec<f64> = (0..n).map(|j| ((k * (j + 1) as f64 * dz).sin() - (k * j as f64 * dz).sin()) / k).collect();
        let w_sin: Vec<f64> = (0..n).map(|j| ((k * j as f64 * dz).cos() - (k * (j + 1) as f64 * dz).cos()) / k).collect();
        let want = (exact_variance(eps, h, &w_cos), exact_variance(eps, h, &w_sin));

        let (v2, v3): (Vec<f64>, Vec<f64>) = ensemble(&spec, m, 77)
            .iter()
            .map(|r| {
                let v = v_triple(r, omega).unwrap();
                (*v.v2.last().unwrap(), *v.v3.last().unwrap())
            })
            .unzip();
        // Gaussian sample variance has relative sd √(2/(m − 1)).
        let tol = 4.0 * (2.0 / (m - 1) as f64).sqrt();
        for (got, want) in [(variance(&v2), want.0), (variance(&v3), want.1)] {
            assert!((got / want - 1.0).abs() < tol, "ε = {eps}: {got} vs {want}");
        }
        exact.push(want);
    }
    for w in exact.windows(2) {
        assert!(w[1].0 < w[0].0 && w[1].1 < w[0].1, "{exact:?}");
    }
    assert!(exact[2].0 < 0.6 * exact[0].0 && exact[2].1 < 0.6 * exact[0].1, "{exact:?}");
}

#[test]
fn scaling_truncation_scales_medium() {
    let c = 2.5;
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 5);
    let mut scaled = spec.clone();
    scaled.truncation = Truncation::scaled(TruncationKind::Identity, c);
    let a = build_medium(&spec).unwrap();
    let b = build_medium(&scaled).unwrap();
    for (x, y) in a.nu.iter().zip(&b.nu) {
        assert!((c * x - y).abs() <= 1e-14 * y.abs().max(1e-300), "{x} {y}");
    }
    let cov = |m: &MediumRealization, l: usize| mean(&(0..m.nu.len() - l).map(|i| m.nu[i] * m.nu[i + l]).collect::<Vec<_>>());
    for l in [0, 3, 20] {
        assert_relative_eq!(cov(&b, l), c * c * cov(&a, l), max_relative = 1e-12);
    }
}

#[test]
fn shuffle_preserves_values() {
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 5);
    let m = build_medium(&spec).unwrap();
    let s = m.shuffled(1);
    assert_ne!(m.nu, s.nu);
    let mut a = m.nu.clone();
    let mut b = s.nu.clone();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    assert_eq!(a, b);
}

#[test]
fn short_range_medium_scales_by_inverse_epsilon() {
    let spec = MediumSpec::short_range(0.1, 1.0, 1.0, 9);
    let m = build_medium(&spec).unwrap();
    for (nu, micro) in m.nu.iter().zip(&m.micro) {
        assert_relative_eq!(*nu, micro * 10.0, max_relative = 1e-12);
    }
    assert!((variance(&m.micro) - 1.0).abs() < 0.35);
}

#[test]
fn a2_passes_on_gaussian_constant_gamma() {
    let spec = MediumSpec::long_range_gamma(0.02, 1.0, 0.6, identity(), 0);
    let ens = ensemble(&spec, 200, 1);
    let r = check_a2(&ens, None, &A2Options::default()).unwrap();
    assert_eq!(r.status, DiagnosticStatus::Pass, "{r:?}");
    assert!(r.n_pairs >= 1000);
}

#[test]
fn a2_fails_on_shuffled_medium() {
    let spec = MediumSpec::long_range_gamma(0.02, 1.0, 0.6, identity(), 0);
    let ens: Vec<_> = ensemble(&spec, 200, 1).iter().enumerate().map(|(i, m)| m.shuffled(i as u64)).collect();
    let r = check_a2(&ens, None, &A2Options::default()).unwrap();
    assert_eq!(r.status, DiagnosticStatus::Fail, "{r:?}");
}

#[test]
fn zero_media_are_inconclusive() {
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, Truncation::new(TruncationKind::Zero), 0);
    let ens = ensemble(&spec, 20, 1);
    assert_eq!(check_a2(&ens, None, &A2Options::default()).unwrap().status, DiagnosticStatus::Inconclusive);
    assert_eq!(check_a3(&ens, 2.0, 20.0).unwrap().status, DiagnosticStatus::Inconclusive);
}

#[test]
fn diagnostics_need_two_realizations_on_one_grid() {
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 0);
    let one = ensemble(&spec, 1, 1);
    assert!(matches!(check_a2(&one, None, &A2Options::default()), Err(Error::Insufficient(_))));
    let mixed = vec![constant_medium(1.0, 100), constant_medium(1.0, 50)];
    assert!(matches!(check_a3(&mixed, 2.0, 20.0), Err(Error::GridMismatch(_))));
}

#[test]
fn a3_passes_on_long_range_medium() {
    let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), 0);
    let ens = ensemble(&spec, 200, 2);
    let r = check_a3(&ens, 2.0, 20.0).unwrap();
    assert_eq!(r.status, DiagnosticStatus::Pass, "{r:?}");
    assert!(r.gamma_rho > 0.0 && r.gamma_rho < 1.0);
    assert_eq!(r.violations, 0);
}

#[test]
fn a3_fails_on_non_integrable_spike() {
    let points: Vec<CovPoint> = (1..=12)
        .map(|i| {
            let d = i as f64 * 1e-3;
            CovPoint { distance: d, cov: d.powf(-1.5), se: 1e-3 * d.powf(-1.5) }
        })
        .collect();
    let r = check_a3_points(points);
    assert_eq!(r.status, DiagnosticStatus::Fail);
    assert_relative_eq!(r.gamma_rho, 1.5, max_relative = 1e-9);

    let points: Vec<CovPoint> = (1..=12)
        .map(|i| {
            let d = i as f64 * 1e-3;
            CovPoint { distance: d, cov: 0.2 * d.powf(-0.4), se: 1e-3 }
        })
        .collect();
    let r = check_a3_points(points);
    assert_eq!(r.status, DiagnosticStatus::Pass);
    assert_relative_eq!(r.gamma_rho, 0.4, max_relative = 1e-9);
    assert_relative_eq!(r.c_rho, 0.2, max_relative = 1e-9);
}

#[test]
fn spec_serde_round_trip() {
    let text = r#"
        epsilon = 0.05
        depth = 1.0
        model = { kind = "long_range", gamma = { kind = "constant", value = 0.8 } }
        truncation = { kind = "tanh", a = 2.0 }
    "#;
    let spec: MediumSpec = toml::from_str(text).unwrap();
    assert_eq!(spec.tau, 1.0);
    assert_eq!(spec.max_slabs, 1 << 22);
    let json = serde_json::to_string(&spec).unwrap();
    let back: MediumSpec = serde_json::from_str(&json).unwrap();
    assert_eq!(back, spec);
    assert!(toml::from_str::<MediumSpec>(&format!("{text}\nepsilonn = 0.1")).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn v1_is_cumulative_sum(seed in 0u64..1000) {
        let spec = MediumSpec::long_range_gamma(0.1, 1.0, 0.6, identity(), seed);
        let m = build_medium(&spec).unwrap();
        let v = v_triple(&m, 1.0).unwrap();
        let sum: f64 = m.nu.iter().sum::<f64>() * m.dz;
        prop_assert!((v.v1.last().unwrap() - sum).abs() < 1e-10 * sum.abs().max(1.0));
        // |v2|, |v3| are bounded by ∫|ν|.
        let abs: f64 = m.nu.iter().map(|x| x.abs()).sum::<f64>() * m.dz;
        prop_assert!(v.v2.iter().chain(&v.v3).all(|x| x.abs() <= abs + 1e-12));
    }

    #[test]
    fn field_index_maps_into_open_interval(h in 0.501f64..0.999, k in 1usize..6) {
        let f = field_index(h, k);
        prop_assert!(f > 0.5 && f < 1.0);
        prop_assert!(f >= h);
    }
}
