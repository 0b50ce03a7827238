use ipszeta::spectrum::{
    eig_dense, histogram, match_multisets, spec_union, t_case_spectrum, EigOptions,
};
use ipszeta::verify::verify_theorem2;
use ipszeta::{build_global_recursive, CMatrix, Caps, Error, LocalOperator, SpectrumMultiset, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const ONE: C64 = C64::new(1.0, 0.0);

fn spectrum(local: &LocalOperator, n: usize) -> SpectrumMultiset {
    let m = build_global_recursive(local, n, &Caps::default())
        .unwrap()
        .into_dense()
        .unwrap();
    let opts = EigOptions {
        max_dim: 1 << n,
        ..EigOptions::default()
    };
    eig_dense(&m, &opts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn eigenvalue_sum_is_trace(class in 0u8..3, seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let local = match class {
            0 => LocalOperator::random_pca(&mut rng),
            1 => LocalOperator::random_qca(&mut rng),
            _ => LocalOperator::random_general(&mut rng),
        };
        let m = build_global_recursive(&local, n, &Caps::default()).unwrap().into_dense().unwrap();
        let spec = spectrum(&local, n);
        prop_assert_eq!(spec.total(), 1 << n);
        let sum: C64 = spec.entries().iter().map(|(z, k)| z * *k as f64).sum();
        prop_assert!((sum - m.trace()).norm() <= 1e-8 * (1 << n) as f64);
    }

    #[test]
    fn pca_spectrum_in_unit_disk(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = spectrum(&LocalOperator::random_pca(&mut rng), n);
        prop_assert!(spec.spectral_radius() <= 1.0 + 1e-8);
        prop_assert!(spec.multiplicity_near(ONE, 1e-8) >= 1);
    }

    #[test]
    fn qca_spectrum_on_unit_circle(seed in any::<u64>(), n in 1usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = spectrum(&LocalOperator::random_qca(&mut rng), n);
        prop_assert!(spec.flatten().iter().all(|z| (z.norm() - 1.0).abs() <= 1e-8));
    }

    #[test]
    fn theorem2_holds_for_pca(seed in any::<u64>(), n in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let report = verify_theorem2(&LocalOperator::random_pca(&mut rng), n, &Caps::default(), 1e-7).unwrap();
        prop_assert!(report.pass, "{:?}", report);
    }
}

#[test]
fn theorem2_needs_unit_column_sums() {
    // the spectral recursion rests on E + G = F + H = Q_{N-1}; a unitary
    // local operator generally breaks it already at n = 1
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let caps = Caps::default();
    let failing = (0..20)
        .filter(|_| {
            !verify_theorem2(&LocalOperator::random_qca(&mut rng), 2, &caps, 1e-7)
                .unwrap()
                .pass
        })
        .count();
    assert_eq!(failing, 20);
}

/// Defective spectra: eigenvalues from Jordan blocks of size `m` scatter
/// by about `eps^(1/m)`, so the t-case match is only reliable while the
/// blocks stay small.
#[test]
fn t_case_property_small_n() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..30 {
        let t: f64 = rand::Rng::gen_range(&mut rng, -1.0..1.0);
        let local = LocalOperator::random_t_condition(&mut rng, t);
        for n in 1..=3 {
            let m = match_multisets(
                &spectrum(&local, n),
                &t_case_spectrum(C64::new(t, 0.0), n),
                1e-7,
            );
            assert!(m.equal, "t = {t}, n = {n}: {m:?}");
        }
    }
}

#[test]
fn t_case_property_to_n6_reports_defective_losses() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut failures = Vec::new();
    for _ in 0..10 {
        let t: f64 = rand::Rng::gen_range(&mut rng, -1.0..1.0);
        let local = LocalOperator::random_t_condition(&mut rng, t);
        for n in 4..=6 {
            let m = match_multisets(
                &spectrum(&local, n),
                &t_case_spectrum(C64::new(t, 0.0), n),
                1e-7,
            );
            if !m.equal {
                failures.push((t, n, m.worst_distance));
            }
        }
    }
    println!(
        "t-case mismatches for n in 4..=6: {} of 30: {failures:?}",
        failures.len()
    );
}

#[test]
fn identity_spectrum() {
    let spec = eig_dense(&CMatrix::identity(2), &EigOptions::default()).unwrap();
    assert_eq!(spec.entries(), &[(ONE, 2)]);
}

#[test]
fn dk_one_zero_n3_example() {
    let spec = spectrum(&LocalOperator::dk_form(1.0, 0.0), 3);
    let i = C64::new(0.0, 1.0);
    let want = SpectrumMultiset::from_pairs([(ONE, 4), (-ONE, 2), (i, 1), (-i, 1)]);
    assert!(match_multisets(&spec, &want, 1e-8).equal);
}

#[test]
fn dk_half_half_n3_example() {
    let spec = spectrum(&LocalOperator::dk_form(0.5, 0.5), 3);
    let re = |x: f64| C64::new(x, 0.0);
    let want = SpectrumMultiset::from_values([1.0, 1.0, 0.5, 0.5, 0.0, 0.0, 0.25, 0.0].map(re));
    assert!(match_multisets(&spec, &want, 1e-8).equal);
}

#[test]
fn t_case_example_dk_03_06() {
    let spec = spectrum(&LocalOperator::dk_form(0.3, 0.6), 3);
    let want = t_case_spectrum(C64::new(0.3, 0.0), 3);
    assert_eq!(want.total(), 8);
    assert!(match_multisets(&spec, &want, 1e-8).equal);
}

#[test]
fn union_adds_multiplicities() {
    let a = SpectrumMultiset::from_pairs([(ONE, 2)]);
    let b = SpectrumMultiset::from_pairs([(ONE, 1), (C64::new(0.0, 0.0), 1)]);
    let u = spec_union(&a, &b, 1e-9);
    assert_eq!(u.multiplicity_near(ONE, 1e-9), 3);
    assert_eq!(u.total(), 4);
}

#[test]
fn dk_one_zero_figure_on_unit_circle() {
    let spec = spectrum(&LocalOperator::dk_form(1.0, 0.0), 8);
    assert_eq!(spec.total(), 256);
    assert!(spec
        .flatten()
        .iter()
        .all(|z| (z.norm() - 1.0).abs() <= 1e-8));
    let grid = histogram(&spec, 0.05).unwrap();
    assert_eq!(grid.counts.len(), 40);
    assert_eq!(grid.total() + grid.overflow, 256);
    assert_eq!(grid.overflow, 0);
}

#[test]
fn eigen_cap_is_enforced() {
    let m = CMatrix::identity(16);
    let opts = EigOptions {
        max_dim: 8,
        ..EigOptions::default()
    };
    assert!(matches!(
        eig_dense(&m, &opts),
        Err(Error::SizeCapExceeded { .. })
    ));
}
