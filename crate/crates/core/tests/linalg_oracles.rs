use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use wclab_core::linalg::{
    infinity_condition_number, inverse_residual, random_sdd_matrix, sdd_analysis, spectral_condition_number, ComplexMatrix,
};

fn gaussian_matrix(n: usize, seed: u64) -> ComplexMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ComplexMatrix::from_fn(n, n, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        Complex64::new(re, im)
    })
}

fn to_nalgebra(m: &ComplexMatrix) -> DMatrix<Complex64> {
    DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

/// Singular values as square roots of the Gram matrix eigenvalues, descending.
fn gram_singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let a = to_nalgebra(m);
    let gram = a.adjoint() * &a;
    let mut sv: Vec<f64> = gram.symmetric_eigen().eigenvalues.iter().map(|l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    sv
}

#[test]
fn seeded_8x8_matches_gram_oracle() {
    let m = gaussian_matrix(8, 8);
    let ours = m.singular_values();
    let oracle = gram_singular_values(&m);
    for (a, b) in ours.iter().zip(&oracle) {
        assert!((a - b).abs() <= 1e-9 * b, "{a} vs {b}");
    }
    let kappa = spectral_condition_number(&m).unwrap();
    let oracle_kappa = oracle[0] / oracle[7];
    assert!((kappa - oracle_kappa).abs() <= 1e-9 * oracle_kappa);
}

#[test]
fn infinity_condition_matches_nalgebra_inverse() {
    for seed in 0..5 {
        let m = gaussian_matrix(12, 100 + seed);
        let inv = to_nalgebra(&m).try_inverse().unwrap();
        let row_sum = |a: &DMatrix<Complex64>| (0..a.nrows()).map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max);
        let oracle = row_sum(&to_nalgebra(&m)) * row_sum(&inv);
        let ours = infinity_condition_number(&m).unwrap();
        assert!((ours - oracle).abs() <= 1e-9 * oracle, "{ours} vs {oracle}");
    }
}

#[test]
fn rank_deficient_matrix_has_infinite_kappa() {
    let m = ComplexMatrix::from_real_rows(&[&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0], &[0.0, 1.0, 1.0]]).unwrap();
    assert_eq!(spectral_condition_number(&m).unwrap(), f64::INFINITY);
    assert!(m.inverse().is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sdd_bounds_hold(n in 2usize..=64, seed in any::<u64>()) {
        let m = random_sdd_matrix(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let report = sdd_analysis(&m).unwrap();
        prop_assert!(report.is_sdd);
        let inv = m.inverse().unwrap();
        prop_assert!(inverse_residual(&m, &inv).unwrap() < 1e-10);
        let kappa = infinity_condition_number(&m).unwrap();
        prop_assert!(kappa <= report.kappa_inf_upper.unwrap() * (1.0 + 1e-10));
        prop_assert!(inv.norm_inf() <= report.varah_inverse_bound.unwrap() * (1.0 + 1e-10));
        let eps = report.epsilon.unwrap();
        let expected = (report.d_max / report.d_min) * (1.0 + eps) / (1.0 - eps);
        prop_assert_eq!(report.kappa_inf_upper.unwrap(), expected);
    }

    #[test]
    fn spectral_condition_is_scale_invariant(
        n in 2usize..=24,
        seed in any::<u64>(),
        mag in 1e-6f64..1e6,
        phase in -3.2f64..3.2,
    ) {
        let m = gaussian_matrix(n, seed);
        let alpha = Complex64::from_polar(mag, phase);
        let k1 = spectral_condition_number(&m).unwrap();
        let k2 = spectral_condition_number(&m.scale(alpha)).unwrap();
        prop_assert!((k1 - k2).abs() <= 1e-10 * k1 * n as f64, "{} vs {}", k1, k2);
    }

    #[test]
    fn singular_values_match_oracle(n in 1usize..=16, seed in any::<u64>()) {
        let m = gaussian_matrix(n, seed);
        let ours = m.singular_values();
        let oracle = gram_singular_values(&m);
        let scale = oracle[0];
        for (a, b) in ours.iter().zip(&oracle) {
            // Gram squaring costs accuracy in the smallest values; compare against the largest.
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{} vs {}", a, b);
        }
    }
}
