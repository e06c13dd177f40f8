mod common;

use bsm::linalg::{CMatrix, CVector};
use bsm::metrics::{
    effective_sh_order, estimate_ild, estimate_itd, magnitude_nmse_with_variances, nmse_with_variances, ITD_LOWPASS_HZ,
};
use bsm::sh::{num_coeffs, sft_forward, sft_inverse, spiral_sampling, ShVector};
use bsm::signal::BinauralSignal;
use num_complex::Complex64;
use proptest::prelude::*;

const FS: f64 = 48_000.0;

fn complex() -> impl Strategy<Value = Complex64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| Complex64::new(a, b))
}

fn system() -> impl Strategy<Value = (CMatrix, CVector, CVector)> {
    (1usize..5, 2usize..8).prop_flat_map(|(m, q)| {
        (
            proptest::collection::vec(complex(), m * q).prop_map(move |v| CMatrix::from_vec(m, q, v)),
            proptest::collection::vec(complex(), m).prop_map(CVector::from_vec),
            proptest::collection::vec(complex(), q)
                .prop_filter("nonzero HRTF", |h| h.iter().any(|x| x.norm() > 1e-3))
                .prop_map(CVector::from_vec),
        )
    })
}

fn noise(seed: u64, len: usize) -> Vec<f64> {
    common::white_noise(&mut common::rng(seed), len)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nmse_depends_on_variance_ratio((v, c, h) in system(), s in 0.01..100.0f64, n in 0.0..10.0f64, scale in 0.01..100.0f64) {
        let a = nmse_with_variances(&v, &c, &h, s, n).unwrap();
        let b = nmse_with_variances(&v, &c, &h, s * scale, n * scale).unwrap();
        prop_assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn magnitude_error_never_exceeds_complex_error((v, c, h) in system(), n in 0.0..1.0f64) {
        let full = nmse_with_variances(&v, &c, &h, 1.0, n).unwrap();
        let mag = magnitude_nmse_with_variances(&v, &c, &h, 1.0, n).unwrap();
        prop_assert!(mag <= full + 1e-9);
    }

    #[test]
    fn effective_order_is_monotone_in_percent(coeffs in proptest::collection::vec(complex(), 25), p in 1.0..99.0f64, dp in 0.0..1.0f64) {
        prop_assume!(coeffs.iter().any(|x| x.norm() > 1e-6));
        let sh = ShVector::from_coeffs(4, coeffs).unwrap();
        let lo = effective_sh_order(&sh, p).unwrap();
        let hi = effective_sh_order(&sh, p + dp).unwrap();
        prop_assert!(lo <= hi && hi <= 4);
    }

    #[test]
    fn sh_round_trip_on_spiral(coeffs in proptest::collection::vec(complex(), num_coeffs(3))) {
        let dirs = spiral_sampling(40);
        let sh = ShVector::from_coeffs(3, coeffs.clone()).unwrap();
        let back = sft_forward(&sft_inverse(&sh, &dirs), &dirs, 3).unwrap();
        for (a, b) in back.coeffs().iter().zip(&coeffs) {
            prop_assert!((a - b).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn itd_is_antisymmetric_and_gain_invariant(seed in 0u64..1000, delay in 0usize..40, gain in 0.1..10.0f64) {
        let base = noise(seed, 4096);
        let mut left = vec![0.0; delay];
        left.extend_from_slice(&base[..base.len() - delay]);
        let p = BinauralSignal { sample_rate: FS, left: left.clone(), right: base.clone() };
        let swapped = BinauralSignal { sample_rate: FS, left: base.clone(), right: left.clone() };
        let scaled = BinauralSignal { sample_rate: FS, left: left.iter().map(|x| x * gain).collect(), right: base };
        let itd = estimate_itd(&p, ITD_LOWPASS_HZ).unwrap();
        prop_assert!((itd - delay as f64 / FS).abs() < 1e-12);
        prop_assert!((estimate_itd(&swapped, ITD_LOWPASS_HZ).unwrap() + itd).abs() < 1e-12);
        prop_assert!((estimate_itd(&scaled, ITD_LOWPASS_HZ).unwrap() - itd).abs() < 1e-12);
    }

    #[test]
    fn ild_shifts_by_gain(seed in 0u64..1000, gain_db in -30.0..30.0f64) {
        let right = noise(seed, 8192);
        let left = noise(seed + 1, 8192);
        let g = 10f64.powf(gain_db / 20.0);
        let a = estimate_ild(&BinauralSignal { sample_rate: FS, left: left.clone(), right: right.clone() });
        let b = estimate_ild(&BinauralSignal { sample_rate: FS, left: left.iter().map(|x| x * g).collect(), right });
        for (x, y) in a.bands_db.iter().zip(&b.bands_db) {
            prop_assert!((y - x - gain_db).abs() < 1e-9);
        }
        prop_assert!((b.mean_db - a.mean_db - gain_db).abs() < 1e-9);
    }
}
