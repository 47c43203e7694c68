//! Property-based invariants.

use pilot_decontam::bulk_support::{
    bilateral_validity, gamma_separable, s1_inverse, separability_boundary, BulkInterval,
};
use pilot_decontam::linalg::complex_gaussian;
use pilot_decontam::montecarlo::ber_statistics;
use pilot_decontam::numerics::Polynomial;
use pilot_decontam::rmt_spectrum::{stieltjes_solve, FixedPointParams, SpectralTerm};
use pilot_decontam::subspace_receiver::signal_subspace;
use pilot_decontam::system_model::{
    assemble_received, realization_rng, sample_realization, DataLaw, DerivedParams, PilotConfig, SystemParams,
};
use pilot_decontam::Complex64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stieltjes_is_herglotz(
        kappa in 0.1f64..10.0,
        zeta in 0.0f64..10.0,
        weight in 0.01f64..0.5,
        level in 0.1f64..100.0,
        x in -5.0f64..200.0,
        y in 1e-3f64..10.0,
    ) {
        let fp = FixedPointParams { kappa, alpha: weight, zeta, terms: vec![SpectralTerm { weight, level }] };
        let v = stieltjes_solve(Complex64::new(x, y), &fp).unwrap();
        prop_assert!(v.g.im > 0.0);
        // |G| <= 1/Im s for a probability measure.
        prop_assert!(v.g.norm() <= 1.0 / y * (1.0 + 1e-8));
    }

    #[test]
    fn subspace_basis_is_orthonormal(rows in 3usize..20, cols in 2usize..20, k in 1usize..4, seed in any::<u64>()) {
        let k = k.min(rows.min(cols));
        let y = complex_gaussian(&mut realization_rng(seed, 0), rows, cols, 1.0);
        let basis = signal_subspace(&y, k).unwrap();
        let gram = basis.s.adjoint() * &basis.s;
        let eye = nalgebra::DMatrix::<Complex64>::identity(k, k);
        prop_assert!((gram - eye).norm() < 1e-10);
        prop_assert!(basis.singular_values.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn boundary_is_a_decreasing_fraction(l in 1usize..8, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let (vlo, vhi) = (separability_boundary(lo, l).unwrap(), separability_boundary(hi, l).unwrap());
        prop_assert!((0.0..=1.0 + 1e-12).contains(&vlo));
        prop_assert!(vhi <= vlo + 1e-12);
        // More neighbors never enlarge the region.
        prop_assert!(separability_boundary(lo, l + 1).unwrap() <= vlo + 1e-12);
    }

    #[test]
    fn inside_boundary_means_gamma_separation(
        l in 1usize..8,
        beta in 0.02f64..0.98,
        share in 0.01f64..0.95,
        kappa in 0.5f64..10.0,
        zeta in 0.0f64..1e3,
    ) {
        let ratio = share * separability_boundary(beta, l).unwrap();
        prop_assume!(ratio > 0.0);
        let r = 1e-4;
        let dp = DerivedParams::new(kappa, ratio * kappa, r, r / beta, zeta, l);
        prop_assert!(gamma_separable(&dp, zeta).unwrap());
        prop_assert!(bilateral_validity(&dp));
    }

    #[test]
    fn s1_without_load_is_minus_inverse(g in -1e-2f64..-1e-7, kappa in 0.1f64..10.0, beta in 0.05f64..0.95) {
        let dp = DerivedParams::new(kappa, 0.0, 1e-4, 1e-4 / beta, 0.0, 2);
        let s = s1_inverse(g, &dp).unwrap();
        prop_assert!(((s + 1.0 / g) * g).abs() < 1e-12);
    }

    #[test]
    fn interval_scaling(lo in -10.0f64..10.0, w in 0.0f64..10.0, f in 0.01f64..100.0, x in -20.0f64..20.0) {
        let b = BulkInterval::new(lo, lo + w).unwrap();
        let s = b.scaled(f);
        prop_assert!((s.width() - f * w).abs() <= 1e-9 * (1.0 + f * w));
        prop_assert_eq!(b.contains(x), s.contains(x * f) || (x * f - s.lower).abs() < 1e-12 || (x * f - s.upper).abs() < 1e-12);
        prop_assert!(BulkInterval::new(lo + w + 1.0, lo).is_err());
    }

    #[test]
    fn ber_statistics_are_consistent(errors in proptest::collection::vec(0u64..=200, 1..20)) {
        let (ber, ci) = ber_statistics(&errors, 200);
        prop_assert!((0.0..=1.0).contains(&ber));
        prop_assert!(ci >= 0.0);
        let total: u64 = errors.iter().sum();
        prop_assert!((ber * 200.0 * errors.len() as f64 - total as f64).abs() < 1e-6);
    }

    #[test]
    fn realizations_are_reproducible(seed in any::<u64>(), index in 0u64..1000) {
        let sys = SystemParams::flat(8, 2, 12, 1, 0.5, 0.1, 0.2);
        let pilots = PilotConfig::orthogonal(2, 0.5);
        let a = assemble_received(&sample_realization(&sys, &pilots, seed, index, DataLaw::Qpsk).unwrap()).unwrap();
        let b = assemble_received(&sample_realization(&sys, &pilots, seed, index, DataLaw::Qpsk).unwrap()).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn polynomial_roots_reconstruct(roots in proptest::collection::vec(-10.0f64..10.0, 1..6)) {
        let p = Polynomial::from_roots(&roots);
        for z in p.roots().unwrap() {
            let v = p.eval_complex(z).norm();
            prop_assert!(v <= 1e-6 * p.coeff_norm().max(1.0), "residual {v}");
        }
    }
}
