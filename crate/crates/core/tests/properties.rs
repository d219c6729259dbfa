use approx::assert_relative_eq;
use nalgebra::DMatrix;
use proptest::prelude::*;

use multiphoton::dynamics::evolve_with;
use multiphoton::model::validate;
use multiphoton::secular::{max_relative_gap, GeneratorOptions, SecularGenerator, TermSource};
use multiphoton::*;

fn regime_params() -> impl Strategy<Value = ModelParams> {
    (0.0..=0.1f64, 0.0..=0.5f64, 0.0..=1.0f64, -3.0..=-1.0f64)
        .prop_map(|(eta, xi, nbar, lk)| ModelParams::new(10f64.powf(lk), nbar, eta, xi))
}

fn quadrature_matrix(n_max: usize) -> DMatrix<f64> {
    let l = ladder_matrices(n_max);
    l.annihilation.real() + l.creation.real()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn quadrature_powers_match_matrix_powers(k in 0u32..=8, extra in 10usize..=16) {
        let n_max = k as usize + extra;
        let x = quadrature_matrix(n_max);
        let mut power = DMatrix::<f64>::identity(n_max + 1, n_max + 1);
        for _ in 0..k {
            power = &power * &x;
        }
        let poly = quadrature_power(k).to_matrix(n_max);
        let block = n_max - k as usize;
        for i in 0..=block {
            for j in 0..=block {
                prop_assert!((poly[(i, j)] - power[(i, j)]).abs() < 1e-12 * power[(i, j)].abs().max(1.0));
            }
        }
    }

    #[test]
    fn quadrature_matrix_elements_respect_parity(k in 0u32..=9, n in 0usize..20, m in 0usize..20) {
        let poly = quadrature_power(k).to_matrix(40);
        if (n + m + k as usize) % 2 == 1 {
            prop_assert_eq!(poly[(n, m)], 0.0);
        }
        for ((p, q), _) in quadrature_power(k).iter() {
            prop_assert_eq!((p + q) % 2, k % 2);
        }
    }

    #[test]
    fn generators_conserve_probability(params in regime_params(), order in 1usize..=5, kappa_eta: bool) {
        let w = build_rate_matrix(&params, order, 48, kappa_eta).unwrap();
        prop_assert!(w.column_sum_defect() < 1e-12);
        let dense = w.to_dense();
        for i in 0..dense.nrows() {
            for j in 0..dense.ncols() {
                if i.abs_diff(j) > order {
                    prop_assert_eq!(dense[(i, j)], 0.0);
                }
            }
        }
    }

    #[test]
    fn generators_match_closed_forms(params in regime_params()) {
        for order in [1, 2] {
            let a = analytic_rate_matrix(&params, order, 40).unwrap();
            let g = build_rate_matrix(&params, order, 40, false).unwrap();
            prop_assert!(max_relative_gap(&a, &g) < 1e-12);
        }
        prop_assert!(eta4_generator_check(&params, 40).unwrap());
    }

    #[test]
    fn emitter_block_vanishes_at_zeroth_order(params in regime_params(), order in 1usize..=4) {
        let g = SecularGenerator::new(&params, GeneratorOptions::new(order)).unwrap();
        let zeroth = g.channels.iter().filter(|c| {
            matches!(c.source, TermSource::EmitterSandwich { left_power: 0, right_power: 0 })
        });
        prop_assert_eq!(zeroth.count(), 0);
    }

    #[test]
    fn kappa_eta_terms_vanish_at_second_order(params in regime_params()) {
        let with = build_rate_matrix(&params, 1, 30, true).unwrap();
        let without = build_rate_matrix(&params, 1, 30, false).unwrap();
        prop_assert_eq!(with, without);
    }

    #[test]
    fn single_photon_steady_state_is_the_closed_form(params in regime_params()) {
        prop_assume!(params.eta > 0.0 || params.nbar > 0.0);
        let out = adaptive_truncation(&params, 1, TruncationOptions::new(1e-12)).unwrap();
        let (_, exact) = detailed_balance_n1(&params, out.n_max).unwrap();
        for (a, b) in out.steady.distribution.probabilities().iter().zip(exact.probabilities()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        let g2 = g2_zero(&out.steady.distribution).unwrap();
        prop_assert!((g2 - 2.0).abs() < 1e-8);
    }

    #[test]
    fn steady_state_is_in_the_kernel(params in regime_params(), order in 1usize..=4) {
        let w = build_rate_matrix(&params, order, 40, false).unwrap();
        let ss = steady_state(&w).unwrap();
        let mut r = vec![0.0; w.dim()];
        w.apply(ss.distribution.probabilities(), &mut r);
        prop_assert!(r.iter().all(|x| x.abs() < 1e-10));
        prop_assert!((ss.distribution.total() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn single_photon_mean_grows_with_coupling(params in regime_params(), d in 0.001..0.05f64) {
        let mean = |eta: f64| {
            let p = ModelParams { eta, ..params };
            adaptive_truncation(&p, 1, TruncationOptions::new(1e-10)).unwrap().steady.distribution
        };
        prop_assume!(params.eta + d < 0.15);
        prop_assert!(mean_photon(&mean(params.eta + d)) > mean_photon(&mean(params.eta)));
    }

    #[test]
    fn generalized_rabi_frequency(rabi in 0.1..100.0f64, xi in -3.0..3.0f64) {
        let p = ModelParams::new(1e-3, 0.1, 0.05, xi).with_frequencies(50.0, rabi);
        let expected = rabi * (1.0 + xi * xi).sqrt();
        prop_assert!((p.generalized_rabi().unwrap() - expected).abs() <= 4.0 * f64::EPSILON * expected);
    }

    #[test]
    fn validation_is_pure(params in regime_params(), omega in 1.0..100.0f64, rabi in 0.5..40.0f64) {
        let p = params.with_frequencies(omega, rabi);
        prop_assert_eq!(validate(&p), validate(&p));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn single_photon_relaxation_is_monotone(params in regime_params(), start in 0usize..5) {
        prop_assume!(params.eta > 0.01);
        let n_max = 40;
        let w = build_rate_matrix(&params, 1, n_max, false).unwrap();
        let target = steady_state(&w).unwrap().distribution;
        let (db, _) = detailed_balance_n1(&params, n_max).unwrap();
        let mut last = f64::INFINITY;
        let mut worst_increase = 0.0_f64;
        let p0 = PhotonDistribution::fock(start, n_max);
        evolve_with(&w, &p0, 5.0 / db.kappa2.max(params.kappa), StepControl::default(), |_, y| {
            let d = PhotonDistribution::from_raw(y.to_vec()).total_variation(&target);
            worst_increase = worst_increase.max(d - last);
            last = d;
        })
        .unwrap();
        prop_assert!(worst_increase < 1e-9, "distance grew by {worst_increase:e}");
    }
}

#[test]
fn five_photon_distribution_keeps_two_photon_population_high() {
    let p = ModelParams::new(1e-3, 0.1, 0.09, 0.0);
    let out = adaptive_truncation(&p, 5, TruncationOptions::new(1e-6)).unwrap();
    assert!(out.steady.distribution.get(2) > 0.1);
    assert_relative_eq!(out.steady.distribution.total(), 1.0, epsilon = 1e-10);
}
