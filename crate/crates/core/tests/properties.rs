use approx::assert_relative_eq;
use proptest::prelude::*;

use qmv_core::analytic::{gamma_pair_factorized, omega, Evaluator};
use qmv_core::encoding::{decode_bitstring, encode_coefficients, energy_table, QuditLayout};
use qmv_core::lattice::{gram_from_basis, vector_norm_sq, Lattice};
use qmv_core::optimize::{gamma_grid, ratio_report, sweep_gamma};
use qmv_core::simulator::{build_state, expectation_hp, AngleParams};

fn layout_strategy(max_qubits: usize) -> impl Strategy<Value = (usize, usize)> {
    (1usize..=3, 0usize..=3).prop_filter("qubit budget", move |(n, k)| n * (k + 1) <= max_qubits)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mu_matches_statevector((n, k) in layout_strategy(9), seed in 0u64..10_000, gamma in 0.0..std::f64::consts::PI) {
        let lat = Lattice::generate(n, 10, seed).unwrap();
        let layout = QuditLayout::new(n, k).unwrap();
        let mu = Evaluator::new(&lat.gram, &layout).unwrap().mu(gamma);
        let state = build_state(&lat.gram, &layout, AngleParams::with_gamma(gamma), 16).unwrap();
        let exact = expectation_hp(&state, &lat.gram, &layout).unwrap();
        prop_assert!((mu - exact).abs() <= 1e-9 * mu.abs().max(1.0));
    }

    #[test]
    fn mu_is_nonnegative_and_bounded_by_spectrum((n, k) in layout_strategy(10), seed in 0u64..10_000, gamma in 0.0..std::f64::consts::PI) {
        let lat = Lattice::generate(n, 10, seed).unwrap();
        let layout = QuditLayout::new(n, k).unwrap();
        let mu = Evaluator::new(&lat.gram, &layout).unwrap().mu(gamma);
        let max_e = energy_table(&lat.gram, &layout, 16).unwrap().into_iter().fold(0.0, f64::max);
        prop_assert!(mu >= -1e-9 && mu <= max_e * (1.0 + 1e-12));
    }

    #[test]
    fn single_and_pair_terms_are_bounded((n, k) in layout_strategy(8), seed in 0u64..10_000, gamma in -4.0..4.0f64) {
        let lat = Lattice::generate(n, 10, seed).unwrap();
        let layout = QuditLayout::new(n, k).unwrap();
        let m = layout.qubits_per_qudit();
        for i in 0..n {
            for p in 0..m {
                prop_assert!(omega(&lat.gram, &layout, gamma, i, p).unwrap().abs() <= 1.0 + 1e-12);
                for j in 0..n {
                    for q in 0..m {
                        if (i, p) == (j, q) {
                            continue;
                        }
                        let g = gamma_pair_factorized(&lat.gram, &layout, gamma, (i, p), (j, q)).unwrap();
                        let swapped = gamma_pair_factorized(&lat.gram, &layout, gamma, (j, q), (i, p)).unwrap();
                        let mirrored = gamma_pair_factorized(&lat.gram, &layout, -gamma, (i, p), (j, q)).unwrap();
                        prop_assert!(g.abs() <= 1.0 + 1e-12);
                        prop_assert!((g - swapped).abs() <= 1e-14);
                        prop_assert!((g - mirrored).abs() <= 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn qudit_relabeling_leaves_mu_unchanged(seed in 0u64..10_000, k in 0usize..=4, gamma in 0.0..std::f64::consts::PI) {
        let lat = Lattice::generate(3, 10, seed).unwrap();
        let layout = QuditLayout::new(3, k).unwrap();
        let permuted = lat.gram.permuted(&[2, 0, 1]).unwrap();
        let a = Evaluator::new(&lat.gram, &layout).unwrap().mu(gamma);
        let b = Evaluator::new(&permuted, &layout).unwrap().mu(gamma);
        prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
    }

    #[test]
    fn coefficient_encoding_round_trips(k in 0usize..=6, xs in prop::collection::vec(-64i64..=64, 1..=3)) {
        let layout = QuditLayout::new(xs.len(), k).unwrap();
        let clipped: Vec<i64> = xs.iter().map(|&x| x.clamp(layout.min_value(), layout.max_value())).collect();
        let bits = encode_coefficients(&layout, &clipped).unwrap();
        prop_assert_eq!(decode_bitstring(&layout, &bits).unwrap(), clipped);
    }

    #[test]
    fn gram_norm_matches_explicit_vector(seed in 0u64..10_000, x in prop::collection::vec(-20i64..=20, 3)) {
        let lat = Lattice::generate(3, 10, seed).unwrap();
        let v = lat.basis.combine(&x).unwrap();
        let direct: i64 = v.iter().map(|c| c * c).sum();
        prop_assert_eq!(vector_norm_sq(&gram_from_basis(&lat.basis), &x).unwrap(), direct as f64);
    }
}

#[test]
fn uniform_baseline_equals_exhaustive_mean() {
    for k in 0..=4 {
        let lat = Lattice::generate(2, 10, 31 + k as u64).unwrap();
        let layout = QuditLayout::new(2, k).unwrap();
        let energies = energy_table(&lat.gram, &layout, 16).unwrap();
        let mean = energies.iter().sum::<f64>() / energies.len() as f64;
        assert_relative_eq!(Evaluator::new(&lat.gram, &layout).unwrap().mu(0.0), mean, max_relative = 1e-12);
    }
}

#[test]
fn refined_minimum_never_worse_than_grid() {
    for seed in 0..5 {
        let lat = Lattice::generate(2, 10, seed).unwrap();
        let layout = QuditLayout::new(2, 3).unwrap();
        let ev = Evaluator::new(&lat.gram, &layout).unwrap();
        let orders = qmv_core::analytic::default_orders(&layout);
        let grid = ratio_report(&ev, "L", 256, &orders, false).unwrap();
        let refined = ratio_report(&ev, "L", 256, &orders, true).unwrap();
        assert!(refined.mu_opt <= grid.mu_opt);
        for o in refined.orders.iter().chain(&grid.orders) {
            assert!(o.ratio >= 1.0);
        }
    }
}

#[test]
fn sweep_is_deterministic_and_starts_at_baseline() {
    let lat = Lattice::generate(2, 10, 12).unwrap();
    let layout = QuditLayout::new(2, 2).unwrap();
    let ev = Evaluator::new(&lat.gram, &layout).unwrap();
    let orders = qmv_core::analytic::default_orders(&layout);
    let a = sweep_gamma(&ev, "L", 128, &orders).unwrap();
    let b = sweep_gamma(&ev, "L", 128, &orders).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.gammas, gamma_grid(128).unwrap());
    assert_eq!(a.mu[0], ev.mu(0.0));
}
