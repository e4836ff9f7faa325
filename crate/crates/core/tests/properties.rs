use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use poe_core::circuits::{circuit_with_angles, cycle_unitary};
use poe_core::diagnostics::{fit_exponential, FitOptions};
use poe_core::liouville::{unitary_superop, DensityVector};
use poe_core::noise::NoiseSpec;
use poe_core::poe::{
    binomial_weights, run_cross_state, run_recurrence, sn_from_record, sn_series, ProbeState, Sampling, SeriesKind,
    SnSeries,
};
use poe_core::random::{haar_unitary, random_state_vector};
use poe_core::spectral::{build_f, direct_sn_series, direct_tn_series, f_hermiticity_error, spectral_report};

fn label() -> impl Strategy<Value = String> {
    proptest::collection::vec(prop_oneof![Just('0'), Just('1'), Just('+'), Just('-')], 2)
        .prop_map(|v| v.into_iter().collect())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn weights_sum_to_zero_and_alternate(n in 1usize..400) {
        let w = binomial_weights(n).unwrap();
        prop_assert_eq!(w.len(), n + 1);
        prop_assert!(w.iter().sum::<f64>().abs() < 1e-13);
        for (k, x) in w.iter().enumerate().skip(1) {
            prop_assert_eq!(x.is_sign_negative(), k % 2 == 1);
        }
    }

    #[test]
    fn unitary_drive_obeys_positivity_and_shape(theta in 0.0f64..6.3, phi in 0.0f64..6.3, l in label()) {
        let circuit = circuit_with_angles(theta, phi, 0);
        let rec = run_recurrence(&circuit, &NoiseSpec::none(), &ProbeState::from_label(&l).unwrap(), &Sampling::exact(16)).unwrap();
        let s = sn_series(&rec).unwrap().values;
        prop_assert!(s.iter().all(|&v| v >= -1e-10));
        prop_assert!(s.windows(2).all(|w| w[1] - w[0] <= 1e-12));
        prop_assert!(s.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] >= -1e-12));
    }

    #[test]
    fn record_sum_matches_direct_power(seed in any::<u64>(), qubits in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = 1 << qubits;
        let u = unitary_superop(&haar_unitary(dim, &mut rng)).unwrap();
        let rho0 = DensityVector::from_pure(&random_state_vector(dim, &mut rng)).unwrap();
        let direct = direct_sn_series(&u, &rho0, 12).unwrap();
        let rep = spectral_report(&u, &rho0, 1e-12).unwrap();
        prop_assert!(f_hermiticity_error(&build_f(&u).unwrap()) <= 1e-12);
        prop_assert!(rep.eigenvalues.iter().all(|&l| (-1e-10..=1.0 + 1e-10).contains(&l)));
        for n in 0..=12 {
            prop_assert!((rep.eigen_expansion(n as u32) - direct[n]).abs() <= 1e-10);
        }
    }

    #[test]
    fn cross_state_matches_matrix_element(theta in 0.0f64..6.3, phi in 0.0f64..6.3, a in label(), b in label()) {
        let circuit = circuit_with_angles(theta, phi, 0);
        let pa = ProbeState::from_label(&a).unwrap();
        let pb = ProbeState::from_label(&b).unwrap();
        let rec = run_cross_state(&circuit, &NoiseSpec::none(), &pa, &pb, &Sampling::exact(10)).unwrap();
        let u = unitary_superop(&cycle_unitary(&circuit).unwrap()).unwrap();
        let direct = direct_tn_series(&u, &pa.state, &pb.state, 10).unwrap();
        for n in 1..=10 {
            prop_assert!((sn_from_record(&rec, n).unwrap().0 - direct[n]).abs() <= 1e-10);
        }
    }

    #[test]
    fn fit_recovers_any_exponential(a in 0.01f64..1.0, lambda in 0.5f64..0.999) {
        let s = SnSeries::from_values(SeriesKind::S, (1..=25).map(|n| a * lambda.powi(n)).collect(), None).unwrap();
        let fit = fit_exponential(&s, &FitOptions::default()).unwrap();
        prop_assert!((fit.slope.unwrap() - lambda.ln()).abs() <= 1e-12 * lambda.ln().abs().max(1.0));
        prop_assert!((fit.intercept.unwrap() - a.ln()).abs() <= 1e-11);
    }
}
