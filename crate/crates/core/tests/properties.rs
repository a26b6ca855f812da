use std::f64::consts::PI;

use corrlab_core::behavior::Relabeling;
use corrlab_core::classifier::{check_local_lp, check_quantum_npa1, check_quantum_tlm};
use corrlab_core::hv::random_local_model;
use corrlab_core::quantum::{expectation, measure_sequence, random, spin_observable};
use corrlab_core::sampling::{any_behavior, quantum_behavior};
use corrlab_core::{
    chsh_all, classify, correlators, evaluate, model_class, ns_residual, singlet_state,
    two_qubit_behavior, Behavior, ClassifierConfig, CorrelatorTable, HermitianOperator, ModelClass,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_state(n: usize, r: &mut ChaCha8Rng) -> corrlab_core::QuantumState {
    if r.random::<bool>() {
        random::pure_state(n, r).unwrap()
    } else {
        random::mixed_state(n, r).unwrap()
    }
}

/// Zero-marginal behavior with the given correlators.
fn unbiased(e: [f64; 4]) -> Behavior {
    Behavior::from_fn(|x, y, a, b| (1.0 + f64::from(a * b) * e[2 * x + y]) / 4.0).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn expectation_lies_in_spectrum(seed in any::<u64>(), n in 1usize..=4) {
        let mut r = rng(seed);
        let state = random_state(n, &mut r);
        let obs = random::hermitian(n, &mut r).unwrap();
        let eig = obs.eigenvalues();
        let e = expectation(&state, &obs).unwrap();
        prop_assert!(e >= eig[0] - 1e-12 && e <= eig[n - 1] + 1e-12);
    }

    #[test]
    fn born_weights_form_a_distribution(seed in any::<u64>(), n in 1usize..=8) {
        let mut r = rng(seed);
        let state = random_state(n, &mut r);
        let obs = random::hermitian(n, &mut r).unwrap();
        let weights = state.born_weights(&obs).unwrap();
        prop_assert!(weights.iter().all(|&(_, p)| p >= 0.0));
        let total: f64 = weights.iter().map(|&(_, p)| p).sum();
        prop_assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn singlet_correlator_is_minus_dot(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (random::unit_vector(&mut r), random::unit_vector(&mut r));
        let joint: HermitianOperator = spin_observable(&a).kron(&spin_observable(&b)).unwrap();
        let e = expectation(&singlet_state(), &joint).unwrap();
        prop_assert!((e + a.dot(&b)).abs() < 1e-12);
    }

    #[test]
    fn two_qubit_behaviors_do_not_signal(seed in any::<u64>()) {
        let b = quantum_behavior(&mut rng(seed));
        prop_assert!(ns_residual(&b).max_residual < 1e-12);
    }

    #[test]
    fn commuting_pair_repeats_first_outcome(seed in any::<u64>(), n in 2usize..=4) {
        let mut r = rng(seed);
        let state = random::pure_state(n, &mut r).unwrap();
        // commuting pair from a shared eigenbasis
        let u = random::unitary(n, &mut r);
        let a = random::observable_in_basis(&u, &random::dichotomic_spectrum(n, &mut r)).unwrap();
        let b = random::observable_in_basis(&u, &random::dichotomic_spectrum(n, &mut r)).unwrap();
        for s in 0..50 {
            let rec = measure_sequence(&state, &[a.clone(), b.clone(), a.clone()], s).unwrap();
            prop_assert_eq!(rec.values[0], rec.values[2]);
        }
    }

    #[test]
    fn local_models_respect_the_bound(seed in any::<u64>(), k in 1usize..=64) {
        let m = random_local_model(k, seed).unwrap();
        prop_assert_eq!(model_class(&m).unwrap(), ModelClass::NonContextualLocal);
        let b = evaluate(&m);
        let c = correlators(&b).unwrap();
        prop_assert!(chsh_all(&c).s_max <= 2.0 + 1e-12);
        prop_assert!(ns_residual(&b).max_residual < 1e-12);

        // direct hidden-variable sum of A·B
        for x in 0..2 {
            for y in 0..2 {
                let direct: f64 = (0..m.len())
                    .map(|l| m.weights()[l] * f64::from(m.response_a(l, x, y) * m.response_b(l, x, y)))
                    .sum();
                prop_assert!((direct - c.e[x][y]).abs() < 1e-12);
            }
        }

        let lp = check_local_lp(&b, 1e-9).expect("local behavior decomposes");
        prop_assert!(lp.reconstruction_error < 1e-9);
    }

    #[test]
    fn classify_is_relabeling_invariant(seed in any::<u64>()) {
        let b = any_behavior(&mut rng(seed));
        let cfg = ClassifierConfig::default();
        let tier = classify(&b, &cfg).unwrap().tier;
        for rl in Relabeling::all() {
            prop_assert_eq!(classify(&b.relabel(rl), &cfg).unwrap().tier, tier);
        }
    }

    #[test]
    fn arcsin_and_moment_tests_agree_on_unbiased(e in prop::array::uniform4(-1.0f64..=1.0)) {
        let b = unbiased(e);
        let tlm = check_quantum_tlm(&CorrelatorTable::unbiased([[e[0], e[1]], [e[2], e[3]]]), 1e-9).unwrap();
        let npa = check_quantum_npa1(&b, 1e-9).unwrap();
        if (tlm.value - PI).abs() > 1e-6 {
            prop_assert_eq!(tlm.passes, npa.feasible, "value {}", tlm.value);
        }
    }

    #[test]
    fn qubit_behaviors_are_quantum_compatible(seed in any::<u64>()) {
        let mut r = rng(seed);
        let state = random_state(4, &mut r);
        let mut d = || random::unit_vector(&mut r);
        let b = two_qubit_behavior(&state, [d(), d()], [d(), d()]).unwrap();
        prop_assert!(check_quantum_npa1(&b, 1e-9).unwrap().feasible);
    }
}
