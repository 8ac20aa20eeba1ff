use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statelift::problem_file::write_problem;
use statelift::problems::{gen_perturbed_identity_tt, gen_random_tt, generate, Family, GeneratorSpec};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn generators_are_deterministic(f in 0usize..Family::ALL.len(), n in 1usize..6, seed in any::<u64>()) {
        let spec = GeneratorSpec::new(Family::ALL[f], n, seed);
        let (a, b) = (generate(&spec).unwrap(), generate(&spec).unwrap());
        prop_assert_eq!(write_problem(&a.chain), write_problem(&b.chain));
        prop_assert_eq!(&a.metadata, &b.metadata);
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(a.sample_controls(&mut r1), b.sample_controls(&mut r2));
    }

    #[test]
    fn perturbed_identity_minimum_is_the_rank(n in 1usize..12, r in 1usize..4, d in 1u32..4, seed in any::<u64>()) {
        let p = gen_perturbed_identity_tt(n, r, d, 0.1, seed).unwrap();
        prop_assert!((p.cores.eval(&vec![-1.0; n]) - r as f64).abs() < 1e-12);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
            prop_assert!(p.cores.eval(&x) >= r as f64 - 1e-12);
        }
    }

    #[test]
    fn random_train_has_requested_shape(n in 1usize..8, r in 1usize..5, d in 1u32..5, seed in any::<u64>()) {
        let tt = gen_random_tt(n, r, d, seed).unwrap();
        let ranks = tt.ranks();
        prop_assert_eq!(ranks.len(), n);
        prop_assert_eq!(ranks[n - 1], 1);
        prop_assert!(ranks[..n - 1].iter().all(|&v| v == r));
        prop_assert!(tt.cores.iter().flatten().flatten().all(|c| c.len() == d as usize + 1));
    }

    #[test]
    fn probabilities_stay_in_the_unit_interval(n in 1usize..8, seed in any::<u64>()) {
        for f in [Family::MarkovQuadratic, Family::MarkovChebyshev] {
            let inst = generate(&GeneratorSpec::new(f, n, seed)).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            for _ in 0..20 {
                let (v, traj) = inst.chain.eval(&inst.sample_controls(&mut rng));
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&v));
                for s in &traj[..n - 1] {
                    prop_assert!((s.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn quantum_controls_are_rotations(n in 1usize..8, theta in 0.05f64..1.5, seed in any::<u64>()) {
        let mut spec = GeneratorSpec::new(Family::Quantum, n, seed);
        spec.theta_max = Some(theta);
        let inst = generate(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = inst.sample_controls(&mut rng);
        for xi in &x {
            prop_assert!((xi[0] * xi[0] + xi[1] * xi[1] - 1.0).abs() < 1e-12);
            prop_assert!(xi[1] >= theta.cos() - 1e-12);
        }
        let (v, traj) = inst.chain.eval(&x);
        prop_assert!(v.abs() <= 1.0 + 1e-12);
        for s in &traj[..n - 1] {
            prop_assert!((s.iter().map(|c| c * c).sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }
}

#[test]
fn seeds_change_random_instances() {
    for f in [Family::RandomQuadraticComposition, Family::RandomTt, Family::PerturbedTt, Family::MarkovChebyshev, Family::Nn] {
        let a = generate(&GeneratorSpec::new(f, 3, 1)).unwrap();
        let b = generate(&GeneratorSpec::new(f, 3, 2)).unwrap();
        assert_ne!(write_problem(&a.chain), write_problem(&b.chain), "{f:?}");
    }
}

#[test]
fn bad_parameters_are_rejected() {
    assert!(generate(&GeneratorSpec::new(Family::RandomTt, 0, 0)).is_err());
    let mut spec = GeneratorSpec::new(Family::PerturbedTt, 3, 0);
    spec.tau = 0.0;
    assert!(generate(&spec).is_err());
    let mut spec = GeneratorSpec::new(Family::Quantum, 3, 0);
    spec.s0 = vec![1.0, 0.0];
    assert!(generate(&spec).is_err());
    let mut spec = GeneratorSpec::new(Family::Nn, 3, 0);
    spec.stage = Some(4);
    assert!(generate(&spec).is_err());
}
