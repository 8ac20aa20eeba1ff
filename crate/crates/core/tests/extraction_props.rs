use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use statelift::bench::{extraction_config, quantum_instance};
use statelift::conic::{solve, SolveOptions};
use statelift::extraction::{extract_sequential, first_moments, ExtractionConfig, MomentSampler};
use statelift::poly::{monomials_up_to, Monomial};
use statelift::problems::{generate, markov_oracle, Family, GeneratorSpec};
use statelift::relax::Hierarchy;
use statelift::runner::assemble;

#[test]
fn quantum_extraction_is_deterministic_and_feasible() {
    let theta = 0.4;
    let inst = quantum_instance(4, Some(theta), [0.0, 1.0, 0.0]).unwrap();
    let relax = assemble(&inst.chain, Hierarchy::Push, 2).unwrap();
    let res = solve(&relax.program, &SolveOptions::default());
    assert!(res.status.is_solved());
    let cfg = extraction_config(&inst, 11, 5);
    let a = extract_sequential(&relax, &res, &inst.chain, &cfg).unwrap();
    let b = extract_sequential(&relax, &res, &inst.chain, &cfg).unwrap();
    assert_eq!(a, b);
    for x in &a.controls {
        assert!((x[0] * x[0] + x[1] * x[1] - 1.0).abs() < 1e-9);
        assert!(x[1] >= theta.cos() - 1e-9);
    }
    assert_eq!(a.objective, inst.chain.eval(&a.controls).0);
    assert!(a.objective <= relax.bound(&res) + 1e-6);
}

#[test]
fn markov_extraction_recovers_zero_controls() {
    let inst = generate(&GeneratorSpec::new(Family::MarkovQuadratic, 3, 0)).unwrap();
    let relax = assemble(&inst.chain, Hierarchy::Push, 3).unwrap();
    let res = solve(&relax.program, &SolveOptions::default());
    let t = extract_sequential(&relax, &res, &inst.chain, &ExtractionConfig { seed: 4, ..ExtractionConfig::default() }).unwrap();
    assert!(t.controls.iter().flatten().all(|v| v.abs() <= 1.0));
    assert!((t.objective - markov_oracle(3)).abs() < 1e-3);
    let fm = first_moments(&relax, &res, &inst.chain);
    assert!(fm.controls.iter().flatten().all(|v| v.abs() < 1e-2));
}

#[test]
fn sampler_reproduces_a_dirac_point() {
    let vars = [0usize, 1];
    let basis = monomials_up_to(&vars, 2);
    let point = [0.6, -0.3];
    let v: Vec<f64> = basis.iter().map(|m: &Monomial| m.evaluate(&point).unwrap()).collect();
    let m = DMatrix::from_fn(v.len(), v.len(), |i, j| v[i] * v[j]);
    let sampler = MomentSampler::new(&m, &basis);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cand = sampler.candidate(&mut rng, 1e-6, 50).unwrap();
    for (id, val) in cand {
        assert!((val - point[id]).abs() < 1e-9, "{id}: {val}");
    }
}

#[test]
fn invalid_configs_are_rejected() {
    assert!(ExtractionConfig { samples: 0, ..ExtractionConfig::default() }.validate().is_err());
    assert!(ExtractionConfig { tau: -1.0, ..ExtractionConfig::default() }.validate().is_err());
    assert!(ExtractionConfig::default().validate().is_ok());
}
