use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use statelift::conic::{parse_sdpa, solve, write_sdpa, BlockKind, ConicProgram, LinearForm, PsdBlock, SolveOptions};

fn random_form(rng: &mut ChaCha8Rng, vars: usize) -> LinearForm {
    let terms: Vec<(usize, f64)> = (0..vars).filter_map(|v| rng.random_bool(0.5).then(|| (v, rng.random_range(-2.0..2.0)))).collect();
    let c = if rng.random_bool(0.5) { rng.random_range(-2.0..2.0) } else { 0.0 };
    LinearForm::from_terms(c, terms)
}

fn random_program(seed: u64) -> ConicProgram {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut p = ConicProgram::new();
    let vars = rng.random_range(1..6);
    for _ in 0..vars {
        p.add_var();
    }
    p.objective = random_form(&mut rng, vars);
    for b in 0..rng.random_range(0..4) {
        let dim = rng.random_range(1..5);
        let mut blk = PsdBlock::new(dim, format!("b{b}"), BlockKind::Generic);
        for j in 0..dim {
            for i in 0..=j {
                if rng.random_bool(0.6) {
                    blk.set(i, j, random_form(&mut rng, vars));
                }
            }
        }
        p.add_block(blk);
    }
    for _ in 0..rng.random_range(0..4) {
        p.add_equality(random_form(&mut rng, vars), "eq");
    }
    for _ in 0..rng.random_range(0..4) {
        p.add_inequality(random_form(&mut rng, vars));
    }
    p
}

proptest! {
    #[test]
    fn sdpa_round_trip_preserves_the_program(seed in any::<u64>()) {
        let p = random_program(seed);
        let text = write_sdpa(&p);
        let q = parse_sdpa(&text).unwrap();
        prop_assert_eq!(write_sdpa(&q), text);
        prop_assert_eq!(q.num_vars, p.num_vars);
        let mut rng = ChaCha8Rng::seed_from_u64(!seed);
        for _ in 0..3 {
            let x: Vec<f64> = (0..p.num_vars).map(|_| rng.random_range(-1.0..1.0)).collect();
            prop_assert!((q.objective.eval(&x) - p.objective.eval(&x)).abs() < 1e-12);
            prop_assert!((q.linear_residual(&x) - p.linear_residual(&x)).abs() < 1e-12);
            let pb: Vec<_> = p.blocks.iter().filter(|b| b.dim > 0).map(|b| b.eval(&x)).collect();
            let qb: Vec<_> = q.blocks.iter().filter(|b| b.dim > 0).map(|b| b.eval(&x)).collect();
            prop_assert_eq!(pb.len(), qb.len());
            for (a, b) in pb.iter().zip(&qb) {
                prop_assert!((a - b).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn blocks_evaluate_symmetric(seed in any::<u64>()) {
        let p = random_program(seed);
        let x = vec![0.3; p.num_vars];
        for b in &p.blocks {
            let m = b.eval(&x);
            prop_assert_eq!(&m, &m.transpose());
        }
    }
}

#[test]
fn solves_a_two_by_two_lmi() {
    // min t s.t. [[t, 1], [1, t]] ⪰ 0 has optimum 1.
    let mut p = ConicProgram::new();
    let t = p.add_var();
    p.objective = LinearForm::var(t);
    let mut b = PsdBlock::new(2, "lmi", BlockKind::Generic);
    b.set(0, 0, LinearForm::var(t));
    b.set(1, 1, LinearForm::var(t));
    b.set(0, 1, LinearForm::constant(1.0));
    p.add_block(b);
    let r = solve(&p, &SolveOptions::default());
    assert!(r.status.is_solved());
    assert!((r.objective - 1.0).abs() < 1e-7);
    assert!(p.min_block_eigenvalue(&r.x) > -1e-7);
}

#[test]
fn solves_a_linear_program_with_offset() {
    // min 2 + x − y s.t. x + y = 1, x ≥ 0, y ≥ 0 has optimum 1 at y = 1.
    let mut p = ConicProgram::new();
    let (x, y) = (p.add_var(), p.add_var());
    p.objective = LinearForm::from_terms(2.0, [(x, 1.0), (y, -1.0)]);
    p.add_equality(LinearForm::from_terms(-1.0, [(x, 1.0), (y, 1.0)]), "sum");
    p.add_inequality(LinearForm::var(x));
    p.add_inequality(LinearForm::var(y));
    let r = solve(&p, &SolveOptions::default());
    assert!(r.status.is_solved());
    assert!((r.objective - 1.0).abs() < 1e-7);
    let q = parse_sdpa(&write_sdpa(&p)).unwrap();
    assert!((solve(&q, &SolveOptions::default()).objective - 1.0).abs() < 1e-7);
}

#[test]
fn duplicate_rows_are_dropped() {
    let mut p = ConicProgram::new();
    let x = p.add_var();
    assert!(p.add_equality(LinearForm::from_terms(1.0, [(x, 1.0)]), "a"));
    assert!(!p.add_equality(LinearForm::from_terms(1.0, [(x, 1.0)]), "a"));
    assert!(!p.add_equality(LinearForm::constant(0.0), "a"));
    assert_eq!(p.equalities.len(), 1);
    assert_eq!(p.dropped_rows(), 2);
    assert_eq!(p.group_count("a"), 1);
}

#[test]
fn malformed_sdpa_is_rejected() {
    for text in ["", "x\n", "1\n1\n2\n1.0\n0 1 1 1\n", "1\n1\n2\n1.0\n1 2 3 3 1.0\n", "1\n1\n2\n1.0 2.0\n"] {
        assert!(parse_sdpa(text).is_err(), "accepted {text:?}");
    }
}
