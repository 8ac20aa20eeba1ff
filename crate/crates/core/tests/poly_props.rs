use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use statelift::poly::{binomial, monomials_up_to, power_product, Interval, Monomial, Polynomial, VarKind, VariableSpace};

const VARS: usize = 3;

fn space() -> Arc<VariableSpace> {
    Arc::new(VariableSpace::locals(VARS))
}

fn terms() -> impl Strategy<Value = Vec<(Vec<u32>, f64)>> {
    prop::collection::vec((prop::collection::vec(0u32..3, VARS), -2.0f64..2.0), 0..6)
}

fn poly(sp: &Arc<VariableSpace>, t: &[(Vec<u32>, f64)]) -> Polynomial {
    Polynomial::from_terms(sp, t.iter().map(|(e, c)| (Monomial::from_pairs(e.iter().enumerate().map(|(v, &p)| (v, p))), *c)))
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #[test]
    fn product_evaluates_to_product(a in terms(), b in terms(), x in prop::collection::vec(-1.5f64..1.5, VARS)) {
        let sp = space();
        let (p, q) = (poly(&sp, &a), poly(&sp, &b));
        let pq = p.mul(&q).unwrap();
        prop_assert!(close(pq.evaluate(&x).unwrap(), p.evaluate(&x).unwrap() * q.evaluate(&x).unwrap()));
        prop_assert!(close(p.add(&q).unwrap().evaluate(&x).unwrap(), p.evaluate(&x).unwrap() + q.evaluate(&x).unwrap()));
        prop_assert!(pq.is_zero() || pq.degree() <= p.degree() + q.degree());
    }

    #[test]
    fn substitution_commutes_with_evaluation(a in terms(), b in terms(), v in 0usize..VARS, x in prop::collection::vec(-1.5f64..1.5, VARS)) {
        let sp = space();
        let (p, q) = (poly(&sp, &a), poly(&sp, &b));
        let sub = p.substitute(&HashMap::from([(v, q.clone())])).unwrap();
        let mut y = x.clone();
        y[v] = q.evaluate(&x).unwrap();
        prop_assert!(close(sub.evaluate(&x).unwrap(), p.evaluate(&y).unwrap()));
    }

    #[test]
    fn derivative_matches_central_difference(a in terms(), v in 0usize..VARS, x in prop::collection::vec(-1.0f64..1.0, VARS)) {
        let sp = space();
        let p = poly(&sp, &a);
        let h = 1e-5;
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[v] += h;
        xm[v] -= h;
        let fd = (p.evaluate(&xp).unwrap() - p.evaluate(&xm).unwrap()) / (2.0 * h);
        prop_assert!((fd - p.derivative(v).evaluate(&x).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn interval_encloses_values(a in terms(), x in prop::collection::vec(-1.0f64..1.0, VARS)) {
        let sp = space();
        let p = poly(&sp, &a);
        let iv = p.evaluate_interval(&[Interval::symmetric(1.0); VARS]).unwrap();
        let v = p.evaluate(&x).unwrap();
        prop_assert!(iv.lo <= v + 1e-12 && v <= iv.hi + 1e-12);
    }

    #[test]
    fn monomial_basis_size(n in 1usize..6, k in 0u32..6) {
        let vars: Vec<usize> = (0..n).collect();
        let basis = monomials_up_to(&vars, k);
        prop_assert_eq!(basis.len() as u64, binomial(n as u64 + k as u64, k as u64));
        prop_assert!(basis.windows(2).all(|w| w[0] != w[1]));
        prop_assert!(basis.iter().all(|m| m.degree() <= k));
    }

    #[test]
    fn power_product_matches_powers(a in terms(), b in terms(), e0 in 0u32..3, e1 in 0u32..3, x in prop::collection::vec(-1.0f64..1.0, VARS)) {
        let sp = space();
        let (p, q) = (poly(&sp, &a), poly(&sp, &b));
        let pp = power_product(&sp, &[p.clone(), q.clone()], &[e0, e1]).unwrap();
        let want = p.evaluate(&x).unwrap().powi(e0 as i32) * q.evaluate(&x).unwrap().powi(e1 as i32);
        prop_assert!((pp.evaluate(&x).unwrap() - want).abs() <= 1e-8 * (1.0 + want.abs()));
    }
}

#[test]
fn names_round_trip() {
    let sp = VariableSpace::for_chain(&[2, 1, 3], &[2, 3, 1]);
    for id in 0..sp.len() {
        assert_eq!(sp.parse_name(&sp.name(id)).unwrap(), id);
    }
    assert_eq!(sp.len(), 6 + 6);
    assert_eq!(sp.info(sp.state_id(2, 3).unwrap()).kind, VarKind::State);
    assert!(sp.parse_name("x[4][1]").is_err());
    assert!(sp.parse_name("s[1][3]").is_err());
    assert!(sp.parse_name("x[1]").is_err());
}

#[test]
fn mixing_spaces_is_an_error() {
    let (a, b) = (space(), space());
    let p = Polynomial::var(&a, 0);
    let q = Polynomial::var(&b, 0);
    assert!(p.mul(&q).is_ok(), "structurally equal spaces are compatible");
    let c = Arc::new(VariableSpace::locals(VARS + 1));
    assert!(p.add(&Polynomial::var(&c, 0)).is_err());
}

#[test]
fn pruning_drops_small_terms() {
    let sp = space();
    let p = Polynomial::from_terms(&sp, [(Monomial::var(0), 1.0), (Monomial::var(1), 1e-14)]);
    assert_eq!(p.pruned(1e-12).num_terms(), 1);
    assert_eq!(p.num_terms(), 2);
}
